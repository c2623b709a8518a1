"""Matrix Market I/O, synthetic matrix generators, and corpus manifests.

The reader accepts coordinate files with real, integer or pattern fields and
general, symmetric or skew-symmetric symmetry; symmetric variants are
expanded to full storage.  Output is always a sorted, duplicate-free COO
(duplicates are summed).  The writer emits general coordinate real files
with enough digits to round-trip float64 exactly.

A corpus manifest is a text file with one matrix per line::

    <id><TAB><path-or-genspec>

where a genspec is ``stencil27:NX,NY,NZ``, ``banded:N,OFF[,OFF...]`` or
``random:N,DENSITY,SEED``.  Blank lines and ``#`` comments are skipped.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .convert import to_format
from .errors import IndexOverflow, ParseError, UnsupportedField
from .formats import (
    ROW_PAD,
    Container,
    CooMatrix,
    CsrMatrix,
    DiaMatrix,
    Format,
    MatrixShape,
    index_array,
    offset_array,
    round_up,
    scalar_array,
)

_UINT32_MAX = 2**32 - 1


def _decode(data) -> str:
    if isinstance(data, (bytes, bytearray)):
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError("matrix file is not valid UTF-8 text") from exc
    return data


def read_matrix_market(source, dtype=None) -> CooMatrix:
    """Parse Matrix Market coordinate content into a sorted COO.

    ``source`` may be a path, a file-like object, or raw bytes.  Raises
    :class:`ParseError` for malformed content and :class:`UnsupportedField`
    for valid files this reader does not handle (complex or hermitian data,
    dense array storage).
    """
    if hasattr(source, "read"):
        text = _decode(source.read())
    elif isinstance(source, (bytes, bytearray)):
        text = _decode(source)
    else:
        text = Path(source).read_text()
    return _parse_mm(text, dtype)


def _parse_mm(text: str, dtype) -> CooMatrix:
    lines = text.splitlines()
    if not lines or not lines[0].lower().startswith("%%matrixmarket"):
        raise ParseError("missing %%MatrixMarket banner")
    tok = lines[0].split()
    if len(tok) < 5:
        raise ParseError("banner needs object, format, field and symmetry")
    obj, storage, field, sym = (t.lower() for t in tok[1:5])
    if obj != "matrix":
        raise ParseError(f"unsupported object {obj!r}")
    if storage == "array":
        raise UnsupportedField("dense array storage is not supported")
    if storage != "coordinate":
        raise ParseError(f"unknown storage format {storage!r}")
    if field == "complex":
        raise UnsupportedField("complex values are not supported")
    if field not in ("real", "integer", "pattern"):
        raise ParseError(f"unknown field {field!r}")
    if sym == "hermitian":
        raise UnsupportedField("hermitian symmetry is not supported")
    if sym not in ("general", "symmetric", "skew-symmetric"):
        raise ParseError(f"unknown symmetry {sym!r}")

    pattern = field == "pattern"
    body = (ln.strip() for ln in lines[1:])
    size = None
    nr = nc = nent = 0
    rows: list = []
    cols: list = []
    vals: list = []
    for line in body:
        if not line or line.startswith("%"):
            continue
        if size is None:
            size = line.split()
            if len(size) != 3:
                raise ParseError("size line must hold nrows ncols nnz")
            try:
                nr, nc, nent = (int(t) for t in size)
            except ValueError as exc:
                raise ParseError("size line must hold three integers") from exc
            if nr < 0 or nc < 0 or nent < 0:
                raise ParseError("size line entries must be non-negative")
            continue
        if len(rows) == nent:
            raise ParseError("data past the declared entry count")
        t = line.split()
        if len(t) != (2 if pattern else 3):
            raise ParseError(f"malformed entry line: {line!r}")
        try:
            i = int(t[0])
            j = int(t[1])
            v = 1.0 if pattern else float(t[2])
        except ValueError as exc:
            raise ParseError(f"malformed entry line: {line!r}") from exc
        if not (1 <= i <= nr and 1 <= j <= nc):
            raise ParseError(f"entry ({i}, {j}) outside {nr} x {nc}")
        rows.append(i - 1)
        cols.append(j - 1)
        vals.append(v)
    if size is None:
        raise ParseError("missing size line")
    if len(rows) != nent:
        raise ParseError(f"expected {nent} entries, found {len(rows)}")

    r = np.asarray(rows, dtype=np.int64)
    c = np.asarray(cols, dtype=np.int64)
    v = np.asarray(vals, dtype=np.float64)
    if sym in ("symmetric", "skew-symmetric") and r.shape[0]:
        off = r != c
        sign = -1.0 if sym == "skew-symmetric" else 1.0
        mr, mc, mv = c[off], r[off], sign * v[off]
        r = np.concatenate([r, mr])
        c = np.concatenate([c, mc])
        v = np.concatenate([v, mv])
    coo = CooMatrix.from_arrays(nr, nc, r, c, scalar_array(v, dtype))
    return to_format(coo, Format.COO)


def write_matrix_market(matrix, dest, comment: str | None = None) -> None:
    """Write any container as a general coordinate real file.

    Values are printed with 17 significant digits, so float64 content
    survives a write/read round trip bit for bit.
    """
    coo = to_format(matrix, Format.COO)
    out = ["%%MatrixMarket matrix coordinate real general"]
    if comment:
        out.extend("% " + ln for ln in comment.splitlines())
    out.append(f"{coo.shape.nrows} {coo.shape.ncols} {coo.shape.nnz}")
    rows = coo.row_indices.astype(np.int64)
    cols = coo.col_indices.astype(np.int64)
    for i, j, v in zip(rows, cols, coo.values):
        out.append(f"{i + 1} {j + 1} {v:.17g}")
    text = "\n".join(out) + "\n"
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        Path(dest).write_text(text)


def gen_stencil27(nx: int, ny: int, nz: int, dtype=None) -> CsrMatrix:
    """Operator of a 3-D grid coupling each point to its 27-neighborhood.

    Point ``(x, y, z)`` has row ``(z * ny + y) * nx + x``.  The diagonal is
    26 and every in-grid neighbor contributes -1, so interior rows sum to
    zero and boundary rows sum to the number of missing neighbors.
    """
    if min(nx, ny, nz) < 1:
        raise ValueError("grid dimensions must be >= 1")
    n = nx * ny * nz
    if n > _UINT32_MAX or 27 * n > _UINT32_MAX:
        raise IndexOverflow(f"{nx}x{ny}x{nz} grid exceeds 32-bit indexing")
    zz, yy, xx = np.meshgrid(
        np.arange(nz, dtype=np.int64),
        np.arange(ny, dtype=np.int64),
        np.arange(nx, dtype=np.int64),
        indexing="ij")
    xx, yy, zz = xx.ravel(), yy.ravel(), zz.ravel()
    p = (zz * ny + yy) * nx + xx
    rows_parts, cols_parts, vals_parts = [], [], []
    for dz in (-1, 0, 1):
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                qx, qy, qz = xx + dx, yy + dy, zz + dz
                valid = ((qx >= 0) & (qx < nx) & (qy >= 0) & (qy < ny)
                         & (qz >= 0) & (qz < nz))
                q = (qz * ny + qy) * nx + qx
                weight = 26.0 if (dx, dy, dz) == (0, 0, 0) else -1.0
                rows_parts.append(p[valid])
                cols_parts.append(q[valid])
                vals_parts.append(np.full(int(valid.sum()), weight))
    rows = np.concatenate(rows_parts)
    cols = np.concatenate(cols_parts)
    vals = np.concatenate(vals_parts)
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    irp = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=irp[1:])
    return CsrMatrix(MatrixShape(n, n, int(vals.shape[0])),
                     index_array(irp), index_array(cols),
                     scalar_array(vals, dtype))


def gen_banded(n: int, offsets, dtype=None) -> DiaMatrix:
    """Square band matrix stored directly as DIA.

    Each requested diagonal is fully populated inside the matrix: offset 0
    holds ``2.0 + 0.001 * i`` and offset ``o`` holds
    ``1 / (1 + |o|) + 0.001 * i`` for row ``i``.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    offs = np.unique(np.asarray(list(offsets), dtype=np.int64))
    if offs.shape[0] == 0:
        raise ValueError("need at least one diagonal offset")
    if ((offs <= -max(n, 1)) | (offs >= max(n, 1))).any():
        raise ValueError(f"offsets must lie strictly within a {n} x {n} matrix")
    padded = round_up(n, ROW_PAD) if n else 0
    values = np.zeros((padded, offs.shape[0]), dtype=np.float64)
    nnz = 0
    for d, off in enumerate(offs.tolist()):
        lo = max(0, -off)
        hi = min(n, n - off)
        if hi <= lo:
            continue
        rows = np.arange(lo, hi, dtype=np.int64)
        base = 2.0 if off == 0 else 1.0 / (1 + abs(off))
        values[lo:hi, d] = base + 0.001 * rows
        nnz += hi - lo
    return DiaMatrix(MatrixShape(n, n, nnz), offset_array(offs),
                     scalar_array(values, dtype))


def gen_random_sparse(nrows: int, ncols: int, density: float, seed: int,
                      dtype=None) -> CooMatrix:
    """Uniform random sparsity pattern with values in [-1, 1), seeded."""
    if nrows < 0 or ncols < 0:
        raise ValueError("dimensions must be non-negative")
    if not 0.0 <= density <= 1.0:
        raise ValueError("density must lie in [0, 1]")
    total = nrows * ncols
    m = int(round(density * total))
    rng = np.random.default_rng(seed)
    if m:
        flat = rng.choice(total, size=m, replace=False)
        flat.sort()
        rows = flat // ncols
        cols = flat % ncols
        vals = rng.uniform(-1.0, 1.0, size=m)
        vals[vals == 0.0] = 0.5
    else:
        rows = np.zeros(0, dtype=np.int64)
        cols = np.zeros(0, dtype=np.int64)
        vals = np.zeros(0, dtype=np.float64)
    return CooMatrix(MatrixShape(nrows, ncols, m), rows, cols,
                     scalar_array(vals, dtype), sorted=True)


@dataclass(frozen=True)
class CorpusEntry:
    """One manifest line: an identifier plus a path or generator spec."""

    id: str
    source: str


def load_manifest(path) -> list:
    """Read a corpus manifest; duplicate ids raise :class:`ParseError`."""
    text = Path(path).read_text()
    entries: list = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "\t" in line:
            parts = [p.strip() for p in line.split("\t", 1)]
        else:
            parts = line.split(None, 1)
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise ParseError(f"manifest line {lineno}: expected 'id<TAB>source'")
        ident, source = parts
        if ident in seen:
            raise ParseError(f"manifest line {lineno}: duplicate id {ident!r}")
        seen.add(ident)
        entries.append(CorpusEntry(ident, source))
    return entries


def _genspec_ints(spec: str, payload: str, want: int) -> list:
    parts = payload.split(",")
    if len(parts) < want:
        raise ParseError(f"genspec {spec!r}: expected {want} fields")
    try:
        return [int(p) for p in parts]
    except ValueError as exc:
        raise ParseError(f"genspec {spec!r}: fields must be integers") from exc


def load_entry(entry: CorpusEntry, base_dir=".", dtype=None) -> Container:
    """Materialize a manifest entry as a concrete container.

    Generator specs build in memory; anything else is treated as a Matrix
    Market path, relative paths resolving against ``base_dir``.
    """
    src = entry.source
    if src.startswith("stencil27:"):
        dims = _genspec_ints(src, src[len("stencil27:"):], 3)
        if len(dims) != 3:
            raise ParseError(f"genspec {src!r}: expected NX,NY,NZ")
        try:
            return gen_stencil27(*dims, dtype=dtype)
        except ValueError as exc:
            raise ParseError(f"genspec {src!r}: {exc}") from exc
    if src.startswith("banded:"):
        fields = _genspec_ints(src, src[len("banded:"):], 2)
        try:
            return gen_banded(fields[0], fields[1:], dtype=dtype)
        except ValueError as exc:
            raise ParseError(f"genspec {src!r}: {exc}") from exc
    if src.startswith("random:"):
        payload = src[len("random:"):].split(",")
        if len(payload) != 3:
            raise ParseError(f"genspec {src!r}: expected N,DENSITY,SEED")
        try:
            n = int(payload[0])
            density = float(payload[1])
            seed = int(payload[2])
            return gen_random_sparse(n, n, density, seed, dtype=dtype)
        except ValueError as exc:
            raise ParseError(f"genspec {src!r}: {exc}") from exc
    path = Path(src)
    if not path.is_absolute():
        path = Path(base_dir) / path
    return read_matrix_market(path, dtype=dtype)
