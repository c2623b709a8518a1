"""Matrix-vector product kernels.

Two interchangeable versions exist for every storage format:

* ``plain``: the straight scalar algorithms, expressed with numpy only where
  the accumulation order stays identical to the scalar loops.
* ``vla``: vector-style variants built on the masked-lane primitives in
  :mod:`spmvkit.lanes`.  Their control flow mirrors predicated SIMD code:
  whole-lane predicates, gathers for indirect reads, masked multiply-add,
  and tree reductions.

With ``lanes=1`` every ``vla`` kernel walks the plain accumulation sequence,
so the outputs agree exactly, not just to rounding.  A registry maps
``(format, version)`` pairs to callables and backs :func:`dispatch`.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .errors import DimensionMismatch, UnsortedInput, UnsupportedCombination
from .formats import CooMatrix, CsrMatrix, DiaMatrix, Format, as_container
from .lanes import (
    LaneConfig,
    cmp_eq,
    count_active,
    full_mask,
    iota,
    masked_fma,
    masked_gather,
    masked_load,
    tree_reduce,
    while_lt,
)


class KernelVersion(str, Enum):
    """Identifier for the two kernel families."""

    PLAIN = "plain"
    VLA = "vla"


def _checked_x(m, x) -> np.ndarray:
    xv = np.asarray(x)
    if xv.ndim != 1 or xv.shape[0] != m.shape.ncols:
        raise DimensionMismatch(
            f"x has shape {xv.shape}, expected ({m.shape.ncols},)")
    if xv.dtype != m.values.dtype:
        xv = xv.astype(m.values.dtype)
    return xv


def spmv_coo_plain(A: CooMatrix, x) -> np.ndarray:
    """``y = A @ x`` by scattered accumulation in storage order."""
    xv = _checked_x(A, x)
    y = np.zeros(A.shape.nrows, dtype=A.values.dtype)
    if A.shape.nnz:
        rows = A.row_indices.astype(np.int64)
        cols = A.col_indices.astype(np.int64)
        # np.add.at applies updates entry by entry, in storage order, which
        # reproduces the scalar loop's accumulation sequence.
        np.add.at(y, rows, A.values * xv[cols])
    return y


def spmv_csr_plain(A: CsrMatrix, x) -> np.ndarray:
    """``y = A @ x`` with one left-to-right sum per row."""
    xv = _checked_x(A, x)
    y = np.zeros(A.shape.nrows, dtype=A.values.dtype)
    if A.shape.nnz == 0:
        return y
    products = A.values * xv[A.col_indices.astype(np.int64)]
    bounds = A.row_pointers.astype(np.int64).tolist()
    for r in range(A.shape.nrows):
        s, e = bounds[r], bounds[r + 1]
        if e > s:
            # cumsum keeps the strict left-to-right addition order
            y[r] = products[s:e].cumsum()[-1]
    return y


def spmv_dia_plain(A: DiaMatrix, x) -> np.ndarray:
    """``y = A @ x`` over stored diagonals.

    Vectorized one diagonal at a time; every row still receives its
    contributions in diagonal order, matching the scalar row-by-row loop
    with its in-bounds column guard.
    """
    xv = _checked_x(A, x)
    nrows, ncols = A.shape.nrows, A.shape.ncols
    y = np.zeros(nrows, dtype=A.values.dtype)
    for d in range(A.ndiags):
        off = int(A.offsets[d])
        lo = max(0, -off)
        hi = min(nrows, ncols - off)
        if hi > lo:
            y[lo:hi] += A.values[lo:hi, d] * xv[lo + off:hi + off]
    return y


def spmv_coo_vla(A: CooMatrix, x, config: LaneConfig | None = None,
                 stats: dict | None = None) -> np.ndarray:
    """Vector-style COO product.

    Each outer step loads up to ``lanes`` consecutive entries, narrows the
    predicate to the leading run that shares the first entry's row, gathers
    the matching x elements, multiplies, and folds the lane products with a
    pairwise tree reduction into a single scalar update of y.  The step
    advances by the run length, so a step never crosses a row boundary and
    rows longer than the lane count take several steps.

    Requires the sorted flag.  When ``stats`` is given, the number of outer
    steps is recorded under ``"outer_steps"``.
    """
    cfg = config or LaneConfig()
    if not A.sorted:
        raise UnsortedInput("vla COO kernel requires a sorted, duplicate-free COO")
    xv = _checked_x(A, x)
    lanes = cfg.lanes
    nnz = A.shape.nnz
    y = np.zeros(A.shape.nrows, dtype=A.values.dtype)
    ai, aj, av = A.row_indices, A.col_indices, A.values
    i = 0
    steps = 0
    while i < nnz:
        pg = while_lt(i, nnz, lanes)
        vrow = masked_load(pg, ai, i)
        pg = cmp_eq(pg, vrow, ai[i])
        vcol = masked_load(pg, aj, i)
        vval = masked_load(pg, av, i)
        vx = masked_gather(pg, xv, vcol)
        y[int(ai[i])] += tree_reduce(pg, vval * vx)
        i += count_active(pg)
        steps += 1
    if stats is not None:
        stats["outer_steps"] = steps
    return y


def spmv_csr_vla(A: CsrMatrix, x, config: LaneConfig | None = None) -> np.ndarray:
    """Vector-style CSR product.

    Consumes each row in lane-wide chunks under a bounds predicate,
    accumulates into a lane-wide partial vector with masked multiply-add,
    and folds the partials once per row with a tree reduction.
    """
    cfg = config or LaneConfig()
    xv = _checked_x(A, x)
    lanes = cfg.lanes
    y = np.zeros(A.shape.nrows, dtype=A.values.dtype)
    aj, av = A.col_indices, A.values
    bounds = A.row_pointers.astype(np.int64).tolist()
    all_on = full_mask(lanes)
    for r in range(A.shape.nrows):
        s, e = bounds[r], bounds[r + 1]
        if s == e:
            continue
        acc = np.zeros(lanes, dtype=av.dtype)
        j = s
        while j < e:
            pg = while_lt(j, e, lanes)
            vcol = masked_load(pg, aj, j)
            vval = masked_load(pg, av, j)
            vx = masked_gather(pg, xv, vcol)
            acc = masked_fma(pg, acc, vval, vx)
            j += lanes
        y[r] = tree_reduce(all_on, acc)
    return y


def spmv_dia_vla(A: DiaMatrix, x, config: LaneConfig | None = None) -> np.ndarray:
    """Vector-style DIA product.

    The row loop advances one lane block at a time.  For every stored
    diagonal the block derives its column indices, masks lanes whose column
    falls outside the matrix, gathers x, reads the diagonal's cells for the
    block rows and accumulates with a masked multiply-add.  The block result
    is stored contiguously after all diagonals are applied.
    """
    cfg = config or LaneConfig()
    xv = _checked_x(A, x)
    lanes = cfg.lanes
    nrows, ncols = A.shape.nrows, A.shape.ncols
    y = np.zeros(nrows, dtype=A.values.dtype)
    offs = [int(o) for o in A.offsets]
    lane_ids = iota(lanes)
    i = 0
    while i < nrows:
        pg = while_lt(i, nrows, lanes)
        cnt = min(lanes, nrows - i)
        acc = np.zeros(lanes, dtype=A.values.dtype)
        for d, off in enumerate(offs):
            k = i + off + lane_ids
            pm = pg & (k >= 0) & (k < ncols)
            if not pm.any():
                continue
            block = A.values[i:i + cnt, d]
            if cnt < lanes:
                vval = np.zeros(lanes, dtype=A.values.dtype)
                vval[:cnt] = block
            else:
                vval = block
            vx = masked_gather(pm, xv, k)
            acc = masked_fma(pm, acc, vval, vx)
        y[i:i + cnt] = acc[:cnt]
        i += lanes
    return y


class KernelRegistry:
    """Dispatch table mapping ``(format, version)`` to a kernel callable.

    Registered callables take ``(matrix, x, config)``.  Exactly one callable
    is held per pair; registering again replaces the previous entry.
    """

    def __init__(self, table=None) -> None:
        self._table = dict(table or {})

    def register(self, fmt, version, fn) -> None:
        self._table[(Format(fmt), KernelVersion(version))] = fn

    def unregister(self, fmt, version) -> None:
        self._table.pop((Format(fmt), KernelVersion(version)), None)

    def supports(self, fmt, version) -> bool:
        return (Format(fmt), KernelVersion(version)) in self._table

    def lookup(self, fmt, version):
        key = (Format(fmt), KernelVersion(version))
        try:
            return self._table[key]
        except KeyError:
            raise UnsupportedCombination(
                f"no kernel registered for ({key[0].value}, {key[1].value})") from None

    def pairs(self) -> list:
        return sorted(self._table)

    def copy(self) -> "KernelRegistry":
        return KernelRegistry(self._table)


def _plain_coo(A, x, config):
    return spmv_coo_plain(A, x)


def _plain_csr(A, x, config):
    return spmv_csr_plain(A, x)


def _plain_dia(A, x, config):
    return spmv_dia_plain(A, x)


def _vla_coo(A, x, config):
    return spmv_coo_vla(A, x, config)


def _vla_csr(A, x, config):
    return spmv_csr_vla(A, x, config)


def _vla_dia(A, x, config):
    return spmv_dia_vla(A, x, config)


def default_registry() -> KernelRegistry:
    """Fresh registry holding both versions for all three formats."""
    reg = KernelRegistry()
    reg.register(Format.COO, KernelVersion.PLAIN, _plain_coo)
    reg.register(Format.CSR, KernelVersion.PLAIN, _plain_csr)
    reg.register(Format.DIA, KernelVersion.PLAIN, _plain_dia)
    reg.register(Format.COO, KernelVersion.VLA, _vla_coo)
    reg.register(Format.CSR, KernelVersion.VLA, _vla_csr)
    reg.register(Format.DIA, KernelVersion.VLA, _vla_dia)
    return reg


_DEFAULT_REGISTRY = default_registry()


def dispatch(matrix, x, version=KernelVersion.PLAIN,
             config: LaneConfig | None = None,
             registry: KernelRegistry | None = None) -> np.ndarray:
    """Run ``y = A @ x`` with the kernel registered for the matrix's format.

    Accepts a concrete container or a :class:`~spmvkit.formats.DynamicMatrix`.
    ``registry=None`` uses the built-in table.
    """
    m = as_container(matrix)
    reg = registry if registry is not None else _DEFAULT_REGISTRY
    fn = reg.lookup(m.format, KernelVersion(version))
    return fn(m, x, config)
