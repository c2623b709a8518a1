"""Shared test utilities: independent oracles, fake clocks, corpus builder.

The oracle path deliberately avoids the package's own conversion and kernel
code: ``dense_of`` walks the raw storage arrays with Python loops, so a bug
in the conversions cannot cancel out in the comparisons.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from spmvkit.convert import dense_to_coo
from spmvkit.formats import CooMatrix, CsrMatrix, DiaMatrix, DynamicMatrix
from spmvkit.matrixio import (
    gen_banded,
    gen_random_sparse,
    gen_stencil27,
    read_matrix_market,
)

DATA_DIR = Path(__file__).parent / "data"

CANON_ROWS = (0, 0, 1, 1, 2, 2, 3, 3, 3, 4, 4)
CANON_COLS = (0, 2, 0, 1, 2, 3, 0, 3, 4, 1, 4)
CANON_VALS = (1.0, 2.0, 11.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0)


def canonical_coo(dtype=None) -> CooMatrix:
    """The 5x5 reference matrix used across the examples, as sorted COO."""
    vals = np.asarray(CANON_VALS, dtype=dtype or np.float64)
    return CooMatrix.from_arrays(5, 5, CANON_ROWS, CANON_COLS, vals, sorted=True)


def canonical_dense() -> np.ndarray:
    dense = np.zeros((5, 5))
    for r, c, v in zip(CANON_ROWS, CANON_COLS, CANON_VALS):
        dense[r, c] = v
    return dense


def dense_of(matrix) -> np.ndarray:
    """Reconstruct the dense array straight from the raw storage arrays."""
    m = matrix.active if isinstance(matrix, DynamicMatrix) else matrix
    out = np.zeros((m.shape.nrows, m.shape.ncols), dtype=m.values.dtype)
    if isinstance(m, CooMatrix):
        for k in range(m.shape.nnz):
            out[int(m.row_indices[k]), int(m.col_indices[k])] += m.values[k]
    elif isinstance(m, CsrMatrix):
        for r in range(m.shape.nrows):
            for k in range(int(m.row_pointers[r]), int(m.row_pointers[r + 1])):
                out[r, int(m.col_indices[k])] += m.values[k]
    elif isinstance(m, DiaMatrix):
        for i in range(m.shape.nrows):
            for d in range(m.ndiags):
                j = i + int(m.offsets[d])
                if 0 <= j < m.shape.ncols:
                    out[i, j] += m.values[i, d]
    else:
        raise TypeError(f"unsupported container {type(m).__name__}")
    return out


def oracle_spmv(matrix, x) -> np.ndarray:
    """Reference product through the independent dense reconstruction."""
    dense = dense_of(matrix)
    return dense @ np.asarray(x, dtype=dense.dtype)


def rel_err(y, ref) -> float:
    """Max elementwise error relative to ``max(|ref|, 1)``."""
    y = np.asarray(y, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if y.size == 0:
        return 0.0
    return float(np.max(np.abs(y - ref) / np.maximum(np.abs(ref), 1.0)))


class CountingClock:
    """Fake timer that advances one second per call.

    Consecutive call pairs always measure 1.0 s, so every candidate ties
    and call counts can be asserted exactly.
    """

    def __init__(self) -> None:
        self.calls = 0

    def __call__(self) -> float:
        self.calls += 1
        return float(self.calls)


class ScriptedClock:
    """Fake timer advancing by scripted increments, then by a default step."""

    def __init__(self, increments=(), default: float = 1.0) -> None:
        self.pending = list(increments)
        self.default = default
        self.now = 0.0
        self.calls = 0

    def __call__(self) -> float:
        self.now += self.pending.pop(0) if self.pending else self.default
        self.calls += 1
        return self.now


def sample_schedule(durations, reps: int) -> list:
    """Clock increments making each candidate's samples equal its duration.

    The measurement loop brackets every sample with two clock reads, so
    ``[0.0, d]`` per repetition pins that candidate's duration to ``d``.
    """
    out: list = []
    for d in durations:
        out.extend([0.0, d] * reps)
    return out


def build_corpus(data_dir=DATA_DIR) -> list:
    """Named fixture matrices spanning generators, files, and edge shapes."""
    entries = [("canonical", canonical_coo())]
    for n in range(2, 9):
        entries.append((f"stencil-{n}", gen_stencil27(n, n, n)))
    entries.append(("banded-tri", gen_banded(32, [-1, 0, 1])))
    entries.append(("banded-penta", gen_banded(33, [-4, -1, 0, 1, 4])))
    entries.append(("banded-diag", gen_banded(48, [0])))
    entries.append(("banded-wide", gen_banded(64, [-8, 0, 8, 16])))
    for seed in range(1, 11):
        entries.append((f"random-{seed}", gen_random_sparse(60, 60, 0.05, seed)))
    for name in ("general", "symmetric", "pattern", "skew", "intsym"):
        entries.append((f"mm-{name}", read_matrix_market(Path(data_dir) / f"{name}.mtx")))
    entries.append(("rect-wide", gen_random_sparse(7, 13, 0.15, 42)))
    entries.append(("rect-tall", gen_random_sparse(9, 4, 0.2, 43)))
    entries.append(("empty", CooMatrix.from_arrays(6, 6, [], [], [], sorted=True)))
    entries.append(("identity", dense_to_coo(np.eye(10))))
    entries.append(("single", CooMatrix.from_arrays(1, 1, [0], [0], [3.5], sorted=True)))
    return entries
