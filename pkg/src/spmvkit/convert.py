"""Conversions between the COO, CSR and DIA layouts.

COO is the hub format: every path goes through a sorted, duplicate-free COO.
DIA construction is guarded by a fill policy because its dense diagonal block
can dwarf the logical entry count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FillRatioExceeded, UnsortedInput
from .formats import (
    ROW_PAD,
    Container,
    CooMatrix,
    CsrMatrix,
    DiaMatrix,
    DynamicMatrix,
    Format,
    MatrixShape,
    as_container,
    index_array,
    offset_array,
    round_up,
    scalar_array,
)

DEFAULT_FILL_RATIO = 10.0


@dataclass(frozen=True)
class DiaFillPolicy:
    """Budget for DIA construction.

    ``max_fill_ratio`` caps stored cells (``padded_rows * ndiags``) relative
    to ``max(nnz, 1)``.  ``max_ndiags`` caps the diagonal count outright;
    ``None`` means the structural maximum ``nrows + ncols - 1``.
    """

    max_fill_ratio: float = DEFAULT_FILL_RATIO
    max_ndiags: int | None = None


def dense_to_coo(dense, dtype=None) -> CooMatrix:
    """Build a sorted COO from a dense 2-D array, dropping exact zeros."""
    arr = np.asarray(dense)
    if arr.ndim != 2:
        raise ValueError("dense_to_coo expects a 2-D array")
    rows, cols = np.nonzero(arr)
    values = scalar_array(arr[rows, cols], dtype)
    shape = MatrixShape(int(arr.shape[0]), int(arr.shape[1]), int(values.shape[0]))
    # np.nonzero walks the array in row-major order, so the triples are
    # already (row, col) sorted with unique coordinates.
    return CooMatrix(shape, rows, cols, values, sorted=True)


def sort_coo(coo: CooMatrix) -> CooMatrix:
    """Return a (row, col) sorted COO with duplicate coordinates summed.

    A matrix already carrying the sorted flag is returned unchanged.
    Duplicate summation keeps the resulting entry even when it sums to zero.
    """
    if coo.sorted:
        return coo
    rows = coo.row_indices
    cols = coo.col_indices
    order = np.lexsort((cols, rows))
    rows = rows[order]
    cols = cols[order]
    values = coo.values[order]
    if rows.shape[0] > 1:
        new_run = np.empty(rows.shape[0], dtype=bool)
        new_run[0] = True
        new_run[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        if not new_run.all():
            starts = np.flatnonzero(new_run)
            values = np.add.reduceat(values, starts)
            rows = rows[starts]
            cols = cols[starts]
    shape = MatrixShape(coo.shape.nrows, coo.shape.ncols, int(values.shape[0]))
    return CooMatrix(shape, rows, cols, values, sorted=True)


def coo_to_csr(coo: CooMatrix) -> CsrMatrix:
    """Compress a sorted COO into CSR; raises :class:`UnsortedInput` otherwise."""
    if not coo.sorted:
        raise UnsortedInput("coo_to_csr requires a sorted, duplicate-free COO")
    counts = np.bincount(coo.row_indices.astype(np.int64), minlength=coo.shape.nrows)
    irp = np.zeros(coo.shape.nrows + 1, dtype=np.int64)
    np.cumsum(counts, out=irp[1:])
    return CsrMatrix(coo.shape, index_array(irp), coo.col_indices.copy(), coo.values.copy())


def csr_to_coo(csr: CsrMatrix) -> CooMatrix:
    """Expand CSR row pointers back to coordinate triples.

    The sorted flag is set only when every row's columns are strictly
    increasing, which makes the triples globally (row, col) sorted.
    """
    irp = csr.row_pointers.astype(np.int64)
    rows = np.repeat(np.arange(csr.shape.nrows, dtype=np.int64), np.diff(irp))
    cols = csr.col_indices
    is_sorted = True
    if cols.shape[0] > 1:
        same_row = rows[1:] == rows[:-1]
        is_sorted = bool((cols[1:][same_row] > cols[:-1][same_row]).all())
    return CooMatrix(csr.shape, rows, cols.copy(), csr.values.copy(), sorted=is_sorted)


def coo_to_dia(coo: CooMatrix, policy: DiaFillPolicy | None = None,
               pad_to: int = ROW_PAD) -> DiaMatrix:
    """Scatter a sorted COO into diagonal storage.

    The fill policy is checked before the dense block is allocated; a breach
    raises :class:`FillRatioExceeded` with the offending numbers.
    """
    if not coo.sorted:
        raise UnsortedInput("coo_to_dia requires a sorted, duplicate-free COO")
    policy = policy or DiaFillPolicy()
    shape = coo.shape
    rows64 = coo.row_indices.astype(np.int64)
    offsets = np.unique(coo.col_indices.astype(np.int64) - rows64)
    ndiags = int(offsets.shape[0])
    padded_rows = round_up(shape.nrows, pad_to) if shape.nrows else 0
    max_ndiags = policy.max_ndiags
    if max_ndiags is None:
        max_ndiags = max(shape.nrows + shape.ncols - 1, 0)
    if ndiags > max_ndiags:
        raise FillRatioExceeded(
            f"DIA would need {ndiags} diagonals, over the cap of {max_ndiags}")
    stored = padded_rows * ndiags
    budget = policy.max_fill_ratio * max(shape.nnz, 1)
    if stored > budget:
        raise FillRatioExceeded(
            f"DIA would store {stored} cells for {shape.nnz} entries "
            f"(fill ratio cap {policy.max_fill_ratio})")
    values = np.zeros((padded_rows, ndiags), dtype=coo.values.dtype)
    if shape.nnz:
        dpos = np.searchsorted(offsets, coo.col_indices.astype(np.int64) - rows64)
        values[rows64, dpos] = coo.values
    return DiaMatrix(shape, offset_array(offsets), values)


def dia_to_coo(dia: DiaMatrix) -> CooMatrix:
    """Collect in-bounds, nonzero diagonal cells into a sorted COO."""
    nrows, ncols = dia.shape.nrows, dia.shape.ncols
    rows_parts = []
    cols_parts = []
    vals_parts = []
    for d in range(dia.ndiags):
        off = int(dia.offsets[d])
        lo = max(0, -off)
        hi = min(nrows, ncols - off)
        if hi <= lo:
            continue
        col = dia.values[lo:hi, d]
        nz = np.flatnonzero(col)
        if nz.shape[0] == 0:
            continue
        rows_parts.append(lo + nz)
        cols_parts.append(lo + nz + off)
        vals_parts.append(col[nz])
    if rows_parts:
        rows = np.concatenate(rows_parts)
        cols = np.concatenate(cols_parts)
        values = np.concatenate(vals_parts)
        order = np.lexsort((cols, rows))
        rows, cols, values = rows[order], cols[order], values[order]
    else:
        rows = np.empty(0, dtype=np.int64)
        cols = np.empty(0, dtype=np.int64)
        values = np.empty(0, dtype=dia.values.dtype)
    shape = MatrixShape(nrows, ncols, int(values.shape[0]))
    return CooMatrix(shape, rows, cols, values, sorted=True)


def to_format(matrix, target: Format, policy: DiaFillPolicy | None = None,
              pad_to: int = ROW_PAD) -> Container:
    """Convert any container (or wrapper) to ``target`` via the COO hub.

    A COO result is always sorted; asking for the format the matrix is
    already in returns it untouched except for that sorting guarantee.
    """
    m = as_container(matrix)
    target = Format(target)
    if m.format == target:
        return sort_coo(m) if isinstance(m, CooMatrix) else m
    if isinstance(m, CsrMatrix):
        hub = csr_to_coo(m)
    elif isinstance(m, DiaMatrix):
        hub = dia_to_coo(m)
    else:
        hub = sort_coo(m)
    hub = sort_coo(hub)
    if target == Format.COO:
        return hub
    if target == Format.CSR:
        return coo_to_csr(hub)
    return coo_to_dia(hub, policy, pad_to)


def switch_format(matrix: DynamicMatrix, target: Format,
                  policy: DiaFillPolicy | None = None,
                  pad_to: int = ROW_PAD) -> DynamicMatrix:
    """Return a wrapper whose active container uses ``target``."""
    return DynamicMatrix(to_format(matrix, target, policy, pad_to))
