"""Sparse matrix containers: COO, CSR, DIA, and a runtime-switchable wrapper.

Storage conventions shared by every container:

* row/column indices are unsigned 32-bit, diagonal offsets signed 32-bit
* scalar values are float64 by default, with float32 as the compact option
* DIA values are a dense ``(padded_rows, ndiags)`` row-major block whose
  column ``d`` holds the diagonal with offset ``offsets[d]``; rows are padded
  up to a multiple of :data:`ROW_PAD` and padding cells are stored as zero

Containers are plain dataclasses.  Constructors coerce array arguments to the
canonical dtypes and are cheap when the input already matches; they do not
validate structural invariants.  Use :func:`validate` to collect violations.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

INDEX_DTYPE = np.dtype(np.uint32)
OFFSET_DTYPE = np.dtype(np.int32)
DEFAULT_SCALAR = np.dtype(np.float64)
SCALAR_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))

# DIA row padding unit; equal to the widest lane count the kernels target.
ROW_PAD = 8


class Format(str, Enum):
    """Identifier for the three concrete storage layouts."""

    COO = "coo"
    CSR = "csr"
    DIA = "dia"


def round_up(n: int, multiple: int) -> int:
    """Round ``n`` up to the next multiple of ``multiple``."""
    if multiple <= 0:
        raise ValueError("multiple must be positive")
    return -(-int(n) // multiple) * multiple


def index_array(values) -> np.ndarray:
    """Coerce to a contiguous 1-D uint32 array."""
    return np.ascontiguousarray(values, dtype=INDEX_DTYPE)


def offset_array(values) -> np.ndarray:
    """Coerce to a contiguous 1-D int32 array."""
    return np.ascontiguousarray(values, dtype=OFFSET_DTYPE)


def scalar_array(values, dtype=None) -> np.ndarray:
    """Coerce to a contiguous scalar array.

    With ``dtype=None`` an existing float32/float64 array keeps its dtype and
    anything else is promoted to float64.
    """
    arr = np.asarray(values)
    if dtype is not None:
        return np.ascontiguousarray(arr, dtype=np.dtype(dtype))
    if arr.dtype in SCALAR_DTYPES:
        return np.ascontiguousarray(arr)
    return np.ascontiguousarray(arr, dtype=DEFAULT_SCALAR)


@dataclass(frozen=True)
class MatrixShape:
    """Logical dimensions plus stored entry count."""

    nrows: int
    ncols: int
    nnz: int


@dataclass
class CooMatrix:
    """Coordinate triples ``(row_indices[k], col_indices[k], values[k])``.

    ``sorted`` asserts that entries are lexicographically ordered by
    ``(row, col)`` with no duplicate coordinates.  Kernels that rely on run
    detection require it.
    """

    shape: MatrixShape
    row_indices: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray
    sorted: bool = False

    def __post_init__(self) -> None:
        self.row_indices = index_array(self.row_indices)
        self.col_indices = index_array(self.col_indices)
        self.values = scalar_array(self.values)

    @classmethod
    def from_arrays(cls, nrows, ncols, rows, cols, values, sorted=False) -> "CooMatrix":
        values = scalar_array(values)
        shape = MatrixShape(int(nrows), int(ncols), int(values.shape[0]))
        return cls(shape, rows, cols, values, sorted)

    @property
    def nrows(self) -> int:
        return self.shape.nrows

    @property
    def ncols(self) -> int:
        return self.shape.ncols

    @property
    def nnz(self) -> int:
        return self.shape.nnz

    @property
    def format(self) -> Format:
        return Format.COO


@dataclass
class CsrMatrix:
    """Compressed sparse rows.

    ``row_pointers`` has ``nrows + 1`` entries; row ``r`` owns the half-open
    slice ``[row_pointers[r], row_pointers[r + 1])`` of ``col_indices`` and
    ``values``.
    """

    shape: MatrixShape
    row_pointers: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        self.row_pointers = index_array(self.row_pointers)
        self.col_indices = index_array(self.col_indices)
        self.values = scalar_array(self.values)

    @classmethod
    def from_arrays(cls, nrows, ncols, row_pointers, cols, values) -> "CsrMatrix":
        values = scalar_array(values)
        shape = MatrixShape(int(nrows), int(ncols), int(values.shape[0]))
        return cls(shape, row_pointers, cols, values)

    @property
    def nrows(self) -> int:
        return self.shape.nrows

    @property
    def ncols(self) -> int:
        return self.shape.ncols

    @property
    def nnz(self) -> int:
        return self.shape.nnz

    @property
    def format(self) -> Format:
        return Format.CSR


@dataclass
class DiaMatrix:
    """Diagonal storage.

    ``offsets`` lists the populated diagonals in strictly increasing order
    (offset ``o`` pairs row ``i`` with column ``i + o``).  ``values`` is dense
    ``(padded_rows, ndiags)``: cell ``(i, d)`` holds the element of diagonal
    ``d`` in row ``i``, or zero when that position falls outside the matrix.
    ``shape.nnz`` counts logical entries, not stored cells.
    """

    shape: MatrixShape
    offsets: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        self.offsets = offset_array(self.offsets)
        self.values = scalar_array(self.values)

    @property
    def nrows(self) -> int:
        return self.shape.nrows

    @property
    def ncols(self) -> int:
        return self.shape.ncols

    @property
    def nnz(self) -> int:
        return self.shape.nnz

    @property
    def ndiags(self) -> int:
        return int(self.offsets.shape[0])

    @property
    def padded_rows(self) -> int:
        return int(self.values.shape[0]) if self.values.ndim == 2 else 0

    @property
    def format(self) -> Format:
        return Format.DIA


Container = Union[CooMatrix, CsrMatrix, DiaMatrix]


@dataclass
class DynamicMatrix:
    """Wrapper holding one concrete container, switchable at runtime."""

    active: Container

    @classmethod
    def wrap(cls, matrix) -> "DynamicMatrix":
        if isinstance(matrix, DynamicMatrix):
            return matrix
        return cls(matrix)

    @property
    def format(self) -> Format:
        return self.active.format

    @property
    def shape(self) -> MatrixShape:
        return self.active.shape

    @property
    def nrows(self) -> int:
        return self.active.nrows

    @property
    def ncols(self) -> int:
        return self.active.ncols

    @property
    def nnz(self) -> int:
        return self.active.nnz


def as_container(matrix) -> Container:
    """Unwrap a :class:`DynamicMatrix`; concrete containers pass through."""
    if isinstance(matrix, DynamicMatrix):
        return matrix.active
    return matrix


def _validate_shape(shape: MatrixShape, out: list) -> None:
    if shape.nrows < 0 or shape.ncols < 0:
        out.append("shape: negative dimension")
    if shape.nnz < 0 or shape.nnz > shape.nrows * shape.ncols:
        out.append("shape: nnz outside [0, nrows*ncols]")


def _lex_sorted_strict(rows: np.ndarray, cols: np.ndarray) -> bool:
    if rows.shape[0] < 2:
        return True
    r0, r1 = rows[:-1], rows[1:]
    c0, c1 = cols[:-1], cols[1:]
    ok = (r1 > r0) | ((r1 == r0) & (c1 > c0))
    return bool(ok.all())


def _validate_coo(m: CooMatrix, out: list) -> None:
    n = m.shape.nnz
    for name, arr in (("row_indices", m.row_indices),
                      ("col_indices", m.col_indices),
                      ("values", m.values)):
        if arr.ndim != 1 or arr.shape[0] != n:
            out.append(f"COO: {name} length != nnz")
            return
    if n and (m.row_indices.astype(np.int64) >= m.shape.nrows).any():
        out.append("COO: row index out of range")
    if n and (m.col_indices.astype(np.int64) >= m.shape.ncols).any():
        out.append("COO: column index out of range")
    if m.sorted and not _lex_sorted_strict(m.row_indices, m.col_indices):
        out.append("COO: sorted flag set but entries are not strictly (row, col) ordered")


def _validate_csr(m: CsrMatrix, out: list) -> None:
    n = m.shape.nnz
    irp = m.row_pointers
    if irp.ndim != 1 or irp.shape[0] != m.shape.nrows + 1:
        out.append("CSR: IRP length != nrows+1")
        return
    if irp.shape[0] and irp[0] != 0:
        out.append("CSR: IRP[0] != 0")
    if irp.shape[0] and int(irp[-1]) != n:
        out.append("CSR: IRP[-1] != nnz")
    if (np.diff(irp.astype(np.int64)) < 0).any():
        out.append("CSR: IRP non-decreasing violated")
    for name, arr in (("col_indices", m.col_indices), ("values", m.values)):
        if arr.ndim != 1 or arr.shape[0] != n:
            out.append(f"CSR: {name} length != nnz")
            return
    if n and (m.col_indices.astype(np.int64) >= m.shape.ncols).any():
        out.append("CSR: column index out of range")


def _validate_dia(m: DiaMatrix, out: list) -> None:
    offs = m.offsets.astype(np.int64)
    nd = offs.shape[0]
    if nd > 1 and (np.diff(offs) <= 0).any():
        out.append("DIA: offsets not strictly increasing")
    if nd and ((offs <= -max(m.shape.nrows, 1)) | (offs >= max(m.shape.ncols, 1))).any():
        out.append("DIA: offset out of range")
    if m.values.ndim != 2 or m.values.shape[1] != nd:
        out.append("DIA: values is not a (padded_rows, ndiags) block")
        return
    if m.padded_rows < m.shape.nrows:
        out.append("DIA: padded_rows < nrows")
        return
    if nd == 0:
        return
    rows = np.arange(m.padded_rows, dtype=np.int64)[:, None]
    k = rows + offs[None, :]
    outside = (k < 0) | (k >= m.shape.ncols) | (rows >= m.shape.nrows)
    if (m.values[outside] != 0).any():
        out.append("DIA: padding cells must be zero")


def validate(matrix) -> list:
    """Collect invariant violations for any container or wrapper.

    Returns a list of human-readable strings, empty when the matrix is
    well formed.  Checks cover array lengths, index ranges, CSR pointer
    monotonicity, DIA offset ordering and zeroed padding cells, and the COO
    sorted flag against the actual entry order.
    """
    m = as_container(matrix)
    out: list = []
    _validate_shape(m.shape, out)
    if isinstance(m, CooMatrix):
        _validate_coo(m, out)
    elif isinstance(m, CsrMatrix):
        _validate_csr(m, out)
    elif isinstance(m, DiaMatrix):
        _validate_dia(m, out)
    else:
        out.append(f"unknown container type: {type(m).__name__}")
    return out
