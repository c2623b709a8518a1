"""Functional model of a streaming dataflow SpMV pipeline plus its cost model.

The modeled engine consumes COO streams (row index, column index, value)
through a fixed-depth floating-point adder.  To keep the adder busy at one
element per cycle, a row's running sum is spread over ``latency`` partial
accumulators, one per pipeline slot; entry ``t`` of the stream lands in
partial ``t % latency``, and the partials are combined once the row is done.
Streams are padded to a multiple of the adder depth with neutral entries
(row index ``nrows``, value zero) so the rotation never straddles real and
stale data.

The cost model assumes: operands arrive in fixed-width memory packs, one
pack per stream per cycle; the reduce loop rescans the whole padded stream
for every row; load and reduce overlap, so the slower one dominates, plus a
final pipeline drain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, UnsortedInput
from .formats import CooMatrix, index_array

INDEX_BITS = 32


@dataclass(frozen=True)
class DataflowConfig:
    """Pipeline parameters: adder depth, memory pack width, clock rate."""

    latency: int = 8
    pack_bits: int = 512
    clock_hz: float = 300e6

    def __post_init__(self) -> None:
        if self.latency < 1:
            raise ValueError("latency must be >= 1")
        if self.pack_bits < 1:
            raise ValueError("pack_bits must be >= 1")
        if self.clock_hz <= 0:
            raise ValueError("clock_hz must be positive")


@dataclass
class PaddedCoo:
    """COO streams padded to a multiple of the adder depth.

    Padding entries carry the out-of-range row index ``nrows`` and value
    zero, so they never contribute to a real row.
    """

    base: CooMatrix
    row_indices: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray
    latency: int

    @property
    def padded_nnz(self) -> int:
        return int(self.values.shape[0])


def pad_inputs(A: CooMatrix, config: DataflowConfig | None = None) -> PaddedCoo:
    """Pad a sorted COO's streams up to a multiple of the adder depth."""
    cfg = config or DataflowConfig()
    if not A.sorted:
        raise UnsortedInput("dataflow model requires a sorted, duplicate-free COO")
    npad = (-A.shape.nnz) % cfg.latency
    rows = np.concatenate(
        [A.row_indices, np.full(npad, A.shape.nrows, dtype=np.int64)])
    cols = np.concatenate([A.col_indices, np.zeros(npad, dtype=np.int64)])
    vals = np.concatenate(
        [A.values, np.zeros(npad, dtype=A.values.dtype)])
    return PaddedCoo(A, index_array(rows), index_array(cols), vals, cfg.latency)


def multiply_stage(padded: PaddedCoo, x) -> np.ndarray:
    """Elementwise products ``values[t] * x[col[t]]`` over the padded stream."""
    xv = np.asarray(x)
    if xv.ndim != 1 or xv.shape[0] != padded.base.shape.ncols:
        raise DimensionMismatch(
            f"x has shape {xv.shape}, expected ({padded.base.shape.ncols},)")
    if xv.dtype != padded.values.dtype:
        xv = xv.astype(padded.values.dtype)
    if padded.padded_nnz == 0:
        return np.zeros(0, dtype=padded.values.dtype)
    return padded.values * xv[padded.col_indices.astype(np.int64)]


def reduce_stage(padded: PaddedCoo, products) -> np.ndarray:
    """Fold the product stream into y exactly as the rotating pipeline would.

    For each row, entry ``t`` goes to partial accumulator ``t % latency`` in
    stream order, and the partials are then combined in slot order.  The
    emulation walks each row's contiguous segment instead of rescanning the
    whole stream, which yields the same sums in the same order as the
    modeled rescanning engine.
    """
    prods = np.asarray(products)
    if prods.ndim != 1 or prods.shape[0] != padded.padded_nnz:
        raise DimensionMismatch(
            f"products has shape {prods.shape}, expected ({padded.padded_nnz},)")
    nrows = padded.base.shape.nrows
    lat = padded.latency
    y = np.zeros(nrows, dtype=prods.dtype)
    if prods.shape[0] == 0 or nrows == 0:
        return y
    rind = padded.row_indices.astype(np.int64)
    starts = np.searchsorted(rind, np.arange(nrows))
    ends = np.searchsorted(rind, np.arange(nrows) + 1)
    for r in range(nrows):
        s, e = int(starts[r]), int(ends[r])
        if s == e:
            continue
        slots = (np.arange(s, e)) % lat
        acc = np.zeros(lat, dtype=prods.dtype)
        seg = prods[s:e]
        for j in range(lat):
            sel = seg[slots == j]
            if sel.shape[0]:
                acc[j] = sel.cumsum()[-1]
        y[r] = acc.cumsum()[-1]
    return y


def dataflow_spmv(A: CooMatrix, x, config: DataflowConfig | None = None) -> np.ndarray:
    """End-to-end modeled pipeline: pad, multiply, rotating reduce."""
    cfg = config or DataflowConfig()
    padded = pad_inputs(A, cfg)
    return reduce_stage(padded, multiply_stage(padded, x))


@dataclass(frozen=True)
class CycleEstimate:
    """Cycle counts for the modeled engine and the derived wall time."""

    load_cycles: int
    reduce_cycles: int
    total_cycles: int
    est_seconds: float


def estimate_cycles(padded: PaddedCoo, config: DataflowConfig | None = None) -> CycleEstimate:
    """Cost the modeled engine on padded streams.

    Load cycles: each stream moves ``pack_bits // element_bits`` elements
    per cycle; the slowest stream (widest element) dominates.  Reduce
    cycles: one pass over the padded stream per row.  The two stages
    overlap, and the adder drains for ``latency`` cycles at the end.
    """
    cfg = config or DataflowConfig()
    n = padded.padded_nnz
    value_bits = padded.values.dtype.itemsize * 8
    load = 0
    for bits in (INDEX_BITS, INDEX_BITS, value_bits):
        per_pack = cfg.pack_bits // bits
        if per_pack < 1:
            raise ValueError(
                f"pack width {cfg.pack_bits} cannot carry a {bits}-bit element")
        load = max(load, -(-n // per_pack))
    reduce_cycles = padded.base.shape.nrows * n
    total = max(load, reduce_cycles) + cfg.latency
    return CycleEstimate(load, reduce_cycles, total, total / cfg.clock_hz)
