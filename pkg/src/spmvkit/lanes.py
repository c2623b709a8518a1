"""Masked-lane primitives backing the vector-style SpMV kernels.

Models a vector-length-agnostic unit: a configurable lane count, a boolean
predicate per lane, and loads/gathers that only touch active lanes.  The
realization is plain numpy on short arrays, which keeps results identical on
any host while preserving the kernels' predicated control flow.  Inactive
lanes always carry zero after a load, so arithmetic on the full vector never
sees garbage.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

LANES_ENV_VAR = "SPMV_LANES"
DEFAULT_LANES = 8


@dataclass(frozen=True)
class LaneConfig:
    """Lane count for the vector-style kernels.  Must be at least 1."""

    lanes: int = DEFAULT_LANES

    def __post_init__(self) -> None:
        if self.lanes < 1:
            raise ValueError("lane count must be >= 1")

    @classmethod
    def from_env(cls, default: int = DEFAULT_LANES) -> "LaneConfig":
        """Read the lane count from ``SPMV_LANES``; bad values raise ValueError."""
        raw = os.environ.get(LANES_ENV_VAR)
        if raw is None or not raw.strip():
            return cls(default)
        try:
            lanes = int(raw)
        except ValueError as exc:
            raise ValueError(f"{LANES_ENV_VAR} must be an integer, got {raw!r}") from exc
        return cls(lanes)


@lru_cache(maxsize=None)
def iota(lanes: int) -> np.ndarray:
    """Cached ``[0, 1, ..., lanes-1]``; treat as read-only."""
    out = np.arange(lanes, dtype=np.int64)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def full_mask(lanes: int) -> np.ndarray:
    """Cached all-active predicate; treat as read-only."""
    out = np.ones(lanes, dtype=bool)
    out.setflags(write=False)
    return out


def while_lt(start: int, limit: int, lanes: int) -> np.ndarray:
    """Predicate with lane ``l`` active while ``start + l < limit``."""
    return (start + iota(lanes)) < limit


def cmp_eq(mask: np.ndarray, vec: np.ndarray, scalar) -> np.ndarray:
    """Narrow ``mask`` to lanes whose element equals ``scalar``."""
    return mask & (vec == scalar)


def count_active(mask: np.ndarray) -> int:
    return int(mask.sum())


def masked_load(mask: np.ndarray, src: np.ndarray, start: int) -> np.ndarray:
    """Load ``src[start + l]`` into active lanes, zero elsewhere.

    Lanes past the end of ``src`` must be inactive; they come back zero.
    """
    lanes = mask.shape[0]
    chunk = src[start:start + lanes]
    if chunk.shape[0] < lanes:
        padded = np.zeros(lanes, dtype=src.dtype)
        padded[:chunk.shape[0]] = chunk
        chunk = padded
    return np.where(mask, chunk, src.dtype.type(0))


def masked_gather(mask: np.ndarray, table: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Gather ``table[idx[l]]`` on active lanes, zero elsewhere.

    Indices on inactive lanes are ignored, so they may be out of range.
    """
    if not mask.any():
        return np.zeros(mask.shape[0], dtype=table.dtype)
    safe = np.where(mask, idx, 0)
    return np.where(mask, table[safe], table.dtype.type(0))


def masked_fma(mask: np.ndarray, acc: np.ndarray, a: np.ndarray,
               b: np.ndarray) -> np.ndarray:
    """Return ``acc + a * b`` on active lanes, ``acc`` untouched elsewhere."""
    return np.where(mask, acc + a * b, acc)


def tree_reduce(mask: np.ndarray, vec: np.ndarray):
    """Sum the active lanes by pairwise halving.

    Inactive lanes contribute zero.  The vector is padded with zeros up to a
    power of two, then halves are added until one element remains; a single
    lane reduces to its own value.  Returns a scalar of ``vec``'s dtype.
    """
    vals = np.where(mask, vec, vec.dtype.type(0))
    n = vals.shape[0]
    if n == 1:
        return vals[0]
    width = 1
    while width < n:
        width *= 2
    if width != n:
        padded = np.zeros(width, dtype=vals.dtype)
        padded[:n] = vals
        vals = padded
    while width > 1:
        width //= 2
        vals = vals[:width] + vals[width:2 * width]
    return vals[0]
