"""Run-first format selection: measure every candidate, keep the fastest.

Measurement protocol: the matrix is converted once outside the timed region,
one untimed product warms the kernel, then each repetition times a block of
back-to-back products.  The median repetition is the score.  Ties break by a
fixed precedence (CSR, COO, DIA; then plain before vla) so selection is
deterministic, and the winner is invariant under positive rescaling of all
timings.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from .convert import DiaFillPolicy, to_format
from .errors import (
    AllCandidatesFailed,
    EmptyInput,
    FillRatioExceeded,
    UnsupportedCombination,
)
from .formats import Format
from .kernels import KernelRegistry, KernelVersion, dispatch
from .lanes import LaneConfig

_FORMAT_RANK = {Format.CSR: 0, Format.COO: 1, Format.DIA: 2}
_VERSION_RANK = {KernelVersion.PLAIN: 0, KernelVersion.VLA: 1}

DEFAULT_CANDIDATES = tuple(
    (fmt, ver)
    for ver in (KernelVersion.PLAIN, KernelVersion.VLA)
    for fmt in (Format.CSR, Format.COO, Format.DIA))


@dataclass
class Measurement:
    """Timing of one (format, version) candidate on one matrix.

    ``samples`` holds one duration per repetition, each covering
    ``iterations`` back-to-back products.
    """

    matrix_id: str
    format: Format
    version: KernelVersion
    iterations: int
    samples: list
    median_seconds: float
    gflops: float

    @property
    def reps(self) -> int:
        return len(self.samples)


def measure(matrix, fmt, version, iterations: int = 100, reps: int = 10, *,
            x=None, timer=None, config: LaneConfig | None = None,
            registry: KernelRegistry | None = None,
            policy: DiaFillPolicy | None = None,
            matrix_id: str = "") -> Measurement:
    """Time ``iterations`` products, ``reps`` times, on a converted matrix.

    Conversion and one warm-up product happen before timing starts.  ``x``
    defaults to the ones vector.  The flop rate uses two flops per stored
    entry of the converted matrix.
    """
    if iterations < 1 or reps < 1:
        raise ValueError("iterations and reps must be >= 1")
    clock = timer or time.perf_counter
    fmt = Format(fmt)
    version = KernelVersion(version)
    m = to_format(matrix, fmt, policy)
    if x is None:
        x = np.ones(m.shape.ncols, dtype=m.values.dtype)
    dispatch(m, x, version, config, registry)  # warm-up
    samples = []
    for _ in range(reps):
        t0 = clock()
        for _ in range(iterations):
            dispatch(m, x, version, config, registry)
        samples.append(clock() - t0)
    med = float(statistics.median(samples))
    gflops = (2.0 * m.shape.nnz * iterations / med / 1e9) if med > 0 else 0.0
    return Measurement(matrix_id, fmt, version, iterations, samples, med, gflops)


@dataclass
class TuneChoice:
    """Winning candidate plus everything that was measured or skipped."""

    format: Format
    version: KernelVersion
    measurement: Measurement
    candidates: list
    skipped: list = field(default_factory=list)

    @property
    def median_seconds(self) -> float:
        return self.measurement.median_seconds


def _rank_key(m: Measurement):
    return (m.median_seconds, _FORMAT_RANK[m.format], _VERSION_RANK[m.version])


def tune(matrix, candidates=None, iterations: int = 10, reps: int = 3, *,
         x=None, timer=None, config: LaneConfig | None = None,
         registry: KernelRegistry | None = None,
         policy: DiaFillPolicy | None = None,
         matrix_id: str = "") -> TuneChoice:
    """Measure each candidate pair and return the fastest.

    Candidates whose conversion breaches the DIA fill policy, or whose pair
    has no registered kernel, are skipped with the reason recorded.  If
    nothing survives, :class:`AllCandidatesFailed` is raised.
    """
    if candidates is None:
        candidates = DEFAULT_CANDIDATES
    measured: list = []
    skipped: list = []
    for fmt, ver in candidates:
        fmt = Format(fmt)
        ver = KernelVersion(ver)
        try:
            measured.append(measure(
                matrix, fmt, ver, iterations, reps, x=x, timer=timer,
                config=config, registry=registry, policy=policy,
                matrix_id=matrix_id))
        except (FillRatioExceeded, UnsupportedCombination) as exc:
            skipped.append((fmt, ver, str(exc)))
    if not measured:
        raise AllCandidatesFailed(
            f"all {len(skipped)} candidates were skipped for {matrix_id or 'matrix'}")
    best = min(measured, key=_rank_key)
    return TuneChoice(best.format, best.version, best, measured, skipped)


def distribution_report(choices) -> dict:
    """Share of wins per format, grouped by version.

    Returns ``{version: {format: percent}}`` with every format present,
    zeros included, so tables print with a fixed set of columns.
    """
    choices = list(choices)
    if not choices:
        raise EmptyInput("no tuning choices to summarize")
    per_version: dict = {}
    for ch in choices:
        per_version.setdefault(ch.version, []).append(ch.format)
    out: dict = {}
    for ver, fmts in sorted(per_version.items(), key=lambda kv: kv[0].value):
        n = len(fmts)
        out[ver] = {f: 100.0 * sum(1 for g in fmts if g == f) / n for f in Format}
    return out
