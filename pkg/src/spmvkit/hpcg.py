"""Conjugate-gradient mini-benchmark on a 27-point grid operator.

The global problem is a 3-D grid of simulated ranks, each owning an
``nx * ny * nz`` box of points.  A rank keeps the global operator's rows for
its points, split column-wise into two parts:

* ``local``: columns the rank owns, renumbered to owner-local indices
* ``remote``: columns owned by other ranks, compacted to a halo numbering
  in ascending global order, with a map back to ``(owner, owner-local)``

A distributed product is then one kernel call per part: ``y = local @
x_local + remote @ halo`` after a halo exchange.  Ranks live in one process
and exchange by direct array reads; per-rank state is otherwise private, and
cross-rank data only moves at the exchange and at dot-product reductions.

The benchmark driver runs five phases: build, reference timing (CSR with
plain kernels), per-part format tuning, verification of the tuned operator
against the reference, and tuned timing with speedup ratios (a ratio above
one means the tuned configuration is faster).
"""

from __future__ import annotations

import dataclasses
import statistics
import time
from dataclasses import dataclass

import numpy as np

from .autotune import TuneChoice, tune
from .convert import DiaFillPolicy, switch_format
from .errors import Diverged, VerificationFailed
from .formats import CsrMatrix, DynamicMatrix, Format, MatrixShape, index_array
from .kernels import KernelRegistry, KernelVersion, dispatch, spmv_csr_plain
from .lanes import LaneConfig
from .matrixio import gen_stencil27

PART_FORMATS = (Format.CSR, Format.COO, Format.DIA)
PART_NAMES = ("local", "remote")


@dataclass(frozen=True)
class ProblemSpec:
    """Per-rank local grid dimensions and the process grid that tiles them."""

    nx: int
    ny: int
    nz: int
    npx: int = 1
    npy: int = 1
    npz: int = 1

    def __post_init__(self) -> None:
        if min(self.nx, self.ny, self.nz, self.npx, self.npy, self.npz) < 1:
            raise ValueError("grid and process dimensions must be >= 1")

    @property
    def nranks(self) -> int:
        return self.npx * self.npy * self.npz

    @property
    def global_dims(self) -> tuple:
        return (self.nx * self.npx, self.ny * self.npy, self.nz * self.npz)

    @property
    def global_size(self) -> int:
        gx, gy, gz = self.global_dims
        return gx * gy * gz


@dataclass
class RankSystem:
    """One simulated rank: its operator parts, halo map, and vectors."""

    rank: int
    owned_rows: np.ndarray
    local: DynamicMatrix
    remote: DynamicMatrix
    halo_cols: np.ndarray
    halo_owners: np.ndarray
    halo_indices: np.ndarray
    x_local: np.ndarray
    halo: np.ndarray
    b_local: np.ndarray


def _csr_from_entries(nrows, ncols, rows, cols, vals) -> CsrMatrix:
    irp = np.zeros(nrows + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=nrows), out=irp[1:])
    return CsrMatrix(MatrixShape(nrows, ncols, int(vals.shape[0])),
                     index_array(irp), cols, vals)


def build_problem(spec: ProblemSpec, dtype=None) -> list:
    """Build and split the global operator; right-hand side is ``A @ ones``.

    Rows are block-partitioned by the process grid, so the exact solution of
    the resulting system is the ones vector.  Within each part, rows keep
    their columns in ascending (renumbered) order.
    """
    gnx, gny, gnz = spec.global_dims
    A = gen_stencil27(gnx, gny, gnz, dtype)
    n = spec.global_size
    idx = np.arange(n, dtype=np.int64)
    gx = idx % gnx
    gy = (idx // gnx) % gny
    gz = idx // (gnx * gny)
    owner = ((gz // spec.nz) * spec.npy + (gy // spec.ny)) * spec.npx + (gx // spec.nx)
    nranks = spec.nranks
    counts = np.bincount(owner, minlength=nranks)
    starts = np.zeros(nranks, dtype=np.int64)
    np.cumsum(counts[:-1], out=starts[1:])
    # owner-local index = position among the owner's points in global order
    order = np.lexsort((idx, owner))
    local_index = np.empty(n, dtype=np.int64)
    local_index[order] = idx - np.repeat(starts, counts)
    vdtype = A.values.dtype
    b_global = spmv_csr_plain(A, np.ones(n, dtype=vdtype))

    irp = A.row_pointers.astype(np.int64)
    cols_g_all = A.col_indices.astype(np.int64)
    ranks = []
    for r in range(nranks):
        owned = np.flatnonzero(owner == r)
        nloc = owned.shape[0]
        lens = irp[owned + 1] - irp[owned]
        total = int(lens.sum())
        offs = np.zeros(owned.shape[0], dtype=np.int64)
        np.cumsum(lens[:-1], out=offs[1:])
        entry = np.repeat(irp[owned] - offs, lens) + np.arange(total)
        rows_local = np.repeat(np.arange(nloc, dtype=np.int64), lens)
        cols_g = cols_g_all[entry]
        vals = A.values[entry]
        is_local = owner[cols_g] == r
        lrows, lcols = rows_local[is_local], local_index[cols_g[is_local]]
        local = _csr_from_entries(nloc, nloc, lrows, lcols, vals[is_local])
        rrows, rcols_g, rvals = rows_local[~is_local], cols_g[~is_local], vals[~is_local]
        halo_cols = np.unique(rcols_g)
        remote = _csr_from_entries(nloc, int(halo_cols.shape[0]), rrows,
                                   np.searchsorted(halo_cols, rcols_g), rvals)
        ranks.append(RankSystem(
            rank=r,
            owned_rows=owned,
            local=DynamicMatrix(local),
            remote=DynamicMatrix(remote),
            halo_cols=halo_cols,
            halo_owners=owner[halo_cols],
            halo_indices=local_index[halo_cols],
            x_local=np.zeros(nloc, dtype=vdtype),
            halo=np.zeros(halo_cols.shape[0], dtype=vdtype),
            b_local=b_global[owned],
        ))
    return ranks


def halo_exchange(ranks: list) -> None:
    """Fill every rank's halo buffer from the owners' ``x_local`` values."""
    for rs in ranks:
        if rs.halo.shape[0] == 0:
            continue
        for o in np.unique(rs.halo_owners):
            sel = rs.halo_owners == o
            rs.halo[sel] = ranks[int(o)].x_local[rs.halo_indices[sel]]


def distributed_spmv(ranks: list, version=KernelVersion.PLAIN,
                     config: LaneConfig | None = None,
                     registry: KernelRegistry | None = None) -> list:
    """Per-rank ``y = local @ x_local + remote @ halo``.

    Assumes the halo buffers are current; call :func:`halo_exchange` first.
    """
    out = []
    for rs in ranks:
        y = dispatch(rs.local, rs.x_local, version, config, registry)
        if rs.halo.shape[0]:
            y = y + dispatch(rs.remote, rs.halo, version, config, registry)
        out.append(y)
    return out


def gather_global(ranks: list, parts: list) -> np.ndarray:
    """Scatter per-rank vectors back to a single global-order vector."""
    n = sum(rs.owned_rows.shape[0] for rs in ranks)
    out = np.empty(n, dtype=parts[0].dtype if parts else np.float64)
    for rs, p in zip(ranks, parts):
        out[rs.owned_rows] = p
    return out


def _global_dot(parts_a: list, parts_b: list) -> float:
    # reduce partial dots in rank order for run-to-run determinism
    acc = 0.0
    for a, b in zip(parts_a, parts_b):
        acc += float(np.dot(a, b))
    return acc


@dataclass
class CgState:
    """Solver outcome: per-rank solution and the residual history."""

    x_parts: list
    iterations: int
    residual_norms: list
    converged: bool
    relative_residual: float


def cg_solve(ranks: list, version=KernelVersion.PLAIN, tol: float = 1e-9,
             max_iters: int = 500, config: LaneConfig | None = None,
             registry: KernelRegistry | None = None) -> CgState:
    """Unpreconditioned conjugate gradients from ``x = 0``.

    ``residual_norms`` records the relative residual after every iteration.
    The ranks' ``x_local`` buffers are used as exchange workspace for the
    search direction; the solution is returned in ``x_parts``.
    """
    b = [rs.b_local for rs in ranks]
    bnorm = float(np.sqrt(_global_dot(b, b)))
    x = [np.zeros_like(rs.b_local) for rs in ranks]
    if bnorm == 0.0:
        return CgState(x, 0, [], True, 0.0)
    r = [bi.copy() for bi in b]
    p = [ri.copy() for ri in r]
    rr = _global_dot(r, r)
    norms: list = []
    converged = False
    rel = float(np.sqrt(rr)) / bnorm
    it = 0
    if rel <= tol:
        return CgState(x, 0, [], True, rel)
    for it in range(1, max_iters + 1):
        for rs, pi in zip(ranks, p):
            rs.x_local[:] = pi
        halo_exchange(ranks)
        Ap = distributed_spmv(ranks, version, config, registry)
        pAp = _global_dot(p, Ap)
        if not np.isfinite(pAp) or pAp <= 0.0:
            raise Diverged(f"curvature p'Ap = {pAp} at iteration {it}")
        alpha = rr / pAp
        for xi, pi in zip(x, p):
            xi += alpha * pi
        for ri, Api in zip(r, Ap):
            ri -= alpha * Api
        rr_new = _global_dot(r, r)
        if not np.isfinite(rr_new):
            raise Diverged(f"residual norm became non-finite at iteration {it}")
        rel = float(np.sqrt(rr_new)) / bnorm
        norms.append(rel)
        if rel <= tol:
            converged = True
            break
        beta = rr_new / rr
        p = [ri + beta * pi for ri, pi in zip(r, p)]
        rr = rr_new
    return CgState(x, it, norms, converged, rel)


@dataclass
class PartChoice:
    """Tuning outcome for one part of one rank."""

    rank: int
    part: str
    choice: TuneChoice


def tune_rank_parts(ranks: list, version=KernelVersion.PLAIN, *,
                    iterations: int = 10, reps: int = 3, timer=None,
                    config: LaneConfig | None = None,
                    registry: KernelRegistry | None = None,
                    policy: DiaFillPolicy | None = None) -> list:
    """Pick the fastest format for every rank's local and remote part.

    Candidates are CSR, COO and DIA under the given kernel version, in that
    precedence order; infeasible DIA conversions are skipped.
    """
    choices = []
    for rs in ranks:
        for name in PART_NAMES:
            part = rs.local if name == "local" else rs.remote
            ch = tune(part, [(f, version) for f in PART_FORMATS],
                      iterations=iterations, reps=reps, timer=timer,
                      config=config, registry=registry, policy=policy,
                      matrix_id=f"rank{rs.rank}-{name}")
            choices.append(PartChoice(rs.rank, name, ch))
    return choices


def apply_choices(ranks: list, choices: list,
                  policy: DiaFillPolicy | None = None) -> list:
    """Rank systems with each part converted to its chosen format."""
    by_key = {(c.rank, c.part): c.choice for c in choices}
    out = []
    for rs in ranks:
        lfmt = by_key[(rs.rank, "local")].format
        rfmt = by_key[(rs.rank, "remote")].format
        out.append(dataclasses.replace(
            rs,
            local=switch_format(rs.local, lfmt, policy),
            remote=switch_format(rs.remote, rfmt, policy)))
    return out


def _set_x(ranks: list, value: float) -> None:
    for rs in ranks:
        rs.x_local[:] = value


def _spmv_global(ranks, version, config, registry) -> np.ndarray:
    halo_exchange(ranks)
    return gather_global(ranks, distributed_spmv(ranks, version, config, registry))


def _time_spmv(ranks, version, iterations, reps, clock, config, registry) -> float:
    _set_x(ranks, 1.0)
    _spmv_global(ranks, version, config, registry)  # warm-up
    samples = []
    for _ in range(reps):
        t0 = clock()
        for _ in range(iterations):
            halo_exchange(ranks)
            distributed_spmv(ranks, version, config, registry)
        samples.append(clock() - t0)
    return float(statistics.median(samples))


@dataclass
class VersionResult:
    """Tuned-configuration outcome for one kernel version."""

    version: KernelVersion
    choices: list
    spmv_seconds: float
    cg_seconds: float
    cg_iterations: int
    spmv_speedup: float
    cg_speedup: float
    verified: bool


@dataclass
class HpcgReport:
    """Full benchmark outcome across all requested kernel versions."""

    spec: ProblemSpec
    nranks: int
    reference_spmv_seconds: float
    reference_cg_seconds: float
    reference_cg_iterations: int
    versions: list


def _ratio(ref: float, tuned: float) -> float:
    return ref / tuned if tuned > 0 else float("inf")


def run_phases(spec: ProblemSpec, versions=(KernelVersion.PLAIN, KernelVersion.VLA),
               *, dtype=None, spmv_iterations: int = 50, spmv_reps: int = 3,
               tune_iterations: int = 10, tune_reps: int = 3, tol: float = 1e-9,
               max_iters: int = 500, verify_tol: float = 1e-10,
               solution_tol: float = 1e-6, config: LaneConfig | None = None,
               registry: KernelRegistry | None = None, timer=None,
               policy: DiaFillPolicy | None = None) -> HpcgReport:
    """Run the five benchmark phases and report per-version speedups.

    Phases: build the split problem; time the reference configuration (CSR
    parts, plain kernels); tune each rank's parts per kernel version; verify
    the tuned operator against the reference product and the reference CG
    solution; time the tuned configuration.  Verification failures raise
    :class:`VerificationFailed`.
    """
    clock = timer or time.perf_counter
    ranks = build_problem(spec, dtype)

    ref_spmv = _time_spmv(ranks, KernelVersion.PLAIN, spmv_iterations,
                          spmv_reps, clock, config, registry)
    _set_x(ranks, 1.0)
    y_ref = _spmv_global(ranks, KernelVersion.PLAIN, config, registry)
    t0 = clock()
    ref_state = cg_solve(ranks, KernelVersion.PLAIN, tol, max_iters, config, registry)
    ref_cg = clock() - t0
    if not ref_state.converged:
        raise VerificationFailed(
            f"reference CG did not converge within {max_iters} iterations")
    x_ref = gather_global(ranks, ref_state.x_parts)

    results = []
    for version in versions:
        version = KernelVersion(version)
        choices = tune_rank_parts(ranks, version, iterations=tune_iterations,
                                  reps=tune_reps, timer=clock, config=config,
                                  registry=registry, policy=policy)
        tuned = apply_choices(ranks, choices, policy)
        _set_x(tuned, 1.0)
        y_tuned = _spmv_global(tuned, version, config, registry)
        scale = np.maximum(np.abs(y_ref), 1.0)
        err = float(np.max(np.abs(y_tuned - y_ref) / scale)) if y_ref.size else 0.0
        if err > verify_tol:
            raise VerificationFailed(
                f"tuned product deviates from reference by {err:.3e} "
                f"(limit {verify_tol:.1e}) for version {version.value}")
        tuned_spmv = _time_spmv(tuned, version, spmv_iterations, spmv_reps,
                                clock, config, registry)
        t0 = clock()
        state = cg_solve(tuned, version, tol, max_iters, config, registry)
        tuned_cg = clock() - t0
        if not state.converged:
            raise VerificationFailed(
                f"tuned CG did not converge for version {version.value}")
        x_err = float(np.max(np.abs(gather_global(tuned, state.x_parts) - x_ref)))
        if x_err > solution_tol:
            raise VerificationFailed(
                f"tuned CG solution deviates from reference by {x_err:.3e} "
                f"(limit {solution_tol:.1e}) for version {version.value}")
        results.append(VersionResult(
            version=version,
            choices=choices,
            spmv_seconds=tuned_spmv,
            cg_seconds=tuned_cg,
            cg_iterations=state.iterations,
            spmv_speedup=_ratio(ref_spmv, tuned_spmv),
            cg_speedup=_ratio(ref_cg, tuned_cg),
            verified=True,
        ))
    return HpcgReport(spec, len(ranks), ref_spmv, ref_cg,
                      ref_state.iterations, results)


def format_report(report: HpcgReport) -> str:
    """Readable multi-line summary of a benchmark report."""
    spec = report.spec
    gx, gy, gz = spec.global_dims
    lines = [
        f"problem: local {spec.nx}x{spec.ny}x{spec.nz}, "
        f"procs {spec.npx}x{spec.npy}x{spec.npz}, "
        f"{report.nranks} rank(s), n = {gx * gy * gz}",
        f"reference csr/plain: spmv {report.reference_spmv_seconds:.6f} s, "
        f"cg {report.reference_cg_seconds:.6f} s "
        f"({report.reference_cg_iterations} iterations)",
    ]
    for vr in report.versions:
        lines.append(f"version {vr.version.value}:")
        for ch in vr.choices:
            lines.append(f"  rank {ch.rank} {ch.part}: {ch.choice.format.value}")
        lines.append(
            f"  spmv {vr.spmv_seconds:.6f} s (speedup {vr.spmv_speedup:.2f}), "
            f"cg {vr.cg_seconds:.6f} s (speedup {vr.cg_speedup:.2f}), "
            f"{vr.cg_iterations} iterations, verified")
    return "\n".join(lines)
