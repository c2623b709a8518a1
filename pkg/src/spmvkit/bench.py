"""Benchmark harness: corpus sweeps, CSV records, speedup reports, plots.

A sweep times every requested (format, version) pair on every corpus matrix
and emits one CSV row per pair.  Rows that could not be measured carry a
status (``fill_exceeded``, ``unsupported``, ``error``) instead of timings.
Reports compare medians against a baseline pair: the ratio is baseline time
over candidate time, so a ratio above one means the candidate is faster.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from types import SimpleNamespace

from .autotune import _FORMAT_RANK, distribution_report, measure
from .convert import DiaFillPolicy, to_format
from .dataflow import DataflowConfig, estimate_cycles, pad_inputs
from .errors import (
    EmptyInput,
    FillRatioExceeded,
    MissingBaseline,
    SparseError,
    UnsupportedCombination,
)
from .formats import Format
from .kernels import KernelRegistry, KernelVersion
from .lanes import LaneConfig
from .matrixio import CorpusEntry, load_entry

FIELDNAMES = ("matrix_id", "nrows", "ncols", "nnz", "format", "version",
              "iters", "reps", "median_seconds", "gflops", "est_cycles",
              "status")

STATUS_OK = "ok"
STATUS_FILL = "fill_exceeded"
STATUS_UNSUPPORTED = "unsupported"
STATUS_ERROR = "error"


@dataclass
class BenchRecord:
    """One CSV row: a (matrix, format, version) measurement or its failure."""

    matrix_id: str
    nrows: int = 0
    ncols: int = 0
    nnz: int = 0
    format: Format | None = None
    version: KernelVersion | None = None
    iters: int = 0
    reps: int = 0
    median_seconds: float | None = None
    gflops: float | None = None
    est_cycles: int | None = None
    status: str = STATUS_OK


def _row_from_record(r: BenchRecord) -> dict:
    return {
        "matrix_id": r.matrix_id,
        "nrows": r.nrows,
        "ncols": r.ncols,
        "nnz": r.nnz,
        "format": r.format.value if r.format else "",
        "version": r.version.value if r.version else "",
        "iters": r.iters,
        "reps": r.reps,
        "median_seconds": "" if r.median_seconds is None else f"{r.median_seconds:.9f}",
        "gflops": "" if r.gflops is None else f"{r.gflops:.6f}",
        "est_cycles": "" if r.est_cycles is None else r.est_cycles,
        "status": r.status,
    }


def write_records(records, dest) -> None:
    """Write records as CSV to a path or text stream."""
    own = not hasattr(dest, "write")
    fh = open(dest, "w", newline="") if own else dest
    try:
        writer = csv.DictWriter(fh, fieldnames=FIELDNAMES, lineterminator="\n")
        writer.writeheader()
        for r in records:
            writer.writerow(_row_from_record(r))
    finally:
        if own:
            fh.close()


def read_records(source) -> list:
    """Read records back from a CSV path or text stream."""
    own = not hasattr(source, "read")
    fh = open(source, newline="") if own else source
    try:
        out = []
        for row in csv.DictReader(fh):
            out.append(BenchRecord(
                matrix_id=row["matrix_id"],
                nrows=int(row["nrows"]),
                ncols=int(row["ncols"]),
                nnz=int(row["nnz"]),
                format=Format(row["format"]) if row["format"] else None,
                version=KernelVersion(row["version"]) if row["version"] else None,
                iters=int(row["iters"]),
                reps=int(row["reps"]),
                median_seconds=float(row["median_seconds"]) if row["median_seconds"] else None,
                gflops=float(row["gflops"]) if row["gflops"] else None,
                est_cycles=int(row["est_cycles"]) if row["est_cycles"] else None,
                status=row["status"],
            ))
        return out
    finally:
        if own:
            fh.close()


def _sweep_one(entry: CorpusEntry, formats, versions, iterations, reps,
               timer, config, registry, policy, base_dir, dtype) -> list:
    try:
        matrix = load_entry(entry, base_dir, dtype=dtype)
    except (SparseError, OSError) as exc:
        return [BenchRecord(matrix_id=entry.id, status=STATUS_ERROR,
                            format=None, version=None)]
    shape = matrix.shape
    out = []
    for fmt in formats:
        for ver in versions:
            rec = BenchRecord(entry.id, shape.nrows, shape.ncols, shape.nnz,
                              Format(fmt), KernelVersion(ver), iterations, reps)
            try:
                m = measure(matrix, fmt, ver, iterations, reps, timer=timer,
                            config=config, registry=registry, policy=policy,
                            matrix_id=entry.id)
                rec.median_seconds = m.median_seconds
                rec.gflops = m.gflops
            except FillRatioExceeded:
                rec.status = STATUS_FILL
            except UnsupportedCombination:
                rec.status = STATUS_UNSUPPORTED
            except SparseError:
                rec.status = STATUS_ERROR
            out.append(rec)
    return out


def run_corpus(entries, formats=tuple(Format), versions=tuple(KernelVersion),
               iterations: int = 100, reps: int = 10, *, timer=None,
               config: LaneConfig | None = None,
               registry: KernelRegistry | None = None,
               policy: DiaFillPolicy | None = None, base_dir=".",
               jobs: int = 1, dtype=None) -> list:
    """Measure every (matrix, format, version) combination of the corpus.

    Rows come back grouped by manifest order regardless of ``jobs``; each
    matrix is swept independently, so extra jobs parallelize across
    matrices only.
    """
    entries = list(entries)
    if jobs <= 1 or len(entries) <= 1:
        groups = [_sweep_one(e, formats, versions, iterations, reps, timer,
                             config, registry, policy, base_dir, dtype)
                  for e in entries]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            groups = list(pool.map(
                lambda e: _sweep_one(e, formats, versions, iterations, reps,
                                     timer, config, registry, policy,
                                     base_dir, dtype),
                entries))
    return [rec for group in groups for rec in group]


def estimate_corpus(entries, config: DataflowConfig | None = None,
                    base_dir=".", dtype=None) -> list:
    """Dataflow cycle estimates per corpus matrix, one COO-stream row each.

    ``median_seconds`` holds the modeled time of a single product at the
    configured clock, and ``gflops`` the modeled rate it implies.
    """
    cfg = config or DataflowConfig()
    out = []
    for entry in entries:
        try:
            matrix = load_entry(entry, base_dir, dtype=dtype)
            coo = to_format(matrix, Format.COO)
            est = estimate_cycles(pad_inputs(coo, cfg), cfg)
        except (SparseError, OSError):
            out.append(BenchRecord(matrix_id=entry.id, status=STATUS_ERROR))
            continue
        shape = coo.shape
        gflops = (2.0 * shape.nnz / est.est_seconds / 1e9) if est.est_seconds > 0 else 0.0
        out.append(BenchRecord(entry.id, shape.nrows, shape.ncols, shape.nnz,
                               Format.COO, KernelVersion.PLAIN, 0, 0,
                               est.est_seconds, gflops, est.total_cycles))
    return out


@dataclass
class BenchReport:
    """Speedup ratios against a baseline pair plus summary statistics."""

    baseline: tuple
    matrix_ids: list
    sizes: dict
    ratios: dict
    geomeans: dict
    distribution: dict
    status_counts: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)


def make_report(records, baseline=(Format.CSR, KernelVersion.PLAIN)) -> BenchReport:
    """Summarize sweep records: per-matrix ratios, geomeans, format wins.

    Every matrix that has any measured row must include the baseline pair;
    otherwise :class:`MissingBaseline` is raised.  Records with a non-ok
    status only contribute to the status counts.
    """
    baseline = (Format(baseline[0]), KernelVersion(baseline[1]))
    status_counts: dict = {}
    by_matrix: dict = {}
    sizes: dict = {}
    order: list = []
    for rec in records:
        status_counts[rec.status] = status_counts.get(rec.status, 0) + 1
        if rec.status != STATUS_OK or rec.median_seconds is None:
            continue
        if rec.matrix_id not in by_matrix:
            by_matrix[rec.matrix_id] = {}
            order.append(rec.matrix_id)
            sizes[rec.matrix_id] = rec.nnz
        by_matrix[rec.matrix_id][(rec.format, rec.version)] = rec.median_seconds
    if not by_matrix:
        raise EmptyInput("no measured rows to report on")

    ratios: dict = {}
    for mid in order:
        configs = by_matrix[mid]
        if baseline not in configs:
            raise MissingBaseline(
                f"matrix {mid!r} has no measured baseline "
                f"{baseline[0].value}/{baseline[1].value} row")
        base = configs[baseline]
        ratios[mid] = {pair: base / sec if sec > 0 else float("inf")
                       for pair, sec in configs.items()}

    geomeans: dict = {}
    warnings: list = []
    all_pairs = sorted({p for r in ratios.values() for p in r},
                       key=lambda p: (p[1].value, _FORMAT_RANK[p[0]]))
    for pair in all_pairs:
        logs = [math.log(r[pair]) for r in ratios.values()
                if pair in r and math.isfinite(r[pair]) and r[pair] > 0]
        if logs:
            geomeans[pair] = math.exp(sum(logs) / len(logs))
        missing = [mid for mid in order if pair not in ratios[mid]]
        if missing:
            warnings.append(
                f"{pair[0].value}/{pair[1].value}: {len(missing)} matrix(es) "
                f"without a measured row excluded from the mean "
                f"({', '.join(missing[:5])})")

    winners = []
    for mid in order:
        per_version: dict = {}
        for (fmt, ver), sec in by_matrix[mid].items():
            key = (sec, _FORMAT_RANK[fmt])
            if ver not in per_version or key < per_version[ver][0]:
                per_version[ver] = (key, fmt)
        for ver, (_, fmt) in per_version.items():
            winners.append(SimpleNamespace(version=ver, format=fmt))
    distribution = distribution_report(winners)
    return BenchReport(baseline, order, sizes, ratios, geomeans,
                       distribution, status_counts, warnings)


def render_report(report: BenchReport) -> str:
    """Plain-text summary: status counts, geomeans, format distribution."""
    bf, bv = report.baseline
    lines = [
        f"baseline: {bf.value}/{bv.value}",
        f"matrices measured: {len(report.matrix_ids)}",
    ]
    skipped = {k: v for k, v in report.status_counts.items() if k != STATUS_OK}
    if skipped:
        lines.append("skipped rows: " + ", ".join(
            f"{k}={v}" for k, v in sorted(skipped.items())))
    lines.append("geomean speedup over baseline (above 1 is faster):")
    for (fmt, ver), g in report.geomeans.items():
        lines.append(f"  {fmt.value}/{ver.value:<6} {g:8.3f}")
    lines.append("optimal format share per version (% of matrices):")
    for ver, shares in report.distribution.items():
        cells = "  ".join(f"{fmt.value} {shares[fmt]:5.1f}" for fmt in Format)
        lines.append(f"  {ver.value:<6} {cells}")
    for w in report.warnings:
        lines.append(f"warning: {w}")
    return "\n".join(lines)


_SERIES_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                  "#8c564b")


def write_speedup_svg(report: BenchReport, dest) -> None:
    """Scatter of per-matrix speedup against matrix size, one series per pair.

    X is nnz on a log scale, Y the ratio to baseline; dashed lines mark each
    series' geomean.  Written as a self-contained SVG file.
    """
    width, height = 720, 480
    ml, mr, mt, mb = 60, 180, 30, 50
    pw, ph = width - ml - mr, height - mt - mb
    pairs = list(report.geomeans)
    points = []
    for mid in report.matrix_ids:
        nnz = max(report.sizes.get(mid, 1), 1)
        for pair, ratio in report.ratios[mid].items():
            if math.isfinite(ratio) and ratio > 0:
                points.append((nnz, ratio, pair))
    if points:
        xs = [math.log10(p[0]) for p in points]
        ys = [p[1] for p in points]
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(ys + [1.0]), max(ys + [1.0])
    else:
        x0, x1, y0, y1 = 0.0, 1.0, 0.0, 2.0
    if x1 - x0 < 1e-9:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 - y0 < 1e-9:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def sx(v):
        return ml + pw * (math.log10(v) - x0) / (x1 - x0)

    def sy(v):
        return mt + ph * (1.0 - (v - y0) / (y1 - y0))

    color = {pair: _SERIES_COLORS[i % len(_SERIES_COLORS)]
             for i, pair in enumerate(pairs)}
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>',
    ]
    base_y = sy(1.0)
    if mt <= base_y <= mt + ph:
        out.append(f'<line x1="{ml}" y1="{base_y:.1f}" x2="{ml + pw}" '
                   f'y2="{base_y:.1f}" stroke="#999"/>')
    for pair in pairs:
        g = report.geomeans[pair]
        gy = sy(g)
        if mt <= gy <= mt + ph:
            out.append(f'<line x1="{ml}" y1="{gy:.1f}" x2="{ml + pw}" y2="{gy:.1f}" '
                       f'stroke="{color[pair]}" stroke-dasharray="6 4"/>')
    for nnz, ratio, pair in points:
        out.append(f'<circle cx="{sx(nnz):.1f}" cy="{sy(ratio):.1f}" r="3.5" '
                   f'fill="{color[pair]}" fill-opacity="0.75"/>')
    for i, pair in enumerate(pairs):
        ly = mt + 16 + 18 * i
        label = f"{pair[0].value}/{pair[1].value} (geomean {report.geomeans[pair]:.2f})"
        out.append(f'<circle cx="{ml + pw + 16}" cy="{ly - 4}" r="4" fill="{color[pair]}"/>')
        out.append(f'<text x="{ml + pw + 26}" y="{ly}" font-size="12" '
                   f'font-family="sans-serif">{label}</text>')
    out.append(f'<text x="{ml + pw // 2}" y="{height - 14}" font-size="13" '
               f'font-family="sans-serif" text-anchor="middle">nonzeros (log scale)</text>')
    out.append(f'<text x="18" y="{mt + ph // 2}" font-size="13" font-family="sans-serif" '
               f'text-anchor="middle" transform="rotate(-90 18 {mt + ph // 2})">'
               f'speedup vs {report.baseline[0].value}/{report.baseline[1].value}</text>')
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        Path(dest).write_text(text)
