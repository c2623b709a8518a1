"""Command line entry point.

Subcommands: ``run`` (corpus benchmark sweep to CSV), ``report`` (speedup
summary and optional SVG from sweep CSVs), ``hpcg`` (the CG mini-benchmark),
``convert`` (Matrix Market format conversion), ``estimate`` (dataflow cycle
model over a corpus).  Exit codes: 0 success, 1 runtime failure, 2 unusable
invocation or manifest.
"""

from __future__ import annotations

import argparse
import sys

from .bench import (
    STATUS_OK,
    estimate_corpus,
    make_report,
    read_records,
    render_report,
    run_corpus,
    write_records,
    write_speedup_svg,
)
from .convert import DiaFillPolicy, to_format
from .dataflow import DataflowConfig
from .errors import SparseError
from .formats import Format
from .hpcg import ProblemSpec, format_report, run_phases
from .kernels import KernelVersion
from .lanes import LaneConfig
from .matrixio import load_manifest, read_matrix_market, write_matrix_market


def _triple(text: str):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected X,Y,Z, got {text!r}")
    try:
        dims = tuple(int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers in {text!r}") from None
    if min(dims) < 1:
        raise argparse.ArgumentTypeError("dimensions must be >= 1")
    return dims


def _format_list(text: str):
    try:
        return [Format(tok.strip().lower()) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"unknown format in {text!r}") from None


def _version_list(text: str):
    try:
        return [KernelVersion(tok.strip().lower())
                for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"unknown version in {text!r}") from None


def _baseline(text: str):
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(
            f"expected FORMAT:VERSION, got {text!r}")
    try:
        return (Format(parts[0].strip().lower()),
                KernelVersion(parts[1].strip().lower()))
    except ValueError:
        raise argparse.ArgumentTypeError(f"unknown pair {text!r}") from None


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _lane_config(args) -> LaneConfig:
    if args.lanes is not None:
        return LaneConfig(args.lanes)
    return LaneConfig.from_env()


def _load_entries(path):
    try:
        entries = load_manifest(path)
    except (SparseError, OSError) as exc:
        print(f"error: cannot read manifest {path}: {exc}", file=sys.stderr)
        return None
    if not entries:
        print(f"error: manifest {path} has no entries", file=sys.stderr)
        return None
    return entries


def _cmd_run(args, timer, registry) -> int:
    entries = _load_entries(args.manifest)
    if entries is None:
        return 2
    try:
        config = _lane_config(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    records = run_corpus(
        entries, args.formats, args.versions, args.iters, args.reps,
        timer=timer, config=config, registry=registry,
        policy=DiaFillPolicy(args.fill_ratio), base_dir=args.base_dir,
        jobs=args.jobs, dtype=args.dtype)
    write_records(records, args.output)
    ok = sum(1 for r in records if r.status == STATUS_OK)
    print(f"wrote {len(records)} records ({ok} measured) to {args.output}")
    return 0 if ok else 1


def _cmd_report(args, timer, registry) -> int:
    records = []
    try:
        for path in args.csv:
            records.extend(read_records(path))
    except (OSError, KeyError, ValueError) as exc:
        print(f"error: cannot read records: {exc}", file=sys.stderr)
        return 2
    try:
        report = make_report(records, args.baseline)
    except SparseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(render_report(report))
    if args.svg:
        write_speedup_svg(report, args.svg)
        print(f"wrote plot to {args.svg}")
    return 0


def _cmd_hpcg(args, timer, registry) -> int:
    nx, ny, nz = args.local
    npx, npy, npz = args.procs
    spec = ProblemSpec(nx, ny, nz, npx, npy, npz)
    try:
        config = _lane_config(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        report = run_phases(
            spec, args.versions, spmv_iterations=args.spmv_iters,
            spmv_reps=args.spmv_reps, tune_iterations=args.tune_iters,
            tune_reps=args.tune_reps, tol=args.tol, max_iters=args.max_iters,
            config=config, registry=registry, timer=timer)
    except SparseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(format_report(report))
    return 0


def _cmd_convert(args, timer, registry) -> int:
    try:
        matrix = read_matrix_market(args.input)
        converted = to_format(matrix, args.to, DiaFillPolicy(args.fill_ratio))
        write_matrix_market(converted, args.output)
    except (SparseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    shape = converted.shape
    print(f"wrote {args.to.value} form of {shape.nrows}x{shape.ncols} "
          f"({shape.nnz} nonzeros) to {args.output}")
    return 0


def _cmd_estimate(args, timer, registry) -> int:
    entries = _load_entries(args.manifest)
    if entries is None:
        return 2
    cfg = DataflowConfig(args.latency, args.pack_bits, args.clock_mhz * 1e6)
    records = estimate_corpus(entries, cfg, base_dir=args.base_dir)
    write_records(records, args.output)
    ok = sum(1 for r in records if r.status == STATUS_OK)
    print(f"wrote {len(records)} estimates ({ok} modeled) to {args.output}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spmvkit",
        description="Sparse matrix kernel benchmarks and format tuning.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="benchmark a corpus manifest to CSV")
    run.add_argument("--manifest", required=True, help="corpus manifest file")
    run.add_argument("--output", required=True, help="CSV output path")
    run.add_argument("--formats", type=_format_list,
                     default=list(Format), help="comma list (default all)")
    run.add_argument("--versions", type=_version_list,
                     default=list(KernelVersion), help="comma list (default both)")
    run.add_argument("--iters", type=_positive, default=100,
                     help="products per timed sample (default 100)")
    run.add_argument("--reps", type=_positive, default=10,
                     help="timed samples per configuration (default 10)")
    run.add_argument("--lanes", type=_positive, default=None,
                     help="lane count (default SPMV_LANES or 8)")
    run.add_argument("--jobs", type=_positive, default=1,
                     help="parallel matrix sweeps (default 1)")
    run.add_argument("--fill-ratio", type=float, default=10.0,
                     help="DIA fill budget (default 10)")
    run.add_argument("--dtype", choices=("float64", "float32"),
                     default="float64")
    run.add_argument("--base-dir", default=".",
                     help="base for relative matrix paths")
    run.set_defaults(func=_cmd_run)

    rep = sub.add_parser("report", help="summarize sweep CSVs")
    rep.add_argument("csv", nargs="+", help="sweep CSV files")
    rep.add_argument("--baseline", type=_baseline, default=(
        Format.CSR, KernelVersion.PLAIN), help="FORMAT:VERSION (default csr:plain)")
    rep.add_argument("--svg", default=None, help="optional scatter plot path")
    rep.set_defaults(func=_cmd_report)

    hp = sub.add_parser("hpcg", help="run the CG mini-benchmark")
    hp.add_argument("--local", type=_triple, default=(16, 16, 16),
                    help="local grid NX,NY,NZ (default 16,16,16)")
    hp.add_argument("--procs", type=_triple, default=(1, 1, 1),
                    help="process grid PX,PY,PZ (default 1,1,1)")
    hp.add_argument("--versions", type=_version_list,
                    default=list(KernelVersion))
    hp.add_argument("--tol", type=float, default=1e-9)
    hp.add_argument("--max-iters", type=_positive, default=500)
    hp.add_argument("--spmv-iters", type=_positive, default=50)
    hp.add_argument("--spmv-reps", type=_positive, default=3)
    hp.add_argument("--tune-iters", type=_positive, default=10)
    hp.add_argument("--tune-reps", type=_positive, default=3)
    hp.add_argument("--lanes", type=_positive, default=None)
    hp.set_defaults(func=_cmd_hpcg)

    conv = sub.add_parser("convert", help="convert a Matrix Market file")
    conv.add_argument("--input", required=True)
    conv.add_argument("--to", type=Format, required=True,
                      choices=list(Format), metavar="{coo,csr,dia}")
    conv.add_argument("--output", required=True)
    conv.add_argument("--fill-ratio", type=float, default=10.0)
    conv.set_defaults(func=_cmd_convert)

    est = sub.add_parser("estimate", help="dataflow cycle estimates to CSV")
    est.add_argument("--manifest", required=True)
    est.add_argument("--output", required=True)
    est.add_argument("--latency", type=_positive, default=8)
    est.add_argument("--pack-bits", type=_positive, default=512)
    est.add_argument("--clock-mhz", type=float, default=300.0)
    est.add_argument("--base-dir", default=".")
    est.set_defaults(func=_cmd_estimate)
    return parser


def main(argv=None, *, timer=None, registry=None) -> int:
    """Parse arguments and run a subcommand.

    ``timer`` and ``registry`` are injection points for deterministic runs;
    both default to the real clock and the built-in kernels.
    """
    args = build_parser().parse_args(argv)
    return args.func(args, timer, registry)


if __name__ == "__main__":
    sys.exit(main())
