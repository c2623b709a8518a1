"""Command line behavior: subcommands, exit codes, CSV and report output."""

import subprocess
import sys

import numpy as np
import pytest

from spmvkit.bench import BenchRecord, read_records, write_records
from spmvkit.cli import main
from spmvkit.formats import Format
from spmvkit.kernels import KernelVersion
from spmvkit.lanes import LANES_ENV_VAR
from spmvkit.matrixio import read_matrix_market, write_matrix_market

from helpers import CountingClock, canonical_coo, dense_of


@pytest.fixture()
def workdir(tmp_path):
    mtx = tmp_path / "canonical.mtx"
    write_matrix_market(canonical_coo(), mtx)
    manifest = tmp_path / "corpus.txt"
    manifest.write_text("canon\tcanonical.mtx\n"
                        "cube\tstencil27:2,2,2\n"
                        "rand\trandom:10,0.2,7\n")
    return tmp_path


def run_cli(argv, timer=None, registry=None):
    return main(argv, timer=timer, registry=registry)


def test_run_produces_full_grid(workdir, capsys):
    out = workdir / "sweep.csv"
    code = run_cli(["run", "--manifest", str(workdir / "corpus.txt"),
                    "--output", str(out), "--iters", "1", "--reps", "2",
                    "--base-dir", str(workdir)], timer=CountingClock())
    assert code == 0
    assert "wrote 18 records" in capsys.readouterr().out
    records = read_records(out)
    assert len(records) == 18  # 3 matrices x 3 formats x 2 versions
    measured = [r for r in records if r.status == "ok"]
    assert measured and all(r.median_seconds == 1.0 for r in measured)
    assert all(r.iters == 1 and r.reps == 2 for r in records)
    canon = [r for r in records if r.matrix_id == "canon"]
    assert len(canon) == 6 and all(r.nnz == 11 for r in canon)


def test_run_output_is_deterministic(workdir):
    args = ["run", "--manifest", str(workdir / "corpus.txt"),
            "--iters", "1", "--reps", "1", "--base-dir", str(workdir)]
    a, b = workdir / "a.csv", workdir / "b.csv"
    run_cli(args + ["--output", str(a)], timer=CountingClock())
    run_cli(args + ["--output", str(b)], timer=CountingClock())
    assert a.read_bytes() == b.read_bytes()


def test_run_exit_codes(workdir, tmp_path, capsys):
    assert run_cli(["run", "--manifest", str(tmp_path / "nope.txt"),
                    "--output", str(tmp_path / "x.csv")]) == 2
    broken = tmp_path / "broken.txt"
    broken.write_text("ghost\tmissing-file.mtx\n")
    out = tmp_path / "broken.csv"
    assert run_cli(["run", "--manifest", str(broken), "--output", str(out),
                    "--iters", "1", "--reps", "1"],
                   timer=CountingClock()) == 1
    assert read_records(out)[0].status == "error"
    capsys.readouterr()


def test_run_rejects_bad_lane_env(workdir, monkeypatch, capsys):
    monkeypatch.setenv(LANES_ENV_VAR, "abc")
    code = run_cli(["run", "--manifest", str(workdir / "corpus.txt"),
                    "--output", str(workdir / "x.csv"),
                    "--base-dir", str(workdir)])
    assert code == 2
    assert "SPMV_LANES" in capsys.readouterr().err


def test_run_honors_lane_env(workdir, monkeypatch, capsys):
    monkeypatch.setenv(LANES_ENV_VAR, "4")
    code = run_cli(["run", "--manifest", str(workdir / "corpus.txt"),
                    "--output", str(workdir / "x.csv"), "--iters", "1",
                    "--reps", "1", "--base-dir", str(workdir)],
                   timer=CountingClock())
    assert code == 0
    capsys.readouterr()


def test_missing_required_arguments_exit_two():
    with pytest.raises(SystemExit) as exc:
        main(["run"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["hpcg", "--local", "2,2"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["report", "x.csv", "--baseline", "csr-plain"])
    assert exc.value.code == 2


def synthetic_records():
    def rec(mid, fmt, ver, median):
        return BenchRecord(mid, 4, 4, 8, fmt, ver, 100, 10,
                           median, 0.5, None, "ok")
    return [
        rec("m1", Format.CSR, KernelVersion.PLAIN, 2e-3),
        rec("m1", Format.COO, KernelVersion.PLAIN, 1e-3),
        rec("m2", Format.CSR, KernelVersion.PLAIN, 2e-3),
        rec("m2", Format.COO, KernelVersion.PLAIN, 4e-3),
    ]


def test_report_ratio_and_geomean(workdir, capsys):
    path = workdir / "synthetic.csv"
    write_records(synthetic_records(), path)
    assert run_cli(["report", str(path)]) == 0
    out = capsys.readouterr().out
    assert "baseline: csr/plain" in out
    assert "above 1 is faster" in out
    # ratios 2.0 and 0.5 cancel to a geomean of exactly 1.0
    assert "coo/plain" in out and "1.000" in out
    assert "optimal format share per version" in out


def test_report_missing_baseline_exits_one(workdir, capsys):
    path = workdir / "nobase.csv"
    write_records([BenchRecord("m1", 4, 4, 8, Format.COO, KernelVersion.PLAIN,
                               100, 10, 1e-3, 0.5, None, "ok")], path)
    assert run_cli(["report", str(path)]) == 1
    assert "baseline" in capsys.readouterr().err


def test_report_unreadable_csv_exits_two(tmp_path, capsys):
    assert run_cli(["report", str(tmp_path / "absent.csv")]) == 2
    capsys.readouterr()


def test_report_svg_output(workdir, capsys):
    csv_path = workdir / "synthetic.csv"
    write_records(synthetic_records(), csv_path)
    svg = workdir / "plot.svg"
    assert run_cli(["report", str(csv_path), "--svg", str(svg)]) == 0
    text = svg.read_text()
    assert text.startswith("<svg")
    assert "speedup vs csr/plain" in text
    capsys.readouterr()


def test_csv_round_trip_preserves_fields(tmp_path):
    records = [
        BenchRecord("a", 5, 5, 11, Format.CSR, KernelVersion.PLAIN,
                    100, 10, 0.5, 0.25, None, "ok"),
        BenchRecord("b", 0, 0, 0, None, None, 0, 0, None, None, None, "error"),
        BenchRecord("c", 5, 5, 11, Format.COO, KernelVersion.PLAIN,
                    0, 0, 0.25, 0.125, 88, "ok"),
    ]
    path = tmp_path / "rt.csv"
    write_records(records, path)
    assert read_records(path) == records


def test_hpcg_command(capsys):
    code = run_cli(["hpcg", "--local", "2,2,2", "--spmv-iters", "1",
                    "--spmv-reps", "1", "--tune-iters", "1",
                    "--tune-reps", "1"], timer=CountingClock())
    assert code == 0
    out = capsys.readouterr().out
    assert "speedup 1.00" in out
    assert "verified" in out
    assert "1 rank(s)" in out


def test_convert_command(workdir, capsys):
    out_path = workdir / "as-dia.mtx"
    code = run_cli(["convert", "--input", str(workdir / "canonical.mtx"),
                    "--to", "dia", "--output", str(out_path)])
    assert code == 0
    assert "dia" in capsys.readouterr().out
    back = read_matrix_market(out_path)
    np.testing.assert_array_equal(dense_of(back), dense_of(canonical_coo()))


def test_convert_fill_breach_exits_one(tmp_path, capsys):
    src = tmp_path / "corner.mtx"
    src.write_text("%%MatrixMarket matrix coordinate real general\n"
                   "1000 1000 2\n1 1000 1.0\n1000 1 2.0\n")
    code = run_cli(["convert", "--input", str(src), "--to", "dia",
                    "--output", str(tmp_path / "out.mtx")])
    assert code == 1
    assert "fill" in capsys.readouterr().err


def test_estimate_command(workdir, capsys):
    out = workdir / "est.csv"
    manifest = workdir / "single.txt"
    manifest.write_text("canon\tcanonical.mtx\n")
    code = run_cli(["estimate", "--manifest", str(manifest),
                    "--output", str(out), "--base-dir", str(workdir)])
    assert code == 0
    rows = read_records(out)
    assert len(rows) == 1
    row = rows[0]
    assert row.est_cycles == 88
    assert row.status == "ok"
    assert (row.format, row.version) == (Format.COO, KernelVersion.PLAIN)
    assert (row.iters, row.reps) == (0, 0)
    # the CSV keeps nine decimals, so compare loosely
    assert row.median_seconds == pytest.approx(88 / 300e6, rel=1e-2)
    capsys.readouterr()


def test_estimate_clock_scaling(workdir, capsys):
    manifest = workdir / "single.txt"
    manifest.write_text("canon\tcanonical.mtx\n")
    out = workdir / "est600.csv"
    assert run_cli(["estimate", "--manifest", str(manifest), "--output",
                    str(out), "--clock-mhz", "600",
                    "--base-dir", str(workdir)]) == 0
    assert read_records(out)[0].median_seconds == pytest.approx(88 / 600e6, rel=1e-2)
    capsys.readouterr()


def test_module_help_runs():
    proc = subprocess.run([sys.executable, "-m", "spmvkit", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "spmvkit" in proc.stdout
