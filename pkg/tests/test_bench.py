import csv
import math

import numpy as np
import pytest

from expkit.bench import (CSV_HEADER, RunConfig, RunRecord, SweepConfig,
                          _ref_read, _ref_write, build_reference,
                          expand_matrix, record_row, run_one, run_sweep,
                          write_csv)
from expkit.cli import main as cli_main


def test_header_is_pinned():
    assert CSV_HEADER == ("problem,param,n,integrator,scheme,tol,"
                          "steps_accepted,steps_rejected,rhs_evals,"
                          "leja_iters,krylov_matvecs,substeps,"
                          "wall_time_s,l2_error")


def test_config_validation():
    good = RunConfig("semilinear", math.nan, 16, "exprb43", "kiops", 1e-6)
    good.validate()
    bad = [
        RunConfig("heat", math.nan, 16, "exprb43", "kiops", 1e-6),
        RunConfig("adr", 0.1, 16, "rk4", "kiops", 1e-6),
        RunConfig("adr", 0.1, 16, "exprb43", "chebyshev", 1e-6),
        RunConfig("adr", 0.1, 16, "exprb43", "lekry", 1e-6),
        RunConfig("adr", 0.1, 16, "exprb43", "kiops", 2.0),
    ]
    for cfg in bad:
        with pytest.raises(ValueError):
            cfg.validate()


def test_reference_binary_roundtrip(tmp_path):
    u = np.random.default_rng(0).standard_normal(37)
    path = tmp_path / "x.ref"
    _ref_write(path, u)
    assert np.array_equal(_ref_read(path), u)
    path.write_bytes(path.read_bytes()[:40])  # truncate payload
    with pytest.raises(ValueError):
        _ref_read(path)


def test_reference_uses_exact_solution_when_available():
    u_ref = build_reference("semilinear", math.nan, 16)
    prob_exact = np.exp(1.0)
    x = np.arange(1, 17) / 17.0
    assert np.allclose(u_ref, x * (1.0 - x) * prob_exact)


def test_reference_cache_hit(tmp_path):
    # second call must read the cached file instead of re-integrating
    kwargs = dict(cache_dir=tmp_path, t_final=0.002)
    first = build_reference("allen_cahn", 1e-2, 12, **kwargs)
    files = list(tmp_path.glob("*.ref"))
    assert len(files) == 1
    stamp = files[0].stat().st_mtime_ns
    second = build_reference("allen_cahn", 1e-2, 12, **kwargs)
    assert np.array_equal(first, second)
    assert files[0].stat().st_mtime_ns == stamp


def test_run_one_success_and_determinism():
    cfg = RunConfig("semilinear", math.nan, 16, "exprb43", "kiops", 1e-5)
    rec1 = run_one(cfg)
    rec2 = run_one(cfg)
    assert not rec1.failed
    assert rec1.l2_error < 1e-4
    assert rec1.steps_accepted == rec2.steps_accepted
    assert rec1.rhs_evals == rec2.rhs_evals
    assert rec1.l2_error == rec2.l2_error


def test_run_one_records_failure():
    # unattainable tolerance: forces a step-size underflow
    cfg = RunConfig("semilinear", math.nan, 16, "exprb43", "kiops", 1e-300)
    rec = run_one(cfg, u_ref=np.zeros(16))
    assert rec.failed
    assert "StepFailure" in rec.error
    assert math.isnan(rec.l2_error)


def test_record_row_formats():
    cfg = RunConfig("adr", 0.1, 32, "epirk4s3", "leja", 1e-6)
    rec = RunRecord(config=cfg, steps_accepted=5, l2_error=1.0 / 3.0)
    row = record_row(rec)
    assert row[0] == "adr"
    assert row[1] == "0.10000000000000001"  # %.17g
    assert row[5] == "9.9999999999999995e-07"
    assert row[13] == "0.33333333333333331"
    assert row[14] == ""
    cfg2 = RunConfig("semilinear", math.nan, 32, "epirk4s3", "kiops", 1e-6)
    assert record_row(RunRecord(config=cfg2))[1] == ""


def test_write_csv_layout(tmp_path):
    cfg = RunConfig("adr", 0.1, 32, "epirk4s3", "leja", 1e-6)
    out = tmp_path / "bench.csv"
    write_csv([RunRecord(config=cfg, error="StepFailure: boom")], out)
    text = out.read_text(encoding="utf-8")
    lines = text.split("\n")
    assert lines[0] == CSV_HEADER + ",error"
    assert "\r" not in text
    with out.open(newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 2
    assert len(rows[1]) == 15
    assert rows[1][-1] == "StepFailure: boom"


def test_expand_matrix_counts():
    sweep = SweepConfig(problems=["adr"], params={"adr": [0.1]}, n=32,
                        tols=(1e-4,))
    configs = expand_matrix(sweep)
    # 5 integrators x (leja + kiops) + 3 with lekry = 13 combinations
    assert len(configs) == 13
    assert all(c.tol == 1e-4 for c in configs)
    semis = expand_matrix(SweepConfig(problems=["semilinear"],
                                      params={"semilinear": [0.5]},
                                      tols=(1e-4,)))
    assert all(math.isnan(c.param) for c in semis)


def test_run_sweep_writes_rows(tmp_path):
    sweep = SweepConfig(problems=["semilinear"], n=16,
                        integrators=["exprb43"], schemes=["kiops"],
                        tols=(1e-4, 1e-6))
    out = tmp_path / "s.csv"
    records = run_sweep(expand_matrix(sweep), out)
    assert len(records) == 2
    assert all(not r.failed for r in records)
    with out.open(newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 3
    # tighter tolerance gives the smaller error
    assert float(rows[2][13]) < float(rows[1][13])


def test_cli_main_runs_sweep(tmp_path, capsys):
    out = tmp_path / "cli.csv"
    rc = cli_main(["--problem", "semilinear", "--integrator", "exprb43",
                   "--scheme", "kiops", "--tols", "1e-4", "--grid", "16",
                   "--out", str(out)])
    assert rc == 0
    captured = capsys.readouterr()
    assert "1/1 runs succeeded" in captured.out
    assert out.exists()
    with out.open(newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 2
    assert rows[1][0] == "semilinear"
