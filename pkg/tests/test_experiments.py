import json

import numpy as np
import pytest

from ddeig.experiments import (
    CROSSOVER_HEADER,
    CSV_HEADER,
    FAIL,
    RunOptions,
    crossover_to_csv,
    rows_to_csv,
    run_crossover,
    run_row,
    run_table,
    to_json,
)

FAST = RunOptions(timing=False)


def test_table1_row():
    r = run_row("table1", 3, FAST)
    assert r.n == 64 and r.h == 0.125 and r.variant == "dense"
    assert r.aldu.relerr <= 1e-14
    assert r.chol.error is None and r.chol.relerr > 1e-8


def test_table2_row_matches_closed_form():
    r = run_row("table2", 7, FAST)
    assert r.n == 127
    assert r.aldu.mu == pytest.approx(1.07268420682006790e2, rel=1e-14)
    assert r.aldu.converged and r.chol.converged


def test_failed_path_is_recorded_not_raised():
    r = run_row("table3", 18, FAST)
    assert r.chol.mu is None and "NotPositiveDefinite" in r.chol.error
    assert r.aldu.error is None and r.aldu.converged
    line = rows_to_csv([r], "table3", FAST).splitlines()[-1].split(",")
    assert line[2] == FAIL and line[3] == FAIL and line[6] == FAIL and line[10] == FAIL
    assert line[4] != FAIL and line[11] == "0.000"


def test_csv_layout():
    rows = run_table("table2", 7, 8, FAST)
    lines = rows_to_csv(rows, "table2", FAST).splitlines()
    assert lines[0].startswith("# experiment=table2 kind=beam_natural baseline=cholesky-banded")
    assert "rho=1.0" in lines[0] and "driver=invit" in lines[0]
    assert lines[1] == CSV_HEADER
    assert len(lines) == 4
    cells = lines[2].split(",")
    assert len(cells) == 12
    assert float(cells[0]) == 2**-7 and cells[1] == "127"
    # 18 significant digits round-trip the doubles exactly
    assert float(cells[4]) == rows[0].aldu.mu
    assert cells[4] == f"{rows[0].aldu.mu:.17e}"


def test_csv_is_deterministic_without_timing():
    a = rows_to_csv(run_table("table3", 4, 6, FAST), "table3", FAST)
    b = rows_to_csv(run_table("table3", 4, 6, FAST), "table3", FAST)
    assert a == b


def test_thread_pool_keeps_order(monkeypatch):
    serial = rows_to_csv(run_table("crossover", 3, 8, FAST), "crossover", FAST)
    monkeypatch.setenv("DDEIG_THREADS", "4")
    threaded = rows_to_csv(run_table("crossover", 3, 8, FAST), "crossover", FAST)
    assert serial == threaded


def test_bad_thread_setting_falls_back_to_serial(monkeypatch):
    monkeypatch.setenv("DDEIG_THREADS", "many")
    assert [r.k for r in run_table("table2", 7, 8, FAST)] == [7, 8]


def test_crossover_split():
    rows = run_crossover(3, 10, FAST)
    lines = crossover_to_csv(rows).splitlines()
    assert lines[1] == CROSSOVER_HEADER and len(lines) == 10
    for r in rows:
        # overall error never exceeds the sum of its parts
        assert r.overall_err_aldu <= r.disc_err + r.comp_err_aldu * (1 + 1e-12)
        assert r.comp_err_aldu <= 1e-12 * np.pi**4
    # discretization error falls by about 4 per halving of h
    ratios = [a.disc_err / b.disc_err for a, b in zip(rows, rows[1:])]
    assert all(3.9 < q < 4.1 for q in ratios)


def test_lanczos_driver_row():
    r = run_row("table3", 6, RunOptions(driver="lanczos", timing=False))
    ref = run_row("table3", 6, FAST)
    assert r.aldu.mu == pytest.approx(ref.aldu.mu, rel=1e-12)


def test_rho_override():
    r = run_row("table1", 3, RunOptions(rho=1e-4, timing=False))
    assert r.aldu.mu == pytest.approx(1e-4, rel=1e-14)


def test_json_output():
    doc = json.loads(to_json(run_table("table3", 17, 17, FAST)))
    assert doc[0]["k"] == 17 and doc[0]["chol"]["mu"] is None
    assert doc[0]["chol"]["error"].startswith("NotPositiveDefinite")
    assert doc[0]["aldu"]["converged"] is True


def test_unknown_experiment():
    with pytest.raises(ValueError):
        run_table("table9", 1, 2)
    with pytest.raises(ValueError):
        RunOptions(driver="qr")
