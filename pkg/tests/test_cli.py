import json

import numpy as np
import pytest

from ftn_mccr import cli
from ftn_mccr.cli import (
    COLUMNS,
    Curve,
    SweepSpec,
    emit,
    estimate_dof_slope,
    format_table,
    main,
    parse_values,
    preset,
    read_config_file,
    read_table,
    run_sweep,
    slope_ratio,
)
from ftn_mccr.ensemble import TrialConfig

BASE = TrialConfig(N=20, trials=20, seed=5)


def _spec(**kw):
    args = dict(variable="snr_db", values=(0.0, 10.0), base=BASE)
    args.update(kw)
    return SweepSpec(**args)


def test_presets():
    f1 = preset("fig1")
    assert f1.variable == "N" and f1.values == (10, 20, 50, 100, 200, 300, 400, 500)
    assert len(f1.curves) == 5
    assert {c.overrides.get("allocation_mode", "optimal") for c in f1.curves} == {"optimal", "uniform"}
    f2 = preset("fig2")
    assert f2.base.snr_db == 10.0 and len(f2.curves) == 4
    f3 = preset("fig3")
    assert f3.values[0] == 0.0 and f3.values[-1] == 30.0 and len(f3.curves) == 6
    f4 = preset("fig4")
    assert f4.capacity_bound and 0.67 in f4.values
    assert preset("fig2", trials=7, seed=9).base.trials == 7
    with pytest.raises(ValueError):
        preset("fig5")


def test_empty_curve_list_is_rejected():
    with pytest.raises(ValueError, match="curve"):
        run_sweep(_spec(curves=()))


@pytest.mark.parametrize(
    "kw",
    [dict(values=()), dict(values=(10.0, 0.0, 20.0)), dict(values=(5.0, 5.0)), dict(variable="beta"),
     dict(curves=(Curve("x", {"colour": 1}),))],
)
def test_bad_sweeps(kw):
    with pytest.raises(ValueError):
        _spec(**kw).validate()


def test_sweep_rows_in_order():
    rows = run_sweep(_spec(values=(20.0, 10.0, 0.0), curves=(Curve("a", {}), Curve("b", {"K": 1, "M": 1}))))
    assert [r["curve"] for r in rows] == ["a"] * 3 + ["b"] * 3
    assert [r["snr_db"] for r in rows] == [20.0, 10.0, 0.0] * 2
    assert all(r["status"].startswith("ok") for r in rows)
    assert rows[0]["mean_se_bits_per_s_hz"] > rows[1]["mean_se_bits_per_s_hz"]


def test_shared_seed_family_and_redraw():
    curves = (Curve("a", {}), Curve("b", {}))
    shared = run_sweep(_spec(values=(10.0,), curves=curves))
    assert shared[0]["mean_mccr_bits_per_cu"] == shared[1]["mean_mccr_bits_per_cu"]
    redrawn = run_sweep(_spec(values=(10.0,), curves=curves, redraw=True))
    assert redrawn[0]["seed"] != redrawn[1]["seed"]
    assert redrawn[0]["mean_mccr_bits_per_cu"] != redrawn[1]["mean_mccr_bits_per_cu"]


def test_failed_point_is_reported(monkeypatch):
    real = cli.run_ensemble

    def flaky(cfg, **kw):
        if cfg.snr_db == 10.0:
            raise RuntimeError("no convergence")
        return real(cfg, **kw)

    monkeypatch.setattr(cli, "run_ensemble", flaky)
    rows = run_sweep(_spec(values=(0.0, 10.0, 20.0)))
    assert [r["status"][:2] for r in rows] == ["ok", "er", "ok"]
    assert rows[1]["mean_mccr_bits_per_cu"] is None


def test_csv_round_trip(tmp_path):
    rows = run_sweep(_spec())
    path = tmp_path / "out.csv"
    emit(rows, str(path))
    text = path.read_text()
    assert text.splitlines()[0] == ",".join(COLUMNS)
    back = read_table(str(path))
    for a, b in zip(rows, back):
        for col in COLUMNS:
            assert a[col] == b[col], col


def test_json_output():
    rows = run_sweep(_spec())
    doc = json.loads(format_table(rows, "json"))
    assert doc["columns"] == list(COLUMNS)
    assert doc["rows"][0]["mean_se_bits_per_s_hz"] == rows[0]["mean_se_bits_per_s_hz"]


def test_unwritable_output(tmp_path):
    rows = run_sweep(_spec(values=(0.0,)))
    bad = tmp_path / "missing" / "out.csv"
    with pytest.raises(OSError, match="out.csv"):
        emit(rows, str(bad))
    assert main(["--var", "snr_db", "--values", "0", "--N", "20", "--trials", "5", "--out", str(bad)]) == 2


def test_format_rejects_empty_and_unknown():
    with pytest.raises(ValueError):
        format_table([])
    with pytest.raises(ValueError):
        format_table(run_sweep(_spec(values=(0.0,))), "xml")


def test_parse_values():
    assert parse_values("0:30:2", "snr_db") == tuple(float(v) for v in range(0, 31, 2))
    assert parse_values("10,20,50", "N") == (10, 20, 50)
    assert parse_values("0.5, 0.67", "delta") == (0.5, 0.67)


def test_config_file_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep\nvar = snr_db\nvalues = 0,10\ntrials = 7\nN = 20\nseed = 0x10\n")
    assert read_config_file(str(cfg))["seed"] == 16
    out = tmp_path / "o.csv"
    assert main(["--config", str(cfg), "--trials", "4", "--out", str(out)]) == 0
    rows = read_table(str(out))
    assert [r["trials"] for r in rows] == [4, 4]
    assert rows[0]["seed"] == 16 and rows[0]["N"] == 20


def test_config_file_errors(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    with pytest.raises(ValueError, match="unknown key"):
        read_config_file(str(cfg))
    cfg.write_text("trials 5\n")
    with pytest.raises(ValueError, match="key=value"):
        read_config_file(str(cfg))


def test_missing_sweep_definition():
    assert main(["--trials", "3"]) == 2


def test_nonzero_exit_on_failed_row(tmp_path, monkeypatch):
    def broken(cfg, **kw):
        raise RuntimeError("bad")

    monkeypatch.setattr(cli, "run_ensemble", broken)
    assert main(["--var", "snr_db", "--values", "0", "--out", str(tmp_path / "x.csv")]) == 1


def _line(slope, snrs):
    return [{"snr_db": s, "mean_se_bits_per_s_hz": 1.0 + slope * s} for s in snrs]


def test_slope_estimate_exact_on_a_line():
    fit = estimate_dof_slope(_line(0.3, np.arange(0, 31, 2.0)))
    assert fit.slope == pytest.approx(0.3, rel=1e-12)
    assert fit.window == (20.0, 30.0) and fit.n_points == 6
    assert slope_ratio(_line(0.45, range(0, 31, 2)), _line(0.15, range(0, 31, 2))) == pytest.approx(3.0)


def test_slope_needs_three_points():
    with pytest.raises(ValueError, match="at least 3"):
        estimate_dof_slope(_line(0.3, [0.0, 25.0, 30.0]))


def test_slope_command(tmp_path, capsys):
    out = tmp_path / "snr.csv"
    assert main(["--var", "snr_db", "--values", "0:30:5", "--N", "20", "--trials", "20", "--out", str(out)]) == 0
    assert main(["slope", str(out)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 2 and lines[1].split()[-1] == "1.0000"
