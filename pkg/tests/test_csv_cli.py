import io
from pathlib import Path

import pytest

from dynex import expr as ex
from dynex.cli import main
from dynex.csvio import format_csv, write_csv
from dynex.engine import RunConfig, simulate
from dynex.errors import UnknownColumn
from dynex.exploitation import build_exploitation_model
from dynex.model import ModelSpec, StockDef

MODEL_FILE = Path(__file__).resolve().parent.parent / "models" / "exploitation.sd"


def tiny_trajectory(t_end=0.0, dt=0.5):
    spec = ModelSpec(
        "tiny", stocks=(StockDef("x", ex.Constant(1.5), ex.Constant(0.0), ex.Constant(0.0)),)
    )
    return simulate(spec, RunConfig(t_end=t_end, dt=dt))


def test_single_row_single_column_is_two_lines():
    text = format_csv(tiny_trajectory(), ["x"])
    assert text == "time,x\n0.0,1.5\n"


def test_empty_columns_gives_time_only():
    text = format_csv(tiny_trajectory(t_end=1.0), [])
    assert text.splitlines()[0] == "time"
    assert len(text.splitlines()) == 4  # header + rows at 0, 0.5, 1.0


def test_write_csv_returns_byte_count_and_accepts_binary_sinks():
    traj = tiny_trajectory()
    text_sink = io.StringIO()
    n_text = write_csv(traj, ["x"], text_sink)
    assert n_text == len(text_sink.getvalue().encode())
    byte_sink = io.BytesIO()
    n_bytes = write_csv(traj, ["x"], byte_sink)
    assert byte_sink.getvalue() == text_sink.getvalue().encode()
    assert n_bytes == n_text


def test_unknown_column_rejected():
    with pytest.raises(UnknownColumn):
        format_csv(tiny_trajectory(), ["nope"])


def test_hundred_step_run_has_101_data_rows():
    spec = build_exploitation_model()
    traj = simulate(spec, RunConfig(t_end=12.5, dt=0.125))
    text = format_csv(traj, ["exploitees"])
    assert len(text.splitlines()) == 102  # header + 101 rows
    assert text.endswith("\n") and not text.endswith("\n\n")


def test_csv_bit_identical_across_runs():
    spec = build_exploitation_model()
    cfg = RunConfig(t_end=50.0, dt=0.125)
    cols = ["exploitees", "offered_salary", "outcomes"]
    a = format_csv(simulate(spec, cfg), cols)
    b = format_csv(simulate(spec, cfg), cols)
    assert a == b


# -- command line ---------------------------------------------------------------


def test_cli_validate_ok(capsys):
    assert main(["validate", str(MODEL_FILE)]) == 0


def test_cli_validate_reports_errors(tmp_path, capsys):
    bad = tmp_path / "bad.sd"
    bad.write_text("model m\naux a = b\n")
    assert main(["validate", str(bad)]) == 1
    err = capsys.readouterr().err
    assert "undeclared reference b" in err


def test_cli_simulate_stdout(capsys):
    code = main(
        ["simulate", str(MODEL_FILE), "--t-end", "10", "--vars", "exploitees,outcomes"]
    )
    assert code == 0
    out = capsys.readouterr().out
    lines = out.splitlines()
    assert lines[0] == "time,exploitees,outcomes"
    assert len(lines) == 82  # 80 steps + initial row + header


def test_cli_simulate_to_file(tmp_path, capsys):
    out_file = tmp_path / "run.csv"
    code = main(
        ["simulate", str(MODEL_FILE), "--t-end", "10", "--dt", "0.5", "--out", str(out_file)]
    )
    assert code == 0
    assert out_file.read_text().startswith("time,potential_exploitees")


def test_cli_simulate_missing_t_end_is_usage_error(capsys):
    assert main(["simulate", str(MODEL_FILE)]) == 2


def test_cli_missing_file_is_usage_error(capsys):
    assert main(["validate", "no_such_file.sd"]) == 2


def test_cli_loops_expect_fig2(capsys):
    assert main(["loops", str(MODEL_FILE), "--expect", "fig2"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "label,expected,status"
    assert "B1,balancing,found" in out
    assert "R2,reinforcing,found" in out


def test_cli_loops_plain_listing(tmp_path, capsys):
    model = tmp_path / "pair.sd"
    model.write_text(
        "model pair\n"
        "stock x = 1 { inflow: 0 outflow: drain }\n"
        "aux drain = x * 0.5\n"
    )
    assert main(["loops", str(model)]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "polarity,length,nodes"
    assert "balancing,2,drain->x" in out


def test_cli_calibrate(capsys):
    code = main(
        ["calibrate", "--kind", "normal", "--anchor", "1,0.5", "--anchor", "1.5,0.9"]
    )
    assert code == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "parameter,value"
    values = dict(line.split(",") for line in out[1:])
    from dynex.willingness import NormalCdf, fraction_willing

    curve = NormalCdf(float(values["mu"]), float(values["sigma"]))
    assert abs(fraction_willing(curve, 1.0) - 0.5) < 1e-9
    assert abs(fraction_willing(curve, 1.5) - 0.9) < 1e-9


def test_cli_calibrate_infeasible_is_domain_failure(capsys):
    code = main(
        ["calibrate", "--kind", "normal", "--anchor", "1,0.5", "--anchor", "1,0.9"]
    )
    assert code == 1


def test_cli_scenario_table(tmp_path, capsys):
    scen = tmp_path / "floors.scn"
    scen.write_text(
        "# wage floor experiment\n"
        "scenario binding_floor\n"
        "wage_floor 1.56 from 0\n"
        "scenario slack_floor\n"
        "wage_floor 0.0 from 0\n"
    )
    code = main(
        ["scenario", str(MODEL_FILE), str(scen), "--t-end", "2000", "--save-every", "8"]
    )
    assert code == 0
    out = capsys.readouterr().out
    lines = out.splitlines()
    assert lines[0] == "scenario,metric,value,baseline,diff,pct_diff"
    rows = {
        (cells[0], cells[1]): cells
        for cells in (line.split(",") for line in lines[1:])
    }
    assert float(rows[("binding_floor", "employment")][4]) < 0  # diff vs baseline
    assert float(rows[("binding_floor", "wage")][4]) > 0
    assert float(rows[("slack_floor", "employment")][4]) == 0.0


def test_cli_sweep_grid(tmp_path, capsys):
    plan = tmp_path / "plan.swp"
    plan.write_text("grid epsilon = 0,0.5\n")
    code = main(
        ["sweep", str(MODEL_FILE), str(plan), "--t-end", "2000", "--save-every", "8"]
    )
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("epsilon,status,")
    assert len(lines) == 3
    assert all(line.split(",")[1] == "ok" for line in lines[1:])


def test_cli_sweep_range_deterministic(tmp_path, capsys):
    plan = tmp_path / "plan.swp"
    plan.write_text("range epsilon = 0.2..0.8 samples 3\nseed 7\n")
    assert main(["sweep", str(MODEL_FILE), str(plan), "--t-end", "1000", "--save-every", "8"]) == 0
    first = capsys.readouterr().out
    assert main(["sweep", str(MODEL_FILE), str(plan), "--t-end", "1000", "--save-every", "8"]) == 0
    assert capsys.readouterr().out == first


def test_cli_simulate_euler(capsys):
    code = main(
        ["simulate", str(MODEL_FILE), "--t-end", "5", "--dt", "0.5",
         "--integrator", "euler", "--vars", "exploitees"]
    )
    assert code == 0
    assert len(capsys.readouterr().out.splitlines()) == 12


def test_cli_scenario_override_at_time(tmp_path, capsys):
    scen = tmp_path / "boost.scn"
    scen.write_text("scenario late_boost\noverride revenue_share = 0.33 at 100\n")
    code = main(
        ["scenario", str(MODEL_FILE), str(scen), "--t-end", "2000", "--save-every", "8"]
    )
    assert code == 0
    out = capsys.readouterr().out
    row = next(l for l in out.splitlines() if l.startswith("late_boost,employment"))
    assert float(row.split(",")[4]) != 0.0  # the late boost moved employment


def test_cli_malformed_scenario_is_domain_failure(tmp_path, capsys):
    scen = tmp_path / "bad.scn"
    scen.write_text("override x = 1\n")  # outside a scenario block
    assert main(["scenario", str(MODEL_FILE), str(scen)]) == 1


def test_cli_mixed_plan_is_domain_failure(tmp_path, capsys):
    plan = tmp_path / "bad.swp"
    plan.write_text("grid epsilon = 0.5\nrange optimism = 1..1.4 samples 3\n")
    assert main(["sweep", str(MODEL_FILE), str(plan)]) == 1
