import math

import numpy as np
import pytest

from dynex import expr as ex
from dynex.engine import (
    IntegratorKind,
    RunConfig,
    compile_model,
    conservation_probe,
    evaluate_point,
    simulate,
    smooth_response_probe,
    steady_state,
)
from dynex.errors import (
    ConfigError,
    NonFiniteState,
    NotConverged,
    UnknownVariable,
    ValidationErrors,
)
from dynex.fixtures import lotka_volterra, paired_flows, undamped_oscillator
from dynex.model import AuxDef, ModelSpec, ParamDef, StockDef


def decay_model():
    return ModelSpec(
        "decay",
        stocks=(StockDef("x", ex.Constant(1.0), ex.Constant(0.0), ex.VarRef("x")),),
    )


def test_rk4_matches_analytic_decay():
    traj = simulate(decay_model(), RunConfig(t_end=1.0, dt=0.1))
    assert abs(float(traj["x"][-1]) - math.exp(-1)) < 1e-6


def test_euler_matches_closed_form():
    traj = simulate(
        decay_model(), RunConfig(t_end=1.0, dt=0.1, integrator=IntegratorKind.EULER)
    )
    assert float(traj["x"][-1]) == pytest.approx(0.9**10, abs=1e-12)


@pytest.mark.parametrize(
    "integrator,lo,hi",
    [(IntegratorKind.EULER, 1.8, 2.2), (IntegratorKind.RK4, 12.0, 20.0)],
)
def test_convergence_order(integrator, lo, hi):
    errs = []
    for dt in (0.1, 0.05, 0.025):
        traj = simulate(decay_model(), RunConfig(t_end=1.0, dt=dt, integrator=integrator))
        errs.append(abs(float(traj["x"][-1]) - math.exp(-1)))
    assert lo < errs[0] / errs[1] < hi
    assert lo < errs[1] / errs[2] < hi


def test_zero_span_run_is_single_initial_row():
    traj = simulate(decay_model(), RunConfig(t_end=0.0, dt=0.1))
    assert traj.n_rows == 1
    assert float(traj["x"][0]) == 1.0


def test_rows_sampled_every_kth_step_plus_final():
    traj = simulate(decay_model(), RunConfig(t_end=1.0, dt=0.1, save_every=3))
    # steps at k=0,3,6,9 plus the final boundary k=10
    assert list(np.round(traj.times, 10)) == [0.0, 0.3, 0.6, 0.9, 1.0]


def test_determinism_bit_identical():
    cfg = RunConfig(t_end=30.0, dt=0.05)
    spec = lotka_volterra()
    a, b = simulate(spec, cfg), simulate(spec, cfg)
    assert np.array_equal(a.times, b.times)
    for name in a.values:
        assert np.array_equal(a[name], b[name])


def test_smooth_probe_analytic_response():
    traj = smooth_response_probe(1.0, 3.0, 0.01)
    assert float(traj["response"][0]) == 0.0
    assert abs(traj.at_time(3.0)["response"] - (1 - math.exp(-3))) < 1e-3
    assert abs(traj.at_time(1.0)["response"] - (1 - math.exp(-1))) < 1e-3


def test_smooth_probe_constant_input_stays_zero():
    spec = ModelSpec(
        "probe",
        auxiliaries=(
            AuxDef("input", ex.STEP(0.0, 0.0)),
            AuxDef("response", ex.SMOOTH(ex.VarRef("input"), 2.0)),
        ),
    )
    traj = simulate(spec, RunConfig(t_end=5.0, dt=0.1))
    assert np.all(traj["response"] == 0.0)


def test_smooth_probe_preconditions():
    with pytest.raises(ConfigError):
        smooth_response_probe(0.0, 3.0, 0.01)
    with pytest.raises(ConfigError):
        smooth_response_probe(1.0, 3.0, 0.2)


def test_delay1_equals_smooth():
    spec = ModelSpec(
        "delays",
        auxiliaries=(
            AuxDef("input", ex.STEP(1.0, 1.0)),
            AuxDef("a", ex.SMOOTH(ex.VarRef("input"), 2.0)),
            AuxDef("b", ex.DELAY1(ex.VarRef("input"), 2.0)),
        ),
    )
    traj = simulate(spec, RunConfig(t_end=10.0, dt=0.05))
    assert np.array_equal(traj["a"], traj["b"])


def test_delay3_is_slower_then_catches_up():
    spec = ModelSpec(
        "delays",
        auxiliaries=(
            AuxDef("input", ex.STEP(1.0, 0.0)),
            AuxDef("first", ex.SMOOTH(ex.VarRef("input"), 2.0)),
            AuxDef("third", ex.DELAY3(ex.VarRef("input"), 2.0)),
        ),
    )
    traj = simulate(spec, RunConfig(t_end=12.0, dt=0.02))
    early = traj.at_time(0.5)
    assert early["third"] < early["first"]
    late = traj.at_time(12.0)
    assert late["third"] > 0.98
    # mean lag of both delay shapes is tau: equal areas above the response
    dt = 0.02
    gap_first = float(np.sum(1.0 - traj["first"]) * dt)
    gap_third = float(np.sum(1.0 - traj["third"]) * dt)
    assert gap_first == pytest.approx(2.0, abs=0.05)
    assert gap_third == pytest.approx(2.0, abs=0.05)


def test_nested_delays_initialize_consistently():
    spec = ModelSpec(
        "nested",
        parameters=(ParamDef("drive", 3.0),),
        auxiliaries=(
            AuxDef("inner", ex.SMOOTH(ex.VarRef("drive"), 1.0)),
            AuxDef("outer", ex.SMOOTH(ex.VarRef("inner") * 2, 1.0)),
        ),
    )
    traj = simulate(spec, RunConfig(t_end=1.0, dt=0.05))
    assert float(traj["inner"][0]) == 3.0
    assert float(traj["outer"][0]) == 6.0
    assert np.allclose(traj["outer"], 6.0)


def test_event_applies_at_boundary_and_atomically():
    spec = ModelSpec(
        "evt",
        stocks=(StockDef("x", ex.Constant(0.0), ex.VarRef("rate"), ex.Constant(0.0)),),
        auxiliaries=(AuxDef("flow_now", ex.VarRef("rate")),),
        parameters=(ParamDef("rate", 1.0),),
    )
    cfg = RunConfig(t_end=2.0, dt=0.25, events=((1.0, "rate", 5.0),))
    traj = simulate(spec, cfg)
    plain = simulate(spec, RunConfig(t_end=2.0, dt=0.25))
    before = traj.times < 1.0
    assert np.array_equal(traj["x"][before], plain["x"][before])
    # the row at the event time already reflects the new parameter
    assert traj.at_time(1.0)["flow_now"] == 5.0
    assert traj.at_time(1.0)["x"] == pytest.approx(1.0)
    assert traj.at_time(2.0)["x"] == pytest.approx(1.0 + 5.0)


def test_event_between_boundaries_fires_at_next_step():
    spec = ModelSpec("evt", parameters=(ParamDef("rate", 1.0),),
                     auxiliaries=(AuxDef("y", ex.VarRef("rate")),))
    traj = simulate(spec, RunConfig(t_end=1.0, dt=0.25, events=((0.3, "rate", 2.0),)))
    assert traj.at_time(0.25)["y"] == 1.0
    assert traj.at_time(0.5)["y"] == 2.0


def test_overrides_affect_initials():
    spec = ModelSpec(
        "ov",
        stocks=(StockDef("x", ex.VarRef("x0"), ex.Constant(0.0), ex.Constant(0.0)),),
        parameters=(ParamDef("x0", 1.0),),
    )
    traj = simulate(spec, RunConfig(t_end=1.0, dt=0.5, overrides={"x0": 7.0}))
    assert float(traj["x"][0]) == 7.0


def test_override_must_target_parameter():
    with pytest.raises(ConfigError):
        simulate(decay_model(), RunConfig(t_end=1.0, dt=0.5, overrides={"x": 2.0}))


def test_config_validation():
    with pytest.raises(ConfigError):
        simulate(decay_model(), RunConfig(t_end=1.0, dt=-0.1))
    with pytest.raises(ConfigError):
        simulate(decay_model(), RunConfig(t_end=1.0, dt=0.3))  # not a whole number of steps
    with pytest.raises(ConfigError):
        simulate(decay_model(), RunConfig(t_end=1.0, dt=0.5, save_every=0))
    with pytest.raises(ConfigError):
        simulate(decay_model(), RunConfig(t_end=1.0, dt=0.5, events=((2.0, "x", 1.0),)))


def test_validation_gate():
    bad = ModelSpec("bad", auxiliaries=(AuxDef("a", ex.VarRef("missing")),))
    with pytest.raises(ValidationErrors):
        simulate(bad, RunConfig(t_end=1.0, dt=0.5))


def test_nonfinite_aborts_and_truncates():
    spec = ModelSpec(
        "blow",
        stocks=(StockDef("x", ex.Constant(1.0), ex.VarRef("x") * ex.VarRef("x"), ex.Constant(0.0)),),
    )
    with pytest.raises(NonFiniteState) as err:
        simulate(spec, RunConfig(t_end=40.0, dt=0.25))
    traj = err.value.trajectory
    assert traj is not None and traj.n_rows >= 1
    assert np.all(np.isfinite(traj["x"]))


def test_conservation_probe_paired_flows():
    drift = conservation_probe(paired_flows(), RunConfig(t_end=50.0, dt=0.05), ["upper", "lower"])
    assert drift < 1e-9


def test_conservation_probe_empty_group_and_errors():
    spec = paired_flows()
    cfg = RunConfig(t_end=1.0, dt=0.5)
    assert conservation_probe(spec, cfg, []) == 0.0
    with pytest.raises(UnknownVariable):
        conservation_probe(spec, cfg, ["nope"])
    with pytest.raises(ConfigError):
        conservation_probe(spec, cfg, ["transfer"])  # aux, not a stock


def test_lotka_volterra_invariant_drift():
    traj = simulate(lotka_volterra(), RunConfig(t_end=6.3, dt=0.01))
    x, y = traj["prey"], traj["predator"]
    invariant = x - np.log(x) + y - np.log(y)
    drift = float(np.max(np.abs(invariant - invariant[0]))) / abs(float(invariant[0]))
    assert drift < 1e-3


def test_steady_state_immediate_for_static_model():
    spec = ModelSpec(
        "static", stocks=(StockDef("x", ex.Constant(2.0), ex.Constant(0.0), ex.Constant(0.0)),)
    )
    final = steady_state(spec, RunConfig(t_end=10.0, dt=0.5), tol=1e-9, window=5.0)
    assert final["x"] == 2.0


def test_steady_state_oscillator_never_converges():
    with pytest.raises(NotConverged) as err:
        steady_state(undamped_oscillator(), RunConfig(t_end=200.0, dt=0.05), window=50.0)
    assert err.value.variable in ("position", "velocity")
    assert err.value.residual > 1e-6


def test_evaluate_point_consistency():
    spec = paired_flows()
    point = evaluate_point(spec, {"upper": 40.0, "lower": 60.0})
    assert point["transfer"] == pytest.approx(4.0)


def test_compiled_source_is_kept():
    compiled = compile_model(paired_flows())
    assert "def _dynamics" in compiled.source
    assert "def _init" in compiled.source


def test_delay_inside_stock_flow():
    # the inflow itself carries a hidden smooth state
    spec = ModelSpec(
        "flowdelay",
        stocks=(
            StockDef(
                "level",
                ex.Constant(0.0),
                ex.SMOOTH(ex.STEP(1.0, 0.0), 2.0),
                ex.Constant(0.0),
            ),
        ),
    )
    traj = simulate(spec, RunConfig(t_end=10.0, dt=0.01))
    expected = 10.0 - 2.0 * (1.0 - math.exp(-5.0))  # integral of 1 - e^{-t/2}
    assert float(traj["level"][-1]) == pytest.approx(expected, abs=1e-9)


def test_floor_clamps_stock_from_start_time():
    spec = decay_model()
    cfg = RunConfig(t_end=4.0, dt=0.25, floors=(("x", 0.5, 2.0),))
    traj = simulate(spec, cfg)
    before = traj.times < 2.0
    assert traj.at_time(1.0)["x"] < math.exp(-1) + 1e-4  # decays freely before the floor starts
    assert np.all(traj["x"][~before] >= 0.5)
    plain = simulate(spec, RunConfig(t_end=4.0, dt=0.25))
    assert np.array_equal(traj["x"][before], plain["x"][before])


def test_floor_target_must_be_stock():
    with pytest.raises(ConfigError):
        simulate(decay_model(), RunConfig(t_end=1.0, dt=0.5, floors=(("nope", 0.5, 0.0),)))


def test_trajectory_error_paths():
    traj = simulate(decay_model(), RunConfig(t_end=1.0, dt=0.5))
    with pytest.raises(UnknownVariable):
        traj["nope"]
    with pytest.raises(ConfigError):
        traj.at_time(0.3)  # between saved boundaries
