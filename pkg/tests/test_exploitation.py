import numpy as np
import pytest

from dynex.engine import RunConfig, conservation_probe, simulate, steady_state
from dynex.errors import CalibrationError, ConfigError, PatternViolation
from dynex.exploitation import (
    Calibration,
    build_exploitation_model,
    fig2_loops,
    loop_probe,
    reference_operating_point,
)
from dynex.loops import Polarity, enumerate_cycles, match_named_loops
from dynex.model import signed_graph, validate_model


@pytest.fixture(scope="module")
def spec():
    return build_exploitation_model()


@pytest.fixture(scope="module")
def loop_report(spec):
    graph = signed_graph(spec, reference_operating_point(spec))
    return enumerate_cycles(graph, max_len=12)


def test_default_build_validates(spec):
    assert validate_model(spec).ok


def test_bad_calibration_rejected():
    with pytest.raises(CalibrationError):
        Calibration(hire_time=0.0)
    with pytest.raises(CalibrationError):
        Calibration(revenue_share=1.5)
    with pytest.raises(CalibrationError):
        Calibration(optimism=0.8)


def test_scarcity_edge_is_negative(spec):
    graph = signed_graph(spec, reference_operating_point(spec))
    assert graph.sign_of("potential_exploitees", "demanded_salary") == -1


def test_all_six_loops_found_with_expected_polarities(loop_report):
    match = match_named_loops(loop_report, fig2_loops())
    assert match.all_found, [(m.label, m.status) for m in match.matches]
    polarities = [loop.expected_polarity for loop in fig2_loops()]
    assert polarities.count(Polarity.BALANCING) == 4
    assert polarities.count(Polarity.REINFORCING) == 2


def test_epsilon_zero_kills_scarcity_loop():
    spec = build_exploitation_model(Calibration(epsilon=0.0))
    graph = signed_graph(spec, reference_operating_point(spec))
    assert graph.sign_of("potential_exploitees", "demanded_salary") is None
    report = enumerate_cycles(graph, max_len=12)
    match = match_named_loops(report, fig2_loops())
    assert match["B1"].status.value == "missing"


def test_scarcity_monotone_in_pool(spec):
    from dynex.engine import evaluate_point

    values = []
    for pool in (2000.0, 5000.0, 10000.0):
        point = evaluate_point(
            spec,
            {
                "potential_exploitees": pool,
                "exploitees": 500.0,
                "capacity": 5000.0,
                "exhaustion": 0.0,
                "offered_salary": 1.0,
            },
        )
        values.append(point["demanded_salary"])
    assert values[0] > values[1] > values[2]


def test_closed_population_conserved(spec):
    drift = conservation_probe(
        spec,
        RunConfig(t_end=200.0, dt=0.125),
        ["potential_exploitees", "exploitees"],
    )
    assert drift < 1e-9


def test_open_population_leaks():
    spec = build_exploitation_model(Calibration(closed_population=False))
    drift = conservation_probe(
        spec, RunConfig(t_end=200.0, dt=0.125), ["potential_exploitees", "exploitees"]
    )
    assert drift > 1.0


def test_ratio_identity_on_trajectory(spec):
    traj = simulate(spec, RunConfig(t_end=100.0, dt=0.125))
    recomputed = traj["offered_salary"] / traj["demanded_salary"]
    assert np.allclose(traj["relative_attractiveness"], recomputed, rtol=0, atol=1e-12)


def test_steady_state_interior(spec):
    final = steady_state(spec, RunConfig(t_end=2000.0, dt=0.125, save_every=8))
    for name in ("potential_exploitees", "exploitees", "capacity", "offered_salary"):
        assert final[name] > 0
    assert 0.0 < final["exhaustion"] < 1.0
    assert final["willing_fraction"] > 0.5  # the settled offer attracts most of the pool


def test_unknown_probe_rejected(spec):
    with pytest.raises(ConfigError):
        loop_probe(spec, "B9_nope")


def test_capacity_drain_probe(spec):
    report = loop_probe(spec, "B2_drain")
    assert report.passed
    assert report.details["drained"] > 0


def test_burnout_probe_requires_active_loop():
    disabled = build_exploitation_model(Calibration(t_burnout=1e9))
    with pytest.raises(PatternViolation) as err:
        loop_probe(disabled, "B3_burnout")
    assert err.value.probe == "B3_burnout"
    assert err.value.time is not None


def test_all_stocks_nonnegative_over_long_horizon(spec):
    traj = simulate(spec, RunConfig(t_end=2000.0, dt=0.125, save_every=8))
    for name in ("potential_exploitees", "exploitees", "capacity", "exhaustion", "offered_salary"):
        assert float(traj[name].min()) >= 0.0
