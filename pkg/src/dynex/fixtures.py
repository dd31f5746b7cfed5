"""Small models used to validate the engine and the scenario machinery."""

from __future__ import annotations

from .expr import LOOKUP, MIN, Constant, VarRef
from .model import AuxDef, ModelSpec, ParamDef, StockDef
from .willingness import PointsCurveSpec


def lotka_volterra(
    alpha: float = 1.0,
    beta: float = 1.0,
    gamma: float = 1.0,
    delta: float = 1.0,
    prey0: float = 0.5,
    predator0: float = 0.5,
) -> ModelSpec:
    """Predator-prey oscillator: dx/dt = ax - bxy, dy/dt = dxy - gy.

    The quantity C = delta*x - gamma*ln(x) + beta*y - alpha*ln(y) is conserved
    along exact trajectories, which makes this the standard integrator
    fixture: numerical drift in C is pure integration error.
    """
    x, y = VarRef("prey"), VarRef("predator")
    p = {n: VarRef(n) for n in ("alpha", "beta", "gamma", "delta")}
    return ModelSpec(
        name="lotka_volterra",
        stocks=(
            StockDef("prey", VarRef("prey0"), p["alpha"] * x, p["beta"] * x * y),
            StockDef("predator", VarRef("predator0"), p["delta"] * x * y, p["gamma"] * y),
        ),
        parameters=(
            ParamDef("alpha", alpha),
            ParamDef("beta", beta),
            ParamDef("gamma", gamma),
            ParamDef("delta", delta),
            ParamDef("prey0", prey0),
            ParamDef("predator0", predator0),
        ),
    )


def undamped_oscillator() -> ModelSpec:
    """Harmonic oscillator with no damping; it never reaches a steady state."""
    return ModelSpec(
        name="oscillator",
        stocks=(
            StockDef("position", Constant(1.0), VarRef("velocity"), Constant(0.0)),
            StockDef("velocity", Constant(0.0), -VarRef("position"), Constant(0.0)),
        ),
    )


def paired_flows() -> ModelSpec:
    """Two stocks exchanging matter through one shared flow expression."""
    return ModelSpec(
        name="paired",
        stocks=(
            StockDef("upper", Constant(100.0), Constant(0.0), VarRef("transfer")),
            StockDef("lower", Constant(0.0), VarRef("transfer"), Constant(0.0)),
        ),
        auxiliaries=(AuxDef("transfer", VarRef("upper") * 0.1),),
    )


def linear_labor_market(
    demand_intercept: float = 1000.0,
    demand_slope: float = 200.0,
    pool: float = 2000.0,
    demanded_salary: float = 1.0,
    accept_ceiling: float = 2.0,
    fill_time: float = 2.0,
    wage_adjust: float = 1e-5,
    wage0: float = 0.5,
) -> ModelSpec:
    """Linear micro labor market with a closed-form equilibrium.

    Demand for workers falls linearly in the offered wage; supply is the
    willing share of a fixed pool under a linear acceptance curve that
    saturates at ``accept_ceiling`` times the demanded salary. Employment
    relaxes toward the short side of the market and the wage moves with
    excess demand, so the no-floor run settles at the market-clearing wage

        w* = a / (b + pool / (accept_ceiling * demanded_salary))

    with employment a - b*w*. Both are exactly computable, which is what the
    wage-floor acceptance check compares against. Variable names follow the
    flagship model so scenario metrics apply unchanged.
    """
    w = VarRef("offered_salary")
    supply = VarRef("supply")
    demand = VarRef("demand")
    return ModelSpec(
        name="linear_labor_market",
        stocks=(
            StockDef(
                "exploitees",
                Constant(0.0),
                VarRef("filling") / VarRef("fill_time"),
                VarRef("exploitees") / VarRef("fill_time"),
                unit="people",
            ),
            StockDef(
                "offered_salary",
                VarRef("wage0"),
                VarRef("wage_adjust") * (demand - supply),
                Constant(0.0),
                unit="money/person/time",
            ),
        ),
        auxiliaries=(
            AuxDef("salary_ratio", w / VarRef("demanded_salary"), "1"),
            AuxDef("willing_fraction", LOOKUP("supply_curve", VarRef("salary_ratio")), "1"),
            AuxDef("supply", VarRef("willing_fraction") * VarRef("potential_exploitees"), "people"),
            AuxDef("demand", VarRef("demand_intercept") - VarRef("demand_slope") * w, "people"),
            AuxDef("filling", MIN(demand, supply), "people"),
        ),
        parameters=(
            ParamDef("demand_intercept", demand_intercept, "people"),
            ParamDef("demand_slope", demand_slope, "people*person*time/money"),
            ParamDef("potential_exploitees", pool, "people"),
            ParamDef("demanded_salary", demanded_salary, "money/person/time"),
            ParamDef("fill_time", fill_time, "time"),
            ParamDef("wage_adjust", wage_adjust),
            ParamDef("wage0", wage0, "money/person/time"),
        ),
        lookups={"supply_curve": PointsCurveSpec(((0.0, 0.0), (accept_ceiling, 1.0)))},
    )


def linear_market_equilibrium(
    demand_intercept: float = 1000.0,
    demand_slope: float = 200.0,
    pool: float = 2000.0,
    demanded_salary: float = 1.0,
    accept_ceiling: float = 2.0,
    wage_floor: float | None = None,
) -> dict[str, float]:
    """Closed-form equilibrium of :func:`linear_labor_market`.

    Without a floor the wage clears the market; a binding floor pegs the wage
    and demand becomes the short side. Returns wage, employment, and the
    willing-but-unhired headcount.
    """
    supply_slope = pool / (accept_ceiling * demanded_salary)
    w_clear = demand_intercept / (demand_slope + supply_slope)
    w = w_clear if wage_floor is None else max(w_clear, wage_floor)
    demand = demand_intercept - demand_slope * w
    supply = supply_slope * w
    employment = min(demand, supply)
    return {
        "wage": w,
        "employment": employment,
        "willing_unhired": supply - employment,
    }
