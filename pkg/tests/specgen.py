"""Seeded generator of random valid model specs for round-trip testing."""

from __future__ import annotations

import random

from dynex import expr as ex
from dynex.model import AuxDef, ModelSpec, ParamDef, StockDef, validate_model
from dynex.willingness import LogNormalCurveSpec, NormalCurveSpec, PointsCurveSpec

_CALLS = ("MIN", "MAX", "CLIP", "STEP", "PULSE", "TIME", "SMOOTH", "DELAY1", "DELAY3")
_INITIAL_CALLS = ("MIN", "MAX", "CLIP", "TIME")  # initials must stay delay-free


def _number(rng: random.Random) -> float:
    kind = rng.randrange(4)
    if kind == 0:
        return float(rng.randint(0, 100))
    if kind == 1:
        return round(rng.uniform(-10, 10), 3)
    if kind == 2:
        return rng.uniform(-1e6, 1e6)
    return rng.random() * 10.0 ** rng.randint(-8, 8)


def _expr(rng: random.Random, names: list[str], lookups: list[str], depth: int, calls=_CALLS) -> ex.Expr:
    choices = ["const", "const"]
    if names:
        choices += ["ref", "ref", "ref"]
    if depth > 0:
        choices += ["binary", "binary", "unary", "call"]
        if lookups:
            choices.append("lookup")
    kind = rng.choice(choices)
    if kind == "const":
        return ex.Constant(_number(rng))
    if kind == "ref":
        return ex.VarRef(rng.choice(names))
    if kind == "unary":
        return -_expr(rng, names, lookups, depth - 1, calls)  # folds negated literals
    if kind == "binary":
        op = rng.choice(ex.BINARY_OPS)
        return ex.Binary(
            op,
            _expr(rng, names, lookups, depth - 1, calls),
            _expr(rng, names, lookups, depth - 1, calls),
        )
    if kind == "lookup":
        return ex.LOOKUP(rng.choice(lookups), _expr(rng, names, lookups, depth - 1, calls))
    func = rng.choice(calls)
    sub = lambda: _expr(rng, names, lookups, depth - 1, calls)
    if func == "TIME":
        return ex.TIME()
    if func in ("MIN", "MAX"):
        return ex.Call(func, (sub(), sub()))
    if func == "CLIP":
        return ex.Call(func, (sub(), sub(), sub()))
    if func == "STEP":
        return ex.Call(func, (sub(), sub()))
    if func == "PULSE":
        return ex.Call(func, (sub(), sub(), sub()))
    # delays: keep the time constant a positive literal
    return ex.Call(func, (sub(), ex.Constant(abs(_number(rng)) + 0.5)))


def _curve(rng: random.Random):
    kind = rng.randrange(3)
    if kind == 0:
        median = rng.uniform(0.5, 1.5)
        return NormalCurveSpec(median, median + rng.uniform(0.1, 2.0))
    if kind == 1:
        median = rng.uniform(0.5, 1.5)
        return LogNormalCurveSpec(median, median + rng.uniform(0.1, 2.0))
    n = rng.randint(2, 5)
    ratios = [0.0]
    for _ in range(n - 1):
        ratios.append(ratios[-1] + rng.uniform(0.1, 2.0))
    fractions = sorted(rng.uniform(0.0, 1.0) for _ in range(n - 2))
    return PointsCurveSpec(tuple(zip(ratios, [0.0] + fractions + [1.0])))


def random_spec(rng: random.Random) -> ModelSpec:
    params = [ParamDef(f"p{i}", _number(rng)) for i in range(rng.randint(1, 4))]
    lookups = {f"curve{i}": _curve(rng) for i in range(rng.randint(0, 2))}
    lookup_names = list(lookups)
    param_names = [p.id for p in params]

    stocks = []
    stock_names = []
    for i in range(rng.randint(1, 3)):
        stocks.append(
            StockDef(
                f"s{i}",
                initial=_expr(rng, param_names, [], rng.randint(0, 2), _INITIAL_CALLS),
                inflow=ex.Constant(0.0),  # placeholder, flows rewritten below
                outflow=ex.Constant(0.0),
            )
        )
        stock_names.append(f"s{i}")

    auxes = []
    known = param_names + stock_names
    for i in range(rng.randint(0, 5)):
        auxes.append(AuxDef(f"a{i}", _expr(rng, known, lookup_names, rng.randint(0, 3))))
        known.append(f"a{i}")

    stocks = [
        StockDef(
            s.id,
            initial=s.initial,
            inflow=_expr(rng, known, lookup_names, rng.randint(0, 2)),
            outflow=_expr(rng, known, lookup_names, rng.randint(0, 2)),
        )
        for s in stocks
    ]

    spec = ModelSpec(
        name=f"generated_{rng.randint(0, 10**6)}",
        stocks=tuple(stocks),
        auxiliaries=tuple(auxes),
        parameters=tuple(params),
        lookups=lookups,
    )
    report = validate_model(spec)
    assert report.ok, [f"{f.location}: {f.message}" for f in report.errors]
    return spec
