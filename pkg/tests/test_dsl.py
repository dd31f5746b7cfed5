import math
import random

import pytest

from dynex import expr as ex
from dynex.dsl import ParseError, parse_model, render_number, serialize_model
from dynex.errors import ValidationErrors
from dynex.exploitation import build_exploitation_model
from specgen import random_spec


def test_minimal_stock_model():
    spec = parse_model("model m\nstock x = 1 { inflow: 0 outflow: 0 }")
    assert spec.name == "m"
    assert len(spec.stocks) == 1
    assert spec.stocks[0].initial == ex.Constant(1.0)


def test_parse_error_carries_position():
    with pytest.raises(ParseError) as err:
        parse_model("model m\naux a = (")
    assert err.value.span.line == 2
    assert "expression" in str(err.value)


def test_validation_errors_collected():
    with pytest.raises(ValidationErrors) as err:
        parse_model("model m\naux a = b")
    messages = [f.message for f in err.value.report.errors]
    assert messages == ["undeclared reference b"]


def test_comments_and_whitespace_insensitive():
    text = """model demo  # header
param speed = 2.5 [1/time]   # tuned
stock level = 10 [money] {
    inflow: speed * level outflow: 0
}
aux doubled   =    level * 2 [money]
"""
    spec = parse_model(text)
    assert spec.parameters[0].unit == "1/time"
    assert spec.auxiliaries[0].id == "doubled"


def test_expression_precedence():
    spec = parse_model("model m\nparam p = 1\naux a = -p ^ 2 + 2 * p - 1 / p ^ 0.5", validate=False)
    node = spec.auxiliaries[0].expr
    # -(p^2) + 2p - (1/(p^0.5)), left-assoc additive chain
    assert node.op == "-"
    assert node.lhs.op == "+"
    assert isinstance(node.lhs.lhs, ex.Unary)
    assert node.lhs.lhs.arg.op == "^"


def test_power_right_associative():
    spec = parse_model("model m\nparam p = 2\naux a = p ^ p ^ p", validate=False)
    node = spec.auxiliaries[0].expr
    assert node.op == "^"
    assert node.rhs.op == "^"


def test_negated_literal_folds_to_constant():
    spec = parse_model("model m\naux a = -2.5", validate=False)
    assert spec.auxiliaries[0].expr == ex.Constant(-2.5)


def test_lookup_call_parses_curve_name():
    text = "model m\nlookup accept = normal(median=1, ratio90=1.5)\naux a = LOOKUP(accept, 0.5)"
    spec = parse_model(text)
    call = spec.auxiliaries[0].expr
    assert call.func == "LOOKUP"
    assert call.args[0] == ex.VarRef("accept")


def test_unknown_builtin_rejected():
    with pytest.raises(ParseError):
        parse_model("model m\naux a = FOO(1)")


def test_render_number_minimal_roundtrip():
    for value in (0.0, 1.0, 0.125, 1e9, 1.05, -2.5, 1 / 3, math.pi, 6.02e23, 1e-12):
        text = render_number(value)
        assert float(text) == value
    assert render_number(10000.0) == "10000"
    assert render_number(0.5) == "0.5"


def test_flagship_roundtrip_structural_and_fixpoint():
    spec = build_exploitation_model()
    text = serialize_model(spec)
    reparsed = parse_model(text)
    assert reparsed == spec
    assert serialize_model(reparsed) == text


def test_serialize_twice_identical_bytes():
    spec = build_exploitation_model()
    assert serialize_model(spec) == serialize_model(spec)


@pytest.mark.parametrize("seed", range(20))
def test_random_spec_roundtrip(seed):
    spec = random_spec(random.Random(seed))
    text = serialize_model(spec)
    reparsed = parse_model(text)
    assert reparsed == spec, text
    assert serialize_model(reparsed) == text


def test_fixtures_roundtrip():
    from dynex.fixtures import (
        linear_labor_market,
        lotka_volterra,
        paired_flows,
        undamped_oscillator,
    )

    for fixture in (linear_labor_market(), lotka_volterra(), paired_flows(), undamped_oscillator()):
        text = serialize_model(fixture)
        assert parse_model(text) == fixture
        assert serialize_model(parse_model(text)) == text
