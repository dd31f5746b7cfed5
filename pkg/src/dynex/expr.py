"""Expression trees for model equations.

Every equation in a model (auxiliary definitions, stock initial values and
flows) is one of these nodes. The same tree drives three consumers: the
pointwise interpreter below (validation and operating-point work), the code
generator in :mod:`dynex.engine` (simulation), and the DSL serializer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Mapping, Union

from .errors import DomainError

# Builtin call names and their required argument counts. SMOOTH, DELAY1 and
# DELAY3 take (input, time_constant); LOOKUP takes (curve_name, input);
# STEP takes (height, start_time); PULSE takes (height, start_time, width);
# CLIP takes (value, lower, upper).
BUILTIN_ARITY = {
    "MIN": 2,
    "MAX": 2,
    "CLIP": 3,
    "STEP": 2,
    "PULSE": 3,
    "SMOOTH": 2,
    "DELAY1": 2,
    "DELAY3": 2,
    "LOOKUP": 2,
    "TIME": 0,
}

DELAY_BUILTINS = ("SMOOTH", "DELAY1", "DELAY3")

BINARY_OPS = ("+", "-", "*", "/", "^")


class _Ops:
    """Arithmetic sugar so equations can be written as ordinary Python math."""

    def __add__(self, other):
        return Binary("+", self, as_expr(other))

    def __radd__(self, other):
        return Binary("+", as_expr(other), self)

    def __sub__(self, other):
        return Binary("-", self, as_expr(other))

    def __rsub__(self, other):
        return Binary("-", as_expr(other), self)

    def __mul__(self, other):
        return Binary("*", self, as_expr(other))

    def __rmul__(self, other):
        return Binary("*", as_expr(other), self)

    def __truediv__(self, other):
        return Binary("/", self, as_expr(other))

    def __rtruediv__(self, other):
        return Binary("/", as_expr(other), self)

    def __pow__(self, other):
        return Binary("^", self, as_expr(other))

    def __neg__(self):
        if isinstance(self, Constant):
            return Constant(-self.value)
        return Unary("-", self)


@dataclass(frozen=True)
class Constant(_Ops):
    value: float


@dataclass(frozen=True)
class VarRef(_Ops):
    name: str


@dataclass(frozen=True)
class Unary(_Ops):
    op: str  # only "-"
    arg: "Expr"


@dataclass(frozen=True)
class Binary(_Ops):
    op: str  # one of BINARY_OPS
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Call(_Ops):
    func: str  # one of BUILTIN_ARITY
    args: tuple["Expr", ...]


Expr = Union[Constant, VarRef, Unary, Binary, Call]


def as_expr(value) -> Expr:
    """Coerce numbers to Constant nodes; pass expression nodes through."""
    if isinstance(value, (Constant, VarRef, Unary, Binary, Call)):
        return value
    if isinstance(value, (int, float)):
        return Constant(float(value))
    raise TypeError(f"cannot use {value!r} in a model expression")


def MIN(a, b) -> Call:
    return Call("MIN", (as_expr(a), as_expr(b)))


def MAX(a, b) -> Call:
    return Call("MAX", (as_expr(a), as_expr(b)))


def CLIP(value, lower, upper) -> Call:
    return Call("CLIP", (as_expr(value), as_expr(lower), as_expr(upper)))


def STEP(height, start) -> Call:
    return Call("STEP", (as_expr(height), as_expr(start)))


def PULSE(height, start, width) -> Call:
    return Call("PULSE", (as_expr(height), as_expr(start), as_expr(width)))


def SMOOTH(value, tau) -> Call:
    return Call("SMOOTH", (as_expr(value), as_expr(tau)))


def DELAY1(value, tau) -> Call:
    return Call("DELAY1", (as_expr(value), as_expr(tau)))


def DELAY3(value, tau) -> Call:
    return Call("DELAY3", (as_expr(value), as_expr(tau)))


def LOOKUP(curve_name: str, value) -> Call:
    return Call("LOOKUP", (VarRef(curve_name), as_expr(value)))


def TIME() -> Call:
    return Call("TIME", ())


def refs(expr: Expr) -> Iterator[str]:
    """Yield every variable name referenced by ``expr``.

    The curve name in a LOOKUP call is a curve reference, not a variable
    reference, and is skipped; use :func:`curve_refs` for those. Time-constant
    arguments of delay builtins are ordinary references.
    """
    if isinstance(expr, VarRef):
        yield expr.name
    elif isinstance(expr, Unary):
        yield from refs(expr.arg)
    elif isinstance(expr, Binary):
        yield from refs(expr.lhs)
        yield from refs(expr.rhs)
    elif isinstance(expr, Call):
        args = expr.args
        if expr.func == "LOOKUP" and args:
            args = args[1:]
        for a in args:
            yield from refs(a)


def curve_refs(expr: Expr) -> Iterator[str]:
    """Yield the curve names used by LOOKUP calls inside ``expr``."""
    if isinstance(expr, Unary):
        yield from curve_refs(expr.arg)
    elif isinstance(expr, Binary):
        yield from curve_refs(expr.lhs)
        yield from curve_refs(expr.rhs)
    elif isinstance(expr, Call):
        if expr.func == "LOOKUP" and expr.args:
            head = expr.args[0]
            if isinstance(head, VarRef):
                yield head.name
        for a in expr.args:
            yield from curve_refs(a)


def walk_calls(expr: Expr) -> Iterator[Call]:
    """Yield every Call node in depth-first, left-to-right order."""
    if isinstance(expr, Unary):
        yield from walk_calls(expr.arg)
    elif isinstance(expr, Binary):
        yield from walk_calls(expr.lhs)
        yield from walk_calls(expr.rhs)
    elif isinstance(expr, Call):
        for a in expr.args:
            yield from walk_calls(a)
        yield expr


def arity_problems(expr: Expr) -> Iterator[str]:
    """Yield a message for every builtin call with a wrong shape."""
    for call in walk_calls(expr):
        expected = BUILTIN_ARITY.get(call.func)
        if expected is None:
            yield f"unknown builtin {call.func}"
        elif len(call.args) != expected:
            yield f"{call.func} expects {expected} argument(s), got {len(call.args)}"
        elif call.func == "LOOKUP" and not isinstance(call.args[0], VarRef):
            yield "LOOKUP expects a curve name as its first argument"


def safe_div(a: float, b: float) -> float:
    """IEEE-style division: a zero denominator yields NaN instead of raising."""
    if b == 0.0:
        return math.nan
    return a / b


def safe_pow(a: float, b: float) -> float:
    """Power with NaN on domain errors (negative base, fractional exponent)."""
    try:
        return math.pow(a, b)
    except (ValueError, OverflowError):
        return math.nan


def clamp(value: float, lower: float, upper: float) -> float:
    if value < lower:
        return lower
    if value > upper:
        return upper
    return value


def eval_expr(
    expr: Expr,
    env: Mapping[str, float],
    *,
    t: float = 0.0,
    curves: Mapping[str, object] | None = None,
    step_strict: bool = False,
) -> float:
    """Evaluate ``expr`` pointwise against a full variable environment.

    Delay builtins pass their input straight through (the equilibrium value of
    a first-order lag equals its input), which is the semantics wanted for
    operating-point work such as link-sign estimation. ``step_strict`` makes
    STEP and PULSE inactive at exactly their start time; the engine uses this
    when initializing delay states so that a shock at the run start does not
    leak into initial conditions.
    """
    if isinstance(expr, Constant):
        return expr.value
    if isinstance(expr, VarRef):
        return env[expr.name]
    if isinstance(expr, Unary):
        return -eval_expr(expr.arg, env, t=t, curves=curves, step_strict=step_strict)
    if isinstance(expr, Binary):
        a = eval_expr(expr.lhs, env, t=t, curves=curves, step_strict=step_strict)
        b = eval_expr(expr.rhs, env, t=t, curves=curves, step_strict=step_strict)
        if expr.op == "+":
            return a + b
        if expr.op == "-":
            return a - b
        if expr.op == "*":
            return a * b
        if expr.op == "/":
            return safe_div(a, b)
        if expr.op == "^":
            return safe_pow(a, b)
        raise DomainError(f"unknown operator {expr.op!r}")
    if isinstance(expr, Call):
        return _eval_call(expr, env, t, curves, step_strict)
    raise DomainError(f"not an expression node: {expr!r}")


def _eval_call(call, env, t, curves, step_strict):
    def ev(node):
        return eval_expr(node, env, t=t, curves=curves, step_strict=step_strict)

    f = call.func
    if f == "TIME":
        return t
    if f == "MIN":
        return min(ev(call.args[0]), ev(call.args[1]))
    if f == "MAX":
        return max(ev(call.args[0]), ev(call.args[1]))
    if f == "CLIP":
        return clamp(ev(call.args[0]), ev(call.args[1]), ev(call.args[2]))
    if f == "STEP":
        height, start = ev(call.args[0]), ev(call.args[1])
        active = t > start if step_strict else t >= start
        return height if active else 0.0
    if f == "PULSE":
        height, start, width = (ev(a) for a in call.args)
        lo = t > start if step_strict else t >= start
        return height if (lo and t < start + width) else 0.0
    if f in DELAY_BUILTINS:
        return ev(call.args[0])
    if f == "LOOKUP":
        name = call.args[0].name
        if curves is None or name not in curves:
            raise DomainError(f"no curve bound for lookup {name!r}")
        from .willingness import curve_value

        return curve_value(curves[name], max(ev(call.args[1]), 0.0))
    raise DomainError(f"unknown builtin {f!r}")


UNITLESS = "1"


def infer_unit(expr: Expr, declared: Mapping[str, str], problems: list[str]) -> str | None:
    """Best-effort unit of ``expr``; None when unknown.

    Only additivity is checked: both operands of ``+`` and ``-`` must carry
    the same unit text, with the unitless tag ``"1"`` compatible with
    anything. Multiplicative results are treated as unknown, which silences
    further checks along that branch by design.
    """
    if isinstance(expr, Constant):
        return UNITLESS
    if isinstance(expr, VarRef):
        unit = declared.get(expr.name, UNITLESS)
        return unit if unit else UNITLESS
    if isinstance(expr, Unary):
        return infer_unit(expr.arg, declared, problems)
    if isinstance(expr, Binary):
        lu = infer_unit(expr.lhs, declared, problems)
        ru = infer_unit(expr.rhs, declared, problems)
        if expr.op in ("+", "-"):
            if lu is None or ru is None:
                return lu if ru is None else ru
            if lu == UNITLESS:
                return ru
            if ru == UNITLESS:
                return lu
            if lu != ru:
                problems.append(f"cannot apply {expr.op!r} to [{lu}] and [{ru}]")
            return lu
        return None
    if isinstance(expr, Call):
        for a in expr.args:
            infer_unit(a, declared, problems)
        if expr.func in DELAY_BUILTINS and expr.args:
            return infer_unit(expr.args[0], declared, [])
        if expr.func == "LOOKUP":
            return UNITLESS
        if expr.func in ("MIN", "MAX") and len(expr.args) == 2:
            lu = infer_unit(expr.args[0], declared, [])
            ru = infer_unit(expr.args[1], declared, [])
            return lu if lu == ru else None
        return None
    return None
