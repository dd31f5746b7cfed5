"""The textual model-definition language.

Grammar (whitespace-insensitive between tokens, ``#`` starts a line comment)::

    model_file := "model" IDENT decl*
    decl   := param | lookup | stock | aux
    param  := "param" IDENT "=" number unit?
    lookup := "lookup" IDENT "=" curve
    curve  := "normal(" "median=" number "," "ratio90=" number ")"
            | "lognormal(" "median=" number "," "ratio90=" number ")"
            | "points(" point ("," point)* ")"
    point  := "(" number "," number ")"
    stock  := "stock" IDENT "=" expr unit? "{" "inflow:" expr "outflow:" expr "}"
    aux    := "aux" IDENT "=" expr unit?
    unit   := "[" UNIT_TEXT "]"
    expr   := usual precedence, loosest to tightest: +,- then *,/ then unary -
              then ^ (right-associative); parentheses; builtin calls
              CALL_NAME "(" args ")" with CALL_NAME one of MIN MAX CLIP STEP
              PULSE SMOOTH DELAY1 DELAY3 LOOKUP TIME
    IDENT  := [a-z_][a-z0-9_]*

``number`` is a decimal with optional exponent; a leading ``-`` is accepted
so every serializable value round-trips. Serialization is canonical: one
declaration per line in the order params, lookups, stocks, auxes; floats
rendered with the fewest significant digits (at least six) that reparse to
the identical value; units omitted when unitless. ``parse(serialize(spec))``
is structurally equal to ``spec``, and serializing twice yields identical
bytes.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from . import expr as ex
from .errors import DynexError, ValidationErrors
from .model import AuxDef, ModelSpec, ParamDef, StockDef, validate_model
from .willingness import (
    LogNormalCdf,
    LogNormalCurveSpec,
    NormalCdf,
    NormalCurveSpec,
    PiecewiseCumulative,
    PointsCurveSpec,
    quantile,
)


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int
    length: int


class ParseError(DynexError):
    def __init__(self, span: SourceSpan, message: str, expected: tuple[str, ...] = ()):
        self.span = span
        self.message = message
        self.expected = expected
        hint = f" (expected {', '.join(expected)})" if expected else ""
        super().__init__(f"line {span.line}, column {span.column}: {message}{hint}")


_NUMBER_RE = re.compile(r"(?:[0-9]+\.?[0-9]*|\.[0-9]+)(?:[eE][+-]?[0-9]+)?")
_WORD_RE = re.compile(r"[a-z_][a-z0-9_]*")
_CALL_RE = re.compile(r"[A-Z][A-Z0-9_]*")
_SYMBOLS = "(){}=,:+-*/^"


@dataclass(frozen=True)
class _Token:
    kind: str  # WORD CALL NUMBER UNIT SYMBOL EOF
    text: str
    span: SourceSpan


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, col, i = 1, 1, 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        span = SourceSpan(line, col, 1)
        if c == "[":
            end = text.find("]", i + 1)
            if end < 0:
                raise ParseError(span, "unterminated unit tag")
            unit = text[i + 1 : end].strip()
            tokens.append(_Token("UNIT", unit, SourceSpan(line, col, end - i + 1)))
            col += end - i + 1
            i = end + 1
            continue
        m = _NUMBER_RE.match(text, i)
        if m and c.isdigit() or (c == "." and m):
            word = m.group(0)
            tokens.append(_Token("NUMBER", word, SourceSpan(line, col, len(word))))
            i = m.end()
            col += len(word)
            continue
        m = _WORD_RE.match(text, i)
        if m:
            word = m.group(0)
            tokens.append(_Token("WORD", word, SourceSpan(line, col, len(word))))
            i = m.end()
            col += len(word)
            continue
        m = _CALL_RE.match(text, i)
        if m:
            word = m.group(0)
            tokens.append(_Token("CALL", word, SourceSpan(line, col, len(word))))
            i = m.end()
            col += len(word)
            continue
        if c in _SYMBOLS:
            tokens.append(_Token("SYMBOL", c, span))
            i += 1
            col += 1
            continue
        raise ParseError(span, f"unexpected character {c!r}")
    tokens.append(_Token("EOF", "", SourceSpan(line, col, 0)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    @property
    def here(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def fail(self, message: str, expected: tuple[str, ...] = ()):
        raise ParseError(self.here.span, message, expected)

    def expect_symbol(self, sym: str) -> _Token:
        tok = self.here
        if tok.kind != "SYMBOL" or tok.text != sym:
            self.fail(f"found {tok.text!r}" if tok.text else "unexpected end of input", (repr(sym),))
        return self.advance()

    def expect_word(self, word: str | None = None) -> _Token:
        tok = self.here
        if tok.kind != "WORD" or (word is not None and tok.text != word):
            what = repr(word) if word else "an identifier"
            self.fail(f"found {tok.text!r}" if tok.text else "unexpected end of input", (what,))
        return self.advance()

    def at_word(self, word: str) -> bool:
        return self.here.kind == "WORD" and self.here.text == word

    def at_symbol(self, sym: str) -> bool:
        return self.here.kind == "SYMBOL" and self.here.text == sym

    # -- grammar --------------------------------------------------------------

    def model_file(self) -> ModelSpec:
        self.expect_word("model")
        name = self.expect_word().text
        params, lookups, stocks, auxes = [], {}, [], []
        while self.here.kind != "EOF":
            if self.at_word("param"):
                params.append(self.param())
            elif self.at_word("lookup"):
                key, curve = self.lookup()
                lookups[key] = curve
            elif self.at_word("stock"):
                stocks.append(self.stock())
            elif self.at_word("aux"):
                auxes.append(self.aux())
            else:
                self.fail(
                    f"found {self.here.text!r}",
                    ("'param'", "'lookup'", "'stock'", "'aux'"),
                )
        return ModelSpec(
            name=name,
            stocks=tuple(stocks),
            auxiliaries=tuple(auxes),
            parameters=tuple(params),
            lookups=lookups,
        )

    def number(self) -> float:
        negative = False
        if self.at_symbol("-"):
            self.advance()
            negative = True
        tok = self.here
        if tok.kind != "NUMBER":
            self.fail(f"found {tok.text!r}" if tok.text else "unexpected end of input", ("a number",))
        self.advance()
        value = float(tok.text)
        return -value if negative else value

    def unit_opt(self) -> str:
        if self.here.kind == "UNIT":
            return self.advance().text or "1"
        return "1"

    def param(self) -> ParamDef:
        self.expect_word("param")
        name = self.expect_word().text
        self.expect_symbol("=")
        value = self.number()
        return ParamDef(name, value, self.unit_opt())

    def lookup(self):
        self.expect_word("lookup")
        name = self.expect_word().text
        self.expect_symbol("=")
        kind = self.expect_word().text
        if kind in ("normal", "lognormal"):
            self.expect_symbol("(")
            self.expect_word("median")
            self.expect_symbol("=")
            median = self.number()
            self.expect_symbol(",")
            self.expect_word("ratio90")
            self.expect_symbol("=")
            ratio90 = self.number()
            self.expect_symbol(")")
            cls = NormalCurveSpec if kind == "normal" else LogNormalCurveSpec
            return name, cls(median, ratio90)
        if kind == "points":
            self.expect_symbol("(")
            pts = [self.point()]
            while self.at_symbol(","):
                self.advance()
                pts.append(self.point())
            self.expect_symbol(")")
            return name, PointsCurveSpec(tuple(pts))
        self.fail(f"found {kind!r}", ("'normal'", "'lognormal'", "'points'"))

    def point(self) -> tuple[float, float]:
        self.expect_symbol("(")
        r = self.number()
        self.expect_symbol(",")
        f = self.number()
        self.expect_symbol(")")
        return (r, f)

    def stock(self) -> StockDef:
        self.expect_word("stock")
        name = self.expect_word().text
        self.expect_symbol("=")
        initial = self.expr()
        unit = self.unit_opt()
        self.expect_symbol("{")
        self.expect_word("inflow")
        self.expect_symbol(":")
        inflow = self.expr()
        self.expect_word("outflow")
        self.expect_symbol(":")
        outflow = self.expr()
        self.expect_symbol("}")
        return StockDef(name, initial, inflow, outflow, unit)

    def aux(self) -> AuxDef:
        self.expect_word("aux")
        name = self.expect_word().text
        self.expect_symbol("=")
        node = self.expr()
        return AuxDef(name, node, self.unit_opt())

    def expr(self) -> ex.Expr:
        node = self.multiplicative()
        while self.at_symbol("+") or self.at_symbol("-"):
            op = self.advance().text
            node = ex.Binary(op, node, self.multiplicative())
        return node

    def multiplicative(self) -> ex.Expr:
        node = self.unary()
        while self.at_symbol("*") or self.at_symbol("/"):
            op = self.advance().text
            node = ex.Binary(op, node, self.unary())
        return node

    def unary(self) -> ex.Expr:
        if self.at_symbol("-"):
            self.advance()
            node = self.unary()
            # negated literals normalize to negative constants so that
            # serialized values round-trip structurally
            if isinstance(node, ex.Constant):
                return ex.Constant(-node.value)
            return ex.Unary("-", node)
        return self.power()

    def power(self) -> ex.Expr:
        node = self.primary()
        if self.at_symbol("^"):
            self.advance()
            return ex.Binary("^", node, self.unary())
        return node

    def primary(self) -> ex.Expr:
        tok = self.here
        if tok.kind == "NUMBER":
            self.advance()
            return ex.Constant(float(tok.text))
        if tok.kind == "WORD":
            self.advance()
            return ex.VarRef(tok.text)
        if tok.kind == "CALL":
            if tok.text not in ex.BUILTIN_ARITY:
                self.fail(f"unknown builtin {tok.text}")
            self.advance()
            return self.call(tok.text)
        if tok.kind == "SYMBOL" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect_symbol(")")
            return node
        self.fail(
            f"found {tok.text!r}" if tok.text else "unexpected end of input",
            ("an expression",),
        )

    def call(self, func: str) -> ex.Call:
        self.expect_symbol("(")
        args: list[ex.Expr] = []
        if func == "LOOKUP":
            args.append(ex.VarRef(self.expect_word().text))
            self.expect_symbol(",")
            args.append(self.expr())
        elif not self.at_symbol(")"):
            args.append(self.expr())
            while self.at_symbol(","):
                self.advance()
                args.append(self.expr())
        self.expect_symbol(")")
        return ex.Call(func, tuple(args))


def parse_model(text: str, validate: bool = True) -> ModelSpec:
    """Parse model text; with ``validate`` (the default), raise on a bad model."""
    parser = _Parser(text)
    spec = parser.model_file()
    if validate:
        report = validate_model(spec)
        if not report.ok:
            raise ValidationErrors(report)
    return spec


# -- serialization ------------------------------------------------------------


def render_number(value: float) -> str:
    """Fewest significant digits (at least 6) that reparse to the same float."""
    value = float(value)
    if not math.isfinite(value):
        raise DynexError(f"cannot serialize non-finite number {value!r}")
    if value == 0.0:
        return "0"
    for precision in range(6, 18):
        text = format(value, f".{precision}g")
        if float(text) == value:
            return text
    return repr(value)  # pragma: no cover


# Operator precedence levels for parenthesis-free printing. Each operand slot
# states the minimum level a child must have to appear bare.
_PREC = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_SLOTS = {"+": (10, 11), "-": (10, 11), "*": (20, 21), "/": (20, 21), "^": (50, 30)}
_UNARY_PREC = 30
_ATOM_PREC = 100


def _expr_text(node: ex.Expr, needed: int = 0) -> str:
    if isinstance(node, ex.Constant):
        text = render_number(node.value)
        if text.startswith("-"):  # negative constants print as unary minus
            return _wrap(f"-{text[1:]}", _UNARY_PREC, needed)
        return text
    if isinstance(node, ex.VarRef):
        return node.name
    if isinstance(node, ex.Unary):
        return _wrap("-" + _expr_text(node.arg, _UNARY_PREC + 1), _UNARY_PREC, needed)
    if isinstance(node, ex.Binary):
        left_needed, right_needed = _SLOTS[node.op]
        text = (
            f"{_expr_text(node.lhs, left_needed)} {node.op} "
            f"{_expr_text(node.rhs, right_needed)}"
        )
        return _wrap(text, _PREC[node.op], needed)
    if isinstance(node, ex.Call):
        if node.func == "LOOKUP":
            inner = [node.args[0].name] + [_expr_text(a) for a in node.args[1:]]
        else:
            inner = [_expr_text(a) for a in node.args]
        return f"{node.func}({', '.join(inner)})"
    raise DynexError(f"cannot serialize node {node!r}")


def _wrap(text: str, prec: int, needed: int) -> str:
    return f"({text})" if prec < needed else text


def _unit_suffix(unit: str) -> str:
    return "" if unit in ("", "1") else f" [{unit}]"


def _curve_text(curve) -> str:
    if isinstance(curve, (NormalCdf, LogNormalCdf)):
        kind = "normal" if isinstance(curve, NormalCdf) else "lognormal"
        median, ratio90 = quantile(curve, 0.5), quantile(curve, 0.9)
        return f"{kind}(median={render_number(median)}, ratio90={render_number(ratio90)})"
    if isinstance(curve, NormalCurveSpec):
        return f"normal(median={render_number(curve.median)}, ratio90={render_number(curve.ratio90)})"
    if isinstance(curve, LogNormalCurveSpec):
        return f"lognormal(median={render_number(curve.median)}, ratio90={render_number(curve.ratio90)})"
    if isinstance(curve, (PointsCurveSpec, PiecewiseCumulative)):
        pts = ", ".join(
            f"({render_number(r)}, {render_number(f)})" for r, f in curve.points
        )
        return f"points({pts})"
    raise DynexError(f"cannot serialize curve {curve!r}")


def serialize_model(spec: ModelSpec) -> str:
    """Canonical text form; stable section order, one declaration per line.

    Curves held as declarations round-trip exactly; curves held as realized
    distribution objects are emitted through their median/ratio90 quantiles.
    """
    lines = [f"model {spec.name}"]
    for p in spec.parameters:
        value = render_number(p.value)
        lines.append(f"param {p.id} = {value}{_unit_suffix(p.unit)}")
    for name, curve in spec.lookups.items():
        lines.append(f"lookup {name} = {_curve_text(curve)}")
    for s in spec.stocks:
        lines.append(
            f"stock {s.id} = {_expr_text(s.initial)}{_unit_suffix(s.unit)} "
            f"{{ inflow: {_expr_text(s.inflow)} outflow: {_expr_text(s.outflow)} }}"
        )
    for a in spec.auxiliaries:
        lines.append(f"aux {a.id} = {_expr_text(a.expr)}{_unit_suffix(a.unit)}")
    return "\n".join(lines) + "\n"
