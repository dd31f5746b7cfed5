"""Declarative stock-flow models: variables, equations, validation, causal graph.

A :class:`ModelSpec` is a language-neutral description of a stock-flow model.
It is immutable after construction and safe to share across workers; every
operation here is a pure function of its inputs.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from . import expr as ex
from .errors import ConfigError, CycleError, NonFiniteDerivative, UnknownVariable

IDENT_RE = re.compile(r"[a-z_][a-z0-9_]*\Z")

# Minimum magnitude for a finite-difference slope to count as a causal link.
EDGE_EPS = 1e-12


def check_ident(name: str) -> str:
    if not IDENT_RE.match(name or ""):
        raise ConfigError(f"invalid variable id {name!r}: expected [a-z_][a-z0-9_]*")
    return name


@dataclass(frozen=True)
class StockDef:
    """An accumulating state variable with one inflow and one outflow rate."""

    id: str
    initial: ex.Expr
    inflow: ex.Expr
    outflow: ex.Expr
    unit: str = "1"

    def __post_init__(self):
        check_ident(self.id)


@dataclass(frozen=True)
class AuxDef:
    """An instantaneous variable computed algebraically every evaluation."""

    id: str
    expr: ex.Expr
    unit: str = "1"

    def __post_init__(self):
        check_ident(self.id)


@dataclass(frozen=True)
class ParamDef:
    """A calibration constant, optionally restricted to an admissible range."""

    id: str
    value: float
    unit: str = "1"
    admissible_range: tuple[float, float] = (-math.inf, math.inf)

    def __post_init__(self):
        check_ident(self.id)
        lo, hi = self.admissible_range
        if math.isnan(self.value):
            raise ConfigError(f"parameter {self.id} has NaN value")
        if not lo <= self.value <= hi:
            raise ConfigError(
                f"parameter {self.id}={self.value} outside admissible range [{lo}, {hi}]"
            )


@dataclass(frozen=True)
class ModelSpec:
    """A complete stock-flow model. Treat as immutable after construction."""

    name: str
    stocks: tuple[StockDef, ...] = ()
    auxiliaries: tuple[AuxDef, ...] = ()
    parameters: tuple[ParamDef, ...] = ()
    lookups: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "stocks", tuple(self.stocks))
        object.__setattr__(self, "auxiliaries", tuple(self.auxiliaries))
        object.__setattr__(self, "parameters", tuple(self.parameters))

    def stock_ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.stocks)

    def aux_ids(self) -> tuple[str, ...]:
        return tuple(a.id for a in self.auxiliaries)

    def param_ids(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.parameters)

    def all_ids(self) -> tuple[str, ...]:
        return self.stock_ids() + self.aux_ids() + self.param_ids()

    def param_values(self) -> dict[str, float]:
        return {p.id: float(p.value) for p in self.parameters}

    def units(self) -> dict[str, str]:
        out = {s.id: s.unit for s in self.stocks}
        out.update({a.id: a.unit for a in self.auxiliaries})
        out.update({p.id: p.unit for p in self.parameters})
        return out


@dataclass(frozen=True)
class Finding:
    severity: str  # "error" | "warning"
    location: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...] = ()

    @property
    def errors(self) -> tuple[Finding, ...]:
        return tuple(f for f in self.findings if f.severity == "error")

    @property
    def warnings(self) -> tuple[Finding, ...]:
        return tuple(f for f in self.findings if f.severity == "warning")

    @property
    def ok(self) -> bool:
        return not self.errors


def _exprs_of(spec: ModelSpec) -> Iterable[tuple[str, str, ex.Expr]]:
    """(location, kind, expr) for every equation in the spec."""
    for a in spec.auxiliaries:
        yield f"aux {a.id}", "aux", a.expr
    for s in spec.stocks:
        yield f"stock {s.id} initial", "initial", s.initial
        yield f"stock {s.id} inflow", "flow", s.inflow
        yield f"stock {s.id} outflow", "flow", s.outflow


def validate_model(spec: ModelSpec) -> ValidationReport:
    """Check a spec for structural coherence; findings are data, not failures.

    The error-free conditions: no undeclared references, no algebraic cycle
    among auxiliaries (delay inputs count as instantaneous dependencies since
    they set initial conditions; only stocks break cycles), stock initial
    expressions reference parameters only, builtin arities are respected, and
    both operands of ``+``/``-`` carry identical unit text (the unitless tag
    ``"1"`` matches anything). Validation is idempotent and side-effect free.
    """
    findings: list[Finding] = []
    err = lambda loc, msg: findings.append(Finding("error", loc, msg))

    declared = set()
    for vid in spec.all_ids():
        if vid in declared:
            err(vid, f"duplicate variable id {vid}")
        declared.add(vid)

    param_ids = set(spec.param_ids())
    units = spec.units()

    for loc, kind, node in _exprs_of(spec):
        for name in dict.fromkeys(ex.refs(node)):
            if name not in declared:
                err(loc, f"undeclared reference {name}")
            elif kind == "initial" and name not in param_ids:
                err(loc, f"stock initial may reference parameters only, not {name}")
        for msg in ex.arity_problems(node):
            err(loc, msg)
        if kind == "initial":
            for call in ex.walk_calls(node):
                if call.func in ex.DELAY_BUILTINS:
                    err(loc, f"stock initial may not contain {call.func}")
        for cname in dict.fromkeys(ex.curve_refs(node)):
            if cname not in spec.lookups:
                err(loc, f"unknown lookup curve {cname}")
        problems: list[str] = []
        ex.infer_unit(node, units, problems)
        for msg in problems:
            err(loc, msg)

    findings.extend(_cycle_findings(spec))
    return ValidationReport(tuple(findings))


def _aux_dependencies(spec: ModelSpec) -> dict[str, list[str]]:
    """aux id -> auxiliary ids it references (declaration order preserved)."""
    aux_ids = set(spec.aux_ids())
    deps = {}
    for a in spec.auxiliaries:
        deps[a.id] = [n for n in dict.fromkeys(ex.refs(a.expr)) if n in aux_ids]
    return deps


def _cycle_findings(spec: ModelSpec) -> list[Finding]:
    deps = _aux_dependencies(spec)
    findings = []
    for scc in _sccs(deps):
        if len(scc) == 1:
            node = scc[0]
            if node in deps[node]:
                findings.append(
                    Finding("error", f"aux {node}", f"algebraic cycle {node}→{node}")
                )
        else:
            path = _cycle_path(deps, scc)
            arrow = "→".join(path)
            findings.append(Finding("error", f"aux {path[0]}", f"algebraic cycle {arrow}"))
    return findings


def _sccs(deps: Mapping[str, list[str]]) -> list[list[str]]:
    """Tarjan strongly connected components, iterative, in a stable order."""
    index = {}
    low = {}
    on_stack = set()
    stack: list[str] = []
    sccs: list[list[str]] = []
    counter = [0]

    for root in deps:
        if root in index:
            continue
        work = [(root, iter(deps[root]))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for nxt in it:
                if nxt not in index:
                    index[nxt] = low[nxt] = counter[0]
                    counter[0] += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(deps[nxt])))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                sccs.append(comp)
    return sccs


def _cycle_path(deps: Mapping[str, list[str]], scc: list[str]) -> list[str]:
    """One concrete cycle inside a nontrivial SCC, closed back to its start."""
    members = set(scc)
    start = min(scc)
    path = [start]
    seen = {start}
    node = start
    while True:
        nxt = next(n for n in deps[node] if n in members)
        if nxt == start:
            return path + [start]
        if nxt in seen:
            i = path.index(nxt)
            return path[i:] + [nxt]
        path.append(nxt)
        seen.add(nxt)
        node = nxt


def evaluation_order(spec: ModelSpec) -> tuple[str, ...]:
    """Topological order of the auxiliary ids, ties broken by declaration order.

    Every auxiliary appears after all auxiliaries it references, so a single
    left-to-right pass resolves every value. Deterministic by construction.
    """
    deps = _aux_dependencies(spec)
    decl_index = {a.id: i for i, a in enumerate(spec.auxiliaries)}
    remaining_deps = {k: set(v) for k, v in deps.items()}
    dependents: dict[str, list[str]] = {k: [] for k in deps}
    for node, ds in deps.items():
        for d in ds:
            dependents[d].append(node)

    ready = sorted((k for k, v in remaining_deps.items() if not v), key=decl_index.get)
    order: list[str] = []
    while ready:
        node = ready.pop(0)
        order.append(node)
        changed = False
        for dep in dependents[node]:
            remaining_deps[dep].discard(node)
            if not remaining_deps[dep]:
                ready.append(dep)
                changed = True
        if changed:
            ready.sort(key=decl_index.get)
    if len(order) != len(deps):
        stuck = sorted(set(deps) - set(order))
        raise CycleError(f"algebraic cycle among auxiliaries: {', '.join(stuck)}")
    return tuple(order)


@dataclass(frozen=True)
class SignedDigraph:
    """A causal graph: nodes and (source, target, sign) edges, sign in {-1, +1}."""

    nodes: frozenset[str]
    edges: tuple[tuple[str, str, int], ...]

    def __post_init__(self):
        pairs = [(a, b) for a, b, _ in self.edges]
        if len(pairs) != len(set(pairs)):
            raise ConfigError("duplicate (from, to) edge in signed digraph")
        for a, b, s in self.edges:
            if a not in self.nodes or b not in self.nodes:
                raise ConfigError(f"edge endpoint not a node: {a}->{b}")
            if s not in (-1, 1):
                raise ConfigError(f"edge sign must be -1 or +1, got {s}")

    def successors(self) -> dict[str, list[tuple[str, int]]]:
        adj: dict[str, list[tuple[str, int]]] = {n: [] for n in sorted(self.nodes)}
        for a, b, s in sorted(self.edges):
            adj[a].append((b, s))
        return adj

    def sign_of(self, source: str, target: str) -> int | None:
        for a, b, s in self.edges:
            if a == source and b == target:
                return s
        return None


def signed_graph(
    spec: ModelSpec,
    operating_point: Mapping[str, float],
    t: float = 0.0,
) -> SignedDigraph:
    """Extract the signed causal graph at an operating point.

    For every direct dependency of a variable's defining expression on a
    variable x, the edge sign is the sign of the central finite difference
    with perturbation ``h = max(1e-6, 1e-6 * |x|)``; slopes below 1e-12 in
    magnitude are omitted. A stock's defining expression is its net flow
    (inflow minus outflow), so a variable appearing in the inflow contributes
    a positive edge onto the stock and one in the outflow a negative edge.
    Delay builtins pass their input through, which assigns the through-delay
    link the sign it has at equilibrium.

    Parameter values missing from ``operating_point`` default to the spec's
    values; stocks and auxiliaries must all be present. No variable should sit
    exactly at a kink of a piecewise builtin.
    """
    env = dict(spec.param_values())
    env.update({k: float(v) for k, v in operating_point.items()})
    missing = [v for v in spec.stock_ids() + spec.aux_ids() if v not in env]
    if missing:
        raise UnknownVariable(f"operating point missing variables: {', '.join(missing)}")
    for k, v in env.items():
        if not math.isfinite(v):
            raise ConfigError(f"operating point value for {k} is not finite")
    from .willingness import realize_curve

    curves = {name: realize_curve(v) for name, v in spec.lookups.items()}

    targets: list[tuple[str, ex.Expr]] = [(a.id, a.expr) for a in spec.auxiliaries]
    targets += [(s.id, ex.Binary("-", s.inflow, s.outflow)) for s in spec.stocks]

    edges = []
    for target, node in targets:
        for x in dict.fromkeys(ex.refs(node)):
            slope = _central_diff(node, env, x, t, curves, target)
            if abs(slope) >= EDGE_EPS:
                edges.append((x, target, 1 if slope > 0 else -1))
    nodes = frozenset(spec.all_ids())
    return SignedDigraph(nodes, tuple(sorted(edges)))


def _central_diff(node, env, x, t, curves, target):
    x0 = env[x]
    h = max(1e-6, 1e-6 * abs(x0))
    local = dict(env)
    local[x] = x0 + h
    hi = ex.eval_expr(node, local, t=t, curves=curves)
    local[x] = x0 - h
    lo = ex.eval_expr(node, local, t=t, curves=curves)
    if not (math.isfinite(hi) and math.isfinite(lo)):
        raise NonFiniteDerivative(
            f"non-finite value while perturbing {x} in the definition of {target}"
        )
    return (hi - lo) / (2.0 * h)
