"""Deterministic fixed-step integration of stock-flow models.

The engine compiles a :class:`~dynex.model.ModelSpec` into plain Python
functions (one derivative/readout pass, one initialization pass) and advances
the state with forward Euler or classic RK4. Delay and smoothing constructs
(SMOOTH, DELAY1, DELAY3) are hidden first-order stocks that integrate with the
same scheme as declared stocks, so convergence order is uniform. In this
engine DELAY1 is the same first-order exponential lag as SMOOTH; DELAY3 is a
cascade of three stages with time constant tau/3 each.

Determinism: identical inputs produce bit-identical trajectories. There is no
adaptive stepping, no hidden global state, and saved times are computed as
``t_start + k*dt`` rather than accumulated.

Non-finite policy: if a stock, delay level, or saved auxiliary becomes NaN or
infinite the run aborts, the trajectory is truncated at the last fully finite
saved row, and :class:`NonFiniteState` is raised carrying that trajectory.

Initialization: stock initials are evaluated from parameters; delay states
start at the initial value of their input expression. STEP and PULSE are
treated as inactive at exactly the run start during this initialization pass
(a shock scheduled at ``t_start`` is a shock, not a precondition), so a
SMOOTH of ``STEP(1, 0)`` starts at 0 and responds from the first step on.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import expr as ex
from .errors import (
    ConfigError,
    NonFiniteState,
    NotConverged,
    UnknownVariable,
    ValidationErrors,
)
from .model import ModelSpec, evaluation_order, validate_model
from .willingness import curve_value, realize_curve

_TIME_RTOL = 1e-9


def _time_tol(t: float) -> float:
    return _TIME_RTOL * max(1.0, abs(t))


class IntegratorKind(enum.Enum):
    EULER = "euler"
    RK4 = "rk4"


@dataclass(frozen=True)
class RunConfig:
    """Everything a single simulation run needs besides the model itself.

    ``overrides`` replace parameter values for the whole run (including stock
    initials). ``events`` are (time, parameter id, new value) triples applied
    at the first step boundary at or after their time, before that step's
    derivative evaluations. ``floors`` are (stock id, minimum, from time)
    triples enforced by clamping the stock at every step boundary from the
    given time on; scenario policies use this for wage floors.
    """

    t_end: float
    t_start: float = 0.0
    dt: float = 0.125
    save_every: int = 1
    integrator: IntegratorKind = IntegratorKind.RK4
    overrides: Mapping[str, float] = field(default_factory=dict)
    events: tuple[tuple[float, str, float], ...] = ()
    floors: tuple[tuple[str, float, float], ...] = ()

    def n_steps(self) -> int:
        span = self.t_end - self.t_start
        ratio = span / self.dt
        n = round(ratio)
        if abs(ratio - n) > 1e-9 * max(1.0, abs(ratio)):
            raise ConfigError(
                f"(t_end - t_start)/dt = {ratio} is not a whole number of steps"
            )
        return int(n)

    def check(self) -> None:
        if not (self.dt > 0):
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.t_end < self.t_start:
            raise ConfigError(f"t_end {self.t_end} precedes t_start {self.t_start}")
        if not (isinstance(self.save_every, int) and self.save_every >= 1):
            raise ConfigError(f"save_every must be a positive integer, got {self.save_every}")
        if not isinstance(self.integrator, IntegratorKind):
            raise ConfigError(f"unknown integrator {self.integrator!r}")
        self.n_steps()
        for when, _, _ in self.events:
            if when < self.t_start - _time_tol(when) or when > self.t_end + _time_tol(when):
                raise ConfigError(f"event time {when} outside [{self.t_start}, {self.t_end}]")


@dataclass
class Trajectory:
    """Time-indexed record of every model variable over one run."""

    times: np.ndarray
    values: dict[str, np.ndarray]

    def __getitem__(self, var: str) -> np.ndarray:
        try:
            return self.values[var]
        except KeyError:
            raise UnknownVariable(f"variable {var!r} not recorded") from None

    def __contains__(self, var: str) -> bool:
        return var in self.values

    @property
    def n_rows(self) -> int:
        return len(self.times)

    def final(self) -> dict[str, float]:
        return {k: float(v[-1]) for k, v in self.values.items()}

    def at_time(self, t: float) -> dict[str, float]:
        idx = int(np.argmin(np.abs(self.times - t)))
        if abs(float(self.times[idx]) - t) > _time_tol(t):
            raise ConfigError(f"no saved row at time {t}")
        return {k: float(v[idx]) for k, v in self.values.items()}


class DelayKind(enum.Enum):
    SMOOTH = "SMOOTH"
    DELAY1 = "DELAY1"
    DELAY3 = "DELAY3"


_DELAY_LEVELS = {DelayKind.SMOOTH: 1, DelayKind.DELAY1: 1, DelayKind.DELAY3: 3}


@dataclass(frozen=True)
class DelayState:
    """Descriptor for one hidden delay stock discovered during compilation."""

    kind: DelayKind
    owner: str  # id of the variable whose equation contains the call
    first_slot: int  # offset into the delay-level segment of the state vector

    @property
    def n_levels(self) -> int:
        return _DELAY_LEVELS[self.kind]


class _Codegen:
    """Emit the dynamics and init functions for one spec.

    Delay instances are allocated in the order the emitter encounters them;
    both generated functions share one walk order (auxiliaries in evaluation
    order, then stock flows in declaration order), so slot numbering is
    deterministic and consistent.
    """

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        self.stock_index = {s.id: i for i, s in enumerate(spec.stocks)}
        self.param_index = {p.id: i for i, p in enumerate(spec.parameters)}
        self.aux_by_id = {a.id: a for a in spec.auxiliaries}
        self.order = evaluation_order(spec)
        self.curve_index: dict[str, int] = {}
        self.delays: list[DelayState] = []
        self.delay_records: list[tuple[DelayState, str, str]] = []  # with code, per mode
        self.n_stocks = len(spec.stocks)
        self._replay_idx = 0

    # -- expression emission -------------------------------------------------

    def emit(self, node, mode: str, stmts: list[str] | None = None, alloc: bool = True) -> str:
        if isinstance(node, ex.Constant):
            v = node.value
            if v != v or v in (math.inf, -math.inf):
                raise ConfigError("non-finite constant in model equation")
            return repr(float(v))
        if isinstance(node, ex.VarRef):
            return f"v_{node.name}"
        if isinstance(node, ex.Unary):
            return f"(-{self.emit(node.arg, mode, stmts, alloc)})"
        if isinstance(node, ex.Binary):
            a = self.emit(node.lhs, mode, stmts, alloc)
            b = self.emit(node.rhs, mode, stmts, alloc)
            if node.op == "/":
                return f"_div({a}, {b})"
            if node.op == "^":
                return f"_pow({a}, {b})"
            return f"({a} {node.op} {b})"
        if isinstance(node, ex.Call):
            return self._emit_call(node, mode, stmts, alloc)
        raise ConfigError(f"cannot compile node {node!r}")

    def _emit_call(self, node, mode, stmts, alloc):
        f = node.func
        if f == "TIME":
            return "t"
        if f in ("MIN", "MAX"):
            a = self.emit(node.args[0], mode, stmts, alloc)
            b = self.emit(node.args[1], mode, stmts, alloc)
            return f"{'min' if f == 'MIN' else 'max'}({a}, {b})"
        if f == "CLIP":
            a, lo, hi = (self.emit(x, mode, stmts, alloc) for x in node.args)
            return f"_clamp({a}, {lo}, {hi})"
        if f == "STEP":
            h = self.emit(node.args[0], mode, stmts, alloc)
            t0 = self.emit(node.args[1], mode, stmts, alloc)
            cmp = ">" if mode == "init" else ">="
            return f"(({h}) if t {cmp} ({t0}) else 0.0)"
        if f == "PULSE":
            h = self.emit(node.args[0], mode, stmts, alloc)
            t0 = self.emit(node.args[1], mode, stmts, alloc)
            w = self.emit(node.args[2], mode, stmts, alloc)
            cmp = "<" if mode == "init" else "<="
            return f"(({h}) if (({t0}) {cmp} t and t < ({t0}) + ({w})) else 0.0)"
        if f == "LOOKUP":
            name = node.args[0].name
            idx = self.curve_index.setdefault(name, len(self.curve_index))
            arg = self.emit(node.args[1], mode, stmts, alloc)
            return f"_lk{idx}({arg})"
        if f in ex.DELAY_BUILTINS:
            return self._emit_delay(node, mode, stmts, alloc)
        raise ConfigError(f"unknown builtin {f}")

    def _emit_delay(self, node, mode, stmts, alloc):
        input_code = self.emit(node.args[0], mode, stmts, alloc)
        tau_code = self.emit(node.args[1], mode, stmts, alloc)
        if alloc:
            first = sum(d.n_levels for d in self.delays)
            desc = DelayState(DelayKind(node.func), self._owner, first)
            self.delays.append(desc)
        else:
            desc = self.delays[self._replay_idx]
            self._replay_idx += 1
        slot = desc.first_slot
        if mode == "dynamics":
            self.delay_records.append((desc, input_code, tau_code))
            out_slot = self.n_stocks + slot + desc.n_levels - 1
            return f"s[{out_slot}]"
        # init: level(s) start at the input's current value
        name = f"_dl{slot}"
        stmts.append(f"{name} = {input_code}")
        stmts.append(f"_taus.append({tau_code})")
        stmts.append(f"_levels.extend(({name},) * {desc.n_levels})")
        return name

    # -- whole-function emission ----------------------------------------------

    def _walk_equations(self, mode: str, alloc: bool) -> tuple[list[str], dict[str, str]]:
        """Aux assignment lines in evaluation order plus flow/initial codes."""
        self._replay_idx = 0
        lines: list[str] = []
        flows: dict[str, str] = {}
        for aux_id in self.order:
            self._owner = aux_id
            aux = self.aux_by_id[aux_id]
            stmts: list[str] = []
            code = self.emit(aux.expr, mode, stmts, alloc)
            lines.extend(stmts)
            lines.append(f"v_{aux_id} = {code}")
        for s in self.spec.stocks:
            self._owner = s.id
            for tag, node in (("in", s.inflow), ("out", s.outflow)):
                stmts = []
                code = self.emit(node, mode, stmts, alloc)
                lines.extend(stmts)
                flows[f"{s.id}:{tag}"] = code
        return lines, flows

    def build(self):
        spec = self.spec
        src = ["def _dynamics(t, s, p):"]
        body: list[str] = []
        for pid, i in self.param_index.items():
            body.append(f"v_{pid} = p[{i}]")
        for sid, i in self.stock_index.items():
            body.append(f"v_{sid} = s[{i}]")
        aux_lines, flows = self._walk_equations("dynamics", alloc=True)
        body.extend(aux_lines)
        rate_names = []
        for i, s in enumerate(spec.stocks):
            body.append(f"_r{i} = ({flows[s.id + ':in']}) - ({flows[s.id + ':out']})")
            rate_names.append(f"_r{i}")
        for j, (desc, input_code, tau_code) in enumerate(self.delay_records):
            base = self.n_stocks + desc.first_slot
            if desc.kind is DelayKind.DELAY3:
                body.append(f"_tc{j} = ({tau_code}) / 3.0")
                body.append(f"_q{j}a = _div(({input_code}) - s[{base}], _tc{j})")
                body.append(f"_q{j}b = _div(s[{base}] - s[{base + 1}], _tc{j})")
                body.append(f"_q{j}c = _div(s[{base + 1}] - s[{base + 2}], _tc{j})")
                rate_names.extend((f"_q{j}a", f"_q{j}b", f"_q{j}c"))
            else:
                body.append(f"_q{j} = _div(({input_code}) - s[{base}], ({tau_code}))")
                rate_names.append(f"_q{j}")
        aux_tuple = ", ".join(f"v_{a.id}" for a in spec.auxiliaries)
        aux_tuple = f"({aux_tuple},)" if spec.auxiliaries else "()"
        rates = ", ".join(rate_names)
        rates = f"({rates},)" if rate_names else "()"
        body.append(f"return {aux_tuple}, {rates}")
        src.extend("    " + line for line in body)

        src.append("def _init(t, p):")
        body = ["_levels = []", "_taus = []"]
        for pid, i in self.param_index.items():
            body.append(f"v_{pid} = p[{i}]")
        for i, s in enumerate(spec.stocks):
            body.append(f"v_{s.id} = {self.emit(s.initial, 'init', [], alloc=False)}")
        init_lines, _ = self._walk_equations("init", alloc=False)
        body.extend(init_lines)
        stocks_tuple = ", ".join(f"v_{s.id}" for s in spec.stocks)
        stocks_tuple = f"({stocks_tuple},)" if spec.stocks else "()"
        body.append(f"return {stocks_tuple}, tuple(_levels), tuple(_taus)")
        src.extend("    " + line for line in body)
        return "\n".join(src)


@dataclass
class CompiledModel:
    """A spec compiled to fast dynamics/init callables plus metadata."""

    spec: ModelSpec
    stock_names: tuple[str, ...]
    aux_names: tuple[str, ...]
    param_names: tuple[str, ...]
    delays: tuple[DelayState, ...]
    source: str
    _dynamics: object
    _init: object

    @property
    def recorded(self) -> tuple[str, ...]:
        return self.stock_names + self.aux_names + self.param_names

    def default_params(self) -> list[float]:
        return [float(p.value) for p in self.spec.parameters]


def compile_model(spec: ModelSpec) -> CompiledModel:
    """Validate and compile a spec; raises ValidationErrors on a bad model."""
    report = validate_model(spec)
    if not report.ok:
        raise ValidationErrors(report)
    gen = _Codegen(spec)
    source = gen.build()
    namespace = {
        "_div": ex.safe_div,
        "_pow": ex.safe_pow,
        "_clamp": ex.clamp,
        "min": min,
        "max": max,
    }
    for name, idx in sorted(gen.curve_index.items(), key=lambda kv: kv[1]):
        curve = realize_curve(spec.lookups[name])
        namespace[f"_lk{idx}"] = _make_lookup(curve)
    exec(compile(source, f"<dynex:{spec.name}>", "exec"), namespace)
    return CompiledModel(
        spec=spec,
        stock_names=spec.stock_ids(),
        aux_names=spec.aux_ids(),
        param_names=spec.param_ids(),
        delays=tuple(gen.delays),
        source=source,
        _dynamics=namespace["_dynamics"],
        _init=namespace["_init"],
    )


def _make_lookup(curve):
    def lk(x: float) -> float:
        return curve_value(curve, x if x > 0.0 else 0.0)

    return lk


def _as_compiled(model) -> CompiledModel:
    return model if isinstance(model, CompiledModel) else compile_model(model)


def _prepare_params(compiled: CompiledModel, cfg: RunConfig) -> list[float]:
    p = compiled.default_params()
    index = {name: i for i, name in enumerate(compiled.param_names)}
    for name, value in cfg.overrides.items():
        if name not in index:
            raise ConfigError(f"override target {name!r} is not a parameter")
        p[index[name]] = float(value)
    for _, name, _ in cfg.events:
        if name not in index:
            raise ConfigError(f"event target {name!r} is not a parameter")
    return p


def simulate(model: ModelSpec | CompiledModel, cfg: RunConfig) -> Trajectory:
    """Run one deterministic simulation and record every variable.

    Rows are saved at every ``save_every``-th step boundary plus the final
    boundary. Events and floors are applied at a boundary before that step's
    derivative evaluations, so a saved row reflects parameters already in
    force at its time.
    """
    compiled = _as_compiled(model)
    cfg.check()
    n_steps = cfg.n_steps()
    p = _prepare_params(compiled, cfg)
    param_index = {name: i for i, name in enumerate(compiled.param_names)}
    stock_index = {name: i for i, name in enumerate(compiled.stock_names)}

    events = sorted(
        ((float(t0), name, float(val)) for t0, name, val in cfg.events),
        key=lambda e: e[0],
    )
    floors = []
    for var, minimum, from_time in cfg.floors:
        if var not in stock_index:
            raise ConfigError(f"floor target {var!r} is not a stock")
        floors.append((stock_index[var], float(minimum), float(from_time)))

    next_event = 0

    def apply_events(t):
        nonlocal next_event
        while next_event < len(events) and events[next_event][0] <= t + _time_tol(t):
            _, name, value = events[next_event]
            p[param_index[name]] = value
            next_event += 1

    def apply_floors(t, state):
        for idx, minimum, from_time in floors:
            if t >= from_time - _time_tol(from_time) and state[idx] < minimum:
                state[idx] = minimum

    def apply_boundary(t, state):
        apply_events(t)
        apply_floors(t, state)

    dynamics = compiled._dynamics
    apply_events(cfg.t_start)  # events at or before t_start precede initialization
    stocks0, levels0, taus = compiled._init(cfg.t_start, p)
    for tau in taus:
        if not (tau > 0):
            raise ConfigError(f"delay time constant must be positive, got {tau}")
    state = list(stocks0) + list(levels0)
    apply_floors(cfg.t_start, state)

    n_stocks = len(compiled.stock_names)
    times: list[float] = []
    rows: list[tuple] = []  # (stocks..., auxes..., params...)

    def save_row(t, state):
        aux_vals, _ = dynamics(t, state, p)
        row = tuple(state[:n_stocks]) + tuple(aux_vals) + tuple(p)
        for v in row:
            if not math.isfinite(v):
                _raise_nonfinite(compiled, times, rows, t)
        times.append(t)
        rows.append(row)

    euler = cfg.integrator is IntegratorKind.EULER
    dt = cfg.dt
    n_state = len(state)
    rng_state = range(n_state)

    for k in range(n_steps):
        t = cfg.t_start + k * dt
        apply_boundary(t, state)
        if k % cfg.save_every == 0:
            save_row(t, state)
        if euler:
            _, r = dynamics(t, state, p)
            state = [state[i] + dt * r[i] for i in rng_state]
        else:
            _, k1 = dynamics(t, state, p)
            mid = [state[i] + 0.5 * dt * k1[i] for i in rng_state]
            _, k2 = dynamics(t + 0.5 * dt, mid, p)
            mid = [state[i] + 0.5 * dt * k2[i] for i in rng_state]
            _, k3 = dynamics(t + 0.5 * dt, mid, p)
            end = [state[i] + dt * k3[i] for i in rng_state]
            _, k4 = dynamics(t + dt, end, p)
            sixth = dt / 6.0
            state = [
                state[i] + sixth * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i])
                for i in rng_state
            ]
        for v in state:
            if not math.isfinite(v):
                _raise_nonfinite(compiled, times, rows, cfg.t_start + (k + 1) * dt)

    t_final = cfg.t_start + n_steps * dt
    apply_boundary(t_final, state)
    save_row(t_final, state)
    return _build_trajectory(compiled, times, rows)


def _build_trajectory(compiled, times, rows) -> Trajectory:
    names = compiled.recorded
    arr = np.array(rows, dtype=float).reshape(len(rows), len(names))
    values = {name: arr[:, i].copy() for i, name in enumerate(names)}
    return Trajectory(np.array(times, dtype=float), values)


def _raise_nonfinite(compiled, times, rows, t):
    traj = _build_trajectory(compiled, times, rows)
    raise NonFiniteState(
        f"non-finite state at t={t}; trajectory truncated at t={times[-1] if times else 'start'}",
        trajectory=traj,
        time=t,
    )


def initial_stocks(spec: ModelSpec) -> dict[str, float]:
    """Stock initial values from the spec's parameter defaults."""
    env = spec.param_values()
    return {s.id: ex.eval_expr(s.initial, env) for s in spec.stocks}


def evaluate_point(
    spec: ModelSpec, stocks: Mapping[str, float], t: float = 0.0
) -> dict[str, float]:
    """Consistent variable values for given stock levels.

    Auxiliaries are evaluated in dependency order with delay builtins passing
    their input through (their equilibrium), giving a coherent operating point
    for link-sign extraction. The result maps every declared variable,
    parameters included.
    """
    env = spec.param_values()
    missing = [s.id for s in spec.stocks if s.id not in stocks]
    if missing:
        raise UnknownVariable(f"missing stock values: {', '.join(missing)}")
    for s in spec.stocks:
        env[s.id] = float(stocks[s.id])
    curves = {name: realize_curve(v) for name, v in spec.lookups.items()}
    aux_by_id = {a.id: a for a in spec.auxiliaries}
    for aux_id in evaluation_order(spec):
        env[aux_id] = ex.eval_expr(aux_by_id[aux_id].expr, env, t=t, curves=curves)
    return env


def steady_state(
    model: ModelSpec | CompiledModel,
    cfg: RunConfig,
    tol: float = 1e-6,
    window: float = 50.0,
) -> dict[str, float]:
    """Run to the horizon and return final values if all stocks have settled.

    Settled means that over the trailing ``window`` of saved rows every
    stock's change per unit time, relative to its final magnitude, stays
    below ``tol``. Raises :class:`NotConverged` naming the worst stock.
    """
    if tol <= 0:
        raise ConfigError(f"tol must be positive, got {tol}")
    compiled = _as_compiled(model)
    traj = simulate(compiled, cfg)
    cut = cfg.t_end - window
    idx = np.nonzero(traj.times >= cut - _time_tol(cut))[0]
    if len(idx) < 2:
        raise ConfigError(f"window {window} does not contain two saved rows")
    worst_var, worst_res = None, 0.0
    tw = traj.times[idx]
    for name in compiled.stock_names:
        series = traj[name][idx]
        scale = max(abs(float(series[-1])), 1e-9)
        rates = np.abs(np.diff(series)) / (np.diff(tw) * scale)
        res = float(rates.max()) if len(rates) else 0.0
        if res > worst_res:
            worst_var, worst_res = name, res
    if worst_res >= tol:
        raise NotConverged(
            f"stock {worst_var} still moving: relative rate {worst_res:.3e} >= tol {tol:.3e}",
            variable=worst_var,
            residual=worst_res,
        )
    return traj.final()


def conservation_probe(
    model: ModelSpec | CompiledModel,
    cfg: RunConfig,
    group: Sequence[str],
) -> float:
    """Max absolute drift of the summed group of stocks across saved rows."""
    compiled = _as_compiled(model)
    group = list(group)
    stock_set = set(compiled.stock_names)
    for name in group:
        if name not in stock_set:
            if name in compiled.recorded:
                raise ConfigError(f"conservation group must name stocks only, got {name!r}")
            raise UnknownVariable(f"unknown variable {name!r}")
    if not group:
        return 0.0
    traj = simulate(compiled, cfg)
    total = sum(traj[name] for name in group)
    return float(np.max(np.abs(total - total[0])))


def smooth_response_probe(tau: float, horizon: float, dt: float) -> Trajectory:
    """Step response of the SMOOTH primitive: y = SMOOTH(STEP(1, 0), tau), y(0)=0."""
    if not (tau > 0):
        raise ConfigError(f"tau must be positive, got {tau}")
    if dt > tau / 10 + _time_tol(tau):
        raise ConfigError(f"dt must satisfy dt <= tau/10, got dt={dt} for tau={tau}")
    from .model import AuxDef  # local import keeps module load order simple

    spec = ModelSpec(
        name="smooth_probe",
        auxiliaries=(
            AuxDef("input", ex.Call("STEP", (ex.Constant(1.0), ex.Constant(0.0)))),
            AuxDef("response", ex.Call("SMOOTH", (ex.VarRef("input"), ex.Constant(float(tau))))),
        ),
    )
    return simulate(spec, RunConfig(t_end=float(horizon), dt=float(dt)))
