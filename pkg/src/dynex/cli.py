"""Command-line surface.

Machine-readable output (CSV) goes to standard output; diagnostics go to
standard error. Exit codes: 0 success, 1 domain failure (validation,
convergence, pattern, parse), 2 usage error.
"""

from __future__ import annotations

import argparse
import sys

from . import dsl
from .csvio import write_csv
from .engine import (
    IntegratorKind,
    RunConfig,
    compile_model,
    evaluate_point,
    initial_stocks,
    simulate,
)
from .errors import DynexError
from .exploitation import fig2_loops, reference_operating_point
from .loops import enumerate_cycles, match_named_loops
from .model import signed_graph, validate_model
from .scenario import (
    Composite,
    GridAxis,
    ParamOverride,
    RangeAxis,
    SweepPlan,
    WageFloor,
    compare,
    run_scenario,
    sweep,
)
from .willingness import LogNormalCdf, NormalCdf, calibrate


def _load_model(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return dsl.parse_model(fh.read(), validate=False)


def _run_flags(sub, t_end_default=2000.0):
    sub.add_argument("--t-end", type=float, default=t_end_default)
    sub.add_argument("--t-start", type=float, default=0.0)
    sub.add_argument("--dt", type=float, default=0.125)
    sub.add_argument("--integrator", choices=("euler", "rk4"), default="rk4")
    sub.add_argument("--save-every", type=int, default=1)


def _cfg_from(args) -> RunConfig:
    return RunConfig(
        t_end=args.t_end,
        t_start=args.t_start,
        dt=args.dt,
        save_every=args.save_every,
        integrator=IntegratorKind(args.integrator),
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynex", description="stock-flow simulation toolkit"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    sub = commands.add_parser("validate", help="check a model file")
    sub.add_argument("model")

    sub = commands.add_parser("simulate", help="run a model and emit CSV")
    sub.add_argument("model")
    _run_flags(sub, t_end_default=None)
    sub.add_argument("--out", default="-", help="output file or - for stdout")
    sub.add_argument("--vars", default=None, help="comma-separated variable list")

    sub = commands.add_parser("loops", help="enumerate feedback loops")
    sub.add_argument("model")
    sub.add_argument("--max-len", type=int, default=12)
    sub.add_argument("--expect", choices=("fig2",), default=None)

    sub = commands.add_parser("scenario", help="run scenario file against a baseline")
    sub.add_argument("model")
    sub.add_argument("scenarios")
    _run_flags(sub)
    sub.add_argument("--tol", type=float, default=1e-6)
    sub.add_argument("--window", type=float, default=50.0)

    sub = commands.add_parser("sweep", help="run a parameter sweep plan")
    sub.add_argument("model")
    sub.add_argument("plan")
    _run_flags(sub)
    sub.add_argument("--tol", type=float, default=1e-6)
    sub.add_argument("--window", type=float, default=50.0)

    sub = commands.add_parser("calibrate", help="fit a willingness curve to anchors")
    sub.add_argument("--kind", choices=("normal", "lognormal"), required=True)
    sub.add_argument(
        "--anchor",
        action="append",
        required=True,
        metavar="R,F",
        help="ratio,fraction pair; give exactly two",
    )

    return parser


def _cmd_validate(args) -> int:
    spec = _load_model(args.model)
    report = validate_model(spec)
    for finding in report.findings:
        print(f"{finding.severity}: {finding.location}: {finding.message}", file=sys.stderr)
    return 0 if report.ok else 1


def _cmd_simulate(args) -> int:
    if args.t_end is None:
        print("simulate: --t-end is required", file=sys.stderr)
        return 2
    spec = _load_model(args.model)
    compiled = compile_model(spec)
    traj = simulate(compiled, _cfg_from(args))
    if args.vars:
        columns = [v.strip() for v in args.vars.split(",") if v.strip()]
    else:
        columns = list(compiled.stock_names + compiled.aux_names)
    if args.out == "-":
        write_csv(traj, columns, sys.stdout)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_csv(traj, columns, fh)
    return 0


def _cmd_loops(args) -> int:
    spec = _load_model(args.model)
    compile_model(spec)  # surfaces validation problems before analysis
    if args.expect == "fig2":
        point = reference_operating_point(spec)
    else:
        point = evaluate_point(spec, initial_stocks(spec))
    graph = signed_graph(spec, point)
    report = enumerate_cycles(graph, max_len=args.max_len)
    if report.truncated:
        print(f"note: cycles longer than {args.max_len} were skipped", file=sys.stderr)
    if args.expect == "fig2":
        matches = match_named_loops(report, fig2_loops())
        print("label,expected,status")
        for m in matches.matches:
            loop = next(l for l in fig2_loops() if l.label == m.label)
            print(f"{m.label},{loop.expected_polarity.value},{m.status.value}")
        return 0 if matches.all_found else 1
    print("polarity,length,nodes")
    for cycle, polarity in report.cycles:
        print(f"{polarity.value},{len(cycle.nodes)},{'->'.join(cycle.nodes)}")
    return 0


def _parse_scenario_file(text: str):
    """Scenario files: ``scenario NAME`` then ``override P = V [at T]`` and
    ``wage_floor V from T`` lines."""
    scenarios: list[tuple[str, Composite]] = []
    name, policies = None, []

    def flush():
        nonlocal name, policies
        if name is not None:
            scenarios.append((name, Composite(tuple(policies))))
        name, policies = None, []

    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split(None, 1)
        body = rest[0] if rest else ""
        if head == "scenario":
            flush()
            name = body.strip()
            if not name:
                raise DynexError("scenario needs a name")
        elif head == "override":
            if name is None:
                raise DynexError("override outside a scenario block")
            target, _, value_part = body.partition("=")
            words = value_part.split()
            if not target.strip() or not words:
                raise DynexError(f"malformed override line: {raw!r}")
            value = float(words[0])
            at = 0.0
            if len(words) == 3 and words[1] == "at":
                at = float(words[2])
            elif len(words) != 1:
                raise DynexError(f"malformed override line: {raw!r}")
            policies.append(ParamOverride(target.strip(), value, at))
        elif head == "wage_floor":
            words = body.split()
            if len(words) != 3 or words[1] != "from":
                raise DynexError(f"malformed wage_floor line: {raw!r}")
            policies.append(WageFloor(float(words[0]), float(words[2])))
        else:
            raise DynexError(f"unknown scenario directive {head!r}")
    flush()
    if not scenarios:
        raise DynexError("scenario file defines no scenarios")
    return scenarios


def _cmd_scenario(args) -> int:
    spec = _load_model(args.model)
    compiled = compile_model(spec)
    with open(args.scenarios, "r", encoding="utf-8") as fh:
        scenarios = _parse_scenario_file(fh.read())
    cfg = _cfg_from(args)
    baseline = run_scenario(
        compiled, None, cfg, name="baseline", tol=args.tol, window=args.window
    )
    results = [
        run_scenario(compiled, policy, cfg, name=name, tol=args.tol, window=args.window)
        for name, policy in scenarios
    ]
    table = compare(results, baseline)
    print("scenario,metric,value,baseline,diff,pct_diff")
    for row in table:
        print(
            f"{row.scenario},{row.metric},{row.value!r},{row.baseline!r},"
            f"{row.diff!r},{row.pct_diff!r}"
        )
    return 0


def _parse_plan_file(text: str, cfg: RunConfig) -> SweepPlan:
    """Plan files: ``grid P = v1,v2,...``, ``range P = lo..hi samples N``, ``seed N``."""
    axes = []
    seed = 0
    samples = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split(None, 1)
        body = rest[0] if rest else ""
        if head == "seed":
            seed = int(body.strip())
        elif head == "grid":
            target, _, values = body.partition("=")
            if not target.strip() or not values.strip():
                raise DynexError(f"malformed grid line: {raw!r}")
            axes.append(
                GridAxis(target.strip(), tuple(float(v) for v in values.split(",")))
            )
        elif head == "range":
            target, _, value_part = body.partition("=")
            words = value_part.split()
            if len(words) != 3 or words[1] != "samples" or ".." not in words[0]:
                raise DynexError(f"malformed range line: {raw!r}")
            low, _, high = words[0].partition("..")
            n = int(words[2])
            if samples is not None and n != samples:
                raise DynexError("all range lines must agree on the sample count")
            samples = n
            axes.append(RangeAxis(target.strip(), float(low), float(high)))
        else:
            raise DynexError(f"unknown plan directive {head!r}")
    return SweepPlan(tuple(axes), cfg, samples=samples, seed=seed)


def _cmd_sweep(args) -> int:
    spec = _load_model(args.model)
    compiled = compile_model(spec)
    with open(args.plan, "r", encoding="utf-8") as fh:
        plan = _parse_plan_file(fh.read(), _cfg_from(args))
    outcomes = sweep(compiled, plan, tol=args.tol, window=args.window)
    axis_names = [a.id for a in plan.axes]
    metric_names = []
    for outcome in outcomes:
        if outcome.result is not None:
            metric_names = list(outcome.result.metrics)
            break
    print(",".join(axis_names + ["status"] + metric_names))
    for outcome in outcomes:
        cells = [repr(float(outcome.point[a])) for a in axis_names]
        if outcome.result is None:
            cells.append("not_converged")
            cells.extend("" for _ in metric_names)
        else:
            cells.append("ok")
            cells.extend(repr(float(outcome.result.metrics[m])) for m in metric_names)
        print(",".join(cells))
    return 0


def _cmd_calibrate(args) -> int:
    anchors = []
    for item in args.anchor:
        parts = item.split(",")
        if len(parts) != 2:
            print(f"calibrate: bad anchor {item!r}, expected R,F", file=sys.stderr)
            return 2
        anchors.append((float(parts[0]), float(parts[1])))
    curve = calibrate(args.kind, anchors)
    print("parameter,value")
    if isinstance(curve, NormalCdf):
        print(f"mu,{curve.mu!r}")
        print(f"sigma,{curve.sigma!r}")
    elif isinstance(curve, LogNormalCdf):
        print(f"log_median,{curve.log_median!r}")
        print(f"log_sigma,{curve.log_sigma!r}")
    return 0


_COMMANDS = {
    "validate": _cmd_validate,
    "simulate": _cmd_simulate,
    "loops": _cmd_loops,
    "scenario": _cmd_scenario,
    "sweep": _cmd_sweep,
    "calibrate": _cmd_calibrate,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except DynexError as exc:
        print(f"dynex {args.command}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"dynex {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
