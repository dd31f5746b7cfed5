"""The minimum-wage experiment, on the micro fixture and the flagship model.

A wage floor 20% above the settled offered salary is imposed as a clamp. On
the linear micro market the outcome matches the closed-form equilibrium: the
wage rises, employment falls to the demand curve, and a queue of
willing-but-unhired workers appears. On the flagship model the floor exceeds
what any workload can finance (the settled wage already absorbs most of the
revenue per head), so employers stop hiring altogether and employment decays
toward zero: the same unintended consequence, in its extreme form.

Run with::

    python demos/wage_floor_experiment.py
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from dynex import (
    RunConfig,
    WageFloor,
    build_exploitation_model,
    compare,
    run_scenario,
    simulate,
)
from dynex.fixtures import linear_labor_market, linear_market_equilibrium
from dynex.scenario import apply_policy

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

# -- micro fixture against its closed form -----------------------------------
market = linear_labor_market()
market_cfg = RunConfig(t_end=1200.0, dt=0.25, save_every=4)
base = run_scenario(market, None, market_cfg, name="baseline", window=100.0)
floor_value = 1.2 * base.metrics["wage"]
floored = run_scenario(market, WageFloor(floor_value), market_cfg, name="floor", window=100.0)
oracle = linear_market_equilibrium(wage_floor=floor_value)

print("linear micro market:")
print(f"  clearing wage {base.metrics['wage']:.4f}, employment {base.metrics['employment']:.1f}")
print(f"  floor at {floor_value:.4f} -> employment {floored.metrics['employment']:.1f} "
      f"(closed form {oracle['employment']:.1f}), "
      f"willing but unhired {floored.metrics['willing_unhired']:.1f} "
      f"(closed form {oracle['willing_unhired']:.1f})")

# -- flagship -----------------------------------------------------------------
spec = build_exploitation_model()
cfg = RunConfig(t_end=2000.0, dt=0.125, save_every=8)
flag_base = run_scenario(spec, None, cfg, name="baseline")
flag_floor_value = 1.2 * flag_base.metrics["wage"]
flag_floored = run_scenario(spec, WageFloor(flag_floor_value), cfg, name="wage_floor")

table = compare([flag_floored], flag_base)
print("\nflagship, floor vs baseline:")
for row in table:
    print(f"  {row.metric:15s} {row.baseline:10.2f} -> {row.value:10.2f} ({row.pct_diff:+.1f}%)")

# trajectories for the picture: first 400 time units
short = RunConfig(t_end=400.0, dt=0.125, save_every=4)
plain = simulate(spec, short)
clamped = simulate(spec, apply_policy(short, WageFloor(flag_floor_value)))

fig, (top, bottom) = plt.subplots(2, 1, figsize=(9, 7), sharex=True)
top.plot(plain.times, plain["exploitees"], label="baseline")
top.plot(clamped.times, clamped["exploitees"], label=f"floor at {flag_floor_value:.2f}")
top.set_ylabel("filled positions [people]")
top.legend()
top.grid(alpha=0.3)
bottom.plot(plain.times, plain["offered_salary"], label="baseline")
bottom.plot(clamped.times, clamped["offered_salary"], label="floored")
bottom.set_ylabel("offered salary")
bottom.set_xlabel("time")
bottom.grid(alpha=0.3)
fig.suptitle("A binding wage floor shrinks exploitation-financed employment")
fig.tight_layout()
fig.savefig(OUT / "wage_floor.png", dpi=130)
print(f"\nwrote {OUT / 'wage_floor.png'}")
