"""Simulate the flagship exploitation model and plot its settling behavior.

The run starts from an empty workforce: positions fill quickly, capacity
overshoots while exhaustion catches up, and the economy rings down into an
interior steady state where roughly a fifth of the susceptible pool is in an
exploited position.

Run with::

    python demos/run_flagship.py
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from dynex import Calibration, RunConfig, build_exploitation_model, simulate, steady_state

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

spec = build_exploitation_model(Calibration())
cfg = RunConfig(t_end=600.0, dt=0.125, save_every=4)
traj = simulate(spec, cfg)

fig, axes = plt.subplots(3, 2, figsize=(11, 9), sharex=True)
panels = [
    ("exploitees", "filled positions [people]"),
    ("offered_salary", "offered salary [money/person/time]"),
    ("capacity", "exploitation capacity [money]"),
    ("exhaustion", "exhaustion [1]"),
    ("outcomes", "output rate [outcomes/time]"),
    ("willing_fraction", "fraction willing [1]"),
]
for ax, (var, label) in zip(axes.flat, panels):
    ax.plot(traj.times, traj[var], lw=1.5)
    ax.set_ylabel(label)
    ax.grid(alpha=0.3)
for ax in axes[-1]:
    ax.set_xlabel("time")
fig.suptitle("Flagship run from an empty workforce")
fig.tight_layout()
fig.savefig(OUT / "flagship_run.png", dpi=130)
print(f"wrote {OUT / 'flagship_run.png'}")

# the long-run picture, for reference
steady = steady_state(spec, RunConfig(t_end=2000.0, dt=0.125, save_every=8))
for var, _ in panels:
    print(f"steady {var:24s} = {steady[var]:.4f}")
