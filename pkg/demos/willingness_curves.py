"""Willingness-to-accept curves: densities, cumulatives, and calibration.

Reproduces the acceptance-curve story: at salary parity (ratio 1) half the
susceptible pool accepts; at 1.5x ninety percent accept. The skewed variant
keeps a long right tail, so the final holdouts take a much higher offer to
bring in, while a piecewise curve can encode any hand-drawn shape.

Run with::

    python demos/willingness_curves.py
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from dynex import (
    calibrate,
    default_curve,
    default_skewed_curve,
    exploitee_count,
    fraction_willing,
    quantile,
)

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

normal = default_curve()
skewed = default_skewed_curve()
drawn = calibrate("piecewise", [(0.4, 0.05), (1.0, 0.5), (1.3, 0.8), (2.5, 1.0)])

ratios = np.linspace(0.0, 3.0, 400)
fig, (left, right) = plt.subplots(1, 2, figsize=(11, 4.2))

# cumulative view: fraction willing at each salary ratio
for curve, label in ((normal, "normal"), (skewed, "log-normal (skewed)"), (drawn, "piecewise")):
    left.plot(ratios, [fraction_willing(curve, r) for r in ratios], label=label)
left.axhline(0.5, color="gray", lw=0.6, ls=":")
left.scatter([1.0, 1.5], [0.5, 0.9], color="k", zorder=5, s=18)
left.annotate("half accept at parity", (1.0, 0.5), textcoords="offset points", xytext=(8, -12))
left.annotate("90% at 1.5x", (1.5, 0.9), textcoords="offset points", xytext=(8, -12))
left.set_xlabel("offered / demanded salary")
left.set_ylabel("fraction willing")
left.legend(loc="lower right")
left.grid(alpha=0.3)

# implied density view (slope of the cumulative)
for curve, label in ((normal, "normal"), (skewed, "log-normal (skewed)")):
    f = np.array([fraction_willing(curve, r) for r in ratios])
    right.plot(ratios[1:], np.diff(f) / np.diff(ratios), label=label)
right.set_xlabel("offered / demanded salary")
right.set_ylabel("acceptance density")
right.legend()
right.grid(alpha=0.3)

fig.suptitle("Acceptance curves calibrated to the same anchors")
fig.tight_layout()
fig.savefig(OUT / "willingness_curves.png", dpi=130)
print(f"wrote {OUT / 'willingness_curves.png'}")

# the tail cost of the final holdouts, and headcount at a given offer
for label, curve in (("normal", normal), ("skewed", skewed)):
    print(f"{label:8s} ratio for 99% willing = {quantile(curve, 0.99):.3f}")
pool = 10_000.0
for ratio in (0.8, 1.0, 1.2):
    n = exploitee_count(fraction_willing(normal, ratio), pool)
    print(f"offer at {ratio:.1f}x the demanded salary -> {n:.0f} of {pool:.0f} accept")
