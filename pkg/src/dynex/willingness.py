"""Willingness-to-accept curves.

A willingness curve maps the salary ratio (offered salary divided by the
average demanded salary, an unbounded nonnegative number) to the fraction of
the susceptible pool willing to take the position at that ratio. Curves are
cumulative: nondecreasing, exactly 0 at ratio 0, saturating toward 1. The
normal variant is truncated at ratio 0 and renormalized; the log-normal
variant provides the right-skewed alternative (fast early rise, long tail of
holdouts that only a very high ratio brings in).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

from scipy.optimize import brentq
from scipy.special import ndtr, ndtri

from .errors import DomainError, InfeasibleAnchors, NotInvertible

#: Default calibration: half the pool accepts when offered exactly the
#: demanded salary, ninety percent accept at this ratio.
DEFAULT_MEDIAN_RATIO = 1.0
DEFAULT_RATIO_90 = 1.5


def _norm_cdf(z: float) -> float:
    return float(ndtr(z))


def _norm_ppf(p: float) -> float:
    return float(ndtri(p))


@dataclass(frozen=True)
class NormalCdf:
    """Gaussian acceptance curve, truncated to ratio >= 0 and renormalized."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0):
            raise DomainError(f"sigma must be positive, got {self.sigma}")

    @property
    def _mass_below_zero(self) -> float:
        return _norm_cdf(-self.mu / self.sigma)


@dataclass(frozen=True)
class LogNormalCdf:
    """Log-normal acceptance curve; naturally zero at ratio 0."""

    log_median: float
    log_sigma: float

    def __post_init__(self):
        if not (self.log_sigma > 0):
            raise DomainError(f"log_sigma must be positive, got {self.log_sigma}")


@dataclass(frozen=True)
class PiecewiseCumulative:
    """Piecewise-linear cumulative curve through explicit (ratio, fraction) points."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(r), float(f)) for r, f in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2:
            raise DomainError("piecewise curve needs at least 2 points")
        if pts[0][1] != 0.0 or pts[-1][1] != 1.0:
            raise DomainError("piecewise curve must start at fraction 0 and end at 1")
        for (r0, f0), (r1, f1) in zip(pts, pts[1:]):
            if r1 < r0 or f1 < f0:
                raise DomainError("piecewise points must be nondecreasing in both coordinates")
        if pts[0][0] < 0:
            raise DomainError("ratios must be nonnegative")


WillingnessCurve = Union[NormalCdf, LogNormalCdf, PiecewiseCumulative]


def curve_value(curve: WillingnessCurve, ratio: float) -> float:
    """Cumulative curve evaluation without the nonnegativity precondition check."""
    if isinstance(curve, NormalCdf):
        a = curve._mass_below_zero
        val = (_norm_cdf((ratio - curve.mu) / curve.sigma) - a) / (1.0 - a)
        return min(max(val, 0.0), 1.0)
    if isinstance(curve, LogNormalCdf):
        if ratio <= 0.0:
            return 0.0
        return _norm_cdf((math.log(ratio) - curve.log_median) / curve.log_sigma)
    if isinstance(curve, PiecewiseCumulative):
        return _piecewise_value(curve.points, ratio)
    raise DomainError(f"not a willingness curve: {curve!r}")


def _piecewise_value(pts, ratio):
    if ratio <= pts[0][0]:
        return 0.0 if ratio < pts[0][0] else pts[0][1]
    if ratio >= pts[-1][0]:
        return 1.0
    for (r0, f0), (r1, f1) in zip(pts, pts[1:]):
        if r0 <= ratio <= r1:
            if r1 == r0:  # vertical jump: right-continuous
                continue
            return f0 + (f1 - f0) * (ratio - r0) / (r1 - r0)
    return 1.0


def fraction_willing(curve: WillingnessCurve, ratio: float) -> float:
    """Fraction of the pool willing to accept at the given salary ratio.

    Always in [0, 1], nondecreasing in the ratio, and exactly 0 at ratio 0.
    """
    if ratio < 0:
        raise DomainError(f"salary ratio must be nonnegative, got {ratio}")
    return curve_value(curve, ratio)


def quantile(curve: WillingnessCurve, fraction: float) -> float:
    """Salary ratio at which the curve reaches ``fraction``.

    Closed form for the normal and log-normal variants, segment inversion for
    piecewise curves. Raises :class:`NotInvertible` when the requested
    fraction falls on a flat segment.
    """
    if not 0.0 < fraction < 1.0:
        raise DomainError(f"fraction must lie strictly inside (0, 1), got {fraction}")
    if isinstance(curve, NormalCdf):
        a = curve._mass_below_zero
        return curve.mu + curve.sigma * _norm_ppf(a + fraction * (1.0 - a))
    if isinstance(curve, LogNormalCdf):
        return math.exp(curve.log_median + curve.log_sigma * _norm_ppf(fraction))
    if isinstance(curve, PiecewiseCumulative):
        return _piecewise_quantile(curve.points, fraction)
    raise DomainError(f"not a willingness curve: {curve!r}")


def _piecewise_quantile(pts, fraction):
    for (r0, f0), (r1, f1) in zip(pts, pts[1:]):
        if f1 == f0 == fraction and r1 > r0:
            raise NotInvertible(
                f"curve is flat at fraction {fraction} over ratios [{r0}, {r1}]"
            )
    for (r0, f0), (r1, f1) in zip(pts, pts[1:]):
        if f0 <= fraction <= f1 and f1 > f0:
            return r0 + (r1 - r0) * (fraction - f0) / (f1 - f0)
    raise NotInvertible(f"fraction {fraction} not attained")  # pragma: no cover


@dataclass(frozen=True)
class CurveAnchor:
    """A single calibration point: at this ratio, this fraction accepts."""

    ratio: float
    fraction: float

    def __post_init__(self):
        if self.ratio < 0:
            raise DomainError(f"anchor ratio must be nonnegative, got {self.ratio}")
        if not 0.0 <= self.fraction <= 1.0:
            raise DomainError(f"anchor fraction must lie in [0, 1], got {self.fraction}")


def _as_anchors(anchors) -> list[CurveAnchor]:
    out = []
    for a in anchors:
        if isinstance(a, CurveAnchor):
            out.append(a)
        else:
            r, f = a
            out.append(CurveAnchor(float(r), float(f)))
    for a0, a1 in zip(out, out[1:]):
        if a1.ratio <= a0.ratio:
            raise InfeasibleAnchors(
                f"anchor ratios must be strictly increasing ({a0.ratio} then {a1.ratio})"
            )
        if a1.fraction <= a0.fraction:
            raise InfeasibleAnchors(
                f"anchor fractions must be strictly increasing ({a0.fraction} then {a1.fraction})"
            )
    return out


def calibrate(kind: str, anchors: Sequence) -> WillingnessCurve:
    """Fit a curve of the given kind ("normal", "lognormal", "piecewise") to anchors.

    The two-parameter kinds take exactly two anchors and reproduce them to
    better than 1e-9; piecewise takes two or more and interpolates linearly,
    extending the endpoints to (0, 0) and a final (r_max, 1).
    """
    pts = _as_anchors(anchors)
    if kind == "normal":
        if len(pts) != 2:
            raise InfeasibleAnchors("normal calibration takes exactly 2 anchors")
        return _fit_truncated_normal(pts[0], pts[1])
    if kind == "lognormal":
        if len(pts) != 2:
            raise InfeasibleAnchors("lognormal calibration takes exactly 2 anchors")
        return _fit_lognormal(pts[0], pts[1])
    if kind == "piecewise":
        if len(pts) < 2:
            raise InfeasibleAnchors("piecewise calibration takes at least 2 anchors")
        return _fit_piecewise(pts)
    raise DomainError(f"unknown curve kind {kind!r}")


def _fit_lognormal(a1: CurveAnchor, a2: CurveAnchor) -> LogNormalCdf:
    if a1.ratio <= 0:
        raise InfeasibleAnchors("log-normal anchors need strictly positive ratios")
    if not (0.0 < a1.fraction and a2.fraction < 1.0):
        raise InfeasibleAnchors("log-normal anchor fractions must lie strictly inside (0, 1)")
    z1, z2 = _norm_ppf(a1.fraction), _norm_ppf(a2.fraction)
    s = (math.log(a2.ratio) - math.log(a1.ratio)) / (z2 - z1)
    m = math.log(a1.ratio) - s * z1
    return LogNormalCdf(m, s)


def _fit_truncated_normal(a1: CurveAnchor, a2: CurveAnchor) -> NormalCdf:
    """Solve mu, sigma so the truncated-renormalized CDF hits both anchors.

    Parameterized by the truncated-away mass ``a``: given ``a`` the anchors
    pin mu and sigma through the inverse CDF, and the consistent ``a`` is the
    root of ``ndtr(-mu(a)/sigma(a)) - a``, found by bisection to machine
    precision. Anchors are then reproduced exactly up to roundoff.
    """
    if not (0.0 < a1.fraction and a2.fraction < 1.0):
        raise InfeasibleAnchors("normal anchor fractions must lie strictly inside (0, 1)")
    q1, q2 = a1.fraction, a2.fraction
    r1, r2 = a1.ratio, a2.ratio

    def solve_for(a: float) -> tuple[float, float]:
        z1 = _norm_ppf(a + q1 * (1.0 - a))
        z2 = _norm_ppf(a + q2 * (1.0 - a))
        sigma = (r2 - r1) / (z2 - z1)
        mu = r1 - sigma * z1
        return mu, sigma

    def gap(a: float) -> float:
        mu, sigma = solve_for(a)
        return _norm_cdf(-mu / sigma) - a

    if gap(0.0) <= 0.0:
        mu, sigma = solve_for(0.0)
        return NormalCdf(mu, sigma)
    hi = None
    for cand in (0.5, 0.9, 0.99, 0.999, 0.9999):
        if gap(cand) < 0.0:
            hi = cand
            break
    if hi is None:
        raise InfeasibleAnchors(
            f"no truncated normal reproduces anchors ({r1}, {q1}) and ({r2}, {q2})"
        )
    a_root = brentq(gap, 0.0, hi, xtol=1e-15, rtol=8.9e-16)
    mu, sigma = solve_for(a_root)
    return NormalCdf(mu, sigma)


def _fit_piecewise(pts: list[CurveAnchor]) -> PiecewiseCumulative:
    coords = [(a.ratio, a.fraction) for a in pts]
    if coords[0][1] != 0.0:
        if coords[0][0] == 0.0:
            raise InfeasibleAnchors("an anchor at ratio 0 must carry fraction 0")
        coords.insert(0, (0.0, 0.0))
    if coords[-1][1] != 1.0:
        r_last = coords[-1][0]
        coords.append((2.0 * r_last if r_last > 0 else 1.0, 1.0))
    return PiecewiseCumulative(tuple(coords))


def exploitee_count(fraction: float, pool: float) -> float:
    """Current number of exploitees: the willing fraction applied to the pool."""
    if not 0.0 <= fraction <= 1.0:
        raise DomainError(f"fraction must lie in [0, 1], got {fraction}")
    if pool < 0:
        raise DomainError(f"pool must be nonnegative, got {pool}")
    return fraction * pool


# --- DSL-facing curve declarations -----------------------------------------
#
# Model files declare curves by their anchor parameterization (median ratio
# and the 90%-willing ratio) rather than by distribution parameters, so the
# declaration round-trips exactly through text. ``realize_curve`` turns a
# declaration (or an already-built curve) into an evaluatable curve.


@dataclass(frozen=True)
class NormalCurveSpec:
    median: float
    ratio90: float


@dataclass(frozen=True)
class LogNormalCurveSpec:
    median: float
    ratio90: float


@dataclass(frozen=True)
class PointsCurveSpec:
    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "points", tuple((float(r), float(f)) for r, f in self.points)
        )


CurveSpec = Union[NormalCurveSpec, LogNormalCurveSpec, PointsCurveSpec]


@lru_cache(maxsize=256)
def _realize_cached(decl: CurveSpec) -> WillingnessCurve:
    if isinstance(decl, NormalCurveSpec):
        return calibrate("normal", [(decl.median, 0.5), (decl.ratio90, 0.9)])
    if isinstance(decl, LogNormalCurveSpec):
        return calibrate("lognormal", [(decl.median, 0.5), (decl.ratio90, 0.9)])
    return PiecewiseCumulative(decl.points)


def realize_curve(curve_or_spec) -> WillingnessCurve:
    """Accept either a curve declaration or a built curve; return the curve."""
    if isinstance(curve_or_spec, (NormalCdf, LogNormalCdf, PiecewiseCumulative)):
        return curve_or_spec
    if isinstance(curve_or_spec, (NormalCurveSpec, LogNormalCurveSpec, PointsCurveSpec)):
        return _realize_cached(curve_or_spec)
    raise DomainError(f"not a curve or curve declaration: {curve_or_spec!r}")


def default_curve() -> WillingnessCurve:
    """The default acceptance curve: truncated normal through the two anchors."""
    return realize_curve(NormalCurveSpec(DEFAULT_MEDIAN_RATIO, DEFAULT_RATIO_90))


def default_skewed_curve() -> WillingnessCurve:
    """The right-skewed alternative calibrated to the same anchors."""
    return realize_curve(LogNormalCurveSpec(DEFAULT_MEDIAN_RATIO, DEFAULT_RATIO_90))
