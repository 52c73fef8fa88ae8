"""Power-law fits of energy decay and resolvent growth, with verdicts.

For ``mu_a`` the predicted rates are ``theta = (2 - mu_a)/2`` for the
norm of solutions with domain data (so ``-(2 - mu_a)`` for the energy,
its square) and ``delta = 2/(2 - mu_a)`` for the resolvent growth
``||(i w - A)^{-1}|| <= C w**delta``. Both are upper bounds, so measuring
faster decay or slower growth passes, flagged as possibly non-sharp.
"""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from .coeff import DomainError
from .spectral import ResolventSample
from .timestep import EnergySeries

MIN_SAMPLES = 8

# window rule for energy fits
T_START = 5.0
FLOOR_FACTOR = 1e3
GRID_PER_DECADE = 10
SLOPE_SPAN = 2  # secant slopes over +-2 grid points, i.e. 0.4 decades
BEND_ABS = 1.0
BEND_REL = 0.5


class InsufficientSamplesError(ValueError):
    pass


class WindowCollapseError(RuntimeError):
    """The polynomial regime is too short to fit; refine the mesh."""


class Verdict(str, enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    NO_FIT = "NO_FIT"


@dataclass(frozen=True)
class FitResult:
    exponent: float
    intercept: float
    r_squared: float
    window: tuple[float, float]
    n_samples: int = 0

    def predict(self, x):
        return np.exp(self.intercept) * np.asarray(x, dtype=float) ** self.exponent


def fit_power_law(xs, ys, window: tuple[float, float] | None = None) -> FitResult:
    """Least squares of ``log y`` on ``log x`` over ``window`` (inclusive)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape:
        raise ValueError("xs and ys must have the same length")
    if window is None:
        window = (float(np.min(xs)), float(np.max(xs)))
    lo, hi = window
    keep = (xs >= lo) & (xs <= hi)
    x, y = xs[keep], ys[keep]
    if len(x) < MIN_SAMPLES:
        raise InsufficientSamplesError(
            f"{len(x)} samples in window [{lo:.6g}, {hi:.6g}], need {MIN_SAMPLES}"
        )
    if np.any(x <= 0.0) or np.any(y <= 0.0):
        raise DomainError("power-law fit needs positive abscissae and values")
    lx, ly = np.log(x), np.log(y)
    if np.ptp(lx) == 0.0:
        raise InsufficientSamplesError("all abscissae coincide")
    if np.ptp(ly) == 0.0:
        # linregress reports r = 0 for constant data; the fit is exact
        return FitResult(0.0, float(ly[0]), 1.0, (float(lo), float(hi)), len(x))
    res = stats.linregress(lx, ly)
    r2 = float(min(max(res.rvalue**2, 0.0), 1.0))
    return FitResult(float(res.slope), float(res.intercept), r2, (float(lo), float(hi)), len(x))


def theta_predicted(mu_a: float) -> float:
    return (2.0 - mu_a) / 2.0


def delta_predicted(mu_a: float) -> float:
    return 2.0 / (2.0 - mu_a)


def energy_target(mu_a: float) -> float:
    return -(2.0 - mu_a)


def _log_grid(series: EnergySeries, t0: float):
    t, e = series.times, series.energies
    keep = (t > 0.0) & (e > 0.0)
    t, e = t[keep], e[keep]
    if len(t) < 2 or t[-1] <= t0:
        return np.empty(0), np.empty(0)
    n = max(2, int(np.ceil(GRID_PER_DECADE * np.log10(t[-1] / t0))) + 1)
    grid = np.geomspace(t0, t[-1], n)
    # the energy is non-increasing; the running minimum removes roundoff wiggles
    env = np.minimum.accumulate(e)
    return grid, np.exp(np.interp(np.log(grid), np.log(t), np.log(env)))


def decay_window(series: EnergySeries, t0: float = T_START) -> tuple[float, float]:
    """Pre-asymptotic window ``[t0, t1]`` for the energy fit.

    ``t1`` is the earlier of the first time ``E`` falls below
    ``FLOOR_FACTOR * eps * E(0)`` and the first convex bend of ``log E`` in
    ``log t``. A bend is where the secant slope over 0.4 decades has risen
    from its most negative value so far by more than ``BEND_ABS`` and by more
    than ``BEND_REL`` of that value; the secant smooths the staircase left by
    waves reaching the damper once per round trip.
    """
    grid, e = _log_grid(series, t0)
    if len(grid) == 0:
        return t0, t0
    e0 = float(series.energies[0])
    t1 = float(grid[-1])
    below = np.nonzero(e < FLOOR_FACTOR * np.finfo(float).eps * e0)[0]
    if len(below):
        t1 = float(grid[below[0]])
    lg, le = np.log(grid), np.log(e)
    k = SLOPE_SPAN
    steepest = np.inf
    for j in range(k, len(grid) - k):
        if grid[j] >= t1:
            break
        s = (le[j + k] - le[j - k]) / (lg[j + k] - lg[j - k])
        if s < steepest:
            steepest = s
        elif s - steepest > max(BEND_ABS, BEND_REL * abs(steepest)):
            t1 = float(grid[j])
            break
    return t0, t1


@dataclass(frozen=True)
class DecayReport:
    fit: FitResult | None
    target_exponent: float
    theta_predicted: float
    graph_norm: float
    verdict: Verdict
    note: str = ""


def decay_report(
    series: EnergySeries,
    mu_a: float,
    graph_norm: float,
    *,
    slack: float = 0.3,
    t0: float = T_START,
) -> DecayReport:
    """Fit ``E(t) / ||U0||_D^2`` on the pre-asymptotic window.

    PASS if the exponent is at most ``-(2 - mu_a) + slack``.
    """
    target = energy_target(mu_a)
    theta = theta_predicted(mu_a)
    if graph_norm == 0.0 or not np.any(series.energies):
        return DecayReport(None, target, theta, graph_norm, Verdict.NO_FIT, "zero initial data")
    lo, hi = decay_window(series, t0)
    grid, e = _log_grid(series, lo)
    scale = graph_norm**2 if graph_norm > 0.0 else 1.0
    keep = grid <= hi
    if keep.sum() < MIN_SAMPLES:
        raise WindowCollapseError(
            f"fit window [{lo:.4g}, {hi:.4g}] holds {int(keep.sum())} log-spaced samples; "
            "the exponential tail starts too early, refine the mesh"
        )
    fit = fit_power_law(grid, e / scale, (lo, hi))
    ok = fit.exponent <= target + slack
    note = ""
    if ok and fit.exponent < target - slack:
        note = "possibly non-sharp: decay faster than the bound"
    return DecayReport(fit, target, theta, graph_norm, Verdict.PASS if ok else Verdict.FAIL, note)


@dataclass(frozen=True)
class ResolventReport:
    fit: FitResult
    delta_predicted: float
    verdict: Verdict
    note: str = ""


def resolvent_report(
    samples: list[ResolventSample], mu_a: float, *, slack: float = 0.2
) -> ResolventReport:
    """Fit the growth of resolvent norms; PASS if the slope is at most ``delta + slack``."""
    good = [s for s in samples if not s.near_singular and np.isfinite(s.norm)]
    if len(good) < MIN_SAMPLES:
        raise InsufficientSamplesError(
            f"{len(good)} resolved resolvent samples, need {MIN_SAMPLES}"
        )
    w = np.array([s.omega for s in good])
    v = np.array([s.norm for s in good])
    fit = fit_power_law(w, v)
    delta = delta_predicted(mu_a)
    ok = fit.exponent <= delta + slack
    note = ""
    if ok and fit.exponent < delta - slack:
        note = "possibly non-sharp: growth slower than the bound"
    return ResolventReport(fit, delta, Verdict.PASS if ok else Verdict.FAIL, note)


def decay_resolvent_ratio(decay: DecayReport, resolvent: ResolventReport) -> float:
    """``(2/|energy exponent|) / fitted delta``; 1 means the two routes agree."""
    if decay.fit is None or decay.fit.exponent == 0.0 or resolvent.fit.exponent == 0.0:
        return float("nan")
    return (2.0 / abs(decay.fit.exponent)) / resolvent.fit.exponent


def summary(
    mu_a: float,
    mu_b: float,
    variant: str,
    decay: DecayReport | None,
    resolvent: ResolventReport | None,
) -> dict:
    """Flat verdict table for JSON output."""
    verdicts = [r.verdict for r in (decay, resolvent) if r is not None]
    if not verdicts or all(v is Verdict.NO_FIT for v in verdicts):
        overall = Verdict.NO_FIT
    elif any(v is Verdict.FAIL for v in verdicts):
        overall = Verdict.FAIL
    else:
        overall = Verdict.PASS
    out = {
        "mu_a": float(mu_a),
        "mu_b": float(mu_b),
        "variant": variant,
        "delta_predicted": delta_predicted(mu_a),
        "delta_fitted": resolvent.fit.exponent if resolvent else None,
        "theta_predicted": theta_predicted(mu_a),
        "energy_exponent_fitted": decay.fit.exponent if decay and decay.fit else None,
        "r_squared": {
            "energy": decay.fit.r_squared if decay and decay.fit else None,
            "resolvent": resolvent.fit.r_squared if resolvent else None,
        },
        "verdict": overall.value,
    }
    notes = {}
    if decay is not None:
        notes["energy"] = decay.verdict.value + (f" ({decay.note})" if decay.note else "")
        if decay.fit is not None:
            out["energy_window"] = list(decay.fit.window)
    if resolvent is not None:
        notes["resolvent"] = resolvent.verdict.value + (
            f" ({resolvent.note})" if resolvent.note else ""
        )
        out["omega_window"] = list(resolvent.fit.window)
    out["notes"] = notes
    return out


def fit_as_dict(fit: FitResult) -> dict:
    d = asdict(fit)
    d["window"] = list(fit.window)
    return d
