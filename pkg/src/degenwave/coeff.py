"""Power-law degenerate coefficients and the weighted-space constants built on them.

A profile describes ``alpha(x) = scale * ((x - x0) / (ell - x0)) ** mu`` on
``[x0, ell]``. It vanishes at ``x0`` when ``mu > 0`` and is the constant
``scale`` when ``mu == 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """Raised when a point or interval lies outside a profile's interval."""


@dataclass(frozen=True)
class DegeneracyProfile:
    x0: float
    ell: float
    mu: float
    scale: float = 1.0

    def __post_init__(self) -> None:
        if not self.x0 < self.ell:
            raise ValueError(f"need x0 < ell, got x0={self.x0}, ell={self.ell}")
        if not 0.0 <= self.mu < 2.0:
            raise ValueError(f"degeneracy exponent must lie in [0, 2), got {self.mu}")
        if not self.scale > 0.0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    @property
    def length(self) -> float:
        return self.ell - self.x0

    def __call__(self, x):
        return eval_profile(self, x)


def right_coefficient(mu_a: float) -> DegeneracyProfile:
    """``a(x) = x**mu_a`` on ``[0, 1]``."""
    return DegeneracyProfile(0.0, 1.0, mu_a)


def left_coefficient(mu_b: float) -> DegeneracyProfile:
    """``b(x) = (x + 1)**mu_b`` on ``[-1, 0]``."""
    return DegeneracyProfile(-1.0, 0.0, mu_b)


def _check_inside(profile: DegeneracyProfile, x: np.ndarray) -> None:
    if np.any(x < profile.x0) or np.any(x > profile.ell):
        raise DomainError(
            f"x outside [{profile.x0}, {profile.ell}]: min={np.min(x)}, max={np.max(x)}"
        )


def eval_profile(profile: DegeneracyProfile, x):
    """Evaluate the coefficient; exact at both endpoints."""
    xa = np.asarray(x, dtype=float)
    _check_inside(profile, xa)
    if profile.mu == 0.0:
        out = np.full_like(xa, profile.scale)
    else:
        out = profile.scale * ((xa - profile.x0) / profile.length) ** profile.mu
    return float(out) if out.ndim == 0 else out


def eval_derivative(profile: DegeneracyProfile, x):
    """Derivative of the coefficient, for ``x`` strictly inside ``(x0, ell]``."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= profile.x0) or np.any(xa > profile.ell):
        raise DomainError("derivative is only evaluated on (x0, ell]")
    if profile.mu == 0.0:
        out = np.zeros_like(xa)
    else:
        s = (xa - profile.x0) / profile.length
        out = profile.scale * profile.mu * s ** (profile.mu - 1.0) / profile.length
    return float(out) if out.ndim == 0 else out


def degeneracy_measure(profile: DegeneracyProfile, n_samples: int = 100) -> float:
    """Sampled sup of ``(x - x0) |alpha'(x)| / alpha(x)`` over ``(x0, ell]``.

    Samples are geometric in the distance to ``x0`` (from ``1e-12 * length``
    up to ``ell``) since the supremum is approached as ``x -> x0+``.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    dist = profile.length * np.geomspace(1e-12, 1.0, n_samples)
    x = profile.x0 + dist
    ratio = dist * np.abs(eval_derivative(profile, x)) / eval_profile(profile, x)
    return float(np.max(ratio))


def lower_bound_margin(profile: DegeneracyProfile, x):
    """``alpha(x) - alpha(ell) * ((x - x0)/(ell - x0))**mu``; never below ``-1e-12``."""
    xa = np.asarray(x, dtype=float)
    _check_inside(profile, xa)
    bound = profile.scale * ((xa - profile.x0) / profile.length) ** profile.mu
    return eval_profile(profile, xa) - bound


def poincare_constant(profile: DegeneracyProfile) -> float:
    """Constant of the weighted Poincare inequality for functions vanishing at ``ell``."""
    L, mu, s = profile.length, profile.mu, profile.scale
    return max(L**2 / ((2.0 - mu) * s), 4.0 * L**mu / s)


def mean_poincare_constant(profile: DegeneracyProfile) -> float:
    """Constant bounding ``||u - u(ell)||^2`` by ``||sqrt(alpha) u'||^2``."""
    return profile.length**2 / ((2.0 - profile.mu) * profile.scale)


def inverse_integrable(profile: DegeneracyProfile) -> bool:
    """Whether ``1/alpha`` is integrable on ``(x0, ell)`` (weak degeneracy)."""
    return profile.mu < 1.0


def is_strongly_degenerate(profile: DegeneracyProfile) -> bool:
    return profile.mu >= 1.0
