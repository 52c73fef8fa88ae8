"""Stationary problem ``A U = F``: discrete solve and closed-form reference.

Data ``F = (f1, f2, g1, g2)`` are polynomials: ``f1, f2`` on [0, 1] and
``g1, g2`` on [-1, 0], all in the global variable x. ``f1``/``g1`` are the
prescribed velocities, ``f2``/``g2`` the sources of ``(a u')' = f2`` and
``(b w')' = g2``.

The reference solution integrates the ODEs in closed form. With
``Phi = a u'`` on the right string and ``Psi = b w'`` on the left string,
both fluxes are polynomials, and every nested integral reduces to sums of
``z**(k - mu)`` monomials in the distance ``z`` to the degenerate end.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
import scipy.sparse.linalg as spla

from .assembly import ConfigurationError, OperatorMatrices, StateVector, Variant
from .coeff import DegeneracyProfile
from .mesh import StringMesh, inverse_offset_integral, weighted_offset_integral

_ZERO = Polynomial([0.0])


def _poly(p) -> Polynomial:
    if isinstance(p, Polynomial):
        return p
    if np.isscalar(p):
        return Polynomial([float(p)])
    return Polynomial(np.asarray(p, dtype=float))


@dataclass(frozen=True)
class StaticData:
    f1: Polynomial = field(default_factory=lambda: _ZERO)
    f2: Polynomial = field(default_factory=lambda: _ZERO)
    g1: Polynomial = field(default_factory=lambda: _ZERO)
    g2: Polynomial = field(default_factory=lambda: _ZERO)

    def __post_init__(self) -> None:
        for name in ("f1", "f2", "g1", "g2"):
            object.__setattr__(self, name, _poly(getattr(self, name)))

    @classmethod
    def constant(cls, f1=0.0, f2=0.0, g1=0.0, g2=0.0) -> "StaticData":
        return cls(_poly(f1), _poly(f2), _poly(g1), _poly(g2))

    def is_zero(self) -> bool:
        return all(not np.any(getattr(self, n).coef) for n in ("f1", "f2", "g1", "g2"))


class SingularSystemError(RuntimeError):
    pass


def _cell_load(string: StringMesh, f: Polynomial) -> np.ndarray:
    """``int f phi_i`` for the P1 hat functions, exact for polynomial ``f``."""
    npts = max(2, (f.degree() + 3) // 2 + 1)
    xg, wg = np.polynomial.legendre.leggauss(npts)
    fz = _shifted(f, string.x0)
    zl = string.offsets[:-1]
    h = string.widths
    t = 0.5 * (xg[None, :] + 1.0)
    z = zl[:, None] + h[:, None] * t
    fx = fz(z) * wg[None, :] * 0.5 * h[:, None]
    load = np.zeros(string.n_cells + 1)
    load[:-1] += np.sum(fx * (1.0 - t), axis=1)
    load[1:] += np.sum(fx * t, axis=1)
    return load


def load_vector(m: OperatorMatrices, f: Polynomial, g: Polynomial) -> np.ndarray:
    """Global ``int f phi_i`` on the right string plus ``int g phi_i`` on the left."""
    out = np.zeros(m.n_dofs)
    right = _cell_load(m.mesh.right, f)
    left = _cell_load(m.mesh.left, g)
    np.add.at(out, m.dof_map.right, right)
    keep = m.dof_map.left >= 0
    np.add.at(out, m.dof_map.left[keep], left[keep])
    return out


def interpolate(m: OperatorMatrices, f: Polynomial, g: Polynomial) -> np.ndarray:
    """Nodal interpolant: ``f`` on x >= 0, ``g`` on x < 0."""
    return np.where(m.x >= 0.0, f(m.x), g(m.x))


def project(m: OperatorMatrices, F: StaticData) -> StateVector:
    """Discrete representative of ``F``.

    Velocities are interpolated; sources are L2-projected so that the mass
    matrix maps them back to the exact load vector.
    """
    p = interpolate(m, F.f1, F.g1)
    q = m.solve_mass(load_vector(m, F.f2, F.g2))
    return StateVector(p, q)


def solve_discrete(m: OperatorMatrices, Fh: StateVector) -> StateVector:
    """Exact inverse of :func:`apply_generator` for an already projected ``Fh``."""
    rhs = -(m.M @ Fh.q) - m.damp_term @ Fh.p
    p = m.solve_stiffness(rhs)
    res = np.linalg.norm(m.S @ p - rhs)
    scale = spla.norm(m.S, 1) * np.linalg.norm(p) + np.linalg.norm(rhs)
    scale = max(scale, np.finfo(float).tiny)
    if not np.all(np.isfinite(p)) or res > 1e-10 * scale:
        raise SingularSystemError(f"static solve residual {res / scale:.3e} exceeds 1e-10")
    return StateVector(p, Fh.p.copy())


def solve_static(m: OperatorMatrices, F: StaticData) -> StateVector:
    """Galerkin solution of ``A_h U = F_h``.

    The load is assembled exactly, so the stiffness system is
    ``(K + Gamma) p = -int f2 phi - f1(1) e1``.
    """
    if F.is_zero():
        return StateVector.zeros(m.n_dofs)
    return solve_discrete(m, project(m, F))


def _shifted(p: Polynomial, x0: float) -> Polynomial:
    """Rewrite ``p(x)`` as a polynomial in ``z = x - x0``."""
    return p(Polynomial([x0, 1.0]))


def _int_power_poly(coef: np.ndarray, mu: float, zl, zr):
    """``int_{zl}^{zr} sum_j coef[j] z**(j - mu) dz`` with zero coefficients skipped."""
    zl = np.asarray(zl, dtype=float)
    zr = np.asarray(zr, dtype=float)
    out = np.zeros(np.broadcast(zl, zr).shape)
    for j, c in enumerate(coef):
        if c == 0.0:
            continue
        e = j + 1.0 - mu
        if e <= 0.0:
            raise ConfigurationError("non-integrable flux singularity in reference solution")
        out = out + c * (zr**e - zl**e) / e
    return out


@dataclass(frozen=True)
class AnalyticStatic:
    """Closed-form displacement of ``A U = F`` (velocities are ``f1``, ``g1``)."""

    a: DegeneracyProfile
    b: DegeneracyProfile
    variant: Variant
    flux0: float
    u0: float
    right_flux: Polynomial  # a u' in z = x
    left_flux: Polynomial  # b w' in z = x + 1

    def _coef(self, prof: DegeneracyProfile) -> float:
        return prof.scale / prof.length**prof.mu

    def displacement(self, x):
        x = np.asarray(x, dtype=float)
        zr = np.clip(x - self.a.x0, 0.0, None)
        zl = np.clip(x - self.b.x0, 0.0, None)
        ca, cb = self._coef(self.a), self._coef(self.b)
        # right: u(x) = u(0) + int_0^x Phi / a
        u = self.u0 + _int_power_poly(self.right_flux.coef, self.a.mu, 0.0, zr) / ca
        # left: w(x) = w(0) - int_x^0 Psi / b
        w = self.u0 - _int_power_poly(self.left_flux.coef, self.b.mu, zl, self.b.length) / cb
        out = np.where(x >= 0.0, u, w)
        return float(out) if out.ndim == 0 else out

    def flux(self, x):
        """``a u'`` for x > 0 and ``b w'`` for x < 0 (right limit at 0)."""
        x = np.asarray(x, dtype=float)
        out = np.where(x >= 0.0, self.right_flux(x - self.a.x0), self.left_flux(x - self.b.x0))
        return float(out) if out.ndim == 0 else out


def analytic_static(
    a: DegeneracyProfile,
    b: DegeneracyProfile,
    gamma: float,
    variant: Variant,
    F: StaticData,
) -> AnalyticStatic:
    if variant is Variant.WEAK_LEFT and b.mu >= 1.0:
        raise ConfigurationError("the Dirichlet variant needs mu_b < 1")
    if variant is Variant.STRONG_LEFT and b.mu < 1.0:
        raise ConfigurationError("the natural-condition variant needs mu_b >= 1")
    if a.mu >= 1.0:
        raise ConfigurationError("mu_a must be < 1")
    ca = a.scale / a.length**a.mu
    cb = b.scale / b.length**b.mu
    La, Lb = a.length, b.length

    src_r = _shifted(F.f2, a.x0).integ()  # int_0^x f2, in z = x
    src_l = _shifted(F.g2, b.x0).integ()  # int_{-1}^x g2, in z = x + 1
    total_r = float(src_r(La))
    total_l = float(src_l(Lb))
    f1_tip = float(F.f1(a.ell))
    # int_0^1 (1/a) int_0^s f2
    nested_r = float(_int_power_poly(src_r.coef, a.mu, 0.0, La)) / ca
    inv_a = La ** (1.0 - a.mu) / ((1.0 - a.mu) * ca)

    if variant is Variant.WEAK_LEFT:
        inv_b = Lb ** (1.0 - b.mu) / ((1.0 - b.mu) * cb)
        # int_{-1}^0 (1/b) int_s^0 g2 = total_l * inv_b - int (1/b) int_{-1}^s g2
        nested_l = total_l * inv_b - float(_int_power_poly(src_l.coef, b.mu, 0.0, Lb)) / cb
        # gamma u(1) + a(1) u'(1) + f1(1) = 0 with u(1) = u(0) + flux0 inv_a + nested_r
        # and u(0) = flux0 inv_b - nested_l
        denom = 1.0 + gamma * inv_b + gamma * inv_a
        flux0 = (gamma * nested_l - f1_tip - total_r - gamma * nested_r) / denom
        u0 = flux0 * inv_b - nested_l
        left_flux = src_l - total_l + flux0
    else:
        flux0 = total_l
        u0 = -(total_r + f1_tip) / gamma - nested_r - (1.0 / gamma + inv_a) * flux0
        left_flux = src_l
    right_flux = src_r + flux0
    return AnalyticStatic(
        a=a,
        b=b,
        variant=variant,
        flux0=float(flux0),
        u0=float(u0),
        right_flux=right_flux,
        left_flux=left_flux,
    )


def analytic_static_solution(
    a: DegeneracyProfile,
    b: DegeneracyProfile,
    gamma: float,
    variant: Variant,
    F: StaticData,
    x,
):
    """Closed-form displacement at ``x`` (``u`` for x >= 0, ``w`` for x < 0)."""
    return analytic_static(a, b, gamma, variant, F).displacement(x)


def energy_error(m: OperatorMatrices, Uh: StateVector, ref: AnalyticStatic) -> float:
    """Energy-norm distance between the discrete and exact displacement.

    ``sqrt(int a |u_h' - u'|^2 + int b |w_h' - w'|^2 + gamma |u_h(1) - u(1)|^2)``,
    evaluated cell by cell in closed form.
    """
    total = 0.0
    for string, prof, flux, vals in (
        (m.mesh.right, m.a, ref.right_flux, m.right_values(Uh.p)),
        (m.mesh.left, m.b, ref.left_flux, m.left_values(Uh.p)),
    ):
        c = prof.scale / prof.length**prof.mu
        zl = string.offsets[:-1]
        zr = string.offsets[1:]
        slope = np.diff(vals) / (zr - zl)
        w = c * ((zr ** (1 + prof.mu)) - zl ** (1 + prof.mu)) / (1 + prof.mu)
        anti = flux.integ()
        int_flux = anti(zr) - anti(zl)
        int_flux_sq = _int_power_poly((flux * flux).coef, prof.mu, zl, zr) / c
        cell = slope**2 * w - 2.0 * slope * int_flux + int_flux_sq
        total += float(np.sum(np.clip(cell, 0.0, None)))
    tip_err = Uh.p[m.tip] - ref.displacement(m.a.ell)
    total += m.gamma * m.a.scale * tip_err**2
    return float(np.sqrt(total))


def cell_fluxes(m: OperatorMatrices, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Harmonic-mean fluxes ``alpha u'`` per cell for (left, right) strings.

    Uses ``(u_r - u_l) / int_cell 1/alpha``, which is exact whenever the flux
    is constant on the cell. Cells where ``1/alpha`` is not integrable get 0.
    """
    out = []
    for string, prof, vals in (
        (m.mesh.left, m.b, m.left_values(p)),
        (m.mesh.right, m.a, m.right_values(p)),
    ):
        inv = inverse_offset_integral(prof, string.offsets[:-1], string.offsets[1:])
        out.append(np.diff(vals) / inv)
    return out[0], out[1]


def averaged_cell_fluxes(m: OperatorMatrices, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cell-averaged fluxes ``(1/h) int_cell alpha u_h'`` for (left, right) strings."""
    out = []
    for string, prof, vals in (
        (m.mesh.left, m.b, m.left_values(p)),
        (m.mesh.right, m.a, m.right_values(p)),
    ):
        h = string.widths
        w = weighted_offset_integral(prof, string.offsets[:-1], string.offsets[1:])
        out.append(np.diff(vals) / h * (w / h))
    return out[0], out[1]


def boundary_residual(m: OperatorMatrices, U: StateVector, F: StaticData) -> float:
    """``gamma u(1) + u'(1-) + f1(1)`` with the last-cell slope."""
    nodes = m.mesh.right.nodes
    p = m.right_values(U.p)
    slope = (p[-1] - p[-2]) / (nodes[-1] - nodes[-2])
    return float(m.gamma * p[-1] + slope + F.f1(m.a.ell))
