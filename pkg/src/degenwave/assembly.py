"""P1 finite-element assembly of the coupled damped degenerate wave generator.

Displacement and velocity share one nodal layout ordered by increasing x.
The junction node x = 0 is a single DOF, which enforces continuity of
displacement; flux continuity is natural in the weak form. With the
Dirichlet variant the node x = -1 is dropped.

The semi-discrete system is ``M p'' + D p' + (K + Gamma) p = 0`` with
``Gamma = gamma e1 e1^T`` and ``D = e1 e1^T`` at the node x = 1. As a first
order system ``U = (p, q)`` this reads ``U' = A_h U`` with
``A_h U = (q, -M^{-1}((K + Gamma) p + D q))``.
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .coeff import DegeneracyProfile
from .mesh import CoupledMesh, StringMesh, weighted_offset_integral


class ConfigurationError(ValueError):
    """Inconsistent variant / coefficient / parameter combination."""


class Variant(enum.Enum):
    WEAK_LEFT = "WeakLeft"
    STRONG_LEFT = "StrongLeft"

    @classmethod
    def for_mu_b(cls, mu_b: float) -> "Variant":
        return cls.WEAK_LEFT if mu_b < 1.0 else cls.STRONG_LEFT


@dataclass(frozen=True)
class DofMap:
    """Global indices of each string's nodes (-1 marks an eliminated node)."""

    left: np.ndarray
    right: np.ndarray

    @property
    def junction(self) -> int:
        return int(self.right[0])

    @property
    def tip(self) -> int:
        """Index of the controlled end x = 1."""
        return int(self.right[-1])

    @property
    def size(self) -> int:
        return int(self.right[-1]) + 1


@dataclass(frozen=True)
class StateVector:
    p: np.ndarray
    q: np.ndarray

    def __post_init__(self) -> None:
        if np.shape(self.p) != np.shape(self.q):
            raise ValueError("displacement and velocity must have the same length")

    @classmethod
    def zeros(cls, n: int, dtype=float) -> "StateVector":
        return cls(np.zeros(n, dtype=dtype), np.zeros(n, dtype=dtype))

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "StateVector":
        n = len(arr) // 2
        return cls(arr[:n].copy(), arr[n:].copy())

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.p, self.q])

    def __add__(self, other: "StateVector") -> "StateVector":
        return StateVector(self.p + other.p, self.q + other.q)

    def __sub__(self, other: "StateVector") -> "StateVector":
        return StateVector(self.p - other.p, self.q - other.q)

    def __mul__(self, c) -> "StateVector":
        return StateVector(c * self.p, c * self.q)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class OperatorMatrices:
    M: sp.csr_matrix
    K: sp.csr_matrix
    gamma_term: sp.csr_matrix
    damp_term: sp.csr_matrix
    variant: Variant
    dof_map: DofMap
    mesh: CoupledMesh
    a: DegeneracyProfile
    b: DegeneracyProfile
    gamma: float
    x: np.ndarray

    @property
    def n_dofs(self) -> int:
        return self.M.shape[0]

    @property
    def tip(self) -> int:
        return self.dof_map.tip

    @cached_property
    def S(self) -> sp.csc_matrix:
        """Stiffness including the boundary spring, ``K + Gamma``."""
        return (self.K + self.gamma_term).tocsc()

    @cached_property
    def gram(self) -> sp.csc_matrix:
        """Energy Gram matrix ``diag(K + Gamma, M)``; ``||U||^2 = U^H G U = 2 E``."""
        return sp.block_diag([self.S, self.M], format="csc")

    @cached_property
    def _mass_lu(self):
        return spla.splu(self.M.tocsc())

    def solve_mass(self, rhs: np.ndarray) -> np.ndarray:
        return _solve(self._mass_lu, rhs)

    @cached_property
    def _stiff_lu(self):
        return spla.splu(self.S)

    def solve_stiffness(self, rhs: np.ndarray) -> np.ndarray:
        return _solve(self._stiff_lu, rhs)

    def without_damping(self) -> "OperatorMatrices":
        zero = sp.csr_matrix(self.damp_term.shape)
        return dataclasses.replace(self, damp_term=zero)

    def left_values(self, p: np.ndarray) -> np.ndarray:
        """Nodal values on the left string, with 0 at an eliminated node."""
        idx = self.dof_map.left
        out = np.zeros(len(idx), dtype=np.result_type(p, float))
        keep = idx >= 0
        out[keep] = p[idx[keep]]
        return out

    def right_values(self, p: np.ndarray) -> np.ndarray:
        return p[self.dof_map.right]


def _solve(lu, rhs: np.ndarray) -> np.ndarray:
    # real factorizations reject complex right-hand sides
    if np.iscomplexobj(rhs):
        return lu.solve(np.ascontiguousarray(rhs.real)) + 1j * lu.solve(np.ascontiguousarray(rhs.imag))
    return lu.solve(rhs)


def _build_dof_map(mesh: CoupledMesh, variant: Variant) -> DofMap:
    n_left = mesh.left.n_cells + 1
    n_right = mesh.right.n_cells + 1
    left = np.arange(n_left)
    if variant is Variant.WEAK_LEFT:
        left = left - 1
    right = left[-1] + np.arange(n_right)
    return DofMap(left=left, right=right)


MASS_WEIGHTS = {"consistent": 0.0, "lumped": 1.0, "blended": 0.5}


def _string_blocks(string: StringMesh, profile: DegeneracyProfile, mass: str):
    """Per-cell 2x2 mass and stiffness blocks.

    ``mass`` mixes the consistent block ``h/6 [[2, 1], [1, 2]]`` with the
    lumped one ``h/2 I``; the even blend cancels the leading ``(k h)**2``
    dispersion error of either.
    """
    h = string.widths
    w = weighted_offset_integral(profile, string.offsets[:-1], string.offsets[1:])
    k = w / h**2
    kblk = np.stack([k, -k, -k, k], axis=1).reshape(-1, 2, 2)
    t = MASS_WEIGHTS[mass]
    diag = (1.0 - t) * h / 3 + t * h / 2
    off = (1.0 - t) * h / 6
    mblk = np.stack([diag, off, off, diag], axis=1).reshape(-1, 2, 2)
    return mblk, kblk


def _scatter(blocks_and_maps, n: int) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for blocks, idx in blocks_and_maps:
        pairs = np.stack([idx[:-1], idx[1:]], axis=1)
        for a in range(2):
            for b in range(2):
                r, c, v = pairs[:, a], pairs[:, b], blocks[:, a, b]
                keep = (r >= 0) & (c >= 0)
                rows.append(r[keep])
                cols.append(c[keep])
                vals.append(v[keep])
    rows, cols, vals = (np.concatenate(z) for z in (rows, cols, vals))
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def assemble(
    mesh: CoupledMesh,
    a: DegeneracyProfile,
    b: DegeneracyProfile,
    gamma: float,
    variant: Variant | None = None,
    *,
    mass: str = "blended",
) -> OperatorMatrices:
    """Assemble mass, weighted stiffness and the x = 1 boundary terms.

    ``variant=None`` infers it from ``b.mu``. ``mass`` is one of
    ``"consistent"``, ``"lumped"`` or ``"blended"``.
    """
    if mass not in MASS_WEIGHTS:
        raise ConfigurationError(f"unknown mass matrix {mass!r}")
    if variant is None:
        variant = Variant.for_mu_b(b.mu)
    if gamma <= 0.0:
        raise ConfigurationError(f"gamma must be positive, got {gamma}")
    if a.mu >= 1.0:
        raise ConfigurationError(
            f"mu_a = {a.mu} >= 1: a strongly degenerate junction blocks the boundary "
            "control and is not supported"
        )
    if variant is not Variant.for_mu_b(b.mu):
        raise ConfigurationError(f"variant {variant.value} is inconsistent with mu_b = {b.mu}")
    if (a.x0, a.ell) != (mesh.right.x0, mesh.right.ell) or (b.x0, b.ell) != (
        mesh.left.x0,
        mesh.left.ell,
    ):
        raise ConfigurationError("coefficient intervals do not match the mesh")

    dof_map = _build_dof_map(mesh, variant)
    n = dof_map.size
    ml, kl = _string_blocks(mesh.left, b, mass)
    mr, kr = _string_blocks(mesh.right, a, mass)
    M = _scatter([(ml, dof_map.left), (mr, dof_map.right)], n)
    K = _scatter([(kl, dof_map.left), (kr, dof_map.right)], n)
    # both assembled in the same order, so symmetric up to summation order; force exactness
    M = ((M + M.T) * 0.5).tocsr()
    K = ((K + K.T) * 0.5).tocsr()

    tip = dof_map.tip
    # a(1) = 1 for the power-law coefficient
    gamma_term = sp.csr_matrix(([gamma], ([tip], [tip])), shape=(n, n))
    damp_term = sp.csr_matrix(([1.0], ([tip], [tip])), shape=(n, n))

    x = np.empty(n)
    keep = dof_map.left >= 0
    x[dof_map.left[keep]] = mesh.left.nodes[keep]
    x[dof_map.right] = mesh.right.nodes

    return OperatorMatrices(
        M=M,
        K=K,
        gamma_term=gamma_term,
        damp_term=damp_term,
        variant=variant,
        dof_map=dof_map,
        mesh=mesh,
        a=a,
        b=b,
        gamma=float(gamma),
        x=x,
    )


def apply_generator(m: OperatorMatrices, s: StateVector) -> StateVector:
    """``(p, q) -> (q, -M^{-1}((K + Gamma) p + D q))``."""
    if len(s.p) != m.n_dofs:
        raise ValueError(f"state has {len(s.p)} DOFs, operator has {m.n_dofs}")
    force = m.S @ s.p + m.damp_term @ s.q
    return StateVector(s.q.copy(), -m.solve_mass(force))


def energy_inner(m: OperatorMatrices, s: StateVector, t: StateVector) -> complex:
    """Energy inner product ``<s, t>``, linear in ``s``; ``<s, s> = 2 E(s)``."""
    return np.vdot(t.p, m.S @ s.p) + np.vdot(t.q, m.M @ s.q)


def energy_norm(m: OperatorMatrices, s: StateVector) -> float:
    return float(np.sqrt(max(np.real(energy_inner(m, s, s)), 0.0)))


def energy(m: OperatorMatrices, s: StateVector) -> float:
    """``E = (q^T M q + p^T K p + gamma |p(1)|^2) / 2``."""
    kin = np.real(np.vdot(s.q, m.M @ s.q))
    pot = np.real(np.vdot(s.p, m.K @ s.p))
    spring = m.gamma * abs(s.p[m.tip]) ** 2
    return 0.5 * float(kin + pot + spring)


def export_coo(m: OperatorMatrices, directory: str | Path, prefix: str = "") -> list[Path]:
    """Write M, K, gamma_term and damp_term as ``row col value`` text files."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name in ("M", "K", "gamma_term", "damp_term"):
        mat = getattr(m, name).tocoo()
        order = np.lexsort((mat.col, mat.row))
        path = directory / f"{prefix}{name}.coo"
        with path.open("w") as fh:
            fh.write(f"# {mat.shape[0]} {mat.shape[1]} {mat.nnz}\n")
            for r, c, v in zip(mat.row[order], mat.col[order], mat.data[order]):
                fh.write(f"{r} {c} {v:.17e}\n")
        written.append(path)
    return written


def read_coo(path: str | Path) -> sp.csr_matrix:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().lstrip("#").split()
    nr, nc = int(header[0]), int(header[1])
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.size == 0:
        return sp.csr_matrix((nr, nc))
    return sp.coo_matrix(
        (data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))), shape=(nr, nc)
    ).tocsr()
