import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_operator
from degenwave.assembly import (
    ConfigurationError,
    StateVector,
    Variant,
    apply_generator,
    assemble,
    energy,
    energy_inner,
    energy_norm,
    export_coo,
    read_coo,
)
from degenwave.coeff import left_coefficient, right_coefficient
from degenwave.mesh import build_coupled_mesh
from degenwave.statics import StaticData, analytic_static, averaged_cell_fluxes, project, solve_static

CONFIGS = [(0.0, 0.0), (0.5, 0.5), (0.75, 1.0), (0.25, 1.5), (0.5, 1.5)]


def test_constant_coefficient_laplacian():
    m = make_operator(2, 0.0, 0.0, 1.0, 1.0)
    expected = 2.0 * np.array(
        [[2, -1, 0, 0], [-1, 2, -1, 0], [0, -1, 2, -1], [0, 0, -1, 1]], dtype=float
    )
    np.testing.assert_allclose(m.K.toarray(), expected, rtol=0, atol=1e-14)
    assert m.variant is Variant.WEAK_LEFT
    np.testing.assert_array_equal(m.x, [-0.5, 0.0, 0.5, 1.0])


def test_first_right_stiffness_entry():
    m = make_operator(8, 0.5, 0.5, 1.0, 1.0)
    h = 1.0 / 8
    j = m.dof_map.junction
    assert -m.K[j, j + 1] == pytest.approx(h**1.5 / (1.5 * h**2), rel=1e-14)


def test_strong_left_retains_end_node():
    m = make_operator(8, 0.5, 1.5)
    assert m.variant is Variant.STRONG_LEFT
    assert m.dof_map.left[0] == 0
    assert m.n_dofs == 17
    assert m.x[0] == -1.0
    # no constraint row: the end row is the plain stiffness row
    assert m.K[0, 0] == pytest.approx(-m.K[0, 1])
    weak = make_operator(8, 0.5, 0.5)
    assert weak.n_dofs == 16 and weak.dof_map.left[0] == -1


def test_configuration_errors():
    mesh = build_coupled_mesh(4, 0.5, 0.5)
    a, b = right_coefficient(0.5), left_coefficient(0.5)
    with pytest.raises(ConfigurationError):
        assemble(mesh, a, b, 0.0)
    with pytest.raises(ConfigurationError):
        assemble(mesh, a, b, 1.0, Variant.STRONG_LEFT)
    with pytest.raises(ConfigurationError, match="strongly degenerate junction"):
        assemble(build_coupled_mesh(4, 1.2, 0.5), right_coefficient(1.2), b, 1.0)


@pytest.mark.parametrize("mu_a, mu_b", CONFIGS)
def test_symmetry_and_definiteness(mu_a, mu_b):
    m = make_operator(32, mu_a, mu_b)
    assert (m.K != m.K.T).nnz == 0
    assert (m.M != m.M.T).nnz == 0
    sla.cholesky(m.M.toarray())
    sla.cholesky(m.S.toarray())


def test_generator_structure():
    m = make_operator(16, 0.5, 0.5)
    z = apply_generator(m, StateVector.zeros(m.n_dofs))
    assert not np.any(z.p) and not np.any(z.q)
    p = np.random.default_rng(1).standard_normal(m.n_dofs)
    out = apply_generator(m, StateVector(p, np.zeros_like(p)))
    assert not np.any(out.p)
    np.testing.assert_allclose(m.M @ out.q, -(m.S @ p), rtol=1e-12, atol=1e-12 * np.abs(m.S @ p).max())


@pytest.mark.parametrize("mu_a, mu_b", CONFIGS)
def test_generator_inverts_static_solve(mu_a, mu_b):
    m = make_operator(64, mu_a, mu_b)
    F = StaticData(f1=[0.3, 1.0], f2=[1.0, -2.0], g1=[0.0, 0.5], g2=[2.0])
    U = solve_static(m, F)
    back = apply_generator(m, U)
    Fh = project(m, F)
    assert energy_norm(m, back - Fh) <= 1e-9 * energy_norm(m, Fh)


def test_energy_examples():
    m = make_operator(16, 0.5, 0.5)
    assert energy(m, StateVector.zeros(m.n_dofs)) == 0.0
    q = np.random.default_rng(2).standard_normal(m.n_dofs)
    q /= np.sqrt(q @ (m.M @ q))
    assert energy(m, StateVector(np.zeros_like(q), q)) == pytest.approx(0.5, rel=1e-14)
    c = np.full(m.n_dofs, 3.0)
    s = StateVector(c, np.zeros_like(c))
    assert c @ (m.K @ c) > 0.0
    assert energy(m, s) > 0.0


@settings(max_examples=25, deadline=None)
@given(
    cfg=st.sampled_from(CONFIGS),
    seed=st.integers(0, 2**32 - 1),
    complex_state=st.booleans(),
)
def test_dissipativity(cfg, seed, complex_state):
    m = make_operator(64, *cfg)
    rng = np.random.default_rng(seed)
    n = m.n_dofs
    p, q = rng.standard_normal(n), rng.standard_normal(n)
    if complex_state:
        p = p + 1j * rng.standard_normal(n)
        q = q + 1j * rng.standard_normal(n)
    U = StateVector(p, q)
    AU = apply_generator(m, U)
    lhs = np.real(energy_inner(m, AU, U))
    rhs = -abs(q[m.tip]) ** 2
    scale = energy_norm(m, AU) * energy_norm(m, U)
    assert abs(lhs - rhs) <= 1e-10 * max(abs(rhs), scale)


def test_energy_matches_inner_product():
    m = make_operator(32, 0.25, 1.5)
    rng = np.random.default_rng(3)
    s = StateVector(rng.standard_normal(m.n_dofs), rng.standard_normal(m.n_dofs))
    assert 2.0 * energy(m, s) == pytest.approx(np.real(energy_inner(m, s, s)), rel=1e-13)


def test_junction_flux_consistency():
    F = StaticData(f1=[1.0], f2=[1.0, 1.0], g2=[0.5, 0.0, 1.0])
    gaps = []
    for n in (16, 64, 256):
        m = make_operator(n, 0.5, 0.5)
        left, right = averaged_cell_fluxes(m, solve_static(m, F).p)
        gaps.append(abs(right[0] - left[-1]))
    assert gaps[2] < gaps[1] < gaps[0]
    assert gaps[2] < 5e-3
    exact = analytic_static(m.a, m.b, m.gamma, m.variant, F).flux0
    assert right[0] == pytest.approx(exact, abs=5e-3)


def test_coo_round_trip(tmp_path):
    m = make_operator(8, 0.5, 1.5)
    paths = export_coo(m, tmp_path, prefix="op_")
    assert [p.name for p in paths] == ["op_M.coo", "op_K.coo", "op_gamma_term.coo", "op_damp_term.coo"]
    for p, name in zip(paths, ("M", "K", "gamma_term", "damp_term")):
        back = read_coo(p)
        assert (back != getattr(m, name)).nnz == 0
    first = paths[1].read_bytes()
    export_coo(m, tmp_path, prefix="op_")
    assert paths[1].read_bytes() == first
