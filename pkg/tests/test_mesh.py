import numpy as np
import pytest

from degenwave.coeff import DegeneracyProfile, DomainError, left_coefficient, right_coefficient
from degenwave.mesh import (
    CoupledMesh,
    MeshSizeError,
    build_coupled_mesh,
    build_graded_mesh,
    default_grading,
    inverse_weighted_cell_integral,
    weighted_cell_integral,
)


@pytest.mark.parametrize(
    "args, expected",
    [
        ((0.0, 1.0, 4, 1.0), [0.0, 0.25, 0.5, 0.75, 1.0]),
        ((0.0, 1.0, 2, 2.0), [0.0, 0.25, 1.0]),
        ((-1.0, 0.0, 2, 2.0), [-1.0, -0.75, 0.0]),
    ],
)
def test_graded_nodes(args, expected):
    np.testing.assert_allclose(build_graded_mesh(*args).nodes, expected, rtol=0, atol=1e-15)


def test_smallest_cell_at_degenerate_end():
    m = build_graded_mesh(-1.0, 0.0, 16, 3.0)
    assert np.argmin(m.widths) == 0
    assert m.nodes[0] == -1.0 and m.nodes[-1] == 0.0


def test_size_error():
    with pytest.raises(MeshSizeError):
        build_graded_mesh(0.0, 1.0, 1, 1.0)
    with pytest.raises(ValueError):
        build_graded_mesh(0.0, 1.0, 4, 0.5)


def test_offsets_survive_strong_grading():
    # offsets below the double spacing near -1 must stay strictly increasing
    m = build_graded_mesh(-1.0, 0.0, 256, 12.0)
    assert np.all(np.diff(m.offsets) > 0.0)
    assert m.offsets[1] < 1e-25


def test_junction_shared():
    cm = build_coupled_mesh(8, 0.5, 1.5)
    assert cm.left.ell == cm.right.x0 == 0.0
    with pytest.raises(ValueError):
        CoupledMesh(build_graded_mesh(-1.0, -0.5, 4), build_graded_mesh(0.0, 1.0, 4))


def test_default_grading():
    assert default_grading(0.0) == 1.0
    assert default_grading(0.5) == 2.0
    assert default_grading(0.75) == 4.0
    assert default_grading(1.0) == default_grading(1.5) == 2.0


def test_weighted_cell_integral_examples():
    assert weighted_cell_integral(right_coefficient(0.5), 0.0, 0.25) == pytest.approx(0.25**1.5 / 1.5, rel=1e-15)
    assert weighted_cell_integral(right_coefficient(0.0), 0.2, 0.7) == pytest.approx(0.5, rel=1e-15)
    assert weighted_cell_integral(left_coefficient(1.0), -1.0, 0.0) == pytest.approx(0.5, rel=1e-15)
    with pytest.raises(DomainError):
        weighted_cell_integral(right_coefficient(0.5), 0.5, 0.25)


@pytest.mark.parametrize("mu", [0.0, 0.25, 0.5, 1.0, 1.5])
@pytest.mark.parametrize("n", [7, 64])
def test_total_weighted_integral(mu, n):
    prof = DegeneracyProfile(-1.0, 0.0, mu, scale=2.0)
    m = build_graded_mesh(-1.0, 0.0, n, default_grading(mu))
    total = np.sum(weighted_cell_integral(prof, m.nodes[:-1], m.nodes[1:]))
    assert total == pytest.approx(2.0 / (1.0 + mu), rel=1e-12)
    fine = build_graded_mesh(-1.0, 0.0, 2 * n, default_grading(mu))
    assert np.sum(weighted_cell_integral(prof, fine.nodes[:-1], fine.nodes[1:])) == pytest.approx(total, rel=1e-12)


def test_inverse_integral():
    prof = right_coefficient(0.5)
    assert inverse_weighted_cell_integral(prof, 0.0, 1.0) == pytest.approx(2.0)
    assert np.isinf(inverse_weighted_cell_integral(left_coefficient(1.5), -1.0, -0.5))
