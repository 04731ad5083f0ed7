import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rcrdesign import matrixkit as mk
from rcrdesign.criteria import d_criterion, imse_criterion
from rcrdesign.errors import (
    CountMismatch,
    IndexOutOfRange,
    NotPositiveDefinite,
    ShapeMismatch,
)
from rcrdesign.model import (
    CompoundProblem,
    Design,
    GridPoint,
    GroupSpec,
    exact_to_approximate,
    identical_groups,
    moment_linearity_check,
    moment_matrix,
    monomial_group,
    monomial_points,
    shared_grid,
    transformed_gmat,
)
from support import oracle_moment, random_group


def line(sigma=1.0, d=(0.0, 0.0), m=1, n=1, xs=(0.0, 1.0)):
    return monomial_group(xs, 1, np.diag(d), m, n, sigma)


def test_transformed_gmat_identity_is_bitwise():
    rng = np.random.default_rng(0)
    g = random_group(rng, 3, 4, l=2)
    plain = GroupSpec(g.points, np.eye(2), g.dmat, g.m, g.n)
    for t, pt in enumerate(g.points):
        assert np.array_equal(transformed_gmat(plain, t), pt.gmat)


def test_transformed_gmat_scalar_sigma():
    g = line(sigma=4.0, xs=(0.0, 0.5, 1.0))
    np.testing.assert_allclose(transformed_gmat(g, 2), [[0.5, 0.5]])
    np.testing.assert_allclose(transformed_gmat(g, 1), [[0.5, 0.25]])


def test_transformed_gmat_full_sigma():
    sigma = np.array([[2.0, 1.0], [1.0, 2.0]])
    pts = (GridPoint(0, "a", np.eye(2)), GridPoint(1, "b", np.array([[1.0, 2.0], [0.0, 1.0]])))
    g = GroupSpec(pts, sigma, np.zeros((2, 2)), 1, 1)
    # oracle: symmetric square root from numpy's eigendecomposition
    vals, vecs = np.linalg.eigh(sigma)
    s = vecs @ np.diag(vals**-0.5) @ vecs.T
    for t in range(2):
        np.testing.assert_allclose(transformed_gmat(g, t), s @ pts[t].gmat, atol=1e-14)


def test_transformed_gmat_index_error():
    with pytest.raises(IndexOutOfRange):
        transformed_gmat(line(), 2)


def test_moment_matrix_examples():
    g = line()
    np.testing.assert_allclose(moment_matrix(g, Design([0.5, 0.5])), [[1, 0.5], [0.5, 0.5]])
    np.testing.assert_allclose(moment_matrix(g, Design.one_point(2, 1)), [[1, 1], [1, 1]])
    for w in (0.1, 0.3, 0.77):
        np.testing.assert_allclose(moment_matrix(g, Design([1 - w, w])), [[1, w], [w, w]])
    with pytest.raises(ShapeMismatch):
        moment_matrix(g, Design([0.2, 0.3, 0.5]))


def test_moment_linearity_examples(rng):
    g = line()
    assert moment_linearity_check(g, Design([0.4, 0.6])) <= 1e-15
    assert moment_linearity_check(g, Design.one_point(2, 0)) == 0.0
    big = random_group(rng, 3, 5, l=2)
    assert moment_linearity_check(big, Design(rng.dirichlet(np.ones(5)))) <= 1e-12


@given(st.integers(0, 2**32 - 1), st.sampled_from([0.0, 0.25, 0.5, 0.75, 1.0]))
def test_moment_matrix_linear_and_psd(seed, alpha):
    rng = np.random.default_rng(seed)
    g = random_group(rng, int(rng.integers(1, 5)), int(rng.integers(2, 7)), l=int(rng.integers(1, 3)))
    w1, w2 = rng.dirichlet(np.ones(g.k)), rng.dirichlet(np.ones(g.k))
    mix = moment_matrix(g, alpha * w1 + (1 - alpha) * w2)
    parts = alpha * moment_matrix(g, w1) + (1 - alpha) * moment_matrix(g, w2)
    np.testing.assert_allclose(mix, parts, atol=1e-12 * max(1.0, np.abs(mix).max()))
    np.testing.assert_allclose(mix, oracle_moment(g, alpha * w1 + (1 - alpha) * w2),
                               atol=1e-10 * max(1.0, np.abs(mix).max()))
    assert mk.min_eigenvalue(0.5 * (mix + mix.T)) >= -1e-10


def test_exact_to_approximate():
    np.testing.assert_allclose(exact_to_approximate([1, 1], 2).weights, [0.5, 0.5])
    np.testing.assert_allclose(exact_to_approximate([0, 5], 5).weights, [0, 1])
    np.testing.assert_allclose(exact_to_approximate([3, 5], 8).weights, [0.375, 0.625])
    with pytest.raises(CountMismatch):
        exact_to_approximate([1, 2], 4)
    with pytest.raises(CountMismatch):
        exact_to_approximate([-1, 3], 2)


def test_design_normalisation():
    d = Design([0.5, 0.5 + 5e-10])
    assert d.weights.sum() == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        Design([0.5, 0.6])
    with pytest.raises(ValueError):
        Design([1.5, -0.5])
    with pytest.raises(ValueError):
        d.weights[0] = 0.1


def test_design_support_threshold():
    d = Design([1e-9, 0.5 - 1e-9, 0.5])
    assert list(d.support) == [1, 2]
    assert list(Design([1e-9, 0.5 - 1e-9, 0.5], support_threshold=1e-10).support) == [0, 1, 2]


def test_design_constructors():
    assert Design.uniform(4) == Design([0.25] * 4)
    assert list(Design.one_point(3, 2).weights) == [0, 0, 1]
    with pytest.raises(IndexOutOfRange):
        Design.one_point(3, 3)


def test_group_validation():
    pts = monomial_points([0.0, 1.0], 1)
    with pytest.raises(NotPositiveDefinite):
        GroupSpec(pts, np.array([[0.0]]), np.zeros((2, 2)), 1, 1)
    with pytest.raises(NotPositiveDefinite):
        GroupSpec(pts, np.eye(1), np.diag([1.0, -1.0]), 1, 1)
    with pytest.raises(ShapeMismatch):
        GroupSpec(pts, np.eye(2), np.zeros((2, 2)), 1, 1)
    with pytest.raises(ShapeMismatch):
        GroupSpec(pts, np.eye(1), np.zeros((3, 3)), 1, 1)
    mixed = (GridPoint(0, "a", np.ones((1, 2))), GridPoint(1, "b", np.ones((1, 3))))
    with pytest.raises(ShapeMismatch):
        GroupSpec(mixed, np.eye(1), np.zeros((2, 2)), 1, 1)
    with pytest.raises(ValueError):
        GroupSpec(pts, np.eye(1), np.zeros((2, 2)), 0, 1)


def test_group_accessors():
    g = line(d=(2.0, 0.5), m=3, n=4, xs=(0.0, 0.5, 1.0))
    assert (g.k, g.l, g.p) == (3, 1, 2)
    assert g.labels == ["0", "0.5", "1"]
    np.testing.assert_allclose(g.delta, np.diag([6.0, 1.5]))


def test_problem_invariants():
    a, b = line(m=2), line(m=3, xs=(0.0, 0.5))
    prob = CompoundProblem((a, b), d_criterion())
    assert prob.s == 2 and prob.p == 2 and prob.total_units == 2
    assert shared_grid((a, a)) and not shared_grid((a, b))
    assert identical_groups((a, line(m=2, n=7))) and not identical_groups((a, line(m=2, n=3, d=(1.0, 0.0))))
    with pytest.raises(ValueError):
        CompoundProblem((), d_criterion())
    with pytest.raises(ValueError):
        CompoundProblem((a, b), imse_criterion(a))
    CompoundProblem((a, line(m=5)), imse_criterion(a))
