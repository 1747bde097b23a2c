"""数値計算カーネルのテスト."""
import numpy as np
import pytest

from pronylab.errors import IllPosedError, UnbalancedProblemError
from pronylab.numerics import (
    HermitianMatrix,
    TransportProblem,
    hermitian_eigen,
    least_squares,
    min_cost_transport,
    sigma_min_via_gram,
    subspace_svd,
)
from pronylab.torus_geometry import pairwise_torus_distances


def random_hermitian(rng, n: int) -> np.ndarray:
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return a + a.conj().T


class TestHermitianEigen:
    """エルミート固有分解のテスト."""

    def test_decomposition(self):
        rng = np.random.default_rng(0)
        a = random_hermitian(rng, 12)
        values, vectors = hermitian_eigen(a)
        assert np.all(np.diff(values) >= 0)
        np.testing.assert_allclose(vectors.conj().T @ vectors, np.eye(12), atol=1e-12)
        np.testing.assert_allclose(a @ vectors, vectors * values, atol=1e-10 * np.linalg.norm(a))
        assert values.sum() == pytest.approx(np.trace(a).real)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            HermitianMatrix(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            HermitianMatrix(np.zeros((2, 3)))


class TestSingularValues:
    """特異値計算のテスト."""

    def test_sigma_min_matches_svd(self):
        rng = np.random.default_rng(1)
        a = rng.normal(size=(30, 5)) + 1j * rng.normal(size=(30, 5))
        expected = np.linalg.svd(a, compute_uv=False)[-1]
        assert sigma_min_via_gram(a) == pytest.approx(expected, rel=1e-8)

    def test_rank_deficient_gives_zero(self):
        column = np.arange(1.0, 11.0)
        a = np.stack([column, 2 * column], axis=1)
        assert sigma_min_via_gram(a) == pytest.approx(0.0, abs=1e-5)

    def test_requires_tall_matrix(self):
        with pytest.raises(ValueError):
            sigma_min_via_gram(np.zeros((2, 3)))

    def test_subspace_svd(self):
        rng = np.random.default_rng(2)
        a = rng.normal(size=(8, 6)) + 1j * rng.normal(size=(8, 6))
        singular_values, right = subspace_svd(a)
        np.testing.assert_allclose(singular_values, np.linalg.svd(a, compute_uv=False))
        np.testing.assert_allclose(np.linalg.norm(a @ right, axis=0), singular_values, rtol=1e-10)


class TestLeastSquares:
    """最小二乗のテスト."""

    def test_exact_solution(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(10, 3))
        x = np.array([1.0, -2.0, 0.5])
        np.testing.assert_allclose(least_squares(a, a @ x), x, atol=1e-12)

    def test_underdetermined(self):
        with pytest.raises(IllPosedError):
            least_squares(np.ones((2, 3)), np.ones(2))

    def test_rank_deficient(self):
        a = np.ones((4, 2))
        with pytest.raises(IllPosedError):
            least_squares(a, np.ones(4))


class TestTransport:
    """最小費用輸送のテスト."""

    def test_two_points(self):
        """単位質量を 0.3 だけ動かすコストは 0.3."""
        problem = TransportProblem(np.array([[0.0]]), np.array([1.0]), np.array([[0.3]]), np.array([1.0]))
        solution = min_cost_transport(problem)
        assert solution.cost == pytest.approx(0.3, abs=1e-12)
        assert solution.plan == [(0, 0, pytest.approx(1.0))]

    def test_wraparound(self):
        problem = TransportProblem(np.array([[0.05]]), np.array([1.0]), np.array([[0.95]]), np.array([1.0]))
        assert min_cost_transport(problem).cost == pytest.approx(0.1, abs=1e-12)

    def test_empty(self):
        problem = TransportProblem(np.zeros((0, 1)), np.zeros(0), np.zeros((0, 1)), np.zeros(0))
        assert min_cost_transport(problem).cost == 0.0

    def test_unbalanced(self):
        with pytest.raises(UnbalancedProblemError):
            TransportProblem(np.array([[0.0]]), np.array([1.0]), np.array([[0.3]]), np.array([0.5]))

    def test_duality_and_slackness(self):
        """ポテンシャルが双対許容で、双対ギャップが小さい."""
        rng = np.random.default_rng(4)
        a, b = rng.uniform(0.1, 1.0, 6), rng.uniform(0.1, 1.0, 5)
        b = b / b.sum() * a.sum()
        xs, ys = rng.random((6, 2)), rng.random((5, 2))
        solution = min_cost_transport(TransportProblem(xs, a, ys, b))
        cost = pairwise_torus_distances(xs, ys)
        u, v = solution.source_potentials, solution.sink_potentials
        assert np.all(u[:, None] - v[None, :] <= cost + 1e-9)
        assert solution.duality_gap <= 1e-9 * max(1.0, solution.cost)
        for i, j, mass in solution.plan:
            if mass > 1e-9:
                assert u[i] - v[j] == pytest.approx(cost[i, j], abs=1e-8)
        shipped = np.zeros(6)
        for i, _, mass in solution.plan:
            shipped[i] += mass
        np.testing.assert_allclose(shipped, a, atol=1e-9)
