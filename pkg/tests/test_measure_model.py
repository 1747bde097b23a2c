"""測度とモーメントのテスト."""
import numpy as np
import pytest

from pronylab.errors import DimensionMismatchError, FrequencySetMismatchError, NotProbabilityLikeError
from pronylab.measure_model import (
    AdmissibilityClass,
    AtomicMeasure,
    DiscreteMeasure,
    check_admissible,
    frequency_set,
    measure_difference,
    moment_l2_distance,
    moment_linf_distance,
    moment_map,
    random_admissible_pair,
    random_measure,
    shift_measure,
)
from pronylab.torus_geometry import separation


def delta_at(t) -> DiscreteMeasure:
    return DiscreteMeasure.from_arrays(np.atleast_2d(t), [1.0])


class TestFrequencySet:
    """周波数球のテスト."""

    def test_univariate(self):
        freq = frequency_set(1, 3)
        assert freq.members[:, 0].tolist() == [-3, -2, -1, 0, 1, 2, 3]

    def test_l2_ball_size(self):
        """d = 2, N = 2 の ℓ² 球は 13 点、∞ 球は 25 点."""
        assert len(frequency_set(2, 2, "2")) == 13
        assert len(frequency_set(2, 2, "inf")) == 25

    def test_lexicographic(self):
        members = frequency_set(2, 3).members
        keys = [tuple(k) for k in members]
        assert keys == sorted(keys)

    def test_invalid_norm(self):
        with pytest.raises(ValueError):
            frequency_set(2, 3, 1)


class TestMomentMap:
    """モーメント写像のテスト."""

    def test_delta_at_origin(self):
        """原点のディラック測度のモーメントはすべて 1."""
        h = moment_map(delta_at([0.0, 0.0]), frequency_set(2, 4))
        np.testing.assert_allclose(h.values, np.ones(len(h.values)))

    def test_dft_oracle(self):
        """格子点上の測度は DFT に一致する."""
        n = 8
        weights = np.random.default_rng(1).uniform(1, 2, n)
        weights = weights / weights.sum()
        mu = DiscreteMeasure.from_arrays(np.arange(n)[:, None] / n, weights)
        freq = frequency_set(1, 3)
        h = moment_map(mu, freq)
        expected = np.fft.fft(weights)[freq.members[:, 0] % n]
        np.testing.assert_allclose(h.values, expected, atol=1e-13)

    def test_shift_covariance(self):
        """平行移動でモーメントに位相 e^{−2πik·s} がかかる."""
        rng = np.random.default_rng(2)
        cls = AdmissibilityClass(0.05, 0.1, 2, 6)
        mu = random_measure(cls, 3, rng)
        s = np.array([0.3, -0.7])
        freq = frequency_set(2, 6)
        shifted = moment_map(shift_measure(mu, s), freq).values
        phase = np.exp(-2j * np.pi * (freq.members @ s))
        np.testing.assert_allclose(shifted, phase * moment_map(mu, freq).values, atol=1e-12)

    def test_linearity(self):
        """同じノード集合上では重みについて線形."""
        rng = np.random.default_rng(3)
        points = rng.uniform(0, 1, (5, 2))
        freq = frequency_set(2, 5)
        for _ in range(20):
            c1 = rng.normal(size=5) + 1j * rng.normal(size=5)
            c2 = rng.normal(size=5) + 1j * rng.normal(size=5)
            a, b = rng.normal(size=2) + 1j * rng.normal(size=2)
            combined = moment_map(AtomicMeasure(points, a * c1 + b * c2), freq).values
            expected = a * moment_map(AtomicMeasure(points, c1), freq).values + b * moment_map(
                AtomicMeasure(points, c2), freq
            ).values
            np.testing.assert_allclose(combined, expected, atol=1e-12)

    def test_moment_bound(self):
        """|μ̂(k)| ≤ Σ|c_j|."""
        rng = np.random.default_rng(4)
        freq = frequency_set(2, 6, "inf")
        for _ in range(50):
            count = int(rng.integers(1, 7))
            weights = rng.normal(size=count) + 1j * rng.normal(size=count)
            h = moment_map(AtomicMeasure(rng.uniform(0, 1, (count, 2)), weights), freq)
            assert np.all(np.abs(h.values) <= np.sum(np.abs(weights)) * (1 + 1e-12))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            moment_map(delta_at([0.1]), frequency_set(2, 3))

    def test_distances(self):
        freq = frequency_set(1, 2)
        a = moment_map(delta_at([0.0]), freq)
        b = moment_map(delta_at([0.5]), freq)
        # k = ±1 で差 2、k = ±2 と 0 で差 0
        assert moment_l2_distance(a, b) == pytest.approx(np.sqrt(8.0))
        assert moment_linf_distance(a, b) == pytest.approx(2.0)

    def test_frequency_mismatch(self):
        a = moment_map(delta_at([0.0]), frequency_set(1, 2))
        b = moment_map(delta_at([0.0]), frequency_set(1, 3))
        with pytest.raises(FrequencySetMismatchError):
            moment_l2_distance(a, b)


class TestDiscreteMeasure:
    """確率的複素測度のテスト."""

    def test_mass_must_be_one(self):
        with pytest.raises(NotProbabilityLikeError):
            DiscreteMeasure.from_arrays([[0.1], [0.2]], [0.5, 0.4])

    def test_zero_weight(self):
        with pytest.raises(NotProbabilityLikeError):
            DiscreteMeasure.from_arrays([[0.1], [0.2]], [1.0, 0.0])

    def test_difference_merges_common_nodes(self):
        mu = DiscreteMeasure.from_arrays([[0.1], [0.6]], [0.5, 0.5])
        nu = DiscreteMeasure.from_arrays([[0.1], [0.7]], [0.25, 0.75])
        diff = measure_difference(mu, nu)
        assert len(diff) == 3
        assert abs(np.sum(diff.weights)) < 1e-15


class TestAdmissibility:
    """許容クラスの判定と生成のテスト."""

    def test_failing_constraint_order(self):
        mu = DiscreteMeasure.from_arrays([[0.1], [0.12]], [0.99, 0.01])
        report = check_admissible(mu, AdmissibilityClass(0.05, 0.1, 1))
        assert not report.ok
        assert report.failing_constraint == "min-weight"

    def test_separation_failure(self):
        mu = DiscreteMeasure.from_arrays([[0.1], [0.12]], [0.5, 0.5])
        report = check_admissible(mu, AdmissibilityClass(0.05, 0.1, 1))
        assert report.failing_constraint == "separation"

    def test_generated_pairs_are_admissible(self):
        """生成した組はどちらも許容クラスに入る."""
        cls = AdmissibilityClass(0.05, 2 * np.sqrt(2) / 16, 2, 16)
        for seed in range(20):
            mu1, mu2 = random_admissible_pair(cls, 4, seed, 0.2)
            assert check_admissible(mu1, cls).ok
            assert check_admissible(mu2, cls).ok
            assert len(mu1) == len(mu2)
            assert separation(mu1.nodes) >= cls.q - 1e-12

    def test_pair_is_reproducible(self):
        cls = AdmissibilityClass(0.05, 0.08, 1, 32)
        a1, a2 = random_admissible_pair(cls, 4, 11, 0.1)
        b1, b2 = random_admissible_pair(cls, 4, 11, 0.1)
        np.testing.assert_array_equal(a1.points, b1.points)
        np.testing.assert_array_equal(a2.weights, b2.weights)

    def test_zero_jitter(self):
        cls = AdmissibilityClass(0.05, 0.08, 1, 32)
        mu1, mu2 = random_admissible_pair(cls, 3, 5, 0.0)
        np.testing.assert_array_equal(mu1.points, mu2.points)

    def test_moment_space_follows_norm(self):
        """モーメント空間の周波数集合はクラスのノルムで決まる."""
        assert len(AdmissibilityClass(0.05, 0.1, 2, 2).moment_space().members) == 13
        linf = AdmissibilityClass(0.05, 0.1, 2, 2, "inf").moment_space()
        assert len(linf.members) == 25
        assert linf.same_as(frequency_set(2, 2, "inf"))

    def test_capacity(self):
        """M·(2q)^d ≥ 1 は生成できない."""
        with pytest.raises(ValueError):
            random_admissible_pair(AdmissibilityClass(0.05, 0.25, 1), 2, 0, 0.1)
