"""ESPRIT による復元と安定性のテスト."""
import numpy as np
import pytest

from pronylab.errors import DimensionMismatchError
from pronylab.esprit import EspritConfig, check_esprit_stability, esprit_recover
from pronylab.measure_model import AdmissibilityClass, frequency_set, moment_map, random_measure
from pronylab.torus_geometry import bottleneck_matching, matching_distance, pairwise_torus_distances


def random_reference(seed: int, M: int, N: int = 32):
    cls = AdmissibilityClass(0.05, 2 / (N + 1), 1, N)
    return random_measure(cls, M, np.random.default_rng(seed))


class TestEspritConfig:
    """設定の検証."""

    def test_default_pencil(self):
        cfg = EspritConfig(32, 4)
        assert cfg.P == 33
        assert cfg.columns == 33

    @pytest.mark.parametrize("N,M,P", [(0, 1, None), (8, 0, None), (8, 2, 0), (8, 2, 18), (8, 9, None)])
    def test_invalid(self, N, M, P):
        with pytest.raises(ValueError):
            EspritConfig(N, M, P)


class TestEspritRecover:
    """雑音のない復元."""

    def test_noiseless_recovery(self):
        """M ≤ 6、N = 32 ではノードも重みも 1e-8 以内で戻る."""
        N = 32
        freq = frequency_set(1, N)
        for seed in range(100):
            M = 1 + seed % 6
            mu = random_reference(seed, M, N)
            result = esprit_recover(moment_map(mu, freq), EspritConfig(N, M))
            assert matching_distance(result.nodes, mu.nodes) <= 1e-8
            _, perm = bottleneck_matching(pairwise_torus_distances(mu.points, result.nodes.points))
            np.testing.assert_allclose(result.weights[perm], mu.weights, atol=1e-8)
            assert not result.unreliable

    def test_nodes_sorted(self):
        mu = random_reference(3, 5)
        result = esprit_recover(moment_map(mu, frequency_set(1, 32)), EspritConfig(32, 5))
        assert np.all(np.diff(result.nodes.points[:, 0]) > 0)
        assert result.as_measure().weights.sum() == pytest.approx(1.0)

    def test_custom_pencil(self):
        mu = random_reference(4, 3)
        result = esprit_recover(moment_map(mu, frequency_set(1, 32)), EspritConfig(32, 3, P=20))
        assert matching_distance(result.nodes, mu.nodes) <= 1e-8

    def test_order_mismatch(self):
        mu = random_reference(5, 2)
        with pytest.raises(DimensionMismatchError):
            esprit_recover(moment_map(mu, frequency_set(1, 16)), EspritConfig(32, 2))

    def test_multivariate_rejected(self):
        cls = AdmissibilityClass(0.05, 0.1, 2, 8)
        mu = random_measure(cls, 2, np.random.default_rng(0))
        with pytest.raises(DimensionMismatchError):
            esprit_recover(moment_map(mu, frequency_set(2, 8)), EspritConfig(8, 2))


class TestEspritStability:
    """安定性定理の検証."""

    def test_small_perturbation(self):
        N, M = 32, 4
        rng = np.random.default_rng(7)
        for seed in range(10):
            mu = random_reference(seed, M, N)
            c_min = float(np.abs(mu.weights).min())
            e = rng.normal(size=2 * N + 1) + 1j * rng.normal(size=2 * N + 1)
            e *= 1e-3 * c_min / np.max(np.abs(e))
            report = check_esprit_stability(mu, e, EspritConfig(N, M))
            assert report.premise
            assert report.satisfied
            assert report.meta["e_inf"] == pytest.approx(1e-3 * c_min)

    def test_large_perturbation_fails_premise(self):
        N, M = 32, 3
        mu = random_reference(1, M, N)
        c_min = float(np.abs(mu.weights).min())
        e = np.exp(2j * np.pi * np.random.default_rng(8).random(2 * N + 1)) * 2 * c_min / 60
        report = check_esprit_stability(mu, e, EspritConfig(N, M))
        assert not report.premise
        assert report.satisfied

    def test_zero_perturbation(self):
        mu = random_reference(2, 3)
        report = check_esprit_stability(mu, np.zeros(65), EspritConfig(32, 3))
        assert report.lhs == pytest.approx(0.0, abs=1e-10)
        assert report.premise
