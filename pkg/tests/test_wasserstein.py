"""複素測度の Wasserstein 距離のテスト."""
import math

import numpy as np
import pytest

from pronylab.errors import DimensionMismatchError, NonBijectiveMatchingError, NotProbabilityLikeError
from pronylab.measure_model import AdmissibilityClass, DiscreteMeasure, measure_difference, random_admissible_pair
from pronylab.wasserstein import (
    total_variation,
    w1_complex,
    w1_upper_bound_matched,
    w1_upper_bound_tv,
)


def measure(nodes, weights) -> DiscreteMeasure:
    return DiscreteMeasure.from_arrays(np.asarray(nodes, dtype=float).reshape(len(weights), -1), weights)


def random_pair(seed: int, d: int = 1, M: int = 3, delta: float = 0.2):
    cls = AdmissibilityClass(0.05, 0.1 if d == 1 else 0.15, d, 16)
    return random_admissible_pair(cls, M, seed, delta)


class TestW1Exact:
    """閉形式で値が分かる場合."""

    def test_identical(self):
        mu = measure([0.1, 0.6], [0.3, 0.7])
        assert w1_complex(mu, mu).value == 0.0

    def test_two_point_real(self):
        result = w1_complex(measure([0.0], [1.0]), measure([0.3], [1.0]))
        assert result.value == pytest.approx(0.3, abs=1e-9)
        assert result.plan

    def test_two_point_complex(self):
        """(1+i)δ₀ − iδ_{1/2} と δ₀ の距離は θ = π/2 で 0.5."""
        mu1 = measure([0.0, 0.5], [1 + 1j, -1j])
        mu2 = measure([0.0], [1.0])
        result = w1_complex(mu1, mu2)
        assert result.value == pytest.approx(0.5, abs=1e-9)
        assert result.argmax_angle == pytest.approx(math.pi / 2, abs=1e-6)
        assert 0.0 <= result.argmax_angle < math.pi

    def test_requires_discrete_measures(self):
        mu = measure([0.0], [1.0])
        with pytest.raises(NotProbabilityLikeError):
            w1_complex(mu.as_atoms(), mu)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            w1_complex(measure([0.0], [1.0]), measure([[0.1, 0.2]], [1.0]))

    def test_invalid_angles(self):
        mu = measure([0.0], [1.0])
        with pytest.raises(ValueError):
            w1_complex(mu, mu, angles=0)


class TestW1Properties:
    """距離としての性質."""

    def test_symmetry(self):
        for seed in range(10):
            mu1, mu2 = random_pair(seed)
            forward = w1_complex(mu1, mu2, angles=90).value
            backward = w1_complex(mu2, mu1, angles=90).value
            assert forward == pytest.approx(backward, abs=1e-9)

    def test_triangle_inequality(self):
        cls = AdmissibilityClass(0.05, 0.1, 1, 16)
        for seed in range(20):
            a, b = random_admissible_pair(cls, 3, seed, 0.3)
            _, c = random_admissible_pair(cls, 3, seed + 1000, 0.3)
            ab = w1_complex(a, b, angles=60).value
            bc = w1_complex(b, c, angles=60).value
            ac = w1_complex(a, c, angles=60).value
            assert ac <= ab + bc + 1e-8

    def test_grid_refinement_does_not_decrease(self):
        for seed in range(5):
            mu1, mu2 = random_pair(seed, d=2)
            coarse = w1_complex(mu1, mu2, angles=45).value
            fine = w1_complex(mu1, mu2, angles=90).value
            assert fine >= coarse - 1e-9 * max(coarse, 1.0)

    def test_real_weights_peak_at_zero(self):
        """実数重みでは θ = 0 の値が最大."""
        mu1 = measure([0.1, 0.4, 0.7], [0.2, 0.5, 0.3])
        mu2 = measure([0.15, 0.45, 0.8], [0.3, 0.3, 0.4])
        result = w1_complex(mu1, mu2, angles=90)
        at_zero = dict(result.grid_profile)[0.0]
        assert at_zero == pytest.approx(result.value, abs=1e-9)

    def test_certificate_gap(self):
        """ポテンシャルによる証明値と θ プロファイルの差は小さい."""
        for seed in range(5):
            mu1, mu2 = random_pair(seed, d=2, M=4)
            result = w1_complex(mu1, mu2, angles=90)
            assert result.gap >= -1e-9
            assert result.gap <= 1e-6 * max(result.value, 1e-12)
            assert result.coarse_gap >= -1e-12


class TestUpperBounds:
    """解析的な上界のテスト."""

    def test_total_variation(self):
        assert total_variation(measure([0.1, 0.6], [0.3, 0.7])) == pytest.approx(1.0)
        difference = measure_difference(measure([0.0, 0.5], [1 + 1j, -1j]), measure([0.0], [1.0]))
        assert total_variation(difference) == pytest.approx(2.0)

    def test_total_variation_cancels_common_nodes(self):
        difference = measure_difference(measure([0.0], [1.0]), measure([0.0], [1.0]))
        assert total_variation(difference) == 0.0

    def test_tv_bound(self):
        mu1 = measure([0.0, 0.5], [1 + 1j, -1j])
        mu2 = measure([0.0], [1.0])
        assert w1_upper_bound_tv(mu1, mu2) == pytest.approx(math.sqrt(2.0))

    def test_matched_bound_two_points(self):
        bound = w1_upper_bound_matched(measure([0.0], [1.0]), measure([0.3], [1.0]), [0])
        assert bound == pytest.approx(0.3 * math.sqrt(2.0))

    def test_matched_bound_requires_bijection(self):
        mu = measure([0.1, 0.6], [0.3, 0.7])
        with pytest.raises(NonBijectiveMatchingError):
            w1_upper_bound_matched(mu, mu, [0, 0])

    def test_bounds_dominate(self):
        """どちらの上界も W₁ 以上."""
        for seed in range(15):
            mu1, mu2 = random_pair(seed, d=2, M=4, delta=0.3)
            value = w1_complex(mu1, mu2, angles=90).value
            assert w1_upper_bound_tv(mu1, mu2) >= value - 1e-12
            assert w1_upper_bound_matched(mu1, mu2, range(len(mu1))) >= value - 1e-12
