"""Wasserstein 距離ツール."""
import logging
from typing import Any, Dict, Union

from pronylab.formats import measure_from_dict
from pronylab.torus_geometry import bottleneck_matching, pairwise_torus_distances
from pronylab.wasserstein import DEFAULT_ANGLES, w1_complex, w1_upper_bound_matched, w1_upper_bound_tv

logger = logging.getLogger(__name__)


async def compute_w1(
    measure_a: Union[Dict[str, Any], str],
    measure_b: Union[Dict[str, Any], str],
    angles: int = DEFAULT_ANGLES,
) -> Dict[str, Any]:
    """
    2 つの複素測度の間の W₁ と解析的な上界.

    matched_bound はノード数が等しいときだけ、ボトルネック割当を η として評価する.

    Args:
        measure_a: 測度スキーマの dict または JSON 文字列
        measure_b: 同上
        angles: θ の粗い格子の分割数

    Returns:
        w1, theta, tv_bound, matched_bound（なければ None）, gap, coarse_gap
    """
    try:
        mu1 = measure_from_dict(measure_a)
        mu2 = measure_from_dict(measure_b)
        logger.info(f"Computing W1 between {len(mu1)}- and {len(mu2)}-atom measures (angles={angles})")
        result = w1_complex(mu1, mu2, angles)

        matched = None
        if len(mu1) == len(mu2):
            _, eta = bottleneck_matching(pairwise_torus_distances(mu1.points, mu2.points))
            matched = w1_upper_bound_matched(mu1, mu2, eta)

        return {
            "w1": result.value,
            "theta": result.argmax_angle,
            "tv_bound": w1_upper_bound_tv(mu1, mu2),
            "matched_bound": matched,
            "gap": result.gap,
            "coarse_gap": result.coarse_gap,
        }

    except Exception as e:
        logger.error(f"Failed to compute W1: {str(e)}")
        raise
