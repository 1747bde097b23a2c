"""Vandermonde 行列の条件ツール."""
import logging
import math
from typing import Any, Dict, Union

from pronylab.formats import nodes_from_dict
from pronylab.stability_lab import check_pair_cluster_bound, cluster_decompose, vandermonde_sigma_min

logger = logging.getLogger(__name__)


def _finite(value: float):
    return value if math.isfinite(value) else None


async def analyze_vandermonde(nodes: Union[Dict[str, Any], str], N: int) -> Dict[str, Any]:
    """
    ノード集合の Vandermonde 行列の σ_min とペアクラスターの上下界.

    Args:
        nodes: 測度スキーマの dict または JSON 文字列（weights は無視）
        N: 周波数球の半径

    Returns:
        sigma_min, clusters, delta, tau, bound, nagel_bound, premise, nagel_premise, satisfied
        （Δ, τ が定義されないときは None）

    Raises:
        ClusterSizeExceededError: 3 点以上のクラスターがある場合
    """
    try:
        y = nodes_from_dict(nodes)
        d = y.dim
        logger.info(f"Analyzing Vandermonde matrix of {len(y)} nodes (d={d}, N={N})")
        decomposition = cluster_decompose(y, N, d)
        response = {
            "d": d,
            "N": N,
            "sigma_min": vandermonde_sigma_min(y, N, d),
            "clusters": [list(cluster) for cluster in decomposition.clusters],
            "delta": _finite(decomposition.delta),
            "tau": _finite(decomposition.tau),
        }
        if decomposition.pair_count:
            report = check_pair_cluster_bound(y, N, d)
            response.update(
                bound=report.rhs_terms["corollary"],
                ratio=report.meta["ratio"],
                premise=report.premise,
                delta_required=report.meta["delta_required"],
                nagel_bound=report.meta["nagel_bound"],
                nagel_delta_required=report.meta["nagel_delta_required"],
                nagel_premise=report.meta["nagel_premise"],
                satisfied=report.satisfied,
            )
        return response

    except Exception as e:
        logger.error(f"Failed to analyze Vandermonde matrix: {str(e)}")
        raise
