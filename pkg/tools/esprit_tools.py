"""ESPRIT 復元ツール."""
import logging
from typing import Any, Dict, List, Optional, Union

import numpy as np

from pronylab.errors import DimensionMismatchError
from pronylab.esprit import PREMISE_DIVISOR, STABILITY_FACTOR, EspritConfig, esprit_recover
from pronylab.formats import measure_from_dict, measure_to_dict, moments_from_csv, moments_from_rows
from pronylab.measure_model import MomentVector, moment_map
from pronylab.torus_geometry import matching_distance

logger = logging.getLogger(__name__)


def _as_moments(moments: Union[str, List[List[float]]]) -> MomentVector:
    if isinstance(moments, str):
        return moments_from_csv(moments)
    return moments_from_rows(moments)


async def recover_measure(
    moments: Union[str, List[List[float]]],
    M: int,
    P: Optional[int] = None,
    reference: Optional[Union[Dict[str, Any], str]] = None,
    c_min: Optional[float] = None,
) -> Dict[str, Any]:
    """
    1 変数モーメントから ESPRIT でノードと重みを復元する.

    reference を渡すと、そのモーメントとの差 e に対する安定性上界 190M/c_min·‖e‖_∞ と
    復元ノードとのマッチング距離を stability に入れて返す.

    Args:
        moments: モーメント CSV の文字列、または [k, re, im] の行
        M: ノード数
        P: Hankel 行列の行数（省略時は N + 1）
        reference: 比較用の測度（測度スキーマ）
        c_min: 上界に使う最小重み（省略時は reference の min|c|）

    Returns:
        measure, singular_values, singular_gap, unreliable（reference があれば stability も）
    """
    try:
        h = _as_moments(moments)
        if h.freq_set.d != 1:
            raise DimensionMismatchError(f"ESPRIT needs univariate moments, got d={h.freq_set.d}")
        cfg = EspritConfig(h.freq_set.N, M, P)
        logger.info(f"Running ESPRIT with N={cfg.N}, M={cfg.M}, P={cfg.P}")
        result = esprit_recover(h, cfg)

        response = {
            "measure": measure_to_dict(result.as_atoms()),
            "singular_values": [float(s) for s in result.singular_values],
            "singular_gap": result.singular_gap,
            "unreliable": result.unreliable,
        }

        if reference is not None:
            mu0 = measure_from_dict(reference)
            c = float(np.abs(mu0.weights).min()) if c_min is None else float(c_min)
            e_inf = float(np.max(np.abs(h.values - moment_map(mu0, h.freq_set).values)))
            md = matching_distance(mu0.nodes, result.nodes) if len(mu0) == M else None
            response["stability"] = {
                "e_inf": e_inf,
                "c_min": c,
                "premise": e_inf < c / PREMISE_DIVISOR,
                "matching_distance": md,
                "bound": STABILITY_FACTOR * M / c * e_inf,
            }

        logger.info(f"ESPRIT finished: singular gap {result.singular_gap:.3g}")
        return response

    except Exception as e:
        logger.error(f"Failed to recover measure with ESPRIT: {str(e)}")
        raise
