"""モーメント計算ツール."""
import logging
from typing import Any, Dict, Union

from pronylab.formats import measure_from_dict, moment_rows, moments_to_csv
from pronylab.measure_model import frequency_set, moment_map

logger = logging.getLogger(__name__)


async def compute_moments(measure: Union[Dict[str, Any], str], N: int, p: str = "2") -> Dict[str, Any]:
    """
    測度のモーメント μ̂(k), k ∈ 周波数球 を計算する.

    Args:
        measure: 測度スキーマの dict または JSON 文字列
        N: 周波数球の半径
        p: 周波数球のノルム（"2" または "inf"）

    Returns:
        d, N, p, count, rows（[k_1, ..., k_d, re, im]）, csv

    Raises:
        FormatError: 測度のパースに失敗した場合
    """
    try:
        mu = measure_from_dict(measure)
        freq = frequency_set(mu.dim, N, p)
        logger.info(f"Computing {len(freq)} moments of a {len(mu)}-atom measure (d={mu.dim}, N={N}, p={freq.p})")
        h = moment_map(mu, freq)
        return {
            "d": mu.dim,
            "N": N,
            "p": freq.p,
            "count": len(freq),
            "rows": moment_rows(h),
            "csv": moments_to_csv(h),
        }

    except Exception as e:
        logger.error(f"Failed to compute moments: {str(e)}")
        raise
