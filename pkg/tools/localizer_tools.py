"""局在化関数 ψ のサンプリングツール."""
import logging
import math
from typing import Any, Dict, Optional

import numpy as np

from pronylab.formats import psi_samples_to_csv
from pronylab.localizer import LocalizerParams, Window, psi_at_origin, psi_counterexample_eval, psi_eval, psi_hat_eval

logger = logging.getLogger(__name__)

# d ≤ 2 の 1 軸あたりの格子点数の上限
MAX_GRID = 2001

# 求積で ψ を組み立てるときの 1 回あたりの点数
QUADRATURE_CHUNK = 512


def sample_points(d: int, q: float, grid: int) -> np.ndarray:
    """
    [−2q, 2q]^d 上のサンプル点.

    d ≤ 2 は直積格子、d ≥ 3 は座標軸と対角線上の点だけ. grid = 1 は原点のみ.

    Raises:
        ValueError: grid < 1、または d ≤ 2 で grid > MAX_GRID の場合
    """
    if grid < 1:
        raise ValueError(f"grid must be >= 1, got {grid}")
    if d <= 2 and grid > MAX_GRID:
        raise ValueError(f"grid {grid} exceeds {MAX_GRID} points per axis")
    axis = np.zeros(1) if grid == 1 else np.linspace(-2 * q, 2 * q, grid)
    if d <= 2:
        return np.array(np.meshgrid(*([axis] * d), indexing="ij")).reshape(d, -1).T
    lines = []
    for s in range(d):
        line = np.zeros((len(axis), d))
        line[:, s] = axis
        lines.append(line)
    lines.append(np.repeat(axis[:, None], d, axis=1))
    return np.unique(np.vstack(lines), axis=0)


async def sample_psi(
    d: int,
    N: int,
    q: Optional[float] = None,
    window: str = "hann",
    grid: int = 201,
) -> Dict[str, Any]:
    """
    ψ と ψ̂ をサンプリングする.

    ψ̂ は v = x·N/q で評価する. Hann 以外の窓は d = 2 のみ（ψ を求積で組み立て、ψ̂ は nan）.

    Args:
        d: 次元
        N: 周波数半径
        q: 台のパラメータ（省略時は √d/N）
        window: "hann", "parabolic", "plain-cosine"
        grid: 1 軸あたりの点数

    Returns:
        d, N, q, window, count, psi0, csv

    Raises:
        ValueError: 格子が大きすぎる場合や窓と次元の組み合わせが不正な場合
    """
    try:
        q = math.sqrt(d) / N if q is None else float(q)
        params = LocalizerParams(d, N, q, Window(window))
        points = sample_points(d, q, grid)
        logger.info(f"Sampling psi at {len(points)} points (d={d}, N={N}, q={q:.6g}, window={params.window.value})")

        if params.window == Window.HANN:
            psi = np.atleast_1d(psi_eval(params, points))
            psi_hat = np.atleast_1d(psi_hat_eval(params, points * N / q))
            psi0 = psi_at_origin(params)
        else:
            if d != 2:
                raise ValueError(f"window '{params.window.value}' is only sampled for d=2, got d={d}")
            psi = np.concatenate(
                [
                    np.atleast_1d(psi_counterexample_eval(params.window, N, q, chunk))
                    for chunk in np.array_split(points, max(1, len(points) // QUADRATURE_CHUNK))
                ]
            )
            psi_hat = np.full(len(points), np.nan)
            psi0 = float(psi_counterexample_eval(params.window, N, q, np.zeros(2)))

        return {
            "d": d,
            "N": N,
            "q": q,
            "window": params.window.value,
            "count": len(points),
            "psi0": psi0,
            "csv": psi_samples_to_csv(points, psi, psi_hat),
        }

    except Exception as e:
        logger.error(f"Failed to sample psi: {str(e)}")
        raise
