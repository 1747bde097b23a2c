"""1 変数 ESPRIT によるノードと重みの復元、および安定性定理の検証."""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np
from scipy.linalg import hankel

from pronylab.errors import DimensionMismatchError, NumericalFailureError
from pronylab.measure_model import (
    AdmissibilityClass,
    AtomicMeasure,
    DiscreteMeasure,
    MomentVector,
    check_admissible,
    frequency_set,
    moment_map,
)
from pronylab.numerics import least_squares, subspace_svd
from pronylab.stability_lab import TheoremReport, build_report
from pronylab.torus_geometry import NodeSet, canonicalize, matching_distance

logger = logging.getLogger(__name__)

# 信号部分空間の特異値ギャップ σ_M/σ_{M+1} の下限
MIN_SINGULAR_GAP = 10.0

# 摂動の前提 ‖e‖_∞ < c_min / PREMISE_DIVISOR
PREMISE_DIVISOR = 60.0

# 結論の定数 190 M / c_min
STABILITY_FACTOR = 190.0


@dataclass(frozen=True)
class EspritConfig:
    """
    ESPRIT の設定.

    Attributes:
        N: モーメントの次数（k = −N..N）
        M: ノード数（既知）
        P: Hankel 行列の行数（省略時は N + 1）
    """

    N: int
    M: int
    P: Optional[int] = None

    def __post_init__(self):
        if self.N < 1 or self.M < 1:
            raise ValueError(f"N and M must be >= 1, got N={self.N}, M={self.M}")
        P = self.N + 1 if self.P is None else self.P
        if not 1 <= P <= 2 * self.N + 1:
            raise ValueError(f"pencil rows must lie in [1, 2N+1], got {P}")
        if self.M > min(P, 2 * self.N + 2 - P) - 1:
            raise ValueError(f"M={self.M} too large for a {P}x{2 * self.N + 2 - P} Hankel matrix")
        object.__setattr__(self, "P", P)

    @property
    def columns(self) -> int:
        return 2 * self.N + 2 - self.P


@dataclass(frozen=True, eq=False)
class EspritResult:
    """復元結果. unreliable は特異値ギャップが MIN_SINGULAR_GAP 未満のとき True."""

    nodes: NodeSet
    weights: np.ndarray
    singular_values: np.ndarray = field(repr=False)
    singular_gap: float = math.inf
    unreliable: bool = False

    def as_atoms(self) -> AtomicMeasure:
        return AtomicMeasure(self.nodes.points, self.weights)

    def as_measure(self) -> DiscreteMeasure:
        """総和を 1 に正規化した DiscreteMeasure."""
        return DiscreteMeasure(self.nodes, self.weights / self.weights.sum())


def esprit_recover(h: MomentVector, cfg: EspritConfig) -> EspritResult:
    """
    モーメント h(−N..N) からノードと重みを復元する.

    Hankel 行列 H[m, ℓ] = h(m + ℓ − N) の上位 M 個の右特異部分空間 W から
    シフト不変性 W[:-1] Ψ = W[1:] を最小二乗で解き、Ψ の固有値 λ の偏角から
    t = (−arg λ / 2π) mod 1 を得る. 重みは 2N+1 行の Vandermonde 系の最小二乗解.

    Args:
        h: 1 変数のモーメント（k = −N..N の連続した 2N+1 個）
        cfg: EspritConfig

    Returns:
        EspritResult（ノードは昇順）

    Raises:
        DimensionMismatchError: h が 1 変数でない、または次数が cfg と合わない場合
        NumericalFailureError: 固有値計算の失敗や復元ノードの衝突
    """
    freq = h.freq_set
    if freq.d != 1:
        raise DimensionMismatchError(f"ESPRIT needs univariate moments, got d={freq.d}")
    if freq.N != cfg.N or len(freq) != 2 * cfg.N + 1:
        raise DimensionMismatchError(f"expected moments k=-{cfg.N}..{cfg.N}, got {len(freq)} values")
    values = h.values
    H = hankel(values[: cfg.P], values[cfg.P - 1:])

    singular_values, right = subspace_svd(H)
    M = cfg.M
    if len(singular_values) > M:
        tail = singular_values[M]
        gap = math.inf if tail == 0 else float(singular_values[M - 1] / tail)
    else:
        gap = math.inf
    unreliable = gap < MIN_SINGULAR_GAP
    if unreliable:
        logger.warning(f"Unreliable ESPRIT subspace: sigma_M/sigma_M+1 = {gap:.3g} < {MIN_SINGULAR_GAP}")

    # 右特異ベクトルの共役が z_j^ℓ = e^{−2πi t_j ℓ} を張る
    W = right[:, :M].conj()
    psi = least_squares(W[:-1], W[1:])
    try:
        eigenvalues = np.linalg.eigvals(psi)
    except np.linalg.LinAlgError as e:
        raise NumericalFailureError(f"ESPRIT eigenvalues failed: {str(e)}") from e
    if np.any(eigenvalues == 0):
        raise NumericalFailureError("ESPRIT produced a zero eigenvalue")
    eigenvalues = eigenvalues / np.abs(eigenvalues)
    t = np.sort(canonicalize(-np.angle(eigenvalues) / (2 * np.pi)))
    try:
        nodes = NodeSet(t)
    except ValueError as e:
        raise NumericalFailureError(f"ESPRIT recovered colliding nodes: {str(e)}") from e

    k = freq.members[:, 0].astype(float)
    vandermonde = np.exp(-2j * np.pi * np.mod(np.outer(k, t), 1.0))
    weights = least_squares(vandermonde, values)
    logger.debug(f"ESPRIT recovered {M} nodes, singular gap {gap:.3g}")
    return EspritResult(nodes, weights, singular_values, gap, unreliable)


def check_esprit_stability(
    mu0: DiscreteMeasure,
    e,
    cfg: EspritConfig,
    c_min: Optional[float] = None,
    meta: Optional[Dict[str, Any]] = None,
) -> TheoremReport:
    """
    ESPRIT の安定性定理 md ≤ 190 M / c_min · ‖e‖_∞（前提 ‖e‖_∞ < c_min/60、sep ≥ 2/(N+1)）.

    μ̂₀ と μ̂₀ + e の両方から復元し、2 つのノード集合のマッチング距離を左辺とする.

    Args:
        mu0: 元の測度（1 変数）
        e: モーメントの摂動（長さ 2N+1）
        cfg: EspritConfig（M は mu0 のノード数）
        c_min: 最小重み（省略時は mu0 の min|c|）
        meta: 付随情報

    Returns:
        TheoremReport（relation "<="）
    """
    if mu0.dim != 1:
        raise DimensionMismatchError(f"ESPRIT needs a univariate measure, got d={mu0.dim}")
    c_min = float(np.abs(mu0.weights).min()) if c_min is None else float(c_min)
    freq = frequency_set(1, cfg.N)
    clean = moment_map(mu0, freq)
    noisy = clean + np.asarray(e, dtype=complex)
    e_inf = float(np.max(np.abs(noisy.values - clean.values)))

    admissible = check_admissible(mu0, AdmissibilityClass(c_min, 2 / (cfg.N + 1), 1, cfg.N))
    premise = admissible.ok and len(mu0) == cfg.M and e_inf < c_min / PREMISE_DIVISOR
    meta = {"N": cfg.N, "d": 1, "M": cfg.M, "c_min": c_min, "e_inf": e_inf, **(meta or {})}
    if not admissible.ok:
        meta["premise_detail"] = f"{admissible.failing_constraint} ({admissible.detail})"
    elif not premise:
        meta["premise_detail"] = f"perturbation {e_inf:.6g} >= c_min/{PREMISE_DIVISOR:g}"

    reference = esprit_recover(clean, cfg)
    perturbed = esprit_recover(noisy, cfg)
    lhs = matching_distance(reference.nodes, perturbed.nodes)
    meta.update(unreliable=reference.unreliable or perturbed.unreliable, singular_gap=perturbed.singular_gap)
    report = build_report(
        "esprit", premise, lhs, {"perturbation": STABILITY_FACTOR * cfg.M / c_min * e_inf}, "<=", meta=meta
    )
    if report.premise and not report.conclusion_holds:
        logger.warning(f"esprit: stability bound fails under the premise (margin {report.margin:.3e})")
    return report
