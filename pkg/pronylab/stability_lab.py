"""安定性定理の検証器.

2 つの許容測度について、定理の前提が成り立つかを判定し、結論の不等式の両辺を
評価して TheoremReport にまとめる. 前提が成り立たない入力では結論を主張しない
（成り立ったかどうかは診断情報としてだけ残す）.
"""
import contextvars
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from pronylab.errors import ClusterSizeExceededError, DimensionMismatchError
from pronylab.localizer import LocalizerParams, psi_hat_eval, psi_periodized
from pronylab.measure_model import (
    NORM_L2,
    NORM_LINF,
    AdmissibilityClass,
    DiscreteMeasure,
    FrequencySet,
    check_admissible,
    frequency_set,
    moment_map,
)
from pronylab.numerics import sigma_min_via_gram
from pronylab.torus_geometry import (
    EPS_NODE,
    NodeSet,
    matching_distance,
    pairwise_torus_distances,
    torus_norm,
)
from pronylab.wasserstein import DEFAULT_ANGLES, w1_complex

logger = logging.getLogger(__name__)

# 不等式判定の相対スラック
RELATIVE_SLACK = 1e-10

# 実行単位で上書きする相対スラック
slack_override: contextvars.ContextVar[Optional[float]] = contextvars.ContextVar("slack_override", default=None)

# √(5/3)：局所 Lipschitz 形と md オーダー評価で使う κ
KAPPA_LOCAL = math.sqrt(5.0 / 3.0)

# 改良定数が使える κ² の下限
IMPROVED_KAPPA_SQ = 13.0 / 9.0

# Vandermonde の σ_min を計算できる最大ノード数
MAX_VANDERMONDE_NODES = 64

Relation = Literal[">=", "<="]


def slack(lhs: float, rhs: float) -> float:
    relative = slack_override.get()
    return (RELATIVE_SLACK if relative is None else relative) * max(abs(lhs), abs(rhs), 1e-300)


def _margin(lhs: float, rhs: float, relation: Relation) -> float:
    return lhs - rhs if relation == ">=" else rhs - lhs


class TheoremReport(BaseModel):
    """
    1 つの定理を 1 組の入力で確かめた結果.

    margin は不等式が成り立つ向きに正（relation が ">=" なら lhs − Σrhs、"<=" なら Σrhs − lhs）.
    """

    theorem: str
    premise: bool
    lhs: float
    rhs_terms: Dict[str, float]
    relation: Relation = ">="
    margin: float
    conclusion_holds: bool
    extra_margins: Dict[str, float] = Field(default_factory=dict)
    checks: Dict[str, bool] = Field(default_factory=dict)
    meta: Dict[str, Any] = Field(default_factory=dict)

    @property
    def satisfied(self) -> bool:
        """前提が成り立つなら結論も成り立つ."""
        return (not self.premise) or self.conclusion_holds

    def to_record(self) -> Dict[str, Any]:
        """レポート JSON の 1 行分."""
        return {
            "theorem": self.theorem,
            "premise": self.premise,
            "lhs": self.lhs,
            "rhs_terms": dict(self.rhs_terms),
            "relation": self.relation,
            "margin": self.margin,
            "satisfied": self.satisfied,
            "conclusion_holds": self.conclusion_holds,
            "extra_margins": dict(self.extra_margins),
            "checks": dict(self.checks),
            "meta": dict(self.meta),
        }


def build_report(
    theorem: str,
    premise: bool,
    lhs: float,
    rhs_terms: Dict[str, float],
    relation: Relation = ">=",
    extras: Optional[Dict[str, Tuple[float, float]]] = None,
    checks: Optional[Dict[str, bool]] = None,
    meta: Optional[Dict[str, Any]] = None,
) -> TheoremReport:
    """
    両辺から TheoremReport を組み立てる.

    Args:
        theorem: 定理 ID
        premise: 前提が成り立つか
        lhs: 左辺
        rhs_terms: 右辺の項（和が右辺）
        relation: 不等式の向き
        extras: 同じ向きの追加不等式 name → (lhs, rhs)
        checks: 結論に含まれる構造的主張 name → 成否
        meta: 付随情報
    """
    rhs = float(sum(rhs_terms.values()))
    margin = _margin(lhs, rhs, relation)
    holds = margin >= -slack(lhs, rhs)
    extra_margins = {}
    for name, (extra_lhs, extra_rhs) in (extras or {}).items():
        extra_margins[name] = _margin(extra_lhs, extra_rhs, relation)
        holds = holds and extra_margins[name] >= -slack(extra_lhs, extra_rhs)
    checks = dict(checks or {})
    holds = holds and all(checks.values())
    return TheoremReport(
        theorem=theorem,
        premise=bool(premise),
        lhs=float(lhs),
        rhs_terms={name: float(value) for name, value in rhs_terms.items()},
        relation=relation,
        margin=float(margin),
        conclusion_holds=bool(holds),
        extra_margins=extra_margins,
        checks=checks,
        meta=dict(meta or {}),
    )


def _outside_class(theorem: str, detail: str, meta: Dict[str, Any]) -> TheoremReport:
    logger.debug(f"{theorem}: premise fails before evaluation ({detail})")
    return build_report(theorem, False, 0.0, {}, meta={**meta, "premise_detail": detail})


# ============================================================
# 分解
# ============================================================


@dataclass(frozen=True)
class MatchDecomposition:
    """
    結合ノード集合の Y₁/Y₂/Y₃ 分解.

    pairs[i] = (μ₁ のノード番号, μ₂ のノード番号)、Y₃ は両側の残りのノード.
    """

    q: float
    pairs: List[Tuple[int, int]]
    unmatched_first: List[int] = field(default_factory=list)
    unmatched_second: List[int] = field(default_factory=list)

    @property
    def Y1(self) -> List[int]:
        return [i for i, _ in self.pairs]

    @property
    def Y2(self) -> List[int]:
        return [j for _, j in self.pairs]

    @property
    def eta(self) -> Dict[int, int]:
        return dict(self.pairs)

    @property
    def Y3(self) -> List[Tuple[str, int]]:
        return [("mu1", i) for i in self.unmatched_first] + [("mu2", j) for j in self.unmatched_second]


def match_and_decompose(mu1: DiscreteMeasure, mu2: DiscreteMeasure, q: float) -> MatchDecomposition:
    """
    半径 q で結合ノード集合を分解する.

    μ₁ のノード t が Y₁ に入るのは、q 未満の距離にある μ₂ のノードがちょうど 1 つ η(t) で、
    η(t) から見ても q 未満の μ₁ のノードが t だけのとき. pairs は μ₁ のノードの辞書式順.

    Args:
        mu1: 測度 1
        mu2: 測度 2
        q: 半径

    Returns:
        MatchDecomposition

    Raises:
        DimensionMismatchError: 次元が異なる場合
    """
    if mu1.dim != mu2.dim:
        raise DimensionMismatchError(f"dimension mismatch: {mu1.dim} vs {mu2.dim}")
    close = pairwise_torus_distances(mu1.points, mu2.points) < q
    order = np.lexsort(mu1.points.T[::-1])
    pairs = []
    for i in order:
        partners = np.flatnonzero(close[i])
        if len(partners) == 1 and np.count_nonzero(close[:, partners[0]]) == 1:
            pairs.append((int(i), int(partners[0])))
    first = {i for i, _ in pairs}
    second = {j for _, j in pairs}
    return MatchDecomposition(
        q=q,
        pairs=pairs,
        unmatched_first=[int(i) for i in order if i not in first],
        unmatched_second=[j for j in range(len(mu2)) if j not in second],
    )


@dataclass(frozen=True)
class ClusterDecomposition:
    """単点とペアへの分割. delta は最小クラスター間距離、tau は最小ペア内距離（無ければ inf）."""

    clusters: List[Tuple[int, ...]]
    delta: float
    tau: float
    side: float

    @property
    def pair_count(self) -> int:
        return sum(1 for cluster in self.clusters if len(cluster) == 2)


def cluster_decompose(y, N: int, d: int) -> ClusterDecomposition:
    """
    一辺 √d/N の立方体に収まるノードをペアにまとめる.

    距離の小さい順に貪欲にペアを作る.

    Args:
        y: NodeSet または (M, d) 配列
        N: 周波数の半径
        d: 次元

    Returns:
        ClusterDecomposition

    Raises:
        ClusterSizeExceededError: 互いに √d/N 以内の 3 点がある場合
    """
    points = y.points if isinstance(y, NodeSet) else NodeSet(y).points
    if points.shape[1] != d:
        raise DimensionMismatchError(f"nodes have d={points.shape[1]}, expected {d}")
    side = math.sqrt(d) / N
    count = len(points)
    dist = pairwise_torus_distances(points, points)
    np.fill_diagonal(dist, np.inf)
    near = dist <= side
    for i in range(count):
        neighbours = np.flatnonzero(near[i])
        for a in range(len(neighbours)):
            for b in range(a + 1, len(neighbours)):
                if near[neighbours[a], neighbours[b]]:
                    raise ClusterSizeExceededError(
                        f"nodes {i}, {neighbours[a]}, {neighbours[b]} lie in one cube of side {side:.6g}"
                    )

    candidates = sorted((dist[i, j], i, j) for i in range(count) for j in range(i + 1, count) if near[i, j])
    label = -np.ones(count, dtype=int)
    clusters: List[Tuple[int, ...]] = []
    tau = math.inf
    for distance, i, j in candidates:
        if label[i] < 0 and label[j] < 0:
            label[i] = label[j] = len(clusters)
            clusters.append((i, j))
            tau = min(tau, float(distance))
    for i in range(count):
        if label[i] < 0:
            label[i] = len(clusters)
            clusters.append((i,))

    delta = math.inf
    if len(clusters) > 1:
        across = label[:, None] != label[None, :]
        delta = float(dist[across].min())
    return ClusterDecomposition(clusters=clusters, delta=delta, tau=tau, side=side)


def vandermonde_matrix(y, N: int, d: int, p=NORM_L2) -> np.ndarray:
    """𝒜 = (e^{−2πi k·t})_{k ∈ ℬ, t ∈ Y}."""
    points = y.points if isinstance(y, NodeSet) else NodeSet(y).points
    if points.shape[1] != d:
        raise DimensionMismatchError(f"nodes have d={points.shape[1]}, expected {d}")
    freq = frequency_set(d, N, p)
    phase = np.mod(freq.members.astype(float) @ points.T, 1.0)
    return np.exp(-2j * np.pi * phase)


def vandermonde_sigma_min(y, N: int, d: int, p=NORM_L2) -> float:
    """
    Vandermonde 行列の最小特異値 σ_min(𝒜).

    Args:
        y: ノード集合（64 点以下）
        N: 周波数の半径
        d: 次元
        p: 周波数球のノルム（"2" または "inf"）

    Returns:
        グラム行列 𝒜*𝒜 の最小固有値の平方根
    """
    count = len(y)
    if count > MAX_VANDERMONDE_NODES:
        raise ValueError(f"at most {MAX_VANDERMONDE_NODES} nodes supported, got {count}")
    return sigma_min_via_gram(vandermonde_matrix(y, N, d, p))


# ============================================================
# 共通の評価
# ============================================================


def _default_c_min(mu1: DiscreteMeasure, mu2: DiscreteMeasure, c_min: Optional[float]) -> float:
    if c_min is not None:
        return float(c_min)
    return float(min(np.abs(mu1.weights).min(), np.abs(mu2.weights).min()))


def _admissible_pair(mu1, mu2, cls: AdmissibilityClass) -> Tuple[bool, str]:
    for label, mu in (("mu1", mu1), ("mu2", mu2)):
        report = check_admissible(mu, cls)
        if not report.ok:
            return False, f"{label}: {report.failing_constraint} ({report.detail})"
    return True, ""


def _moment_difference(mu1, mu2, freq: FrequencySet) -> np.ndarray:
    return (moment_map(mu1, freq) - moment_map(mu2, freq)).values


def _pair_sums(mu1, mu2, decomposition: MatchDecomposition, weighted: bool) -> Tuple[float, float, float]:
    """(Σ w_t ‖t − η(t)‖², Σ |c_t − c_η(t)|², max ‖t − η(t)‖)."""
    node_sum, weight_sum, largest = 0.0, 0.0, 0.0
    for i, j in decomposition.pairs:
        c1, c2 = complex(mu1.weights[i]), complex(mu2.weights[j])
        shift = torus_norm(mu1.points[i] - mu2.points[j])
        factor = abs(c1) ** 2 + abs(c2) ** 2 if weighted else 1.0
        node_sum += factor * shift * shift
        weight_sum += abs(c1 - c2) ** 2
        largest = max(largest, shift)
    return node_sum, weight_sum, largest


def _base_meta(mu1, mu2, N: int, d: int, c_min: float, **extra) -> Dict[str, Any]:
    return {"N": N, "d": d, "M": max(len(mu1), len(mu2)), "c_min": c_min, **extra}


def _lipschitz_check(
    theorem: str,
    mu1: DiscreteMeasure,
    mu2: DiscreteMeasure,
    *,
    d: int,
    N: int,
    p: str,
    separation_required: float,
    radius: float,
    premise_factor: float,
    node_factor: float,
    weight_factor: float,
    weighted: bool,
    c_min: Optional[float],
    meta: Dict[str, Any],
) -> TheoremReport:
    """‖Δμ̂‖² ≥ node_factor·Σ‖Δt‖² + weight_factor·Σ|Δc|² 型の定理を確かめる."""
    if mu1.dim != mu2.dim:
        raise DimensionMismatchError(f"dimension mismatch: {mu1.dim} vs {mu2.dim}")
    c_min = _default_c_min(mu1, mu2, c_min)
    meta = {**_base_meta(mu1, mu2, N, d, c_min), **meta}
    if mu1.dim != d:
        return _outside_class(theorem, f"measures have d={mu1.dim}, theorem needs d={d}", meta)

    cls = AdmissibilityClass(c_min, separation_required, d, N, p)
    admissible, detail = _admissible_pair(mu1, mu2, cls)
    delta = _moment_difference(mu1, mu2, cls.moment_space())
    lhs = float(np.sum(np.abs(delta) ** 2))
    premise_bound = premise_factor * c_min ** 2
    premise = admissible and lhs < premise_bound
    if admissible and not premise:
        detail = f"moment difference {lhs:.6g} >= {premise_bound:.6g}"

    decomposition = match_and_decompose(mu1, mu2, separation_required / 2)
    node_sum, weight_sum, largest = _pair_sums(mu1, mu2, decomposition, weighted)
    rhs_terms = {"node": node_factor * c_min ** 2 * node_sum, "weight": weight_factor * weight_sum}
    checks = {
        "Y3-empty": not decomposition.Y3,
        "neighbour-radius": largest <= radius + EPS_NODE,
    }
    meta.update(
        premise_bound=premise_bound,
        neighbour_radius=radius,
        max_shift=largest,
        unmatched=len(decomposition.Y3),
    )
    if detail:
        meta["premise_detail"] = detail
    report = build_report(theorem, premise, lhs, rhs_terms, ">=", checks=checks, meta=meta)
    if report.premise and not report.conclusion_holds:
        logger.warning(f"{theorem}: conclusion fails under the premise (margin {report.margin:.3e})")
    return report


# ============================================================
# 定理の検証器
# ============================================================


def check_univariate(
    mu1: DiscreteMeasure,
    mu2: DiscreteMeasure,
    N: int,
    kappa: float = KAPPA_LOCAL,
    c_min: Optional[float] = None,
    meta: Optional[Dict[str, Any]] = None,
) -> TheoremReport:
    """
    1 変数 Lipschitz 定理（sep ≥ 2κ/N、前提 ‖Δμ̂‖² < (3κ²−1)/(2κ³)·N·c_min²）.

    κ² ≥ 13/9 では改良定数 10(κ²−1)/κ⁵·N³c_min² と (κ²+1)/(4κ³)·N、近傍半径 κ/(2N).
    それ以外の κ > 1 では (15/4)(κ²−1)/κ⁵·N³c_min² と (3κ²−1)/(8κ³)·N、近傍半径 κ/N.
    """
    if not kappa > 1:
        raise ValueError(f"kappa must be > 1, got {kappa}")
    k2 = kappa * kappa
    improved = k2 >= IMPROVED_KAPPA_SQ * (1 - 1e-12)
    if improved:
        node_factor = 10 * (k2 - 1) / kappa ** 5 * N ** 3
        weight_factor = (k2 + 1) / (4 * kappa ** 3) * N
        radius = kappa / (2 * N)
    else:
        node_factor = 3.75 * (k2 - 1) / kappa ** 5 * N ** 3
        weight_factor = 0.25 * (3 * k2 - 1) / (2 * kappa ** 3) * N
        radius = kappa / N
    return _lipschitz_check(
        "univariate",
        mu1,
        mu2,
        d=1,
        N=N,
        p=NORM_L2,
        separation_required=2 * kappa / N,
        radius=radius,
        premise_factor=(3 * k2 - 1) / (2 * kappa ** 3) * N,
        node_factor=node_factor,
        weight_factor=weight_factor,
        weighted=False,
        c_min=c_min,
        meta={"kappa": kappa, "branch": "improved" if improved else "general", **(meta or {})},
    )


def check_diederichs_univariate(
    mu1: DiscreteMeasure,
    mu2: DiscreteMeasure,
    N: int,
    c_min: Optional[float] = None,
    meta: Optional[Dict[str, Any]] = None,
) -> TheoremReport:
    """1 変数の既知の評価（sep ≥ 3/(N+1)、定数 2π²(N+1)³/3⁵ と (N+1)/3）."""
    return _lipschitz_check(
        "diederichs1d",
        mu1,
        mu2,
        d=1,
        N=N,
        p=NORM_L2,
        separation_required=3 / (N + 1),
        radius=3 / (2 * N + 2),
        premise_factor=(4 * N + 4) / 3,
        node_factor=2 * math.pi ** 2 * (N + 1) ** 3 / 3 ** 5,
        weight_factor=(N + 1) / 3,
        weighted=True,
        c_min=c_min,
        meta=dict(meta or {}),
    )


def check_2d_l2(
    mu1: DiscreteMeasure,
    mu2: DiscreteMeasure,
    N: int,
    c_min: Optional[float] = None,
    meta: Optional[Dict[str, Any]] = None,
) -> TheoremReport:
    """2 変数、ℓ² 球上のモーメント（sep ≥ 2√2/N、近傍半径 1/(√2 N)）."""
    return _lipschitz_check(
        "2d-l2",
        mu1,
        mu2,
        d=2,
        N=N,
        p=NORM_L2,
        separation_required=2 * math.sqrt(2) / N,
        radius=1 / (math.sqrt(2) * N),
        premise_factor=0.75 * N ** 2,
        node_factor=1.25 * N ** 4,
        weight_factor=N ** 2 / 16,
        weighted=False,
        c_min=c_min,
        meta=dict(meta or {}),
    )


def check_2d_linf_diederichs(
    mu1: DiscreteMeasure,
    mu2: DiscreteMeasure,
    N: int,
    c_min: Optional[float] = None,
    meta: Optional[Dict[str, Any]] = None,
) -> TheoremReport:
    """2 変数、∞ 球上のモーメントの既知の評価（sep ≥ 2/(N+1)）."""
    return _lipschitz_check(
        "2d-linf",
        mu1,
        mu2,
        d=2,
        N=N,
        p=NORM_LINF,
        separation_required=2 / (N + 1),
        radius=1 / (2 * (N + 1)),
        premise_factor=1.25 * (N + 1) ** 2,
        node_factor=15 / 16 * (N + 1) ** 4,
        weight_factor=0.75 * (N + 1) ** 2,
        weighted=True,
        c_min=c_min,
        meta=dict(meta or {}),
    )


def check_highd(
    mu1: DiscreteMeasure,
    mu2: DiscreteMeasure,
    N: int,
    d: int,
    c_min: Optional[float] = None,
    meta: Optional[Dict[str, Any]] = None,
) -> TheoremReport:
    """
    d 変数 Lipschitz 定理（d ≥ 2、sep ≥ 2√d/N、近傍半径 √d/(2N)）.

    前提 ‖Δμ̂‖² < (3/2)^{d−1} N^d c_min² / d^{d/2}、
    結論の定数 10(3/2)^{d−2}(d−1)/(d^{d/2} d²)·N^{d+2} c_min² と 2/(4^d d^{d/2})·N^d.
    """
    meta = dict(meta or {})
    if d < 2:
        c = _default_c_min(mu1, mu2, c_min)
        return _outside_class("highd", "d >= 2 required", _base_meta(mu1, mu2, N, d, c, **meta))
    root = d ** (d / 2)
    return _lipschitz_check(
        "highd",
        mu1,
        mu2,
        d=d,
        N=N,
        p=NORM_L2,
        separation_required=2 * math.sqrt(d) / N,
        radius=math.sqrt(d) / (2 * N),
        premise_factor=1.5 ** (d - 1) * N ** d / root,
        node_factor=10 * 1.5 ** (d - 2) * (d - 1) / (root * d * d) * N ** (d + 2),
        weight_factor=2 / (4 ** d * root) * N ** d,
        weighted=False,
        c_min=c_min,
        meta=meta,
    )


def global_w1_constant(M: int, d: int, N: int) -> float:
    """√(3M)(1 + 3/√2)(2/3)^{d/2−1/2} d^{d/4} / N^{d/2}."""
    return (
        math.sqrt(3 * M)
        * (1 + 3 / math.sqrt(2))
        * (2.0 / 3.0) ** (d / 2 - 0.5)
        * d ** (d / 4)
        / N ** (d / 2)
    )


def transport_decomposition_bound(
    mu1: DiscreteMeasure,
    mu2: DiscreteMeasure,
    decomposition: MatchDecomposition,
    M: int,
) -> float:
    """
    W₁ の分解上界 √(3M[(1+3/√2)² Σ_{Y₃}|c̃|² + 2Σ‖c_t‖²‖t−η(t)‖² + Σ|c_t − c_η(t)|²]).

    M は各測度のノード数の上限.
    """
    node_sum, weight_sum, _ = _pair_sums(mu1, mu2, decomposition, weighted=True)
    unmatched = sum(abs(complex(mu1.weights[i])) ** 2 for i in decomposition.unmatched_first)
    unmatched += sum(abs(complex(mu2.weights[j])) ** 2 for j in decomposition.unmatched_second)
    total = (1 + 3 / math.sqrt(2)) ** 2 * unmatched + 2 * node_sum + weight_sum
    return math.sqrt(3 * M * total)


def check_global_w1(
    mu1: DiscreteMeasure,
    mu2: DiscreteMeasure,
    N: int,
    M_cap: Optional[int] = None,
    c_min: Optional[float] = None,
    angles: int = DEFAULT_ANGLES,
    meta: Optional[Dict[str, Any]] = None,
) -> TheoremReport:
    """
    大域 Lipschitz 定理 W₁ ≤ C(M, d, N)‖Δμ̂‖₂ ≤ 2.3‖Δμ̂‖₂.

    分解上界も追加の不等式として確かめる. lhs は w1_complex の値（真の W₁ の下界）.
    """
    if mu1.dim != mu2.dim:
        raise DimensionMismatchError(f"dimension mismatch: {mu1.dim} vs {mu2.dim}")
    d = mu1.dim
    c_min = _default_c_min(mu1, mu2, c_min)
    M = int(M_cap) if M_cap is not None else max(len(mu1), len(mu2))
    meta = {**_base_meta(mu1, mu2, N, d, c_min), **(meta or {}), "M_cap": M}
    if d < 2:
        return _outside_class("global-w1", "d >= 2 required", meta)

    q = math.sqrt(d) / N
    cls = AdmissibilityClass(c_min, 2 * q, d, N)
    admissible, detail = _admissible_pair(mu1, mu2, cls)
    if max(len(mu1), len(mu2)) > M:
        admissible, detail = False, f"node count exceeds M_cap={M}"
    delta_norm = float(np.linalg.norm(_moment_difference(mu1, mu2, cls.moment_space())))
    w1 = w1_complex(mu1, mu2, angles=angles)
    full = global_w1_constant(M, d, N) * delta_norm
    simplified = 2.3 * delta_norm
    decomposition_bound = transport_decomposition_bound(mu1, mu2, match_and_decompose(mu1, mu2, q), M)
    meta.update(
        moment_l2=delta_norm,
        w1_gap=w1.gap,
        w1_coarse_gap=w1.coarse_gap,
        w1_theta=w1.argmax_angle,
        rhs_simplified=simplified,
        rhs_transport=decomposition_bound,
    )
    if detail:
        meta["premise_detail"] = detail
    report = build_report(
        "global-w1",
        admissible,
        w1.value,
        {"constant": full},
        "<=",
        extras={"simplified": (w1.value, simplified), "transport-decomposition": (w1.value, decomposition_bound)},
        meta=meta,
    )
    if report.premise and not report.conclusion_holds:
        logger.warning(f"global-w1: bound fails under the premise (margin {report.margin:.3e})")
    return report


def _local_premise(mu1, mu2, N: int, c_min: float) -> Tuple[bool, str, np.ndarray]:
    """κ = √(5/3) の 1 変数クラスと前提."""
    if mu1.dim != 1 or mu2.dim != 1:
        return False, "d = 1 required", np.zeros(0, dtype=complex)
    kappa = KAPPA_LOCAL
    cls = AdmissibilityClass(c_min, 2 * kappa / N, 1, N)
    admissible, detail = _admissible_pair(mu1, mu2, cls)
    delta = _moment_difference(mu1, mu2, cls.moment_space())
    bound = (3 * kappa ** 2 - 1) / (2 * kappa ** 3) * N * c_min ** 2
    l2sq = float(np.sum(np.abs(delta) ** 2))
    if admissible and not l2sq < bound:
        return False, f"moment difference {l2sq:.6g} >= {bound:.6g}", delta
    return admissible, detail, delta


def check_md_order(
    mu1: DiscreteMeasure,
    mu2: DiscreteMeasure,
    N: int,
    c_min: Optional[float] = None,
    meta: Optional[Dict[str, Any]] = None,
) -> TheoremReport:
    """md(Y₁, Y₂) ≤ √(max(5/(6c_min²), 5))·(5/3)^{1/4}·‖Δμ̂‖_∞ / N."""
    c_min = _default_c_min(mu1, mu2, c_min)
    meta = {**_base_meta(mu1, mu2, N, 1, c_min), **(meta or {})}
    premise, detail, delta = _local_premise(mu1, mu2, N, c_min)
    if len(delta) == 0:
        return _outside_class("md-order", detail, meta)
    if len(mu1) != len(mu2):
        return _outside_class("md-order", "node counts differ", meta)
    linf = float(np.max(np.abs(delta)))
    factor = math.sqrt(max(5 / (6 * c_min ** 2), 5.0)) * (5.0 / 3.0) ** 0.25
    lhs = matching_distance(mu1.nodes, mu2.nodes)
    if detail:
        meta["premise_detail"] = detail
    meta["moment_linf"] = linf
    return build_report("md-order", premise, lhs, {"moment": factor * linf / N}, "<=", meta=meta)


def check_local_lipschitz(
    mu1: DiscreteMeasure,
    mu2: DiscreteMeasure,
    N: int,
    c_min: Optional[float] = None,
    meta: Optional[Dict[str, Any]] = None,
) -> TheoremReport:
    """Σ|Δc|² + N²Σ‖Δt‖² ≤ max(5/(12c_min²), 5/2)·√(5/3)·‖Δμ̂‖₂² / (N+1)."""
    c_min = _default_c_min(mu1, mu2, c_min)
    meta = {**_base_meta(mu1, mu2, N, 1, c_min), **(meta or {})}
    premise, detail, delta = _local_premise(mu1, mu2, N, c_min)
    if len(delta) == 0:
        return _outside_class("lipschitz-local", detail, meta)
    decomposition = match_and_decompose(mu1, mu2, KAPPA_LOCAL / N)
    node_sum, weight_sum, _ = _pair_sums(mu1, mu2, decomposition, weighted=False)
    lhs = weight_sum + N * N * node_sum
    factor = max(5 / (12 * c_min ** 2), 2.5) * KAPPA_LOCAL
    rhs = factor * float(np.sum(np.abs(delta) ** 2)) / (N + 1)
    if detail:
        meta["premise_detail"] = detail
    return build_report(
        "lipschitz-local",
        premise,
        lhs,
        {"moment": rhs},
        "<=",
        checks={"Y3-empty": not decomposition.Y3},
        meta=meta,
    )


def pair_cluster_bound(tau: float, N: int, d: int) -> float:
    """√((d−1/2)/(3d²))(3/2)^{d/2}(Nτ)N^{d/2} / (2^{−1/2} d^{d/4})."""
    return (
        math.sqrt((d - 0.5) / (3 * d * d))
        * 1.5 ** (d / 2)
        * (N * tau)
        * N ** (d / 2)
        / (2 ** -0.5 * d ** (d / 4))
    )


def nagel_bound(tau: float, N: int, d: int) -> float:
    """(1/6)(Nτ)N^{d/2} / (2^{−1/2} d^{d/4})."""
    return (N * tau) * N ** (d / 2) / (6 * 2 ** -0.5 * d ** (d / 4))


def nagel_separation(tau: float, N: int, d: int) -> float:
    """(6d/N)(2/(τN))^{1/(d+1)}."""
    return 6 * d / N * (2 / (tau * N)) ** (1 / (d + 1))


def check_pair_cluster_bound(y, N: int, d: int, meta: Optional[Dict[str, Any]] = None) -> TheoremReport:
    """
    ペアクラスターの σ_min 下界（前提 Δ ≥ 2√d/N、ℓ² 球）.

    ∞ 球上の既知の下界も、その Δ の前提が成り立つ場合だけ追加の不等式として確かめる.
    両者の Δ の要求値は meta に記録する.

    Args:
        y: ノード集合
        N: 周波数の半径
        d: 次元
        meta: 付随情報

    Returns:
        TheoremReport（lhs = σ_min、relation ">="）

    Raises:
        ClusterSizeExceededError: 3 点以上のクラスターがある場合
    """
    nodes = y if isinstance(y, NodeSet) else NodeSet(y)
    decomposition = cluster_decompose(nodes, N, d)
    required = 2 * math.sqrt(d) / N
    tau = decomposition.tau
    meta = {
        "N": N,
        "d": d,
        "M": len(nodes),
        "delta": decomposition.delta,
        "tau": tau,
        "delta_required": required,
        **(meta or {}),
    }
    sigma = vandermonde_sigma_min(nodes, N, d, NORM_L2)
    if not math.isfinite(tau) or tau <= 0:
        meta["premise_detail"] = "no pair cluster"
        return build_report("vandermonde-pairs", False, sigma, {}, ">=", meta=meta)

    premise = decomposition.delta >= required
    bound = pair_cluster_bound(tau, N, d)
    extras = {}
    nagel_required = nagel_separation(tau, N, d)
    nagel_premise = decomposition.delta >= nagel_required
    if nagel_premise:
        sigma_inf = vandermonde_sigma_min(nodes, N, d, NORM_LINF)
        extras["nagel"] = (sigma_inf, nagel_bound(tau, N, d))
        meta["sigma_min_linf"] = sigma_inf
    meta.update(
        ratio=sigma / bound if bound > 0 else math.inf,
        nagel_delta_required=nagel_required,
        nagel_premise=nagel_premise,
        nagel_bound=nagel_bound(tau, N, d),
    )
    if not premise:
        meta["premise_detail"] = f"delta {decomposition.delta:.6g} < {required:.6g}"
    return build_report("vandermonde-pairs", premise, sigma, {"corollary": bound}, ">=", extras=extras, meta=meta)


# ============================================================
# 証明の中間量
# ============================================================


def pair_quadratic_form(psi0: float, psix: float, c1: complex, c2: complex) -> Dict[str, float]:
    """
    マッチしたペアの 2 次形式とその固有分解.

    ベクトル (c₁, −c₂) に対する [[ψ(0), ψ(x)], [ψ(x), ψ(0)]] の 2 次形式は
    (ψ(0)+ψ(x))|c₁−c₂|²/2 + (ψ(0)−ψ(x))|c₁+c₂|²/2 に等しい.

    Returns:
        {"form", "weight_part", "node_part", "split"}
    """
    c1, c2 = complex(c1), complex(c2)
    form = psi0 * (abs(c1) ** 2 + abs(c2) ** 2) - 2 * psix * (c1 * c2.conjugate()).real
    weight_part = (psi0 + psix) * abs(c1 - c2) ** 2 / 2
    node_part = (psi0 - psix) * abs(c1 + c2) ** 2 / 2
    return {
        "form": float(form),
        "weight_part": float(weight_part),
        "node_part": float(node_part),
        "split": float(weight_part + node_part),
    }


def poisson_quadratic_form(
    mu1: DiscreteMeasure,
    mu2: DiscreteMeasure,
    params: LocalizerParams,
    decomposition: Optional[MatchDecomposition] = None,
) -> Dict[str, float]:
    """
    ノード側の 2 次形式 Σ c̃ c̃' Σ_ℓ ψ(t − t' + ℓ) とモーメント側の値.

    c̃ は μ₁ − μ₂ の原子の重み. Poisson 和公式より
    node_form = Σ_k ψ̂(k)|Δμ̂(k)|² ≤ Σ_{k∈ℬ} ψ̂(k)|Δμ̂(k)|² ≤ ψ̂(0)‖Δμ̂‖₂².
    decomposition を渡すと node_form を マッチしたペア内 / Y₃ 内 / その他 に分ける.

    Returns:
        {"node_form", "moment_form", "dominating", 分解があれば "pairs", "unmatched", "cross"}
    """
    if mu1.dim != params.d or mu2.dim != params.d:
        raise DimensionMismatchError(f"measures must have d={params.d}")
    points = np.vstack([mu1.points, mu2.points])
    weights = np.concatenate([np.asarray(mu1.weights), -np.asarray(mu2.weights)])
    diffs = points[:, None, :] - points[None, :, :]
    kernel = psi_periodized(params, diffs)
    terms = np.real(weights[:, None] * weights.conj()[None, :] * kernel)

    freq = frequency_set(params.d, params.N, NORM_L2)
    delta = (moment_map(mu1, freq) - moment_map(mu2, freq)).values
    coefficients = psi_hat_eval(params, freq.members.astype(float))
    result = {
        "node_form": float(terms.sum()),
        "moment_form": float(np.sum(coefficients * np.abs(delta) ** 2)),
        "dominating": float(psi_hat_eval(params, np.zeros(params.d)) * np.sum(np.abs(delta) ** 2)),
    }
    if decomposition is not None:
        offset = len(mu1)
        block = -np.ones(len(points), dtype=int)
        for index, (i, j) in enumerate(decomposition.pairs):
            block[i] = block[offset + j] = index
        same_pair = (block[:, None] == block[None, :]) & (block[:, None] >= 0)
        unmatched = (block[:, None] < 0) & (block[None, :] < 0)
        result["pairs"] = float(terms[same_pair].sum())
        result["unmatched"] = float(terms[unmatched].sum())
        result["cross"] = result["node_form"] - result["pairs"] - result["unmatched"]
    return result


def table_constants(kappa: float = KAPPA_LOCAL) -> Dict[str, Any]:
    """
    1 変数定理の定数表.

    Returns:
        κ に依存する各定数（N と c_min の冪は除いたもの）
    """
    if not kappa > 1:
        raise ValueError(f"kappa must be > 1, got {kappa}")
    k2 = kappa * kappa
    return {
        "kappa": kappa,
        "diederichs_node": 4 * math.pi ** 2 / 3 ** 5,
        "diederichs_weight": 1.0 / 3.0,
        "diederichs_premise": 4.0 / 3.0,
        "improved_node": 10 * (k2 - 1) / kappa ** 5,
        "improved_weight": (k2 + 1) / (4 * kappa ** 3),
        "general_node": 3.75 * (k2 - 1) / kappa ** 5,
        "general_weight": 0.25 * (3 * k2 - 1) / (2 * kappa ** 3),
        "premise": (3 * k2 - 1) / (2 * kappa ** 3),
        "improved_applies": k2 >= IMPROVED_KAPPA_SQ,
    }
