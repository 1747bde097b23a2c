"""離散複素測度、許容クラス、周波数球、および順方向モーメント写像."""
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from pronylab.errors import (
    DimensionMismatchError,
    FrequencySetMismatchError,
    NotProbabilityLikeError,
    SamplingBudgetExhaustedError,
)
from pronylab.torus_geometry import (
    EPS_NODE,
    NodeSet,
    canonicalize,
    pairwise_torus_distances,
    separation,
    torus_norms,
)

logger = logging.getLogger(__name__)

# Σc = 1 の許容誤差
EPS_MASS = 1e-10

# 棄却サンプリングの上限
SAMPLING_BUDGET = 100_000

NORM_L2 = "2"
NORM_LINF = "inf"


def parse_norm(p) -> str:
    """
    ノルム指定を正規化する.

    Args:
        p: 2, "2", "inf", "∞", float("inf") のいずれか

    Returns:
        "2" または "inf"
    """
    if isinstance(p, str):
        key = p.strip().lower()
        if key in ("2", "l2"):
            return NORM_L2
        if key in ("inf", "∞", "linf", "max"):
            return NORM_LINF
    elif isinstance(p, (int, float)):
        if p == 2:
            return NORM_L2
        if math.isinf(p):
            return NORM_LINF
    raise ValueError(f"norm selector must be 2 or inf, got {p!r}")


@dataclass(frozen=True, eq=False)
class FrequencySet:
    """周波数球 ℬ = {k ∈ Z^d : ‖k‖_p ≤ N}（辞書式順に列挙）."""

    d: int
    N: int
    p: str
    members: np.ndarray

    def __len__(self) -> int:
        return self.members.shape[0]

    def same_as(self, other: "FrequencySet") -> bool:
        return (self.d, self.N, self.p) == (other.d, other.N, other.p)


def frequency_set(d: int, N: int, p=NORM_L2) -> FrequencySet:
    """
    周波数球を整数演算で列挙する.

    Args:
        d: 次元
        N: 半径
        p: ノルム（2 または inf）

    Returns:
        FrequencySet
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if N < 0:
        raise ValueError(f"N must be >= 0, got {N}")
    norm = parse_norm(p)
    grid = np.array(list(itertools.product(range(-N, N + 1), repeat=d)), dtype=np.int64)
    if norm == NORM_L2:
        grid = grid[(grid * grid).sum(axis=1) <= N * N]
    grid.setflags(write=False)
    return FrequencySet(d=d, N=N, p=norm, members=grid)


@dataclass(frozen=True, eq=False)
class MomentVector:
    """周波数集合上の三角モーメント μ̂(k)."""

    freq_set: FrequencySet
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (len(self.freq_set),):
            raise ValueError(
                f"expected {len(self.freq_set)} moment values, got shape {values.shape}"
            )
        object.__setattr__(self, "values", values)

    def __add__(self, other):
        if isinstance(other, MomentVector):
            _require_same_freq(self, other)
            other = other.values
        return MomentVector(self.freq_set, self.values + np.asarray(other, dtype=complex))

    def __sub__(self, other: "MomentVector") -> "MomentVector":
        _require_same_freq(self, other)
        return MomentVector(self.freq_set, self.values - other.values)


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    """制約のない複素離散測度（差分測度や全変動の計算に使う）."""

    points: np.ndarray
    weights: np.ndarray

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """確率的複素測度 μ = Σ c_j δ_{t_j}（Σ c_j = 1、c_j ≠ 0、ノードは相異なる）."""

    nodes: NodeSet
    weights: np.ndarray

    def __post_init__(self):
        nodes = self.nodes if isinstance(self.nodes, NodeSet) else NodeSet(self.nodes)
        weights = np.atleast_1d(np.asarray(self.weights, dtype=complex)).copy()
        if weights.shape != (len(nodes),):
            raise NotProbabilityLikeError(
                f"{len(nodes)} nodes but {weights.size} weights"
            )
        if np.any(np.abs(weights) == 0):
            raise NotProbabilityLikeError("weights must be nonzero")
        total = weights.sum()
        if abs(total - 1.0) > EPS_MASS:
            raise NotProbabilityLikeError(f"weights sum to {total}, expected 1")
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_arrays(cls, nodes, weights) -> "DiscreteMeasure":
        return cls(NodeSet(np.asarray(nodes, dtype=float)), np.asarray(weights, dtype=complex))

    @property
    def dim(self) -> int:
        return self.nodes.dim

    @property
    def points(self) -> np.ndarray:
        return self.nodes.points

    def __len__(self) -> int:
        return len(self.nodes)

    def as_atoms(self) -> AtomicMeasure:
        return AtomicMeasure(self.points, np.asarray(self.weights))


@dataclass(frozen=True)
class AdmissibilityClass:
    """許容クラス 𝓜_{c_min}(q) と対応するモーメント空間のパラメータ."""

    c_min: float
    q: float
    d: int
    N: int = 1
    p: str = NORM_L2

    def __post_init__(self):
        if not self.q > 0:
            raise ValueError(f"q must be positive, got {self.q}")
        if not self.c_min > 0:
            raise ValueError(f"c_min must be positive, got {self.c_min}")
        if self.d < 1 or self.N < 1:
            raise ValueError(f"d and N must be >= 1, got d={self.d}, N={self.N}")
        object.__setattr__(self, "p", parse_norm(self.p))

    def moment_space(self) -> FrequencySet:
        """対応するモーメント空間の周波数集合 {k : ‖k‖_p ≤ N}."""
        return frequency_set(self.d, self.N, self.p)


@dataclass(frozen=True)
class AdmissibilityReport:
    ok: bool
    failing_constraint: Optional[str] = None
    detail: str = ""


def moment_map(mu: DiscreteMeasure, freq: FrequencySet) -> MomentVector:
    """
    モーメント μ̂(k) = Σ_j c_j exp(−2πi k·t_j) を計算する.

    k·t は mod 1 で位相還元してから指数関数に渡す.

    Args:
        mu: 測度
        freq: 周波数集合

    Returns:
        MomentVector

    Raises:
        DimensionMismatchError: 次元が異なる場合
    """
    if mu.dim != freq.d:
        raise DimensionMismatchError(f"measure has d={mu.dim}, frequency set has d={freq.d}")
    phase = np.mod(freq.members.astype(float) @ mu.points.T, 1.0)
    terms = np.exp(-2j * np.pi * phase) * np.asarray(mu.weights)[None, :]
    return MomentVector(freq, np.sum(terms, axis=1))


def _require_same_freq(a: MomentVector, b: MomentVector) -> None:
    if not a.freq_set.same_as(b.freq_set):
        raise FrequencySetMismatchError(
            f"frequency sets differ: (d={a.freq_set.d}, N={a.freq_set.N}, p={a.freq_set.p}) "
            f"vs (d={b.freq_set.d}, N={b.freq_set.N}, p={b.freq_set.p})"
        )


def moment_l2_distance(a: MomentVector, b: MomentVector) -> float:
    """‖a − b‖₂ over ℬ."""
    _require_same_freq(a, b)
    return float(np.linalg.norm(a.values - b.values))


def moment_linf_distance(a: MomentVector, b: MomentVector) -> float:
    """‖a − b‖_∞ over ℬ."""
    _require_same_freq(a, b)
    if len(a.values) == 0:
        return 0.0
    return float(np.max(np.abs(a.values - b.values)))


def check_admissible(mu: DiscreteMeasure, cls: AdmissibilityClass) -> AdmissibilityReport:
    """
    μ ∈ 𝓜_{c_min}(q) かどうかを判定する.

    判定順は 最小重み → 質量 → 分離 で、最初に破れた制約名を返す.

    Args:
        mu: 測度
        cls: 許容クラス

    Returns:
        AdmissibilityReport
    """
    if mu.dim != cls.d:
        return AdmissibilityReport(False, "dimension", f"measure has d={mu.dim}, class has d={cls.d}")
    smallest = float(np.min(np.abs(mu.weights)))
    if smallest < cls.c_min:
        return AdmissibilityReport(False, "min-weight", f"min |c| = {smallest} < c_min = {cls.c_min}")
    total = complex(np.sum(mu.weights))
    if abs(total - 1.0) > EPS_MASS:
        return AdmissibilityReport(False, "mass", f"Σc = {total}")
    if len(mu) >= 2:
        sep = separation(mu.nodes)
        if sep + EPS_NODE < cls.q:
            return AdmissibilityReport(False, "separation", f"sep = {sep} < q = {cls.q}")
    return AdmissibilityReport(True)


def shift_measure(mu: DiscreteMeasure, s) -> DiscreteMeasure:
    """全ノードを s だけ平行移動した測度."""
    shifted = canonicalize(mu.points + np.asarray(s, dtype=float)[None, :])
    return DiscreteMeasure(NodeSet(shifted), mu.weights)


def measure_difference(mu1, mu2, drop_below: float = 0.0) -> AtomicMeasure:
    """
    差分測度 μ₁ − μ₂ を原子ごとに集約する.

    ε_node 以内のノードは同一視して重みを合算し、|重み| < drop_below の原子は落とす.

    Args:
        mu1: 測度 1（DiscreteMeasure または AtomicMeasure）
        mu2: 測度 2
        drop_below: 除去する原子重みの閾値

    Returns:
        AtomicMeasure
    """
    a = mu1.as_atoms() if isinstance(mu1, DiscreteMeasure) else mu1
    b = mu2.as_atoms() if isinstance(mu2, DiscreteMeasure) else mu2
    if a.dim != b.dim:
        raise DimensionMismatchError(f"dimension mismatch: {a.dim} vs {b.dim}")
    points = np.vstack([a.points, b.points])
    weights = np.concatenate([np.asarray(a.weights, dtype=complex), -np.asarray(b.weights, dtype=complex)])
    return aggregate_atoms(points, weights, drop_below)


def aggregate_atoms(points: np.ndarray, weights: np.ndarray, drop_below: float = 0.0) -> AtomicMeasure:
    """ε_node 以内で重なる原子を合算する."""
    merged_points, merged_weights = [], []
    taken = np.zeros(len(points), dtype=bool)
    dist = pairwise_torus_distances(points, points) if len(points) else np.zeros((0, 0))
    for i in range(len(points)):
        if taken[i]:
            continue
        group = np.flatnonzero((dist[i] <= EPS_NODE) & ~taken)
        taken[group] = True
        merged_points.append(points[i])
        merged_weights.append(weights[group].sum())
    pts = np.asarray(merged_points, dtype=float).reshape(-1, points.shape[1])
    wts = np.asarray(merged_weights, dtype=complex)
    keep = np.abs(wts) >= drop_below if drop_below > 0 else np.abs(wts) > 0
    return AtomicMeasure(pts[keep], wts[keep])


def _sample_nodes(rng: np.random.Generator, count: int, d: int, min_sep: float, budget: list) -> np.ndarray:
    """逐次追加の棄却サンプリングでノードを生成する."""
    points = np.empty((0, d))
    while len(points) < count:
        if budget[0] <= 0:
            raise SamplingBudgetExhaustedError(
                f"could not place {count} nodes with separation {min_sep} in d={d}"
            )
        budget[0] -= 1
        candidate = rng.random(d)
        if len(points) and torus_norms(points - candidate[None, :]).min() < min_sep:
            continue
        points = np.vstack([points, candidate])
    return points


def random_nodes(rng: np.random.Generator, count: int, d: int, min_sep: float) -> np.ndarray:
    """互いに min_sep 以上離れた count 個のノード."""
    return _sample_nodes(rng, count, d, min_sep, [SAMPLING_BUDGET])


def _sample_weights(
    rng: np.random.Generator, count: int, c_min: float, complex_weights: bool, budget: list
) -> np.ndarray:
    """|c_j| ≥ c_min かつ Σc = 1 の重みを棄却サンプリングで生成する."""
    while True:
        if budget[0] <= 0:
            raise SamplingBudgetExhaustedError(
                f"could not draw {count} weights with |c| >= {c_min}"
            )
        budget[0] -= 1
        raw = rng.uniform(1.0, 2.0, size=count).astype(complex)
        if complex_weights:
            raw = raw * np.exp(1j * rng.uniform(-np.pi / 4, np.pi / 4, size=count))
        total = raw.sum()
        if abs(total) < 1e-6:
            continue
        weights = raw / total
        if np.abs(weights).min() >= c_min:
            return weights


def random_measure(
    cls: AdmissibilityClass,
    M: int,
    rng: np.random.Generator,
    complex_weights: bool = True,
    min_sep: Optional[float] = None,
) -> DiscreteMeasure:
    """
    許容クラスに属する M 点の測度をランダムに生成する.

    Args:
        cls: 許容クラス
        M: ノード数
        rng: 乱数生成器
        complex_weights: 複素重みにするか（False なら正の実数重み）
        min_sep: ノード間の最小距離（省略時は cls.q）

    Returns:
        DiscreteMeasure
    """
    budget = [SAMPLING_BUDGET]
    nodes = _sample_nodes(rng, M, cls.d, cls.q if min_sep is None else min_sep, budget)
    weights = _sample_weights(rng, M, cls.c_min, complex_weights, budget)
    return DiscreteMeasure(NodeSet(nodes), weights)


def random_admissible_pair(
    cls: AdmissibilityClass,
    M: int,
    seed: int,
    delta_target: float,
    complex_weights: bool = True,
) -> Tuple[DiscreteMeasure, DiscreteMeasure]:
    """
    許容クラス内の測度の組を生成する（2 つ目は 1 つ目の摂動）.

    ノードは座標ごとに一様な大きさ ≤ δ·q の揺らぎ、重みは δ·c_min 程度の揺らぎの後に
    総和 1 へ正規化する. 2 つ目が許容クラスから外れた場合は揺らぎを引き直す.

    Args:
        cls: 許容クラス
        M: ノード数
        seed: 乱数シード
        delta_target: 相対的な揺らぎの大きさ δ ≥ 0
        complex_weights: 複素重みにするか

    Returns:
        (μ₁, μ₂)

    Raises:
        ValueError: M·(2q)^d ≥ 1 または δ < 0 の場合
        SamplingBudgetExhaustedError: 10⁵ 回の棄却で生成できなかった場合
    """
    if delta_target < 0:
        raise ValueError(f"delta_target must be >= 0, got {delta_target}")
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    if M * (2 * cls.q) ** cls.d >= 1:
        raise ValueError(f"M*(2q)^d = {M * (2 * cls.q) ** cls.d} must be < 1")

    rng = np.random.default_rng(seed)
    budget = [SAMPLING_BUDGET]
    nodes = _sample_nodes(rng, M, cls.d, cls.q, budget)
    weights = _sample_weights(rng, M, cls.c_min, complex_weights, budget)
    mu1 = DiscreteMeasure(NodeSet(nodes), weights)
    if delta_target == 0:
        return mu1, mu1

    while True:
        if budget[0] <= 0:
            raise SamplingBudgetExhaustedError(
                f"could not jitter the measure by delta={delta_target} inside the class"
            )
        budget[0] -= 1
        moved = canonicalize(nodes + delta_target * cls.q * rng.uniform(-1.0, 1.0, size=nodes.shape))
        noise = rng.uniform(-1.0, 1.0, size=M)
        if complex_weights:
            noise = noise + 1j * rng.uniform(-1.0, 1.0, size=M)
        perturbed = weights + delta_target * cls.c_min * noise
        total = perturbed.sum()
        if abs(total) < 1e-6:
            continue
        perturbed = perturbed / total
        if np.abs(perturbed).min() < cls.c_min:
            continue
        if M >= 2 and separation(moved) < cls.q:
            continue
        mu2 = DiscreteMeasure(NodeSet(moved), perturbed)
        logger.debug(f"Generated admissible pair: seed={seed}, M={M}, delta={delta_target:.3e}")
        return mu1, mu2
