"""d 次元トーラス 𝕋^d = [0,1)^d 上の距離と組合せ幾何.

ノード集合は (M, d) の numpy 配列で表し、座標は構築時に [0,1) へ正規化する.
距離はすべて整数シフトの最小をとった ∞ ノルム（d = 1 では絶対値）.
"""
import bisect
import itertools
import logging
from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from pronylab.errors import (
    DimensionMismatchError,
    IncomparableSetsError,
    UndefinedSeparationError,
)

logger = logging.getLogger(__name__)

# ノード同一視の閾値
EPS_NODE = 1e-12

# 総当たりオラクルを許す最大濃度
BRUTE_FORCE_LIMIT = 8


def canonicalize(coords) -> np.ndarray:
    """
    座標を [0,1) に還元する.

    Args:
        coords: 実数の配列（任意形状）

    Returns:
        各成分を mod 1 した配列（1.0 に丸められた値は 0 に戻す）
    """
    x = np.mod(np.asarray(coords, dtype=float), 1.0)
    # -1e-17 などは mod で 1.0 になる
    x[x >= 1.0] = 0.0
    return x


def wrap_abs(x) -> np.ndarray:
    """成分ごとの折り返し絶対値 min_ℓ |x + ℓ| を返す（値は [0, 1/2]）."""
    x = np.asarray(x, dtype=float)
    return np.abs(x - np.round(x))


def torus_norm(x, d: int | None = None) -> float:
    """
    トーラス上の差分ベクトルのノルム.

    Args:
        x: 2 点の座標ごとの差（長さ d のベクトル、またはスカラー）
        d: 次元（省略時は x の長さ）

    Returns:
        整数シフトの最小をとった ∞ ノルム（[0, 1/2] の値）
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if d is not None and x.shape[-1] != d:
        raise DimensionMismatchError(f"expected a {d}-dimensional difference, got {x.shape[-1]}")
    return float(np.max(wrap_abs(x)))


def torus_norms(x: np.ndarray) -> np.ndarray:
    """最後の軸を座標とみなした torus_norm のベクトル版."""
    return np.max(wrap_abs(x), axis=-1)


def componentwise_torus_diff(t, t_prime) -> np.ndarray:
    """
    座標ごとの折り返し差 |t − t'|_{𝕋^d}.

    Args:
        t: 点 1
        t_prime: 点 2

    Returns:
        [0, 1/2]^d のベクトル（∞ ノルムは torus_norm(t − t') に等しい）

    Raises:
        DimensionMismatchError: 次元が異なる場合
    """
    a = np.atleast_1d(np.asarray(t, dtype=float))
    b = np.atleast_1d(np.asarray(t_prime, dtype=float))
    if a.shape != b.shape:
        raise DimensionMismatchError(f"dimension mismatch: {a.shape[-1]} vs {b.shape[-1]}")
    return wrap_abs(a - b)


def pairwise_torus_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(m, d) と (n, d) の点集合の間の (m, n) 距離行列."""
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatchError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    return torus_norms(a[:, None, :] - b[None, :, :])


@dataclass(frozen=True, eq=False)
class NodeSet:
    """トーラス上の順序付きノード集合（座標は [0,1) に正規化済み、相異なる）."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise ValueError(f"nodes must form an (M, d) array with d >= 1, got shape {pts.shape}")
        pts = canonicalize(pts)
        if len(pts) >= 2:
            dist = pairwise_torus_distances(pts, pts)
            np.fill_diagonal(dist, np.inf)
            if dist.min() <= EPS_NODE:
                i, j = np.unravel_index(np.argmin(dist), dist.shape)
                raise ValueError(f"nodes {i} and {j} collide (distance {dist[i, j]:.3e})")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_points(cls, points: Iterable) -> "NodeSet":
        return cls(np.asarray(list(points), dtype=float))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def __getitem__(self, index) -> np.ndarray:
        return self.points[index]

    def sorted(self) -> "NodeSet":
        """辞書式順序に並べ替えた集合."""
        order = np.lexsort(self.points.T[::-1])
        return NodeSet(self.points[order])


def _as_array(y) -> np.ndarray:
    if isinstance(y, NodeSet):
        return y.points
    arr = np.asarray(y, dtype=float)
    return arr[:, None] if arr.ndim == 1 else arr


def separation(y) -> float:
    """
    最小分離距離 sep Y.

    Args:
        y: ノード集合（NodeSet または (M, d) 配列）

    Returns:
        異なる 2 点間のトーラス距離の最小値

    Raises:
        UndefinedSeparationError: ノードが 2 個未満の場合
    """
    pts = _as_array(y)
    if len(pts) < 2:
        raise UndefinedSeparationError(f"separation needs at least 2 nodes, got {len(pts)}")
    dist = pairwise_torus_distances(pts, pts)
    iu = np.triu_indices(len(pts), k=1)
    return float(dist[iu].min())


def bottleneck_matching(cost: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    ボトルネック割当（最大辺の最小化）.

    候補値をソートし、しきい値以下の辺だけで完全マッチングが存在するかを
    二分探索で判定する.

    Args:
        cost: (n, n) のコスト行列

    Returns:
        (ボトルネック値, perm)  perm[i] は行 i に割り当てた列
    """
    n = cost.shape[0]
    if n == 0:
        return 0.0, np.zeros(0, dtype=int)
    values = np.unique(cost)
    found = {}

    def feasible(threshold: float) -> bool:
        graph = csr_matrix((cost <= threshold).astype(np.int8))
        matching = maximum_bipartite_matching(graph, perm_type="column")
        ok = bool((matching >= 0).all())
        if ok:
            found[threshold] = matching
        return ok

    index = bisect.bisect_left(values, True, key=feasible)
    value = float(values[index])
    perm = found.get(value)
    if perm is None:
        feasible(value)
        perm = found[value]
    return value, np.asarray(perm, dtype=int)


def matching_distance(y, y_prime) -> float:
    """
    マッチング距離 md(Y, Y') = min_π max_j ‖t_j − t'_{π(j)}‖.

    Args:
        y: ノード集合 1
        y_prime: ノード集合 2

    Returns:
        厳密なボトルネック割当の値

    Raises:
        IncomparableSetsError: 濃度が異なる場合
    """
    a, b = _as_array(y), _as_array(y_prime)
    if len(a) != len(b):
        raise IncomparableSetsError(f"node sets have different sizes: {len(a)} vs {len(b)}")
    if len(a) == 0:
        return 0.0
    value, _ = bottleneck_matching(pairwise_torus_distances(a, b))
    return value


def matching_distance_bruteforce(y, y_prime) -> float:
    """全置換の総当たりによるマッチング距離（|Y| ≤ 8 のオラクル）."""
    a, b = _as_array(y), _as_array(y_prime)
    if len(a) != len(b):
        raise IncomparableSetsError(f"node sets have different sizes: {len(a)} vs {len(b)}")
    if len(a) > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force is limited to {BRUTE_FORCE_LIMIT} nodes, got {len(a)}")
    if len(a) == 0:
        return 0.0
    dist = pairwise_torus_distances(a, b)
    rows = np.arange(len(a))
    return float(
        min(dist[rows, list(perm)].max() for perm in itertools.permutations(range(len(a))))
    )
