"""検証器が使う小規模な密行列カーネルと厳密な最小費用輸送."""
import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csc_matrix

from pronylab.errors import IllPosedError, NumericalFailureError, UnbalancedProblemError
from pronylab.torus_geometry import pairwise_torus_distances

logger = logging.getLogger(__name__)

MAX_EIGEN_ORDER = 512
MAX_GRAM_COLUMNS = 64
MAX_SVD_MIN_DIM = 256
MAX_TRANSPORT_NODES = 64
MAX_CONDITION = 1e8
MASS_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    """エルミート行列（構築時に (A + A*)/2 で対称化する）."""

    data: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.data, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"Hermitian matrix must be square, got shape {a.shape}")
        scale = max(np.linalg.norm(a), 1.0)
        if np.max(np.abs(a - a.conj().T), initial=0.0) > 1e-8 * scale:
            raise ValueError("matrix is not Hermitian")
        object.__setattr__(self, "data", (a + a.conj().T) / 2)

    @property
    def order(self) -> int:
        return self.data.shape[0]


def hermitian_eigen(A) -> Tuple[np.ndarray, np.ndarray]:
    """
    エルミート行列の固有分解.

    Args:
        A: HermitianMatrix または正方配列（n ≤ 512）

    Returns:
        (昇順の実固有値, 正規直交な固有ベクトルを列に持つ行列)

    Raises:
        NumericalFailureError: LAPACK が収束しない、または残差が 1e-10·‖A‖_F を超える場合
    """
    matrix = A if isinstance(A, HermitianMatrix) else HermitianMatrix(A)
    if matrix.order > MAX_EIGEN_ORDER:
        raise ValueError(f"order must be <= {MAX_EIGEN_ORDER}, got {matrix.order}")
    data = matrix.data
    try:
        eigenvalues, eigenvectors = np.linalg.eigh(data)
    except np.linalg.LinAlgError as e:
        raise NumericalFailureError(f"Hermitian eigensolver failed: {str(e)}") from e
    residual = np.linalg.norm(data @ eigenvectors - eigenvectors * eigenvalues[None, :], axis=0)
    bound = 1e-10 * max(np.linalg.norm(data), np.finfo(float).tiny)
    if residual.size and residual.max() > bound:
        raise NumericalFailureError(f"eigen residual {residual.max():.3e} exceeds {bound:.3e}")
    return eigenvalues, eigenvectors


def sigma_min_via_gram(A) -> float:
    """
    最小特異値 σ_min(A) = sqrt(λ_min(A*A)).

    ‖A‖_F² に比べて十分小さい負の固有値は 0 に丸める.
    """
    a = np.asarray(A, dtype=complex)
    if a.ndim != 2 or a.shape[0] < a.shape[1]:
        raise ValueError(f"expected a tall matrix, got shape {a.shape}")
    if a.shape[1] > MAX_GRAM_COLUMNS:
        raise ValueError(f"at most {MAX_GRAM_COLUMNS} columns supported, got {a.shape[1]}")
    return sigma_min_from_gram(a.conj().T @ a, float(np.linalg.norm(a)) ** 2)


def sigma_min_from_gram(gram: np.ndarray, frobenius_sq: float) -> float:
    """グラム行列から最小特異値を求める."""
    eigenvalues, _ = hermitian_eigen(gram)
    smallest = float(eigenvalues[0])
    if smallest < -1e-12 * frobenius_sq:
        raise NumericalFailureError(f"Gram matrix has a negative eigenvalue {smallest:.3e}")
    return float(np.sqrt(max(smallest, 0.0)))


def subspace_svd(A) -> Tuple[np.ndarray, np.ndarray]:
    """
    特異値分解.

    Args:
        A: 複素行列（小さい方の次元 ≤ 256）

    Returns:
        (降順の特異値, 右特異ベクトルを列に持つ行列)

    Raises:
        NumericalFailureError: SVD が収束しない、または A*A v = σ²v の残差が大きい場合
    """
    a = np.asarray(A, dtype=complex)
    if min(a.shape) > MAX_SVD_MIN_DIM:
        raise ValueError(f"min dimension must be <= {MAX_SVD_MIN_DIM}, got {min(a.shape)}")
    try:
        _, singular_values, vh = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as e:
        raise NumericalFailureError(f"SVD failed: {str(e)}") from e
    right = vh.conj().T
    frobenius = float(np.linalg.norm(a))
    residual = np.linalg.norm(a.conj().T @ (a @ right) - right * singular_values[None, :] ** 2, axis=0)
    bound = 1e-9 * max(frobenius, frobenius ** 2, np.finfo(float).tiny)
    if residual.size and residual.max() > bound:
        raise NumericalFailureError(f"SVD residual {residual.max():.3e} exceeds {bound:.3e}")
    return singular_values, right


def least_squares(A, b) -> np.ndarray:
    """
    ‖Ax − b‖₂ を最小化する x.

    Raises:
        IllPosedError: 列フルランクでない、または条件数が 1e8 を超える場合
    """
    a = np.asarray(A, dtype=complex)
    rhs = np.asarray(b, dtype=complex)
    if a.shape[0] < a.shape[1]:
        raise IllPosedError(f"underdetermined system of shape {a.shape}")
    singular_values = np.linalg.svd(a, compute_uv=False)
    if singular_values.size == 0 or singular_values[-1] == 0:
        raise IllPosedError("matrix is rank deficient")
    condition = singular_values[0] / singular_values[-1]
    if condition > MAX_CONDITION:
        raise IllPosedError(f"condition number {condition:.3e} exceeds {MAX_CONDITION:.0e}")
    solution, *_ = np.linalg.lstsq(a, rhs, rcond=None)
    return solution


# ============================================================
# 最小費用輸送
# ============================================================


@dataclass(frozen=True, eq=False)
class TransportProblem:
    """トーラス距離を基底コストとする離散輸送問題."""

    source_points: np.ndarray
    source_masses: np.ndarray
    sink_points: np.ndarray
    sink_masses: np.ndarray

    def __post_init__(self):
        for name in ("source_masses", "sink_masses"):
            masses = np.asarray(getattr(self, name), dtype=float)
            if np.any(masses <= 0):
                raise ValueError(f"{name} must be positive")
            object.__setattr__(self, name, masses)
        for name in ("source_points", "sink_points"):
            pts = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, pts[:, None] if pts.ndim == 1 else pts)
        imbalance = abs(self.source_masses.sum() - self.sink_masses.sum())
        if imbalance > MASS_TOLERANCE:
            raise UnbalancedProblemError(f"source and sink masses differ by {imbalance:.3e}")


@dataclass(frozen=True, eq=False)
class TransportSolution:
    cost: float
    plan: List[Tuple[int, int, float]]
    source_potentials: np.ndarray = field(repr=False)
    sink_potentials: np.ndarray = field(repr=False)
    duality_gap: float = 0.0


def min_cost_transport(problem: TransportProblem) -> TransportSolution:
    """
    離散輸送問題を線形計画として厳密に解く.

    双対変数（等式制約の限界値）から Kantorovich ポテンシャル u, v を作り、
    u_i − v_j ≤ c_ij と cost = Σ a_i u_i − Σ b_j v_j を満たすように返す.

    Args:
        problem: TransportProblem（64 点以下）

    Returns:
        TransportSolution（plan は (source, sink, mass) のリスト）

    Raises:
        NumericalFailureError: LP ソルバーが最適解を返さない場合
    """
    a, b = problem.source_masses, problem.sink_masses
    m, n = len(a), len(b)
    if m > MAX_TRANSPORT_NODES or n > MAX_TRANSPORT_NODES:
        raise ValueError(f"at most {MAX_TRANSPORT_NODES} sources and sinks supported")
    if m == 0 or n == 0:
        return TransportSolution(0.0, [], np.zeros(m), np.zeros(n))

    cost = pairwise_torus_distances(problem.source_points, problem.sink_points)
    # 行 i の和 = a_i、列 j の和 = b_j
    rows = np.concatenate([np.repeat(np.arange(m), n), m + np.tile(np.arange(n), m)])
    cols = np.concatenate([np.arange(m * n), np.arange(m * n)])
    constraints = csc_matrix((np.ones(2 * m * n), (rows, cols)), shape=(m + n, m * n))
    result = linprog(
        cost.ravel(),
        A_eq=constraints,
        b_eq=np.concatenate([a, b]),
        bounds=(0, None),
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if result.status != 0:
        raise NumericalFailureError(f"transport LP failed: {result.message}")

    flow = np.clip(result.x.reshape(m, n), 0.0, None)
    total = float(np.sum(cost * flow))
    duals = np.asarray(result.eqlin.marginals)
    u, v = duals[:m], -duals[m:]
    gap = abs(total - float(a @ u - b @ v))
    if gap > 1e-9 * max(1.0, total):
        logger.warning(f"Transport duality gap {gap:.3e} larger than expected")
    plan = [(int(i), int(j), float(flow[i, j])) for i, j in zip(*np.nonzero(flow > 1e-15))]
    return TransportSolution(total, plan, u, v, gap)
