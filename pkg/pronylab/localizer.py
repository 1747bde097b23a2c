"""局在化関数 ψ とそのフーリエ変換 ψ̂、および下界・上界の評価器.

窓 φ の自己相関 φ*φ から

    ψ(x) = (2πN)² Π_ℓ (φ*φ)(x_ℓ) + Σ_s (φ*φ)''(x_s) Π_{i≠s} (φ*φ)(x_i)

を組み立てる（p = 2, r = 1 のみ）. ψ は ‖x‖_∞ < q に台を持ち、
ψ̂(v) = ((2πN)² − Σ(2πv_s)²) Π φ̂(v_ℓ)² は ‖v‖₂ ≤ N で非負、外側で非正.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, List, Optional

import numpy as np
from scipy.integrate import simpson

from pronylab.errors import ClosedFormUnavailableError, OutOfDomainError

logger = logging.getLogger(__name__)

PI = math.pi
PI2 = PI * PI

# φ̂ の除去可能特異点の近傍幅（πqv の単位）
SINGULARITY_WINDOW = 1e-4

# 反例評価器の差分ステップ（q に対する比）
FD_STEP_RATIO = 1e-4


class Window(str, Enum):
    """窓関数の種類."""

    HANN = "hann"
    PARABOLIC = "parabolic"
    PLAIN_COSINE = "plain-cosine"


@dataclass(frozen=True)
class WindowKind:
    """台 [−q/2, q/2] を持つ窓."""

    selector: Window
    q: float

    def __post_init__(self):
        if not self.q > 0:
            raise ValueError(f"q must be positive, got {self.q}")
        object.__setattr__(self, "selector", Window(self.selector))


@dataclass(frozen=True)
class LocalizerParams:
    """ψ を定める (d, N, q, 窓)."""

    d: int
    N: int
    q: float
    window: Window = Window.HANN

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")
        if not self.q > 0:
            raise ValueError(f"q must be positive, got {self.q}")
        object.__setattr__(self, "window", Window(self.window))

    @property
    def window_kind(self) -> WindowKind:
        return WindowKind(self.window, self.q)

    @property
    def maximal_regime(self) -> bool:
        """N·q ≥ √d（原点で最大となる条件）."""
        return self.N * self.q >= math.sqrt(self.d) * (1 - 1e-12)


# ============================================================
# 窓と自己相関
# ============================================================


def window_eval(w: WindowKind, x):
    """
    窓関数の値.

    Args:
        w: 窓
        x: 評価点（スカラーまたは配列）

    Returns:
        窓の値（[−q/2, q/2] の外では 0）
    """
    x = np.asarray(x, dtype=float)
    q = w.q
    inside = np.abs(x) <= q / 2
    if w.selector == Window.HANN:
        values = np.cos(PI * x / q) ** 2
    elif w.selector == Window.PARABOLIC:
        values = 1.0 - (2.0 * x / q) ** 2
    else:
        values = np.cos(PI * x / q)
    return np.where(inside, np.clip(values, 0.0, None), 0.0)


def _hann_parts(q: float, x):
    """|x| と台の内側マスク、sin/cos(2π|x|/q) を返す."""
    ax = np.abs(np.asarray(x, dtype=float))
    inside = ax < q
    arg = 2 * PI * ax / q
    return ax, inside, np.sin(arg), np.cos(arg)


def _require_hann(w: WindowKind) -> None:
    if w.selector != Window.HANN:
        raise ClosedFormUnavailableError(
            f"closed form is only available for the Hann window, got {w.selector.value}"
        )


def hann_autocorr(q: float, x):
    """Hann 窓の自己相関 (φ*φ)(x) の閉形式."""
    ax, inside, s, c = _hann_parts(q, x)
    values = (q - ax) / 4 * (1 + 0.5 * c) + 3 * q / (16 * PI) * s
    return np.where(inside, values, 0.0)


def autocorr_eval(w: WindowKind, x):
    """
    自己相関 (φ*φ)(x) の閉形式（Hann のみ）.

    Args:
        w: 窓（Hann であること）
        x: 評価点

    Returns:
        (q−|x|)/4 (1+½cos(2πx/q)) + (3/8)(q/2π) sin(2π|x|/q)、|x| ≥ q では 0

    Raises:
        ClosedFormUnavailableError: Hann 以外の窓の場合
    """
    _require_hann(w)
    return hann_autocorr(w.q, x)


def autocorr_derivative(q: float, x):
    """(φ*φ)'(x) の閉形式（奇関数）."""
    ax, inside, s, c = _hann_parts(q, x)
    values = -0.25 + 0.25 * c - PI * (q - ax) / (4 * q) * s
    return np.where(inside, np.sign(x) * values, 0.0)


def hann_autocorr_second(q: float, x):
    """(φ*φ)''(x) = −4π²/q²·(φ*φ) + (π²/q²)((q/2π) sin(2π|x|/q) + q − |x|)."""
    ax, inside, s, c = _hann_parts(q, x)
    values = -PI / (4 * q) * s - PI2 * (q - ax) / (2 * q * q) * c
    return np.where(inside, values, 0.0)


def autocorr_second_derivative(q: float, x):
    """(φ*φ)'' の閉形式（偶関数）."""
    return hann_autocorr_second(q, x)


def autocorr_third_derivative(q: float, x):
    """(φ*φ)''' の閉形式（奇関数、0 ≤ x < q で π³(q−x)/q³ sin(2πx/q)）."""
    ax, inside, s, _ = _hann_parts(q, x)
    values = PI ** 3 * (q - ax) / q ** 3 * s
    return np.where(inside, np.sign(x) * values, 0.0)


def _g(q: float, x):
    """ψ の閉形式に現れる (q/2π) sin(2π|x|/q) + q − |x|（台の外では 0）."""
    ax, inside, s, _ = _hann_parts(q, x)
    return np.where(inside, q / (2 * PI) * s + q - ax, 0.0)


def autocorr_quadrature(w: WindowKind, x, n: int = 2048):
    """
    自己相関の合成 Simpson 近似.

    重なり区間 [|x| − q/2, q/2] 上で ∫ w(y) w(|x| − y) dy を n パネルで積分する.
    区間の節点は x に滑らかに依存するので、差分を取っても誤差が増幅されにくい.

    Args:
        w: 窓
        x: 評価点（スカラーまたは配列）
        n: パネル数（64 以上）

    Returns:
        近似値（|x| ≥ q では 0）
    """
    if n < 64:
        raise ValueError(f"panel count must be >= 64, got {n}")
    x = np.asarray(x, dtype=float)
    ax = np.abs(x).reshape(-1)
    q = w.q
    inside = ax < q
    lo = np.where(inside, ax - q / 2, 0.0)
    width = np.where(inside, q - ax, 0.0)
    s = np.linspace(0.0, 1.0, n + 1)
    y = lo[:, None] + width[:, None] * s[None, :]
    integrand = window_eval(w, y) * window_eval(w, ax[:, None] - y)
    values = simpson(integrand, x=s, axis=-1) * width
    values = np.where(inside, values, 0.0)
    return values.reshape(x.shape) if x.ndim else float(values[0])


def autocorr_upper_bound(q: float, x, a: float = 1.0):
    """
    φ*φ の 2 区間上界.

    |x| < q/2 では 3q/8 − (5/4)x²/q、q/2 ≤ |x| ≤ aq では弦 q/16 + (|x| − q/2)·m(a).

    Raises:
        OutOfDomainError: |x| > aq の点を含む場合
    """
    ax = np.abs(np.asarray(x, dtype=float))
    if np.any(ax > a * q * (1 + 1e-12)):
        raise OutOfDomainError(f"upper bound is only stated for |x| <= a*q = {a * q}")
    m = difference_quotient(q, a)
    return np.where(ax < q / 2, 3 * q / 8 - 1.25 * ax * ax / q, q / 16 + (ax - q / 2) * m)


def difference_quotient(q: float, a: float) -> float:
    """m(a) = (φ*φ(aq) − φ*φ(q/2)) / (aq − q/2)（a > 1/2、q に依存しない）."""
    if not a > 0.5:
        raise ValueError(f"difference quotient needs a > 1/2, got {a}")
    return float((hann_autocorr(q, a * q) - q / 16) / (a * q - q / 2))


def phi_hat_eval(q: float, v):
    """
    Hann 窓のフーリエ変換 φ̂(v) = sin(πqv) / (2πv(1 − q²v²)).

    v = 0 と v = ±1/q の除去可能特異点は級数・恒等変形で埋める.

    Args:
        q: 台のパラメータ
        v: 周波数（スカラーまたは配列）

    Returns:
        φ̂(v)（φ̂(0) = q/2、φ̂(±1/q) = q/4）
    """
    u = np.abs(np.asarray(v, dtype=float) * q)
    near_zero = PI * u < SINGULARITY_WINDOW
    near_pole = np.abs(PI * u - PI) < SINGULARITY_WINDOW
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = np.sinc(u) / (1.0 - u * u)
    delta = u - 1.0
    # u = 1 + δ で sinc(u)/(1−u²) = sinc(δ)/((1+δ)(2+δ))
    at_pole = np.sinc(delta) / ((1.0 + delta) * (2.0 + delta))
    at_zero = 1.0 - (PI * u) ** 2 / 6.0
    values = np.where(near_pole, at_pole, np.where(near_zero, at_zero, direct))
    return q / 2 * values


# ============================================================
# ψ と ψ̂
# ============================================================


def _coords(x, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.shape[-1] != d:
        raise ValueError(f"expected points with {d} coordinates, got shape {x.shape}")
    return x


def _assemble_psi(N: int, autocorr: np.ndarray, second: np.ndarray) -> np.ndarray:
    """(2πN)² Π P + Σ_s P''_s Π_{i≠s} P_i."""
    d = autocorr.shape[-1]
    value = (2 * PI * N) ** 2 * np.prod(autocorr, axis=-1)
    for s in range(d):
        others = np.prod(np.delete(autocorr, s, axis=-1), axis=-1) if d > 1 else 1.0
        value = value + second[..., s] * others
    return value


def psi_eval(params: LocalizerParams, x):
    """
    局在化関数 ψ(x)（Hann 窓の閉形式）.

    Args:
        params: LocalizerParams（window は Hann）
        x: 形状 (..., d) の点

    Returns:
        ψ の値（‖x‖_∞ ≥ q では厳密に 0）
    """
    _require_hann(params.window_kind)
    x = _coords(x, params.d)
    value = _assemble_psi(
        params.N, hann_autocorr(params.q, x), hann_autocorr_second(params.q, x)
    )
    return value if value.ndim else float(value)


def psi_hat_eval(params: LocalizerParams, v):
    """
    ψ̂(v) = ((2πN)² − Σ(2πv_s)²) Π φ̂(v_ℓ)².

    Args:
        params: LocalizerParams（window は Hann）
        v: 形状 (..., d) の周波数

    Returns:
        ψ̂ の値
    """
    _require_hann(params.window_kind)
    v = _coords(v, params.d)
    prefactor = (2 * PI * params.N) ** 2 - np.sum((2 * PI * v) ** 2, axis=-1)
    value = prefactor * np.prod(phi_hat_eval(params.q, v) ** 2, axis=-1)
    return value if value.ndim else float(value)


def psi_at_origin(params: LocalizerParams) -> float:
    return float(psi_eval(params, np.zeros(params.d)))


def psi_periodized(params: LocalizerParams, x):
    """Σ_{ℓ ∈ {−1,0,1}^d} ψ(x + ℓ)（q ≤ 1/2 ならトーラス上の周期化に等しい）."""
    x = _coords(x, params.d)
    shifts = np.array(np.meshgrid(*([[-1, 0, 1]] * params.d), indexing="ij")).reshape(params.d, -1).T
    total = np.zeros(x.shape[:-1])
    for shift in shifts:
        total = total + psi_eval(params, x + shift)
    return total


def psi_fourier_series(params: LocalizerParams, x, K: int, chunk: int = 16):
    """
    打ち切りフーリエ級数 Σ_{‖k‖_∞ ≤ K} ψ̂(k) e^{2πik·x}（ψ̂ は偶関数なので実部のみ）.

    Args:
        params: LocalizerParams
        x: 形状 (n, d) の点
        K: 打ち切り次数
        chunk: 一度に処理する点の数

    Returns:
        形状 (n,) の値
    """
    x = _coords(x, params.d).reshape(-1, params.d)
    axis = np.arange(-K, K + 1, dtype=float)
    k = np.array(np.meshgrid(*([axis] * params.d), indexing="ij")).reshape(params.d, -1).T
    coefficients = psi_hat_eval(params, k)
    out = np.empty(len(x))
    for start in range(0, len(x), chunk):
        block = x[start:start + chunk]
        phase = np.mod(block @ k.T, 1.0)
        out[start:start + chunk] = np.cos(2 * PI * phase) @ coefficients
    return out


# ============================================================
# 反例窓（求積と差分による評価）
# ============================================================


def _second_difference(f, x: np.ndarray, h: float) -> np.ndarray:
    """中心差分の 2 階微分に 1 段の Richardson 補外をかけたもの（0 の折れ点でも O(h²)）."""

    def central(step):
        return (f(x + step) - 2 * f(x) + f(x - step)) / (step * step)

    return 2 * central(h / 2) - central(h)


def psi_counterexample_eval(kind, N: int, q: float, x, n: int = 2048):
    """
    任意の窓から ψ を組み立てる（自己相関は求積、2 階微分は差分 h = q·1e-4）.

    Args:
        kind: Window（Parabolic / PlainCosine、比較用に Hann も可）
        N: 周波数半径
        q: 台のパラメータ
        x: 2 成分の点（形状 (..., 2)）
        n: 求積のパネル数

    Returns:
        ψ の値
    """
    w = WindowKind(Window(kind), q)
    x = _coords(x, 2)

    def autocorr(y):
        return autocorr_quadrature(w, y, n=n)

    second = _second_difference(autocorr, x, FD_STEP_RATIO * q)
    value = _assemble_psi(N, autocorr(x), second)
    return value if value.ndim else float(value)


# ============================================================
# 減少量の下界と上界列
# ============================================================


def _linear_drop_d1(q: float, kappa: float, s, m: float):
    """d = 1 の [q/2, aq] 上の 1 次下界 A(5q/16 + qm/2 − m s) + π²/(2q)."""
    A = 4 * PI2 * (kappa * kappa - 1) / (q * q)
    return A * (5 * q / 16 + q * m / 2 - m * s) + PI2 / (2 * q)


def drop_lower_bound(
    params: LocalizerParams,
    x,
    kappa: Optional[float] = None,
    a: float = 1.0,
    form: str = "piecewise",
):
    """
    ψ(0) − ψ(x) の解析的下界.

    piecewise: ‖x‖_∞ ≤ q/2 で 2 次、[q/2, aq] で 1 次、aq より外では aq での値.
      d = 1: 5π²(κ²−1)/q³·s² と A(5q/16 + qm/2 − m s) + π²/(2q)
      d ≥ 2: (10/3)(d−1)(3q/8)^{d−1}π²s²/q³ と [5d/6 − 1/3 − (4/3)m(d−1)](3q/8)^{d−1}π²s/q²
    general (d ≥ 2): (d − 1/2)(3q/8)^{d−1}π²s²/q³ を 0 ≤ s ≤ q で使う.

    Args:
        params: LocalizerParams（d ≥ 2 では N·q ≥ √d）
        x: 形状 (..., d) の点
        kappa: d = 1 で必須の κ > 1（q = κ/N）
        a: 1 次区間の右端 aq（1/2 < a ≤ 1）
        form: "piecewise" または "general"

    Returns:
        下界値

    Raises:
        OutOfDomainError: ‖x‖_∞ > q の点を含む場合
    """
    x = _coords(x, params.d)
    q, d = params.q, params.d
    s = np.max(np.abs(x), axis=-1)
    if np.any(s > q * (1 + 1e-12)):
        raise OutOfDomainError(f"drop bound is only defined for ||x||_inf <= q = {q}")
    if not 0.5 < a <= 1.0:
        raise ValueError(f"a must lie in (1/2, 1], got {a}")
    m = difference_quotient(q, a)
    s_lin = np.minimum(s, a * q)

    if d == 1:
        if kappa is None or not kappa > 1:
            raise ValueError("d = 1 drop bound needs kappa > 1")
        if not math.isclose(params.N * q, kappa, rel_tol=1e-9):
            raise ValueError(f"d = 1 drop bound needs q = kappa/N, got N*q = {params.N * q}")
        if form != "piecewise":
            raise ValueError("only the piecewise drop bound exists for d = 1")
        quadratic = 5 * PI2 * (kappa * kappa - 1) / q ** 3 * s * s
        linear = _linear_drop_d1(q, kappa, s_lin, m)
    else:
        if not params.maximal_regime:
            raise ValueError(f"drop bounds need N*q >= sqrt(d), got {params.N * q}")
        scale = (3 * q / 8) ** (d - 1) * PI2
        if form == "general":
            value = (d - 0.5) * scale * s * s / q ** 3
            return value if value.ndim else float(value)
        if form != "piecewise":
            raise ValueError(f"unknown drop bound form '{form}'")
        quadratic = 10.0 / 3.0 * (d - 1) * scale * s * s / q ** 3
        slope = 5 * d / 6 - 1.0 / 3.0 - 4.0 / 3.0 * m * (d - 1)
        linear = slope * scale * s_lin / q ** 2

    value = np.where(s <= q / 2, quadratic, linear)
    return value if value.ndim else float(value)


def bound_sequence(d: int, q: float, max_iter: int = 50) -> List[float]:
    """
    近傍半径の上界列 a_k.

    a_0 = 1、a_{k+1} = 3d / (5d − 2 − 8 m_k (d − 1))（d = 2 で 3/(4 − 4m_k)）.
    a_k ≤ 1/2 + 1e-9 で収束とみなし、1/2 を下回った値は 1/2 に置き換えて止める.

    Args:
        d: 次元（2 以上）
        q: 台のパラメータ
        max_iter: 最大反復回数

    Returns:
        [a_0, a_1, ...]
    """
    if d < 2:
        raise ValueError(f"bound sequence is defined for d >= 2, got {d}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    sequence = [1.0]
    for _ in range(max_iter):
        a = sequence[-1]
        if a <= 0.5 + 1e-9:
            break
        m = difference_quotient(q, a)
        nxt = 3 * d / (5 * d - 2 - 8 * m * (d - 1))
        sequence.append(max(nxt, 0.5))
    logger.debug(f"Bound sequence for d={d}: {len(sequence) - 1} steps, last={sequence[-1]:.12f}")
    return sequence


def monotonicity_gamma(t):
    """γ(t) = −(4/3)t² + (19/12)t − 1/2 + (4/3)t·(φ*φ)(qt)/q（q に依存しない、[1/2, 1] で ≤ 0）."""
    t = np.asarray(t, dtype=float)
    value = -4.0 / 3.0 * t * t + 19.0 / 12.0 * t - 0.5 + 4.0 / 3.0 * t * hann_autocorr(1.0, t)
    return value if value.ndim else float(value)


# ============================================================
# 最大性
# ============================================================


@dataclass(frozen=True)
class MaximalityResult:
    argmax: np.ndarray
    value: float
    psi0: float

    @property
    def exceeds_origin(self) -> bool:
        return self.value > self.psi0 + 1e-12 * abs(self.psi0)


def maximality_threshold(d: int) -> float:
    """原点が ψ の極大でなくなる N·q の値 √((d+2)/3)."""
    return math.sqrt((d + 2) / 3.0)


def grid_slabs(axes: List[np.ndarray]) -> Iterator[np.ndarray]:
    """直積格子を第 1 軸ごとのスラブ (n, d) に分けて順に返す."""
    rest = None
    if len(axes) > 1:
        rest = np.array(np.meshgrid(*axes[1:], indexing="ij")).reshape(len(axes) - 1, -1).T
    for x0 in axes[0]:
        if rest is None:
            yield np.array([[x0]])
        else:
            yield np.hstack([np.full((len(rest), 1), x0), rest])


def _grid_max(params: LocalizerParams, axes: List[np.ndarray]):
    best_value, best_point = -np.inf, None
    for points in grid_slabs(axes):
        values = psi_eval(params, points)
        index = int(np.argmax(values))
        if values[index] > best_value:
            best_value, best_point = float(values[index]), points[index].copy()
    return best_value, best_point


def maximality_search(params: LocalizerParams, grid: int = 200, refine: bool = True) -> MaximalityResult:
    """
    [0, q]^d 上の格子探索で ψ の最大点を求める（ψ は各座標について偶関数）.

    Args:
        params: LocalizerParams
        grid: 1 軸あたりの格子間隔数
        refine: 暫定最大点のまわりで 1 回だけ細かい格子を張るか

    Returns:
        MaximalityResult
    """
    q, d = params.q, params.d
    axis = np.linspace(0.0, q, grid + 1)
    value, point = _grid_max(params, [axis] * d)
    if refine:
        step = q / grid
        local = [np.clip(np.linspace(c - step, c + step, 21), 0.0, q) for c in point]
        local_value, local_point = _grid_max(params, local)
        if local_value > value:
            value, point = local_value, local_point
    psi0 = psi_at_origin(params)
    logger.info(f"Maximality search d={d}, N*q={params.N * q:.6f}: max {value:.12g} at {point}, psi(0)={psi0:.12g}")
    return MaximalityResult(argmax=point, value=value, psi0=psi0)


def psi_min_on_support(params: LocalizerParams, grid: int = 200) -> float:
    """[0, q]^d 格子上の ψ の最小値（台の内側での非負性の数値確認用）."""
    axis = np.linspace(0.0, params.q, grid + 1)
    return min(float(np.min(psi_eval(params, points))) for points in grid_slabs([axis] * params.d))
