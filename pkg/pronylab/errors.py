"""pronylab の例外階層."""


class PronyLabError(Exception):
    """pronylab が送出する例外の基底クラス."""


class ConfigError(PronyLabError, ValueError):
    """設定値（環境変数・RunConfig）が不正."""


class FormatError(PronyLabError, ValueError):
    """入力ファイルのパースに失敗した.

    Attributes:
        line: 問題のある行番号（1 始まり、不明なら None）
        field: 問題のあるフィールド名（不明なら None）
    """

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field is not None:
            location.append(f"field '{field}'")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")
        self.line = line
        self.field = field


class DimensionMismatchError(PronyLabError, ValueError):
    """次元 d が一致しない."""


class UndefinedSeparationError(PronyLabError, ValueError):
    """ノードが 2 個未満で分離距離が定義できない."""


class IncomparableSetsError(PronyLabError, ValueError):
    """ノード集合の濃度が異なりマッチング距離が定義できない."""


class FrequencySetMismatchError(PronyLabError, ValueError):
    """モーメントベクトルの周波数集合が一致しない."""


class NotProbabilityLikeError(PronyLabError, ValueError):
    """重みの総和が 1 でない、またはゼロ重み・重複ノードを含む."""


class ClosedFormUnavailableError(PronyLabError, ValueError):
    """閉形式が Hann 窓以外では利用できない."""


class OutOfDomainError(PronyLabError, ValueError):
    """評価点が台 ‖x‖_∞ ≤ q の外にある."""


class UnbalancedProblemError(PronyLabError, ValueError):
    """輸送問題の供給量と需要量が一致しない."""


class NonBijectiveMatchingError(PronyLabError, ValueError):
    """η が全単射になっていない."""


class ClusterSizeExceededError(PronyLabError, ValueError):
    """3 個以上のノードが 1 つのクラスタに入る."""


class SamplingBudgetExhaustedError(PronyLabError, RuntimeError):
    """棄却サンプリングの試行回数上限に達した."""


class NumericalFailureError(PronyLabError, ArithmeticError):
    """数値計算カーネルが収束しない、または精度保証を満たさない."""


class IllPosedError(NumericalFailureError):
    """最小二乗問題が階数落ち、または条件数が大きすぎる."""
