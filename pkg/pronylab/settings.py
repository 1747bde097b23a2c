"""プロセス設定のシングルトン管理."""
import logging
import os
from typing import Optional

from pydantic import BaseModel, Field, ValidationError

from pronylab.errors import ConfigError

logger = logging.getLogger(__name__)

_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class LabSettings(BaseModel):
    """環境変数から読み込むプロセス全体の設定."""

    threads: int = Field(default=1, ge=1)
    log_level: str = "INFO"


_settings: Optional[LabSettings] = None


def get_settings() -> LabSettings:
    """
    設定のシングルトンインスタンスを取得する.

    環境変数 PRONYLAB_THREADS（並列スレッド数の上限）と LOG_LEVEL を参照する.

    Returns:
        LabSettings: プロセス設定

    Raises:
        ConfigError: 環境変数の値が不正な場合
    """
    global _settings

    if _settings is None:
        raw_threads = os.getenv("PRONYLAB_THREADS", "1")
        log_level = os.getenv("LOG_LEVEL", "INFO").upper()
        if log_level not in _LOG_LEVELS:
            raise ConfigError(f"LOG_LEVEL must be one of {_LOG_LEVELS}, got '{log_level}'")
        try:
            threads = int(raw_threads)
        except ValueError as e:
            raise ConfigError(f"PRONYLAB_THREADS must be an integer, got '{raw_threads}'") from e
        try:
            _settings = LabSettings(threads=threads, log_level=log_level)
        except ValidationError as e:
            raise ConfigError(f"PRONYLAB_THREADS must be >= 1, got {threads}") from e
        logger.info(f"Lab settings initialized: threads={_settings.threads}")

    return _settings


def reset_settings() -> None:
    """
    設定をリセットする（テスト用）.
    """
    global _settings
    _settings = None
