"""定理検証ツール."""
import asyncio
import logging
from typing import Any, Dict, Optional

from pronylab.stability_lab import KAPPA_LOCAL, table_constants
from pronylab.suite import list_theorems, load_run_config, run_suite, write_reports

logger = logging.getLogger(__name__)


async def run_check(
    theorem: str,
    config: Optional[Dict[str, Any]] = None,
    include_reports: bool = False,
    **overrides,
) -> Dict[str, Any]:
    """
    定理の Monte-Carlo 検証を実行する.

    スイートはワーカースレッドで実行する. out_jsonl / out_csv が設定されていればレポートを書く.

    Args:
        theorem: 定理 ID
        config: 設定ファイルの内容（RunConfig のフィールド）
        include_reports: 各試行のレポートを結果に含めるか
        **overrides: config より優先するフィールド（None は無視）

    Returns:
        summary, all_satisfied, violations, out_jsonl, out_csv（include_reports なら reports も）

    Raises:
        ConfigError: 設定が不正な場合
    """
    try:
        run_config = load_run_config(config, theorem=theorem, **overrides)
        logger.info(f"Checking theorem '{run_config.theorem}' over {run_config.trials} seeds")

        result = await asyncio.to_thread(run_suite, run_config)
        write_reports(result, run_config.out_jsonl, run_config.out_csv, run_config.deterministic)

        response = {
            "summary": result.summary(),
            "all_satisfied": result.all_satisfied,
            "violations": result.violations,
            "out_jsonl": run_config.out_jsonl,
            "out_csv": run_config.out_csv,
        }
        if include_reports:
            response["reports"] = [report.to_record() for report in result.reports]
        return response

    except Exception as e:
        logger.error(f"Failed to run check for '{theorem}': {str(e)}")
        raise


async def get_theorems() -> Dict[str, Any]:
    """
    検証できる定理 ID と既定のパラメータを返す.

    Returns:
        theorems（theorem, d, N, M, fixed_dimension）
    """
    theorems = list_theorems()
    return {"theorems": theorems, "count": len(theorems)}


async def get_table_constants(kappa: float = KAPPA_LOCAL) -> Dict[str, Any]:
    """
    1 変数定理の定数表を返す.

    Args:
        kappa: 分離パラメータ κ（> 1）

    Returns:
        table_constants の dict
    """
    try:
        return table_constants(kappa)
    except Exception as e:
        logger.error(f"Failed to evaluate constants for kappa={kappa}: {str(e)}")
        raise
