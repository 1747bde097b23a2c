"""pronylab MCP サーバー."""
import asyncio
import logging
import os
from typing import Any, Dict, List, Optional, Union

from dotenv import load_dotenv
from fastmcp import FastMCP
from fastmcp.server.auth.providers.jwt import StaticTokenVerifier

from pronylab.settings import get_settings
from tools.check_tools import get_table_constants, get_theorems, run_check
from tools.esprit_tools import recover_measure
from tools.localizer_tools import sample_psi
from tools.moment_tools import compute_moments
from tools.vandermonde_tools import analyze_vandermonde
from tools.wasserstein_tools import compute_w1

# 環境変数をロード
load_dotenv()

# ロギング設定
log_level = os.getenv("LOG_LEVEL", "INFO")
logging.basicConfig(
    level=getattr(logging, log_level),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger(__name__)

# 認証プロバイダーの設定
AUTH_TOKENS_STR = os.getenv("MCP_AUTH_TOKENS")
auth_provider = None

if AUTH_TOKENS_STR:
    # 形式: "token1:client_id1,token2:client_id2"
    tokens = {}
    for token_pair in AUTH_TOKENS_STR.split(","):
        token_pair = token_pair.strip()
        if ":" in token_pair:
            token, client_id = token_pair.split(":", 1)
            tokens[token.strip()] = {
                "client_id": client_id.strip(),
                "scopes": ["mcp:access"],
            }

    if tokens:
        auth_provider = StaticTokenVerifier(tokens=tokens)
        logger.info(f"Bearer token authentication enabled with {len(tokens)} token(s)")
else:
    logger.warning("MCP_AUTH_TOKENS not set - authentication is DISABLED")

# FastMCP サーバーの初期化
mcp = FastMCP("Prony Stability Lab MCP", auth=auth_provider)


# ============================================================
# 測度とモーメント
# ============================================================


@mcp.tool()
async def mcp_moments(measure: Dict[str, Any], N: int, p: str = "2") -> Dict[str, Any]:
    """
    Compute the trigonometric moments of a discrete measure.

    Args:
        measure: Measure object {"d": int, "nodes": [[...]], "weights": [[re, im], ...]}
        N: Radius of the frequency ball
        p: Norm of the frequency ball ("2" or "inf")

    Returns:
        d, N, p, count, rows ([k_1..k_d, re, im]) and the moment CSV
    """
    return await compute_moments(measure=measure, N=N, p=p)


@mcp.tool()
async def mcp_esprit(
    moments: List[List[float]],
    M: int,
    P: Optional[int] = None,
    reference: Optional[Dict[str, Any]] = None,
    c_min: Optional[float] = None,
) -> Dict[str, Any]:
    """
    Recover nodes and weights of a univariate measure from moments k=-N..N with ESPRIT.

    Args:
        moments: Rows [k, re, im] covering k=-N..N
        M: Number of nodes
        P: Hankel rows (default N+1)
        reference: Optional measure to compare against (reports the stability bound)
        c_min: Minimal weight used in the stability bound (default from reference)

    Returns:
        measure, singular_values, singular_gap, unreliable (and stability when reference is given)
    """
    return await recover_measure(moments=moments, M=M, P=P, reference=reference, c_min=c_min)


@mcp.tool()
async def mcp_w1(measure_a: Dict[str, Any], measure_b: Dict[str, Any], angles: int = 360) -> Dict[str, Any]:
    """
    Wasserstein-1 distance between two complex measures with total mass one.

    Args:
        measure_a: Measure object
        measure_b: Measure object
        angles: Number of coarse rotation angles

    Returns:
        w1, theta, tv_bound, matched_bound, gap, coarse_gap
    """
    return await compute_w1(measure_a=measure_a, measure_b=measure_b, angles=angles)


# ============================================================
# 局在化関数と Vandermonde 行列
# ============================================================


@mcp.tool()
async def mcp_psi_sample(
    d: int,
    N: int,
    q: Optional[float] = None,
    window: str = "hann",
    grid: int = 201,
) -> Dict[str, Any]:
    """
    Sample the localizing function psi and its Fourier transform.

    Args:
        d: Dimension
        N: Frequency radius
        q: Support parameter (default sqrt(d)/N)
        window: "hann", "parabolic" or "plain-cosine"
        grid: Points per axis on [-2q, 2q]

    Returns:
        d, N, q, window, count, psi0 and the sample CSV
    """
    return await sample_psi(d=d, N=N, q=q, window=window, grid=grid)


@mcp.tool()
async def mcp_vandermonde(nodes: Dict[str, Any], N: int) -> Dict[str, Any]:
    """
    Smallest singular value of the Vandermonde matrix and the pair-cluster bounds.

    Args:
        nodes: Measure or node object {"d": int, "nodes": [[...]]}
        N: Radius of the frequency ball

    Returns:
        sigma_min, clusters, delta, tau and, for pair clusters, both bounds and premises
    """
    return await analyze_vandermonde(nodes=nodes, N=N)


# ============================================================
# 定理の検証
# ============================================================


@mcp.tool()
async def mcp_check(
    theorem: str,
    config: Optional[Dict[str, Any]] = None,
    include_reports: bool = False,
) -> Dict[str, Any]:
    """
    Run the seeded Monte-Carlo check of a stability theorem.

    Args:
        theorem: Theorem id (see mcp_list_theorems)
        config: Run configuration (d, N, p, M, c_min, kappa, trials, seed_start, angles,
            jitter_min, jitter_max, out_jsonl, out_csv, deterministic, tolerances)
        include_reports: Include every per-seed report in the response

    Returns:
        summary, all_satisfied, violations (seeds) and written report paths
    """
    return await run_check(theorem=theorem, config=config, include_reports=include_reports)


@mcp.tool()
async def mcp_list_theorems() -> Dict[str, Union[List[Dict[str, Any]], int]]:
    """
    List the theorem ids accepted by mcp_check with their default instance sizes.

    Returns:
        theorems and count
    """
    return await get_theorems()


@mcp.tool()
async def mcp_table_constants(kappa: Optional[float] = None) -> Dict[str, Any]:
    """
    Constants of the univariate stability theorems for a separation parameter kappa.

    Args:
        kappa: Separation parameter (> 1, default sqrt(5/3))

    Returns:
        Node and weight constants of each theorem variant
    """
    if kappa is None:
        return await get_table_constants()
    return await get_table_constants(kappa=kappa)


# ============================================================
# サーバー起動
# ============================================================


async def main():
    """サーバーを起動する."""
    # PRONYLAB_THREADS などの確認
    settings = get_settings()

    # トランスポートモードを環境変数で切り替え（デフォルトは stdio）
    transport_mode = os.getenv("MCP_TRANSPORT", "stdio")

    if transport_mode == "http":
        port = int(os.getenv("PORT", "8080"))
        logger.info(f"Starting Prony Stability Lab MCP server on port {port} (HTTP mode, threads={settings.threads})")
        await mcp.run_async(
            transport="streamable-http", host="0.0.0.0", port=port, path="/mcp"
        )
    else:
        logger.info(f"Starting Prony Stability Lab MCP server (stdio mode, threads={settings.threads})")
        await mcp.run_async(transport="stdio")


if __name__ == "__main__":
    asyncio.run(main())
