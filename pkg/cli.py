"""pronylab のコマンドラインフロントエンド.

終了コード: 0 成功、1 使い方・設定・入力形式の誤り、2 数値計算の失敗、3 定理の反例を検出.
ログは標準エラーに出し、標準出力は機械可読な結果だけにする.
"""
import argparse
import asyncio
import json
import logging
import sys
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from pronylab.errors import NumericalFailureError, PronyLabError
from pronylab.settings import get_settings
from tools.check_tools import get_table_constants, run_check
from tools.esprit_tools import recover_measure
from tools.localizer_tools import sample_psi
from tools.moment_tools import compute_moments
from tools.vandermonde_tools import analyze_vandermonde
from tools.wasserstein_tools import compute_w1

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_VIOLATION = 3


class _Parser(argparse.ArgumentParser):
    """使い方の誤りを終了コード 1 で報告するパーサー."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read_text(path: str) -> str:
    with open(path, encoding="utf-8") as f:
        return f.read()


def _emit(text: str, out: Optional[str] = None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        logger.info(f"Wrote {out}")
    else:
        sys.stdout.write(text)


def _dump(data: Dict[str, Any]) -> str:
    return json.dumps(data, indent=2) + "\n"


# ============================================================
# サブコマンド
# ============================================================


def cmd_moments(args) -> int:
    result = asyncio.run(compute_moments(_read_text(args.measure), args.N, args.p))
    _emit(result["csv"], args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    file_values = json.loads(_read_text(args.config)) if args.config else None
    tolerances = {"slack": args.slack} if args.slack is not None else None
    result = asyncio.run(
        run_check(
            args.theorem,
            file_values,
            d=args.d,
            N=args.N,
            p=args.p,
            M=args.M,
            c_min=args.c_min,
            kappa=args.kappa,
            trials=args.trials,
            seed_start=args.seed_start,
            angles=args.angles,
            jitter_min=args.jitter_min,
            jitter_max=args.jitter_max,
            out_jsonl=args.out_jsonl,
            out_csv=args.out_csv,
            deterministic=args.deterministic or None,
            tolerances=tolerances,
        )
    )
    _emit(_dump(result["summary"]))
    return EXIT_OK if result["all_satisfied"] else EXIT_VIOLATION


def cmd_psi_sample(args) -> int:
    result = asyncio.run(sample_psi(args.d, args.N, args.q, args.window, args.grid))
    _emit(result["csv"], args.out)
    return EXIT_OK


def cmd_esprit(args) -> int:
    reference = _read_text(args.reference) if args.reference else None
    result = asyncio.run(recover_measure(_read_text(args.moments), args.M, args.P, reference, args.c_min))
    if args.out:
        _emit(_dump(result["measure"]), args.out)
        diagnostics = {key: value for key, value in result.items() if key != "measure"}
        _emit(_dump(diagnostics))
    else:
        _emit(_dump(result))
    return EXIT_OK


def cmd_w1(args) -> int:
    result = asyncio.run(compute_w1(_read_text(args.measure_a), _read_text(args.measure_b), args.angles))
    _emit(_dump(result))
    return EXIT_OK


def cmd_vandermonde(args) -> int:
    result = asyncio.run(analyze_vandermonde(_read_text(args.nodes), args.N))
    _emit(_dump(result))
    return EXIT_OK


def cmd_constants(args) -> int:
    result = asyncio.run(get_table_constants(args.kappa))
    _emit(_dump(result))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pronylab", description="Stability laboratory for super-resolution of complex measures.")
    commands = parser.add_subparsers(dest="command", required=True)

    moments = commands.add_parser("moments", help="trigonometric moments of a measure file")
    moments.add_argument("measure", help="measure JSON file")
    moments.add_argument("--N", type=int, required=True)
    moments.add_argument("--p", default="2", choices=["2", "inf"])
    moments.add_argument("--out", help="moment CSV (stdout if omitted)")
    moments.set_defaults(handler=cmd_moments)

    check = commands.add_parser("check", help="Monte-Carlo check of a stability theorem")
    check.add_argument("theorem")
    check.add_argument("--config", help="run config JSON; flags override its values")
    check.add_argument("--d", type=int)
    check.add_argument("--N", type=int)
    check.add_argument("--p", choices=["2", "inf"])
    check.add_argument("--M", type=int)
    check.add_argument("--c-min", dest="c_min", type=float)
    check.add_argument("--kappa", type=float)
    check.add_argument("--trials", type=int)
    check.add_argument("--seed-start", dest="seed_start", type=int)
    check.add_argument("--angles", type=int)
    check.add_argument("--jitter-min", dest="jitter_min", type=float)
    check.add_argument("--jitter-max", dest="jitter_max", type=float)
    check.add_argument("--slack", type=float, help="relative slack of the inequality checks")
    check.add_argument("--out-jsonl", dest="out_jsonl")
    check.add_argument("--out-csv", dest="out_csv")
    check.add_argument("--deterministic", action="store_true", help="omit timestamps and absolute paths")
    check.set_defaults(handler=cmd_check)

    psi = commands.add_parser("psi-sample", help="sample the localizer and its Fourier transform")
    psi.add_argument("--d", type=int, required=True)
    psi.add_argument("--N", type=int, required=True)
    psi.add_argument("--q", type=float, help="support parameter (default sqrt(d)/N)")
    psi.add_argument("--window", default="hann", choices=["hann", "parabolic", "plain-cosine"])
    psi.add_argument("--grid", type=int, default=201, help="points per axis")
    psi.add_argument("--out")
    psi.set_defaults(handler=cmd_psi_sample)

    esprit = commands.add_parser("esprit", help="recover a univariate measure from its moments")
    esprit.add_argument("moments", help="moment CSV file")
    esprit.add_argument("--M", type=int, required=True)
    esprit.add_argument("--P", type=int, help="Hankel rows (default N+1)")
    esprit.add_argument("--reference", help="measure JSON to compare against")
    esprit.add_argument("--c-min", dest="c_min", type=float)
    esprit.add_argument("--out", help="recovered measure JSON")
    esprit.set_defaults(handler=cmd_esprit)

    w1 = commands.add_parser("w1", help="Wasserstein-1 distance of two measures")
    w1.add_argument("measure_a")
    w1.add_argument("measure_b")
    w1.add_argument("--angles", type=int, default=360)
    w1.set_defaults(handler=cmd_w1)

    vandermonde = commands.add_parser("vandermonde", help="smallest singular value and pair-cluster bounds")
    vandermonde.add_argument("nodes", help="measure or node JSON file")
    vandermonde.add_argument("--N", type=int, required=True)
    vandermonde.set_defaults(handler=cmd_vandermonde)

    constants = commands.add_parser("constants", help="constants of the univariate theorems")
    constants.add_argument("--kappa", type=float, default=5 ** 0.5 / 3 ** 0.5)
    constants.set_defaults(handler=cmd_constants)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    try:
        settings = get_settings()
        logging.basicConfig(
            level=getattr(logging, settings.log_level),
            format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            stream=sys.stderr,
        )
        return args.handler(args)
    except NumericalFailureError as e:
        logger.error(f"Numerical failure: {str(e)}")
        return EXIT_NUMERICAL
    except (PronyLabError, ValueError, OSError) as e:
        logger.error(f"{args.command}: {str(e)}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
