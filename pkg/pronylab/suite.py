"""定理ごとの Monte-Carlo 検証スイートとレポート出力."""
import csv
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from pronylab import __version__
from pronylab.errors import ClusterSizeExceededError, ConfigError, SamplingBudgetExhaustedError
from pronylab.esprit import EspritConfig, check_esprit_stability
from pronylab.formats import format_float
from pronylab.measure_model import (
    NORM_L2,
    AdmissibilityClass,
    parse_norm,
    random_admissible_pair,
    random_measure,
    random_nodes,
)
from pronylab.settings import get_settings
from pronylab.stability_lab import (
    KAPPA_LOCAL,
    RELATIVE_SLACK,
    TheoremReport,
    build_report,
    check_2d_l2,
    check_2d_linf_diederichs,
    check_diederichs_univariate,
    check_global_w1,
    check_highd,
    check_local_lipschitz,
    check_md_order,
    check_pair_cluster_bound,
    check_univariate,
    slack_override,
)
from pronylab.torus_geometry import NodeSet
from pronylab.wasserstein import DEFAULT_ANGLES

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TheoremSpec:
    """定理 ID ごとの既定のインスタンス生成パラメータ."""

    theorem: str
    d: int
    N: int
    M: int
    separation: Callable[[int, int, float], float]
    fixed_dimension: bool = True
    min_dimension: int = 1


THEOREMS: Dict[str, TheoremSpec] = {
    spec.theorem: spec
    for spec in (
        TheoremSpec("univariate", 1, 32, 4, lambda d, N, kappa: 2 * kappa / N),
        TheoremSpec("diederichs1d", 1, 32, 4, lambda d, N, kappa: 3 / (N + 1)),
        TheoremSpec("2d-l2", 2, 16, 4, lambda d, N, kappa: 2 * math.sqrt(2) / N),
        TheoremSpec("2d-linf", 2, 16, 4, lambda d, N, kappa: 2 / (N + 1)),
        TheoremSpec("highd", 3, 8, 1, lambda d, N, kappa: 2 * math.sqrt(d) / N, False, 2),
        TheoremSpec("global-w1", 2, 16, 4, lambda d, N, kappa: 2 * math.sqrt(d) / N, False, 2),
        TheoremSpec("md-order", 1, 32, 4, lambda d, N, kappa: 2 * KAPPA_LOCAL / N),
        TheoremSpec("lipschitz-local", 1, 32, 4, lambda d, N, kappa: 2 * KAPPA_LOCAL / N),
        TheoremSpec("esprit", 1, 32, 6, lambda d, N, kappa: 2 / (N + 1)),
        TheoremSpec("vandermonde-pairs", 2, 16, 3, lambda d, N, kappa: 2 * math.sqrt(d) / N, False, 1),
    )
}


def list_theorems() -> List[Dict[str, Any]]:
    """登録済みの定理 ID と既定値."""
    return [
        {"theorem": spec.theorem, "d": spec.d, "N": spec.N, "M": spec.M, "fixed_dimension": spec.fixed_dimension}
        for spec in THEOREMS.values()
    ]


# ============================================================
# 実行設定
# ============================================================


class Tolerances(BaseModel):
    model_config = ConfigDict(extra="forbid")

    slack: float = Field(default=RELATIVE_SLACK, gt=0)


class RunConfig(BaseModel):
    """
    Monte-Carlo 実行の設定.

    d, N, M を省略すると定理ごとの既定値を使う. 優先順位は
    CLI 引数 > 設定ファイル > 既定値.
    """

    model_config = ConfigDict(extra="forbid")

    command: str = "check"
    theorem: str
    d: Optional[int] = Field(default=None, ge=1)
    N: Optional[int] = Field(default=None, ge=1)
    p: str = NORM_L2
    M: Optional[int] = Field(default=None, ge=1)
    c_min: float = Field(default=0.05, gt=0)
    kappa: float = Field(default=KAPPA_LOCAL, gt=1)
    trials: int = Field(default=500, ge=0)
    seed_start: int = Field(default=0, ge=0)
    angles: int = Field(default=DEFAULT_ANGLES, ge=1)
    jitter_min: float = Field(default=1e-4, gt=0)
    jitter_max: float = Field(default=0.3, gt=0)
    out_jsonl: Optional[str] = None
    out_csv: Optional[str] = None
    deterministic: bool = False
    tolerances: Tolerances = Field(default_factory=Tolerances)

    @field_validator("theorem")
    @classmethod
    def _known_theorem(cls, value: str) -> str:
        if value not in THEOREMS:
            raise ValueError(f"unknown theorem '{value}', expected one of {sorted(THEOREMS)}")
        return value

    @field_validator("p", mode="before")
    @classmethod
    def _norm(cls, value) -> str:
        return parse_norm(value)

    @model_validator(mode="after")
    def _check_ranges(self):
        if self.jitter_min > self.jitter_max:
            raise ValueError(f"jitter_min {self.jitter_min} exceeds jitter_max {self.jitter_max}")
        spec = THEOREMS[self.theorem]
        if self.d is not None:
            if spec.fixed_dimension and self.d != spec.d:
                raise ValueError(f"theorem '{self.theorem}' is fixed to d={spec.d}")
            if self.d < spec.min_dimension:
                raise ValueError(f"theorem '{self.theorem}' needs d >= {spec.min_dimension}")
        return self

    @property
    def seeds(self) -> List[int]:
        return list(range(self.seed_start, self.seed_start + self.trials))

    @property
    def dimension(self) -> int:
        return self.d if self.d is not None else THEOREMS[self.theorem].d

    @property
    def order(self) -> int:
        return self.N if self.N is not None else THEOREMS[self.theorem].N

    @property
    def max_nodes(self) -> int:
        return self.M if self.M is not None else THEOREMS[self.theorem].M

    @property
    def separation(self) -> float:
        return THEOREMS[self.theorem].separation(self.dimension, self.order, self.kappa)


def load_run_config(file_values: Optional[Dict[str, Any]] = None, **overrides) -> RunConfig:
    """
    設定ファイルの値に CLI 引数（None 以外）を重ねて RunConfig を作る.

    Raises:
        ConfigError: 未知のキーや範囲外の値
    """
    values = dict(file_values or {})
    values.update({key: value for key, value in overrides.items() if value is not None})
    try:
        return RunConfig.model_validate(values)
    except ValidationError as e:
        error = e.errors()[0]
        location = ".".join(str(part) for part in error["loc"])
        raise ConfigError(f"invalid run config ({location}): {error['msg']}") from e


# ============================================================
# 試行
# ============================================================


def _jitter(rng: np.random.Generator, config: RunConfig) -> float:
    return float(math.exp(rng.uniform(math.log(config.jitter_min), math.log(config.jitter_max))))


def _pair_cluster_nodes(rng: np.random.Generator, count: int, d: int, N: int) -> NodeSet:
    """count 個のペアクラスター（τN は [0.01, 0.9√d] の対数一様）."""
    tau = math.exp(rng.uniform(math.log(0.01), math.log(0.9 * math.sqrt(d)))) / N
    centers = random_nodes(rng, count, d, 2 * math.sqrt(d) / N + tau)
    offsets = rng.uniform(-1.0, 1.0, size=(count, d))
    offsets = offsets / np.max(np.abs(offsets), axis=1, keepdims=True)
    return NodeSet(np.vstack([centers, centers + tau * offsets]))


def run_trial(config: RunConfig, seed: int) -> TheoremReport:
    """
    1 シード分のインスタンスを生成して定理を確かめる.

    Args:
        config: RunConfig
        seed: 乱数シード

    Returns:
        TheoremReport（meta に seed と jitter を含む）
    """
    theorem = config.theorem
    d, N, sep = config.dimension, config.order, config.separation
    rng = np.random.default_rng(seed)
    delta = _jitter(rng, config)
    count = int(rng.integers(1, config.max_nodes + 1))
    meta = {"seed": seed, "jitter": delta}
    cls = AdmissibilityClass(config.c_min, sep, d, N, config.p)

    try:
        if theorem == "vandermonde-pairs":
            return check_pair_cluster_bound(_pair_cluster_nodes(rng, count, d, N), N, d, meta=meta)
        if theorem == "esprit":
            mu0 = random_measure(cls, count, rng)
            noise = rng.uniform(0.0, 1.0, 2 * N + 1) * np.exp(2j * np.pi * rng.random(2 * N + 1))
            noise = noise / np.max(np.abs(noise)) * delta * config.c_min / 30
            return check_esprit_stability(mu0, noise, EspritConfig(N, count), c_min=config.c_min, meta=meta)

        mu1, mu2 = random_admissible_pair(cls, count, seed, delta)
        c_min = config.c_min
        if theorem == "univariate":
            return check_univariate(mu1, mu2, N, config.kappa, c_min, meta)
        if theorem == "diederichs1d":
            return check_diederichs_univariate(mu1, mu2, N, c_min, meta)
        if theorem == "2d-l2":
            return check_2d_l2(mu1, mu2, N, c_min, meta)
        if theorem == "2d-linf":
            return check_2d_linf_diederichs(mu1, mu2, N, c_min, meta)
        if theorem == "highd":
            return check_highd(mu1, mu2, N, d, c_min, meta)
        if theorem == "global-w1":
            return check_global_w1(mu1, mu2, N, config.max_nodes, c_min, config.angles, meta)
        if theorem == "md-order":
            return check_md_order(mu1, mu2, N, c_min, meta)
        return check_local_lipschitz(mu1, mu2, N, c_min, meta)
    except (SamplingBudgetExhaustedError, ClusterSizeExceededError) as e:
        logger.debug(f"{theorem}: seed {seed} produced no instance ({str(e)})")
        return build_report(theorem, False, 0.0, {}, meta={**meta, "premise_detail": str(e)})


@dataclass
class SuiteResult:
    """シード順に並んだレポート."""

    config: RunConfig
    reports: List[TheoremReport] = field(default_factory=list)

    @property
    def seeds(self) -> List[int]:
        return self.config.seeds

    @property
    def premise_count(self) -> int:
        return sum(1 for report in self.reports if report.premise)

    @property
    def violations(self) -> List[int]:
        return [report.meta.get("seed") for report in self.reports if not report.satisfied]

    @property
    def all_satisfied(self) -> bool:
        return not self.violations

    def summary(self) -> Dict[str, Any]:
        held = [report for report in self.reports if report.premise]
        result = {
            "theorem": self.config.theorem,
            "trials": len(self.reports),
            "premise_holds": len(held),
            "satisfied": sum(1 for report in held if report.conclusion_holds),
            "violations": self.violations,
            "min_margin": min((report.margin for report in held), default=None),
        }
        ratios = [report.meta["ratio"] for report in held if "ratio" in report.meta]
        if ratios:
            result["min_ratio"] = min(ratios)
        return result


def run_suite(config: RunConfig) -> SuiteResult:
    """
    シード seed_start.. の各試行を実行する.

    PRONYLAB_THREADS が 2 以上ならスレッドプールで並列に実行し、結果はシード順に並べる.

    Raises:
        ConfigError: M·(2q)^d ≥ 1 など、インスタンスを生成できない設定
    """
    sep, d = config.separation, config.dimension
    if config.theorem not in ("vandermonde-pairs",) and config.max_nodes * (2 * sep) ** d >= 1:
        raise ConfigError(
            f"M={config.max_nodes} nodes with separation {sep:.6g} do not fit in d={d} (M*(2q)^d >= 1)"
        )
    workers = min(get_settings().threads, max(config.trials, 1))
    logger.info(
        f"Running suite '{config.theorem}': trials={config.trials}, d={d}, N={config.order}, "
        f"M<={config.max_nodes}, workers={workers}"
    )

    def run_one(seed: int) -> TheoremReport:
        token = slack_override.set(config.tolerances.slack)
        try:
            return run_trial(config, seed)
        finally:
            slack_override.reset(token)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            reports = list(executor.map(run_one, config.seeds))
    else:
        reports = [run_one(seed) for seed in config.seeds]

    result = SuiteResult(config, reports)
    summary = result.summary()
    logger.info(
        f"Suite '{config.theorem}' finished: premise held in {summary['premise_holds']}/{summary['trials']}, "
        f"violations={len(summary['violations'])}"
    )
    if result.violations:
        logger.warning(f"Theorem '{config.theorem}' violated for seeds {result.violations}")
    return result


# ============================================================
# レポート
# ============================================================


def _config_record(config: RunConfig, deterministic: bool) -> Dict[str, Any]:
    record = config.model_dump(mode="json")
    if deterministic:
        for key in ("out_jsonl", "out_csv"):
            if record.get(key):
                record[key] = os.path.basename(record[key])
    return record


def header_record(result: SuiteResult, deterministic: bool) -> Dict[str, Any]:
    header = {
        "type": "header",
        "version": __version__,
        "config": _config_record(result.config, deterministic),
        "seeds": result.seeds,
        "summary": result.summary(),
    }
    if not deterministic:
        header["timestamp"] = datetime.now(timezone.utc).isoformat()
    return header


CSV_COLUMNS = ["seed", "theorem", "premise", "satisfied", "lhs", "rhs", "margin", "relation", "jitter"]


def write_reports(
    result: SuiteResult,
    jsonl_path: Optional[str] = None,
    csv_path: Optional[str] = None,
    deterministic: bool = False,
) -> None:
    """
    JSON-lines（先頭行に設定とシード）と CSV サマリーを書く.

    Args:
        result: SuiteResult
        jsonl_path: JSON-lines の出力先（None なら書かない）
        csv_path: CSV の出力先（None なら書かない）
        deterministic: タイムスタンプと絶対パスを出力しない
    """
    if jsonl_path:
        with open(jsonl_path, "w", encoding="utf-8") as f:
            f.write(json.dumps(header_record(result, deterministic), sort_keys=True) + "\n")
            for report in result.reports:
                f.write(json.dumps({"type": "report", **report.to_record()}, sort_keys=True) + "\n")
        logger.info(f"Wrote {len(result.reports)} reports to {jsonl_path}")

    if csv_path:
        with open(csv_path, "w", encoding="utf-8", newline="") as f:
            config_line = json.dumps(_config_record(result.config, deterministic), sort_keys=True)
            f.write(f"# config: {config_line}\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for report in result.reports:
                writer.writerow(
                    [
                        report.meta.get("seed", ""),
                        report.theorem,
                        int(report.premise),
                        int(report.satisfied),
                        format_float(report.lhs),
                        format_float(sum(report.rhs_terms.values())),
                        format_float(report.margin),
                        report.relation,
                        format_float(report.meta.get("jitter", math.nan)),
                    ]
                )
        logger.info(f"Wrote CSV summary to {csv_path}")
