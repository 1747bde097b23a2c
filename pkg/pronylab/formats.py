"""測度 JSON、モーメント CSV、ψ サンプル CSV の読み書き.

JSON の浮動小数点数は repr（最短の往復表現）、CSV は 17 桁で書く.
"""
import csv
import io
import json
import logging
from typing import Iterable, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from pronylab.errors import FormatError, NotProbabilityLikeError
from pronylab.measure_model import (
    NORM_L2,
    NORM_LINF,
    DiscreteMeasure,
    MomentVector,
    frequency_set,
)
from pronylab.torus_geometry import NodeSet

logger = logging.getLogger(__name__)


def format_float(value: float) -> str:
    """CSV 用の 17 桁表現."""
    return f"{value:.17g}"


class MeasureFile(BaseModel):
    """測度ファイルのスキーマ. weights を省略するとノード集合として扱う."""

    model_config = ConfigDict(extra="forbid")

    d: int = Field(ge=1)
    nodes: List[List[float]]
    weights: Optional[List[Tuple[float, float]]] = None

    @model_validator(mode="after")
    def _check_shapes(self):
        for index, node in enumerate(self.nodes):
            if len(node) != self.d:
                raise ValueError(f"nodes[{index}] has {len(node)} coordinates, expected {self.d}")
        if self.weights is not None and len(self.weights) != len(self.nodes):
            raise ValueError(f"{len(self.nodes)} nodes but {len(self.weights)} weights")
        return self


def _load_measure_file(text: str) -> MeasureFile:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"invalid JSON: {e.msg}", line=e.lineno) from e
    try:
        return MeasureFile.model_validate(data)
    except ValidationError as e:
        error = e.errors()[0]
        location = ".".join(str(part) for part in error["loc"]) or None
        raise FormatError(error["msg"], field=location) from e


def measure_from_dict(data) -> DiscreteMeasure:
    """測度スキーマの dict（または JSON 文字列）から DiscreteMeasure を作る."""
    text = data if isinstance(data, str) else json.dumps(data)
    parsed = _load_measure_file(text)
    if parsed.weights is None:
        raise FormatError("measure file needs weights", field="weights")
    nodes = np.asarray(parsed.nodes, dtype=float).reshape(len(parsed.nodes), parsed.d)
    weights = np.array([complex(re, im) for re, im in parsed.weights], dtype=complex)
    try:
        return DiscreteMeasure(NodeSet(nodes), weights)
    except NotProbabilityLikeError as e:
        raise FormatError(str(e), field="weights") from e
    except ValueError as e:
        raise FormatError(str(e), field="nodes") from e


def nodes_from_dict(data) -> NodeSet:
    """測度スキーマの dict（または JSON 文字列）からノード集合だけを読む."""
    text = data if isinstance(data, str) else json.dumps(data)
    parsed = _load_measure_file(text)
    try:
        return NodeSet(np.asarray(parsed.nodes, dtype=float).reshape(len(parsed.nodes), parsed.d))
    except ValueError as e:
        raise FormatError(str(e), field="nodes") from e


def measure_to_dict(mu) -> dict:
    """DiscreteMeasure / AtomicMeasure を測度スキーマの dict にする."""
    points = mu.points
    return {
        "d": int(points.shape[1]),
        "nodes": [[float(x) for x in row] for row in points],
        "weights": [[float(c.real), float(c.imag)] for c in np.asarray(mu.weights, dtype=complex)],
    }


def read_measure(path: str) -> DiscreteMeasure:
    with open(path, encoding="utf-8") as f:
        return measure_from_dict(f.read())


def read_nodes(path: str) -> NodeSet:
    with open(path, encoding="utf-8") as f:
        return nodes_from_dict(f.read())


def write_measure(path: str, mu) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(measure_to_dict(mu), f, indent=2)
        f.write("\n")


# ============================================================
# モーメント CSV
# ============================================================


def moment_rows(h: MomentVector) -> List[List[float]]:
    """[k_1, ..., k_d, re, im] の行."""
    return [
        [int(k) for k in member] + [float(value.real), float(value.imag)]
        for member, value in zip(h.freq_set.members, h.values)
    ]


def moments_to_csv(h: MomentVector) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow([f"k_{i + 1}" for i in range(h.freq_set.d)] + ["re", "im"])
    for row in moment_rows(h):
        writer.writerow([str(k) for k in row[:-2]] + [format_float(row[-2]), format_float(row[-1])])
    return buffer.getvalue()


def moments_from_rows(rows: Iterable, d: Optional[int] = None, first_line: int = 1) -> MomentVector:
    """
    [k_1, ..., k_d, re, im] の行からモーメントベクトルを作る.

    周波数は ℓ² 球または ∞ 球（辞書式順で全要素）でなければならない.

    Raises:
        FormatError: 列数や数値の誤り、周波数集合が球にならない場合（行番号つき）
    """
    members, values = [], []
    for offset, row in enumerate(rows):
        line = first_line + offset
        row = list(row)
        if d is None:
            d = len(row) - 2
        if d < 1 or len(row) != d + 2:
            raise FormatError(f"expected {max(d, 1) + 2} columns, got {len(row)}", line=line)
        try:
            k = [int(str(value).strip()) for value in row[:d]]
        except ValueError as e:
            raise FormatError("frequency must be an integer", line=line, field="k") from e
        try:
            re, im = float(row[d]), float(row[d + 1])
        except ValueError as e:
            raise FormatError("moment must be a real number", line=line, field="re/im") from e
        members.append(k)
        values.append(complex(re, im))
    if d is None or not members:
        raise FormatError("no moment rows", line=first_line)

    given = np.asarray(members, dtype=np.int64)
    order = np.lexsort(given.T[::-1])
    given, ordered_values = given[order], np.asarray(values, dtype=complex)[order]
    N = int(np.abs(given).max())
    for p in (NORM_L2, NORM_LINF):
        freq = frequency_set(d, N, p)
        if freq.members.shape == given.shape and np.array_equal(freq.members, given):
            return MomentVector(freq, ordered_values)
    raise FormatError(f"frequencies do not form an l2 or l-inf ball of radius {N}", field="k")


def moments_from_csv(text: str) -> MomentVector:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("empty moment file", line=1)
    d = len(header) - 2
    expected = [f"k_{i + 1}" for i in range(d)] + ["re", "im"]
    if d < 1 or [name.strip() for name in header] != expected:
        raise FormatError(f"header must be {','.join(expected) if d >= 1 else 'k_1,...,k_d,re,im'}", line=1)
    rows = [row for row in reader if row]
    return moments_from_rows(rows, d=d, first_line=2)


def read_moments(path: str) -> MomentVector:
    with open(path, encoding="utf-8") as f:
        return moments_from_csv(f.read())


def write_moments(path: str, h: MomentVector) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(moments_to_csv(h))


# ============================================================
# ψ サンプル CSV
# ============================================================


def psi_samples_to_csv(points: np.ndarray, psi: np.ndarray, psi_hat: np.ndarray) -> str:
    """x_1..x_d, psi, psi_hat の CSV."""
    d = points.shape[1]
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow([f"x_{i + 1}" for i in range(d)] + ["psi", "psi_hat"])
    for x, value, hat in zip(points, psi, psi_hat):
        writer.writerow([format_float(c) for c in x] + [format_float(value), format_float(hat)])
    return buffer.getvalue()
