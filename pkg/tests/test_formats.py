"""入出力フォーマットのテスト."""
import json

import numpy as np
import pytest

from pronylab.errors import FormatError
from pronylab.formats import (
    format_float,
    measure_from_dict,
    measure_to_dict,
    moments_from_csv,
    moments_from_rows,
    moments_to_csv,
    nodes_from_dict,
    psi_samples_to_csv,
    read_measure,
    read_moments,
    write_measure,
    write_moments,
)
from pronylab.measure_model import DiscreteMeasure, frequency_set, moment_map

MEASURE = {"d": 1, "nodes": [[0.1], [0.6]], "weights": [[0.5, 0.25], [0.5, -0.25]]}


class TestMeasureFile:
    """測度 JSON の読み書き."""

    def test_parse(self):
        mu = measure_from_dict(MEASURE)
        assert mu.dim == 1
        np.testing.assert_array_equal(mu.weights, [0.5 + 0.25j, 0.5 - 0.25j])

    def test_parse_string(self):
        assert len(measure_from_dict(json.dumps(MEASURE))) == 2

    def test_invalid_json_reports_line(self):
        with pytest.raises(FormatError) as excinfo:
            measure_from_dict('{\n"d": 1,\n oops}')
        assert excinfo.value.line == 3
        assert "line 3" in str(excinfo.value)

    def test_wrong_coordinate_count(self):
        with pytest.raises(FormatError):
            measure_from_dict({"d": 2, "nodes": [[0.1]], "weights": [[1.0, 0.0]]})

    def test_bad_field_type(self):
        with pytest.raises(FormatError) as excinfo:
            measure_from_dict({"d": 1, "nodes": [["x"]], "weights": [[1.0, 0.0]]})
        assert excinfo.value.field.startswith("nodes")

    def test_unknown_field(self):
        with pytest.raises(FormatError):
            measure_from_dict({**MEASURE, "extra": 1})

    def test_mass_must_be_one(self):
        with pytest.raises(FormatError) as excinfo:
            measure_from_dict({"d": 1, "nodes": [[0.1]], "weights": [[0.5, 0.0]]})
        assert excinfo.value.field == "weights"

    def test_colliding_nodes(self):
        with pytest.raises(FormatError) as excinfo:
            measure_from_dict({"d": 1, "nodes": [[0.1], [1.1]], "weights": [[0.5, 0.0], [0.5, 0.0]]})
        assert excinfo.value.field == "nodes"

    def test_nodes_without_weights(self):
        nodes = nodes_from_dict({"d": 2, "nodes": [[0.1, 0.2], [0.5, 0.5]]})
        assert len(nodes) == 2
        with pytest.raises(FormatError):
            measure_from_dict({"d": 2, "nodes": [[0.1, 0.2]]})

    def test_file_round_trip(self, tmp_path):
        mu = DiscreteMeasure.from_arrays([[0.1, 0.3], [0.7, 0.9]], [0.1 + 0.3j, 0.9 - 0.3j])
        path = tmp_path / "mu.json"
        write_measure(str(path), mu)
        loaded = read_measure(str(path))
        np.testing.assert_array_equal(loaded.points, mu.points)
        np.testing.assert_array_equal(loaded.weights, mu.weights)
        assert json.loads(path.read_text()) == measure_to_dict(mu)


class TestMomentCsv:
    """モーメント CSV の読み書き."""

    def test_write_format(self):
        h = moment_map(DiscreteMeasure.from_arrays([[0.0]], [1.0]), frequency_set(1, 1))
        lines = moments_to_csv(h).splitlines()
        assert lines[0] == "k_1,re,im"
        rows = [line.split(",") for line in lines[1:]]
        assert [row[0] for row in rows] == ["-1", "0", "1"]
        assert all(row[1] == "1" and float(row[2]) == 0.0 for row in rows)

    def test_parse_any_order(self):
        text = "k_1,re,im\n1,0.5,0\n-1,0.5,0\n0,1,0\n"
        h = moments_from_csv(text)
        assert h.freq_set.N == 1
        np.testing.assert_array_equal(h.values, [0.5, 1.0, 0.5])

    def test_bad_header(self):
        with pytest.raises(FormatError) as excinfo:
            moments_from_csv("k,re,im\n0,1,0\n")
        assert excinfo.value.line == 1

    def test_bad_number_reports_line(self):
        with pytest.raises(FormatError) as excinfo:
            moments_from_csv("k_1,re,im\n-1,1,0\n0,abc,0\n1,1,0\n")
        assert excinfo.value.line == 3
        assert excinfo.value.field == "re/im"

    def test_not_a_ball(self):
        with pytest.raises(FormatError):
            moments_from_csv("k_1,re,im\n0,1,0\n2,1,0\n")

    def test_empty(self):
        with pytest.raises(FormatError):
            moments_from_csv("")
        with pytest.raises(FormatError):
            moments_from_rows([])

    def test_linf_ball(self):
        freq = frequency_set(2, 2, "inf")
        rows = [list(k) + [1.0, 0.0] for k in freq.members]
        assert moments_from_rows(rows).freq_set.p == "inf"

    def test_file_round_trip(self, tmp_path):
        mu = DiscreteMeasure.from_arrays([[0.1, 0.3], [0.7, 0.9]], [0.1 + 0.3j, 0.9 - 0.3j])
        h = moment_map(mu, frequency_set(2, 3))
        path = tmp_path / "h.csv"
        write_moments(str(path), h)
        loaded = read_moments(str(path))
        np.testing.assert_array_equal(loaded.values, h.values)
        np.testing.assert_array_equal(loaded.freq_set.members, h.freq_set.members)


class TestPsiCsv:
    """ψ サンプル CSV."""

    def test_layout(self):
        text = psi_samples_to_csv(np.array([[0.0, 0.5]]), np.array([1.5]), np.array([np.nan]))
        assert text.splitlines() == ["x_1,x_2,psi,psi_hat", "0,0.5,1.5,nan"]

    def test_format_float(self):
        assert format_float(0.1) == "0.10000000000000001"
        assert float(format_float(np.pi)) == np.pi
