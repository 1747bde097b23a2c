"""コマンドラインフロントエンドのテスト."""
import json

import pytest

import cli
from pronylab.errors import NumericalFailureError

DELTA = {"d": 1, "nodes": [[0.0]], "weights": [[1.0, 0.0]]}
SHIFTED = {"d": 1, "nodes": [[0.3]], "weights": [[1.0, 0.0]]}


@pytest.fixture
def write_json(tmp_path):
    def write(name: str, data) -> str:
        path = tmp_path / name
        path.write_text(data if isinstance(data, str) else json.dumps(data))
        return str(path)

    return write


class TestMoments:
    """moments サブコマンド."""

    def test_delta_gives_ones(self, write_json, capsys):
        assert cli.main(["moments", write_json("delta.json", DELTA), "--N", "2"]) == cli.EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "k_1,re,im"
        assert [line.split(",")[0] for line in lines[1:]] == ["-2", "-1", "0", "1", "2"]
        assert all(float(line.split(",")[1]) == 1.0 for line in lines[1:])

    def test_out_file(self, write_json, tmp_path, capsys):
        out = tmp_path / "h.csv"
        assert cli.main(["moments", write_json("delta.json", DELTA), "--N", "1", "--out", str(out)]) == 0
        assert capsys.readouterr().out == ""
        assert len(out.read_text().splitlines()) == 4

    def test_malformed_json(self, write_json):
        assert cli.main(["moments", write_json("bad.json", '{"d": 1,'), "--N", "2"]) == cli.EXIT_USAGE

    def test_missing_file(self, tmp_path):
        assert cli.main(["moments", str(tmp_path / "none.json"), "--N", "2"]) == cli.EXIT_USAGE


class TestUsage:
    """引数の誤り."""

    def test_missing_required(self, write_json):
        with pytest.raises(SystemExit) as excinfo:
            cli.main(["moments", write_json("delta.json", DELTA)])
        assert excinfo.value.code == cli.EXIT_USAGE

    def test_unknown_command(self):
        with pytest.raises(SystemExit) as excinfo:
            cli.main(["frobnicate"])
        assert excinfo.value.code == cli.EXIT_USAGE

    def test_invalid_environment(self, monkeypatch):
        monkeypatch.setenv("PRONYLAB_THREADS", "zero")
        assert cli.main(["constants"]) == cli.EXIT_USAGE


class TestCheck:
    """check サブコマンド."""

    def test_univariate(self, tmp_path, capsys):
        out = tmp_path / "r.jsonl"
        code = cli.main(["check", "univariate", "--trials", "3", "--deterministic", "--out-jsonl", str(out)])
        assert code == cli.EXIT_OK
        summary = json.loads(capsys.readouterr().out)
        assert summary["trials"] == 3
        header = json.loads(out.read_text().splitlines()[0])
        assert header["config"]["out_jsonl"] == "r.jsonl"

    def test_zero_trials(self, capsys):
        assert cli.main(["check", "univariate", "--trials", "0"]) == cli.EXIT_OK
        assert json.loads(capsys.readouterr().out)["trials"] == 0

    def test_config_file(self, write_json, capsys):
        config = write_json("run.json", {"trials": 50, "seed_start": 10})
        assert cli.main(["check", "2d-l2", "--config", config, "--trials", "2"]) == cli.EXIT_OK
        assert json.loads(capsys.readouterr().out)["trials"] == 2

    def test_malformed_config(self, write_json):
        assert cli.main(["check", "univariate", "--config", write_json("run.json", "{trials")]) == cli.EXIT_USAGE

    def test_unknown_config_key(self, write_json):
        config = write_json("run.json", {"trials": 1, "colour": "blue"})
        assert cli.main(["check", "univariate", "--config", config]) == cli.EXIT_USAGE

    def test_unknown_theorem(self):
        assert cli.main(["check", "no-such-theorem", "--trials", "1"]) == cli.EXIT_USAGE

    def test_violation_exit_code(self, monkeypatch):
        async def fake_run_check(theorem, config=None, include_reports=False, **overrides):
            return {"summary": {"theorem": theorem, "violations": [4]}, "all_satisfied": False}

        monkeypatch.setattr(cli, "run_check", fake_run_check)
        assert cli.main(["check", "univariate", "--trials", "5"]) == cli.EXIT_VIOLATION


class TestOtherCommands:
    """その他のサブコマンド."""

    def test_w1(self, write_json, capsys):
        code = cli.main(["w1", write_json("a.json", DELTA), write_json("b.json", SHIFTED), "--angles", "36"])
        assert code == cli.EXIT_OK
        assert json.loads(capsys.readouterr().out)["w1"] == pytest.approx(0.3, abs=1e-9)

    def test_numerical_failure(self, write_json, monkeypatch):
        async def failing(*args, **kwargs):
            raise NumericalFailureError("transport LP failed")

        monkeypatch.setattr(cli, "compute_w1", failing)
        code = cli.main(["w1", write_json("a.json", DELTA), write_json("b.json", SHIFTED)])
        assert code == cli.EXIT_NUMERICAL

    def test_esprit(self, write_json, tmp_path, capsys):
        measure = {"d": 1, "nodes": [[0.2], [0.7]], "weights": [[0.4, 0.1], [0.6, -0.1]]}
        moments = tmp_path / "h.csv"
        assert cli.main(["moments", write_json("mu.json", measure), "--N", "16", "--out", str(moments)]) == 0
        out = tmp_path / "recovered.json"
        code = cli.main(["esprit", str(moments), "--M", "2", "--reference", str(tmp_path / "mu.json"), "--out", str(out)])
        assert code == cli.EXIT_OK
        diagnostics = json.loads(capsys.readouterr().out)
        assert diagnostics["stability"]["premise"]
        recovered = json.loads(out.read_text())
        assert [node[0] for node in recovered["nodes"]] == pytest.approx([0.2, 0.7], abs=1e-8)

    def test_psi_sample(self, capsys):
        assert cli.main(["psi-sample", "--d", "1", "--N", "8", "--grid", "3"]) == cli.EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "x_1,psi,psi_hat"
        assert len(lines) == 4

    def test_psi_sample_grid_limit(self):
        assert cli.main(["psi-sample", "--d", "2", "--N", "8", "--grid", "5000"]) == cli.EXIT_USAGE

    def test_vandermonde(self, write_json, capsys):
        nodes = write_json("y.json", {"d": 1, "nodes": [[0.2], [0.2 + 0.1 / 32], [0.6]]})
        assert cli.main(["vandermonde", nodes, "--N", "32"]) == cli.EXIT_OK
        result = json.loads(capsys.readouterr().out)
        assert result["bound"] == pytest.approx(0.4)

    def test_constants(self, capsys):
        assert cli.main(["constants"]) == cli.EXIT_OK
        result = json.loads(capsys.readouterr().out)
        assert result["improved_weight"] == pytest.approx(0.310, rel=5e-3)
