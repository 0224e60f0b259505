import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import jsonschema
import networkx as nx
import pytest

from weavelab.cli import main, parse_config, parse_range
from weavelab.diagrams import LinkDiagram, projection_graph, weaving_diagram
from weavelab.errors import ParameterError
from weavelab.hypgeom import V3

SCHEMAS = json.loads((Path(__file__).resolve().parents[1] / "docs" / "schemas.json").read_text())


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def validate(obj, name):
    jsonschema.validate(obj, SCHEMAS[name])


class TestGen:
    def test_weave(self, capsys):
        code, out, _ = run(capsys, "gen", "weave", "-p", "3", "-q", "2")
        assert code == 0
        data = json.loads(out)
        validate(data, "diagram")
        assert len(data["crossings"]) == 4

    def test_grid(self, capsys):
        code, out, _ = run(capsys, "gen", "grid", "-m", "4", "-n", "4")
        data = json.loads(out)
        validate(data, "diagram")
        assert len(data["crossings"]) == 32 and data["alternating"]

    def test_braid_alternating_is_weave(self, capsys):
        code, out, _ = run(capsys, "gen", "braid", "-p", "3", "-w", "1 2 1 2", "--alternating")
        d = LinkDiagram.from_json(out)
        assert nx.is_isomorphic(projection_graph(d), projection_graph(weaving_diagram(3, 2)))
        assert d.is_alternating

    def test_pd_output(self, capsys):
        code, out, _ = run(capsys, "gen", "weave", "-p", "3", "-q", "2", "--format", "pd")
        assert code == 0 and out.count("X[") == 4

    def test_parameter_error(self, capsys):
        code, _, err = run(capsys, "gen", "weave", "-p", "1", "-q", "2")
        assert code == 2 and "error" in err

    def test_minimal_grid_odd(self, capsys):
        code, _, _ = run(capsys, "gen", "grid", "-m", "3", "-n", "4", "--closure", "minimal")
        assert code == 2


class TestDet:
    def test_weave(self, capsys):
        code, out, _ = run(capsys, "det", "--weave", "3", "2")
        assert code == 0 and out == "5\n"

    def test_density(self, capsys):
        code, out, _ = run(capsys, "det", "--weave", "3", "2", "--density")
        lines = out.split()
        assert lines[0] == "5"
        assert float(lines[1]) == pytest.approx(2.5281, abs=1e-4)

    def test_file_json_log(self, capsys, tmp_path):
        f = tmp_path / "d.json"
        f.write_text(weaving_diagram(4, 3).to_json())
        code, out, _ = run(capsys, "det", "--file", str(f), "--log")
        assert code == 0
        exact = run(capsys, "det", "--weave", "4", "3", "--format", "json")[1]
        assert float(out) == pytest.approx(json.loads(exact)["log_det"], abs=1e-9)

    def test_file_pd(self, capsys, tmp_path):
        f = tmp_path / "d.pd"
        f.write_text(weaving_diagram(3, 2).pd_text())
        code, out, _ = run(capsys, "det", "--file", str(f))
        assert code == 0 and out == "5\n"

    def test_json_schema(self, capsys):
        code, out, _ = run(capsys, "det", "--braid", "2", "1 1 1", "--density", "--format", "json")
        data = json.loads(out)
        validate(data, "det")
        assert data["det"] == "3"

    def test_missing_file(self, capsys, tmp_path):
        code, _, _ = run(capsys, "det", "--file", str(tmp_path / "nope.json"))
        assert code == 2

    def test_bad_json(self, capsys, tmp_path):
        f = tmp_path / "bad.json"
        f.write_text("{not json")
        assert run(capsys, "det", "--file", str(f))[0] == 2

    def test_zero_determinant_log_path_is_numeric_error(self, capsys):
        # Hopf link drawn with opposite crossings is split-equivalent: det 0
        code, _, err = run(capsys, "det", "--braid", "2", "1 -1", "--log")
        assert code == 4 and "numeric" in err

    def test_zero_determinant_density_is_domain_error(self, capsys):
        code, _, _ = run(capsys, "det", "--braid", "2", "1 -1", "--density")
        assert code == 3


class TestBounds:
    @pytest.mark.parametrize(
        "argv",
        [
            ["weave", "-p", "5", "-q", "7"],
            ["weave", "-p", "5", "-q", "4"],
            ["alternating", "-c", "16"],
            ["twist", "-t", "3"],
            ["adams", "-c", "9"],
            ["thurston", "-c", "9"],
        ],
    )
    def test_json(self, capsys, argv):
        code, out, _ = run(capsys, "bounds", *argv, "--format", "json")
        assert code == 0
        validate(json.loads(out), "bounds")

    def test_weave_values(self, capsys):
        data = json.loads(run(capsys, "bounds", "weave", "-p", "5", "-q", "7", "--format", "json")[1])
        assert data["lower"] < data["upper"]
        assert data["crossings"] == 28

    def test_text(self, capsys):
        code, out, _ = run(capsys, "bounds", "twist", "-t", "3")
        assert "upper: " in out and code == 0

    def test_domain_error(self, capsys):
        assert run(capsys, "bounds", "twist", "-t", "1")[0] == 3


class TestAngles:
    def test_p3(self, capsys):
        code, out, _ = run(capsys, "angles", "-p", "3", "--format", "json")
        data = json.loads(out)
        validate(data, "angles")
        assert data["volume"] == pytest.approx(4 * V3, abs=1e-6)
        assert data["in_window"]

    def test_trace_and_export(self, capsys, tmp_path):
        trace, export = tmp_path / "trace.csv", tmp_path / "tri.json"
        code, out, _ = run(capsys, "angles", "-p", "5", "--trace", str(trace), "--export", str(export), "--format", "json")
        assert code == 0
        assert json.loads(out)["in_window"]
        rows = list(csv.reader(io.StringIO(trace.read_text())))
        assert rows[0] == ["iteration", "volume", "grad_norm"] and len(rows) > 2
        validate(json.loads(export.read_text()), "triangulation_export")

    def test_q(self, capsys):
        data = json.loads(run(capsys, "angles", "-p", "3", "--q", "4", "--format", "json")[1])
        assert data["volume"] == pytest.approx(16 * V3, abs=1e-6)

    def test_p2(self, capsys):
        assert run(capsys, "angles", "-p", "2")[0] == 2


class TestScan:
    def test_weave_jsonl(self, capsys, tmp_path):
        out = tmp_path / "recs.jsonl"
        code, _, _ = run(capsys, "scan", "weave", "--p", "3..5", "--q", "7..9", "--out", str(out))
        assert code == 0
        recs = [json.loads(line) for line in out.read_text().splitlines()]
        assert len(recs) == 9
        for r in recs:
            validate(r, "weave_record")
            assert all(r["verdicts"].values())

    def test_deterministic(self, capsys):
        a = run(capsys, "scan", "weave", "--p", "3..6", "--q", "7..8", "--jobs", "2")[1]
        b = run(capsys, "scan", "weave", "--p", "3..6", "--q", "7..8", "--jobs", "1")[1]
        c = run(capsys, "scan", "weave", "--p", "3..6", "--q", "7..8", "--jobs", "1")[1]
        assert a == b == c

    def test_csv_and_text(self, capsys):
        out = run(capsys, "scan", "weave", "--p", "3", "--q", "2,3", "--format", "csv", "--no-axis")[1]
        rows = list(csv.DictReader(io.StringIO(out)))
        assert [r["q"] for r in rows] == ["2", "3"]
        text = run(capsys, "scan", "weave", "--p", "3", "--q", "2,3", "--format", "text", "--no-axis")[1]
        assert text.splitlines()[0].split()[:3] == ["p", "q", "c"]

    def test_config_file(self, capsys, tmp_path):
        cfg = tmp_path / "scan.cfg"
        cfg.write_text("# slice\np = 3..4\nq = 2..3\nformat = csv\nno-axis = true\n")
        out = run(capsys, "scan", "weave", "--config", str(cfg))[1]
        assert len(list(csv.DictReader(io.StringIO(out)))) == 4
        # flags override the file
        out = run(capsys, "scan", "weave", "--config", str(cfg), "--q", "5")[1]
        assert len(list(csv.DictReader(io.StringIO(out)))) == 2

    def test_grid_entropy(self, capsys):
        out = run(capsys, "scan", "grid-entropy", "--n", "2..8/2")[1]
        rows = [json.loads(x) for x in out.splitlines()]
        for r in rows:
            validate(r, "entropy_row")
        vals = [r["entropy"] for r in rows]
        assert [r["n"] for r in rows] == [2, 4, 6, 8]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_folner(self, capsys):
        out = run(capsys, "scan", "folner", "--n", "4,6")[1]
        for line in out.splitlines():
            validate(json.loads(line), "folner_row")

    def test_mu(self, capsys):
        out = run(capsys, "scan", "mu", "--p", "3..4", "--q", "2..3")[1]
        for line in out.splitlines():
            validate(json.loads(line), "mu_row")

    def test_crossing_change(self, capsys):
        out = run(capsys, "scan", "crossing-change")[1]
        data = json.loads(out)
        validate(data, "crossing_change_report")
        assert data["violations"] == [] and data["diagrams"] == 21

    def test_spectrum(self, capsys):
        out = run(capsys, "scan", "spectrum", "--p", "3..5", "--q", "2..4", "--no-axis")[1]
        validate(json.loads(out), "spectrum_summary")

    def test_bad_range(self, capsys):
        assert run(capsys, "scan", "weave", "--p", "3..x")[0] == 2
        assert run(capsys, "scan", "weave", "--p", "2..4", "--q", "3")[0] == 2

    def test_env_jobs(self, capsys, monkeypatch):
        monkeypatch.setenv("WEAVELAB_THREADS", "0")
        assert run(capsys, "scan", "weave", "--p", "3", "--q", "2")[0] == 2


class TestParsing:
    def test_ranges(self):
        assert parse_range("3..6") == [3, 4, 5, 6]
        assert parse_range("2..10/4") == [2, 6, 10]
        assert parse_range("4,8") == [4, 8]
        assert parse_range("7") == [7]
        for bad in ("", "5..3", "a"):
            with pytest.raises(ParameterError):
                parse_range(bad)

    def test_config(self):
        assert parse_config("a = 1\n# c\nb-c = x # tail\n") == {"a": "1", "b_c": "x"}
        with pytest.raises(ParameterError):
            parse_config("nonsense\n")

    def test_usage_errors(self, capsys):
        assert run(capsys)[0] == 2
        assert run(capsys, "frobnicate")[0] == 2
        assert run(capsys, "det")[0] == 2


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "weavelab.cli", "det", "--weave", "3", "2"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "5\n"
    proc = subprocess.run([sys.executable, "-m", "weavelab.cli", "angles", "-p", "2"], capture_output=True, text=True)
    assert proc.returncode == 2
