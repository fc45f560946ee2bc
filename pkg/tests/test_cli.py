import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from pkanrelax.cli import main
from pkanrelax.jsonio import csv_text, dumps, fmt, write_atomic

def run(argv):
    # argparse reports usage errors by exiting with status 2
    try:
        return main(argv)
    except SystemExit as exc:
        return exc.code


QUARTIC_TEXT = "9,-24.5,22,-8,1"
DEMO8_TEXT = "0,1.5,1.3,0,-0.7,0,0.08,0,-0.0025"


class TestEnvelopeCommand:
    def test_quartic_summary(self, capsys):
        assert main(["envelope", "--coeffs", QUARTIC_TEXT, "--interval", "0.25", "3.75"]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0] == "1 bitangent"
        assert out[1].startswith("slope -0.500000 ")

    def test_convex_summary(self, capsys):
        assert main(["envelope", "--coeffs", "0,0,1", "--interval", "-1", "1"]) == 0
        assert capsys.readouterr().out.strip() == "0 bitangents; envelope = p"

    def test_json_and_csv(self, tmp_path):
        out = tmp_path / "env.json"
        code = main(["envelope", "--coeffs", DEMO8_TEXT, "--interval", "-4.1", "4.4", "--out", str(out), "--samples", "500"])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["convex"]["domain"] == [-4.1, 4.4]
        assert {s["kind"] for s in doc["convex"]["segments"]} == {"poly", "affine"}
        rows = list(csv.DictReader(open(tmp_path / "env.csv")))
        assert len(rows) == 500
        for r in rows:
            assert float(r["env"]) <= float(r["p"]) + 1e-9
            assert float(r["concave_env"]) >= float(r["p"]) - 1e-9

    @pytest.mark.parametrize(
        "argv",
        [
            ["envelope", "--coeffs", "1,x", "--interval", "0", "1"],
            ["envelope", "--coeffs", "1,2", "--interval", "1", "0"],
            ["envelope", "--coeffs", "1,2", "--interval", "0", "1", "--tol", "-1"],
            ["envelope", "--coeffs", "1,2"],
        ],
    )
    def test_usage_errors(self, argv, capsys):
        assert run(argv) == 2
        assert capsys.readouterr().err

    def test_no_partial_file_on_error(self, tmp_path):
        out = tmp_path / "env.json"
        assert main(["envelope", "--coeffs", "1,x", "--interval", "0", "1", "--out", str(out)]) == 2
        assert list(tmp_path.iterdir()) == []


class TestPkanCommands:
    def test_gen_deterministic(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["pkan", "gen", "--count", "3", "--out", str(a)]) == 0
        assert main(["pkan", "gen", "--count", "3", "--out", str(b)]) == 0
        names = sorted(p.name for p in a.iterdir())
        assert len(names) == 3
        for n in names:
            assert (a / n).read_bytes() == (b / n).read_bytes()

    def test_relax_report(self, tmp_path):
        main(["pkan", "gen", "--count", "1", "--layers", "2", "--width", "3", "--inputs", "2", "--degree", "3", "--out", str(tmp_path)])
        model = next(tmp_path.iterdir())
        out = tmp_path / "rep.json"
        assert main(["pkan", "relax", str(model), "--out", str(out)]) == 0
        rep = json.loads(out.read_text())
        assert rep["status"] == "optimal" and np.isfinite(rep["lower_bound"])

    def test_relax_convex_chain(self, tmp_path, capsys):
        model = tmp_path / "chain.json"
        model.write_text('{"dims": [1, 1], "box": [[-1, 2]], "layers": [[[[0.5, -1, 1]]]]}')
        out = tmp_path / "r.json"
        assert main(["pkan", "relax", str(model), "--out", str(out), "--feas-tol", "1e-9"]) == 0
        xs = np.linspace(-1, 2, 300001)
        assert json.loads(out.read_text())["lower_bound"] == pytest.approx((0.5 - xs + xs**2).min(), abs=1e-7)

    def test_relax_bad_model(self, tmp_path):
        model = tmp_path / "bad.json"
        model.write_text('{"dims": [1, 1], "box": [[-1, 1]], "layers": []}')
        assert main(["pkan", "relax", str(model)]) == 2
        assert main(["pkan", "relax", str(tmp_path / "missing.json")]) == 2

    def test_gap_sandwich_and_determinism(self, tmp_path):
        args = ["pkan", "gap", "--count", "2", "--layers", "2", "3", "--width", "3", "--inputs", "2", "--degree", "3", "--samples", "300"]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        rows = list(csv.DictReader(open(a)))
        assert [int(r["index"]) for r in rows] == [0, 1, 2, 3]
        for r in rows:
            assert float(r["f_relax"]) <= float(r["f_upper"]) + 1e-6
            assert np.isfinite(float(r["relative_gap"]))
        timing = list(csv.DictReader(open(tmp_path / "a.timing.csv")))
        assert len(timing) == 4 and all(float(t["solve_seconds"]) >= 0 for t in timing)

    def test_gap_parallel_same_table(self, tmp_path):
        args = ["pkan", "gap", "--count", "2", "--layers", "2", "--width", "2", "--inputs", "2", "--degree", "2", "--samples", "100"]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--jobs", "2", "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_bad_count(self, capsys):
        assert main(["pkan", "gen", "--count", "0"]) == 2


class TestGamCommand:
    def write(self, tmp_path, link, component=(0, 0, 1)):
        p = tmp_path / "g.json"
        p.write_text(json.dumps({"components": [list(component)], "link": link, "box": [[-1, 1]]}))
        return str(p)

    def test_identity_quadratic_pass(self, tmp_path, capsys):
        assert main(["gam", "check", self.write(tmp_path, [0, 1])]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0] == "relaxation min 0"
        assert float(out[2].split()[1]) <= 1e-8
        assert out[-1] == "PASS"

    def test_random_monotone_pass(self, tmp_path, capsys):
        p = tmp_path / "g.json"
        p.write_text(json.dumps({"components": [[0.1, -1, 0.5, 0.8], [0, 0.3, -1, 0, 0.6]], "link": [0, 1, 0.2, 0.3], "box": [[-1, 1], [-1.5, 0.5]]}))
        assert main(["gam", "check", str(p)]) == 0
        assert capsys.readouterr().out.splitlines()[-1] == "PASS"

    def test_non_monotone_exit_four(self, tmp_path, capsys):
        # inner range [-1, 1]; the square link turns around at 0
        assert main(["gam", "check", self.write(tmp_path, [0, 0, 1], component=(0, 1))]) == 4
        assert "at" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    r = subprocess.run(
        [sys.executable, "-m", "pkanrelax", "envelope", "--coeffs", "0,0,-1", "--interval", "-1", "1"],
        capture_output=True,
        text=True,
    )
    assert r.returncode == 0 and r.stdout.startswith("1 bitangent")


class TestJsonIO:
    def test_fmt(self):
        assert fmt(0.1) == "0.10000000000000001"
        assert fmt(3) == "3" and fmt(True) == "true"
        assert fmt(float("nan")) == "NaN" and fmt(float("-inf")) == "-Infinity"

    def test_float_round_trip(self):
        rng = np.random.default_rng(0)
        vals = list(rng.normal(size=50) * 10.0 ** rng.integers(-20, 20, 50))
        assert json.loads(dumps({"v": vals}))["v"] == vals

    def test_write_atomic_replaces(self, tmp_path):
        p = tmp_path / "x.txt"
        write_atomic(p, "one")
        write_atomic(p, "two")
        assert p.read_text() == "two" and len(list(tmp_path.iterdir())) == 1

    def test_csv(self):
        assert csv_text(("a", "b"), [(1, 0.5), (2, "ok")]) == "a,b\n1,0.5\n2,ok\n"
