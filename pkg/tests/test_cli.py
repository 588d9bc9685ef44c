import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from quasiid.cli import run
from quasiid.lattice import LatticeDistribution


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def bern(tmp_path):
    return write(tmp_path, "bernoulli075.json", {"masses": [0.25, 0.75]})


@pytest.fixture
def bern_triplet(tmp_path, bern):
    code, out, _ = call("analyze", bern)
    return write(tmp_path, "bern_triplet.json", json.loads(out)["triplet"])


@pytest.fixture
def poisson_triplet(tmp_path):
    t = {"a": 0.0, "gamma": 0.0, "kind": "drift", "nu": {"atoms": [[1.0, 2.0, 1]], "lattice": {"offset": 0.0, "spacing": 1.0}}}
    return write(tmp_path, "poisson2_triplet.json", t)


class TestAnalyze:
    def test_bernoulli(self, bern):
        code, out, _ = call("analyze", bern)
        rep = json.loads(out)
        assert code == 0 and rep["verdict"] == "QID"
        assert rep["triplet"]["gamma"] == 1.0
        atoms = {a[2]: a[1] for a in rep["triplet"]["nu"]["atoms"]}
        assert atoms[-1] == pytest.approx(1 / 3) and atoms[-2] == pytest.approx(-1 / 18)

    def test_binomial_half(self, tmp_path):
        path = write(tmp_path, "binom2half.json", {"masses": [0.25, 0.5, 0.25]})
        code, out, _ = call("analyze", path)
        assert code == 2 and "root on unit circle" in json.loads(out)["reason"]

    def test_undecided(self, tmp_path):
        eps = 1e-10
        path = write(tmp_path, "near.json", {"masses": [(1 + eps) / (2 + eps), 1 / (2 + eps)]})
        assert call("analyze", path)[0] == 3

    def test_fft_zero_is_undecided_input(self, tmp_path):
        path = write(tmp_path, "binom2half.json", {"masses": [0.25, 0.5, 0.25]})
        code, _, err = call("analyze", path, "--method", "fft")
        assert code == 1 and "possible zero" in err

    def test_fft_method(self, bern):
        code, out, _ = call("analyze", bern, "--method", "fft")
        assert code == 0 and json.loads(out)["method"] == "fft"

    def test_table(self, bern):
        code, out, _ = call("--format", "table", "analyze", bern)
        assert code == 0
        assert "verdict" in out and "QID" in out
        assert any(line.split() == ["-1", "0.333333333333"] for line in out.splitlines())

    def test_table_long_keys_stay_separated(self, tmp_path):
        path = write(tmp_path, "binom2half.json", {"masses": [0.25, 0.5, 0.25]})
        _, out, _ = call("analyze", path, "--format", "table")
        row = next(line for line in out.splitlines() if line.startswith("diagnostics.min_circle_distance"))
        assert row.split() == ["diagnostics.min_circle_distance", "0"]

    def test_format_after_subcommand(self, bern):
        code, out, _ = call("analyze", bern, "--format", "table")
        assert code == 0 and out.startswith("verdict")

    def test_quiet(self, bern):
        assert call("analyze", bern, "--quiet") == (0, "", "")


class TestInputErrors:
    def test_unknown_flag(self, bern):
        code, _, err = call("analyze", bern, "--bogus")
        assert code == 1 and "unrecognized" in err

    def test_unknown_command(self):
        assert call("nothing")[0] == 1

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        code, _, err = call("analyze", str(path))
        assert code == 1 and "cannot read" in err

    def test_bad_masses(self, tmp_path):
        code, _, err = call("analyze", write(tmp_path, "m.json", {"masses": [0.5, 0.6]}))
        assert code == 1 and "invalid distribution" in err

    def test_missing_file(self):
        assert call("analyze", "/nonexistent/file.json")[0] == 1


class TestOtherCommands:
    def test_moments(self, poisson_triplet):
        code, out, _ = call("moments", poisson_triplet, "--alpha", "1")
        rep = json.loads(out)
        assert code == 0 and rep["mean"] == 2.0 and rep["variance"] == 2.0
        assert rep["exp_moment"] == pytest.approx(math.exp(2 * (math.e - 1)))

    def test_laplace(self, poisson_triplet):
        code, out, _ = call("laplace", poisson_triplet, "--u", "0", "1")
        rep = json.loads(out)
        assert rep["laplace"][0] == 1.0
        assert rep["laplace"][1] == pytest.approx(math.exp(-2 * (1 - math.exp(-1))))

    def test_laplace_criterion_failure(self, bern_triplet):
        assert call("laplace", bern_triplet, "--u", "1")[0] == 1

    def test_katti(self, tmp_path):
        path = write(tmp_path, "b.json", {"masses": [0.75, 0.25]})
        code, out, _ = call("katti", path, "--max-n", "3")
        assert code == 0 and json.loads(out)["q"][:2] == pytest.approx([1 / 3, -1 / 18])

    def test_dpcp(self, tmp_path):
        code, out, _ = call("dpcp", write(tmp_path, "d.json", {"masses": [0.6, 0.4]}))
        rep = json.loads(out)
        assert code == 0 and rep["is_dpcp"] and rep["lambda"] == pytest.approx(math.log(5 / 3))
        code, out, _ = call("dpcp", write(tmp_path, "e.json", {"masses": [0.4, 0.6]}))
        assert code == 2 and json.loads(out)["lambda"] is None

    def test_cuppens(self, tmp_path):
        code, out, _ = call("cuppens", write(tmp_path, "c.json", {"masses": [0.75, 0.25]}))
        assert code == 0 and json.loads(out)["gamma"] == 0.0
        assert call("cuppens", write(tmp_path, "h.json", {"masses": [0.5, 0.5]}))[0] == 1

    def test_approximate(self, tmp_path):
        code, out, _ = call("approximate", write(tmp_path, "b2.json", {"masses": [0.25, 0.5, 0.25]}), "--h", "0.05")
        rep = json.loads(out)
        assert code == 0 and rep["verdict"] == "QID" and rep["l1_distance"] < 0.1

    def test_validate(self, tmp_path, bern_triplet):
        assert call("validate-triplet", bern_triplet)[0] == 0
        bad = {"a": 0.0, "gamma": 0.0, "nu": {"atoms": [[1.0, 1.0], [3.0, -2.0]], "lattice": None}}
        code, out, _ = call("validate-triplet", write(tmp_path, "bad.json", bad))
        assert code == 2 and not json.loads(out)["passed"]

    def test_synth_round_trip(self, bern_triplet):
        code, out, _ = call("synth", bern_triplet, "--grid", "64")
        rep = json.loads(out)
        assert code == 0 and rep["first_index"] == 0
        assert np.allclose(rep["masses"], [0.25, 0.75], atol=1e-8)

    def test_converge(self, tmp_path):
        folder = tmp_path / "seq"
        folder.mkdir()
        for m in range(1, 11):
            (folder / f"p{m}.json").write_text(json.dumps(LatticeDistribution.poisson(1 + 1 / m).to_dict()))
        target = write(tmp_path, "target.json", LatticeDistribution.poisson(1.0).to_dict())
        code, out, _ = call("converge", str(folder), "--target", target)
        rep = json.loads(out)
        assert code == 0 and rep["verdict"] == "converging"
        assert rep["files"][:3] == ["p1.json", "p2.json", "p3.json"] and rep["files"][-1] == "p10.json"

    def test_converge_non_qid_member(self, tmp_path):
        folder = tmp_path / "seq"
        folder.mkdir()
        (folder / "a.json").write_text(json.dumps({"masses": [0.5, 0.5]}))
        target = write(tmp_path, "t.json", {"masses": [0.3, 0.7]})
        assert call("converge", str(folder), "--target", target)[0] == 2


def test_module_entry_point(bern):
    proc = subprocess.run([sys.executable, "-m", "quasiid", "analyze", bern], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["verdict"] == "QID"
