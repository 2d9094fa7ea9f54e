from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from spinalign import metrology
from spinalign.cli import main
from spinalign.formats import read_points, read_state


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


class TestGenVerify:
    def test_octahedron_passes(self, tmp_path, capsys):
        path = tmp_path / "octa.json"
        assert run(capsys, "gen", "--class", "octahedron", "--n", 6, "--out", path)[0] == 0
        code, out, _ = run(capsys, "verify", "--state", path)
        assert code == 0
        assert json.loads(out)["passed"] is True

    def test_literal_dodecahedron_fails(self, tmp_path, capsys):
        path = tmp_path / "dodeca.json"
        run(capsys, "gen", "--class", "dodecahedron", "--n", 20, "--paper-literal", "--out", path)
        assert read_state(path)[1]["source"] == "paper"
        code, out, _ = run(capsys, "verify", "--state", path, "--tol", "1e-9")
        report = json.loads(out)
        assert code == 1
        assert report["variances"][2] == pytest.approx(55.0, abs=1e-9)
        assert report["covariance"][8] == pytest.approx(55.0, abs=1e-9)

    def test_gen_to_stdout_with_provenance(self, capsys):
        code, out, _ = run(capsys, "gen", "--class", "cube", "--n", 8)
        data = json.loads(out)
        assert code == 0 and data["format"] == 1
        assert data["provenance"]["source"] == "corrected"

    def test_gen_odd(self, capsys):
        code, out, _ = run(capsys, "gen", "--class", "cube", "--n", 9, "--central=-1/2")
        assert code == 0
        assert json.loads(out)["provenance"]["source"] == "odd-variant"

    @pytest.mark.parametrize("argv", [("--class", "cube", "--n", 5), ("--class", "tetrahedron", "--n", 6)])
    def test_gen_bad_n(self, capsys, argv):
        assert run(capsys, "gen", *argv)[0] == 2


class TestNumbers:
    def test_bound(self, capsys):
        code, out, err = run(capsys, "bound", "--n", 4)
        assert code == 0 and out.strip() == "0.375"
        assert json.loads(err)["config"] == {"command": "bound", "n": 4}

    def test_fisher_and_cost(self, tmp_path, capsys):
        path = tmp_path / "t.json"
        run(capsys, "gen", "--class", "tetrahedron", "--n", 4, "--out", path)
        _, out, _ = run(capsys, "fisher", "--state", path)
        np.testing.assert_allclose(json.loads(out)["fisher"], 8 * np.eye(3), atol=1e-12)
        _, out, _ = run(capsys, "fisher", "--state", path, "--finite-difference")
        np.testing.assert_allclose(json.loads(out)["fisher"], 8 * np.eye(3), atol=1e-8)
        _, out, _ = run(capsys, "cost", "--state", path)
        assert json.loads(out)["cost"] == pytest.approx(0.375)


class TestMajorana:
    def test_round_trip_preserves_status_and_cost(self, tmp_path, capsys):
        for family, n, expected in [("icosahedron", 10, 0), ("dodecahedron", 20, 1)]:
            state = tmp_path / f"{family}.json"
            points = tmp_path / f"{family}.csv"
            back = tmp_path / f"{family}_back.json"
            extra = ["--paper-literal"] if expected else []
            run(capsys, "gen", "--class", family, "--n", n, "--out", state, *extra)
            assert run(capsys, "majorana", "--state", state, "--out", points)[0] == 0
            assert len(read_points(points).points) == n
            assert run(capsys, "majorana", "--points", points, "--out", back)[0] == 0
            assert run(capsys, "verify", "--state", state)[0] == expected
            assert run(capsys, "verify", "--state", back)[0] == expected
            before = metrology.alignment_cost(read_state(state)[0])
            after = metrology.alignment_cost(read_state(back)[0])
            assert after == pytest.approx(before, abs=1e-8)

    def test_vertices(self, tmp_path, capsys):
        path = tmp_path / "cube.csv"
        assert run(capsys, "vertices", "--solid", "cube", "--out", path)[0] == 0
        assert read_points(path).n_qubits == 8

    def test_needs_one_direction(self, capsys):
        assert run(capsys, "majorana")[0] == 2


class TestErrors:
    def test_malformed_state(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text('{"n": 2, "amplitudes": [[1, 0]]}')
        code, _, err = run(capsys, "verify", "--state", path)
        assert code == 2 and "amplitudes" in err

    def test_missing_file(self, tmp_path, capsys):
        assert run(capsys, "cost", "--state", tmp_path / "nope.json")[0] == 2

    def test_bad_points(self, tmp_path, capsys):
        path = tmp_path / "p.csv"
        path.write_text("0,0,2\n")
        assert run(capsys, "majorana", "--points", path)[0] == 2

    def test_unknown_flag(self, capsys):
        assert run(capsys, "bound", "--n", 4, "--verbose")[0] == 2

    def test_unknown_command(self, capsys):
        assert run(capsys, "plot")[0] == 2

    def test_bad_seed_env(self, capsys, monkeypatch):
        monkeypatch.setenv("SPINALIGN_SEED", "abc")
        assert run(capsys, "optimize", "--n", 2, "--restarts", 1)[0] == 2


class TestOptimizeSimulate:
    def test_optimize_writes_state(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("SPINALIGN_SEED", "17")
        out_path = tmp_path / "best.json"
        code, out, err = run(capsys, "optimize", "--n", 4, "--restarts", 4, "--out", out_path)
        data = json.loads(out)
        assert code == 0
        assert data["seed"] == 17 and json.loads(err)["config"]["seed"] == 17
        assert data["best_cost"] == pytest.approx(0.375, abs=1e-6)
        assert data["certificate"]["optimal"] is True
        assert metrology.alignment_cost(read_state(out_path)[0]) == pytest.approx(0.375, abs=1e-6)

    def test_seed_flag_overrides_env(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("SPINALIGN_SEED", "17")
        _, out, _ = run(capsys, "optimize", "--n", 1, "--restarts", 2, "--seed", 3, "--out", tmp_path / "b.json")
        data = json.loads(out)
        assert data["seed"] == 3 and data["infeasible"] is True and "certificate" not in data

    def test_simulate_single(self, tmp_path, capsys):
        state = tmp_path / "o.json"
        trials = tmp_path / "trials.csv"
        run(capsys, "gen", "--class", "octahedron", "--n", 6, "--out", state)
        code, out, _ = run(
            capsys, "simulate", "--state", state, "--theta", 0.02, "--pair-m", 2,
            "--shots", 2000, "--trials", 20, "--seed", 8, "--trials-csv", trials,
        )
        data = json.loads(out)
        assert code == 0
        assert data["seed"] == 8 and data["scheme"]["name"] == "superposition_pair"
        assert data["crb_quantum"] == pytest.approx(1 / (16 * 2000))
        assert len(trials.read_text().splitlines()) == 21

    def test_simulate_cartesian(self, tmp_path, capsys):
        state = tmp_path / "t.json"
        run(capsys, "gen", "--class", "tetrahedron", "--n", 4, "--out", state)
        code, out, _ = run(
            capsys, "simulate", "--state", state, "--mode", "cartesian",
            "--theta", 0.01, -0.02, 0.015, "--shots", 5000, "--trials", 3,
        )
        assert code == 0
        assert json.loads(out)["mode"] == "cartesian"

    @pytest.mark.parametrize("theta", [["0.5"], ["0.01", "0.02"]])
    def test_simulate_bad_theta(self, tmp_path, capsys, theta):
        state = tmp_path / "o.json"
        run(capsys, "gen", "--class", "octahedron", "--n", 6, "--out", state)
        assert run(capsys, "simulate", "--state", state, "--theta", *theta)[0] == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "spinalign", "bound", "--n", "6"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip() == "0.1875"
