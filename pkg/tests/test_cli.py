import json
import math
import subprocess
import sys

import pytest

from barrierkit.cli import parse_domain, parse_radii, run
from barrierkit.errors import DomainError


def report(tmp_path, name):
    return json.loads((tmp_path / f"{name}.json").read_text())


def test_barrier_consistent(tmp_path):
    code = run(["barrier", "--c", "0", "--ell", "2", "--lam1", "1", "--lam2", "1", "--h", "0",
                "--R", "1", "--report-dir", str(tmp_path)])
    assert code == 0
    rep = report(tmp_path, "barrier")
    assert rep["outputs"]["certificate"]["delta_bar"] == pytest.approx(0.18394, abs=1e-5)
    assert rep["verdict"] == "consistent" and rep["command"] == "barrier"
    assert {"inputs", "outputs", "provenance", "toolkit_version", "wall_clock_s",
            "outputs_hash"} <= set(rep)


def test_barrier_certify_with_csv(tmp_path):
    csv = tmp_path / "m.csv"
    code = run(["barrier", "--c", "0", "--ell", "2", "--lam1", "0.5", "--lam2", "0.5",
                "--R", "1", "--domain", "ball:2", "--report-dir", str(tmp_path),
                "--csv", str(csv)])
    assert code == 0
    assert len(csv.read_text().splitlines()) == 201


def test_enclosure(tmp_path):
    assert run(["enclosure", "--lam", "0.5", "--H", "0.1", "--c", "1", "--dist-boundary", "10",
                "--report-dir", str(tmp_path)]) == 0
    assert report(tmp_path, "enclosure")["outputs"]["bound"] == pytest.approx(0.4)


def test_growth_catenoid3d(tmp_path):
    assert run(["growth", "--sample", "catenoid3d", "--radii", "10:100:10",
                "--report-dir", str(tmp_path)]) == 0
    out = report(tmp_path, "growth")["outputs"]
    assert out["exponent"] == pytest.approx(3.0, abs=0.15) and out["parabolic"] is False


def test_maxprin_violated(tmp_path):
    code = run(["maxprin", "--sample", "plane", "--extent", "1.8", "--resolution", "0.05",
                "--no-boundary", "--domain", "ball:2", "--ell", "2", "--R", "1",
                "--report-dir", str(tmp_path)])
    assert code == 2
    assert report(tmp_path, "maxprin")["verdict"] == "violated"


def test_varifold_check_exit_codes(tmp_path):
    base = ["varifold-check", "--sample", "round_sphere", "--resolution", "4000",
            "--report-dir", str(tmp_path)]
    assert run(base + ["--h", "1", "--n-fields", "4"]) == 0
    assert run(base + ["--h", "0.5", "--adversarial"]) == 2


def test_parabolic_and_spectrum(tmp_path):
    assert run(["parabolic", "--sample", "plane", "--no-boundary", "--shift", "0,0,0.5",
                "--domain", "slab:4:0", "--radii", "1:10:1", "--report-dir", str(tmp_path)]) == 0
    assert run(["spectrum", "--eps", "0.05", "--report-dir", str(tmp_path)]) == 0
    assert report(tmp_path, "spectrum")["outputs"]["passed"] is True


def test_riccati_and_pminus(tmp_path):
    assert run(["riccati", "--tau", "-1", "--c", "0", "--t-max", "0.5", "--n", "5",
                "--report-dir", str(tmp_path)]) == 0
    assert report(tmp_path, "riccati")["outputs"]["f_end"] == pytest.approx(-2.0)
    assert run(["pminus", "--matrix", "0 0 0 0;0 0 0 0;0 0 1 0;0 0 0 1", "--ell", "3",
                "--report-dir", str(tmp_path)]) == 0
    assert report(tmp_path, "pminus")["outputs"]["p_minus"] == pytest.approx(1 / 3)


def test_sample_then_check_file(tmp_path):
    vf = tmp_path / "s.vf"
    assert run(["sample", "--sample", "round_sphere", "--resolution", "3000", "--out", str(vf),
                "--report-dir", str(tmp_path)]) == 0
    assert run(["varifold-check", "--varifold", str(vf), "--h", "1", "--n-fields", "3",
                "--report-dir", str(tmp_path)]) == 0


@pytest.mark.parametrize("argv", [
    [], ["bogus"], ["barrier", "--c", "0"],
    ["barrier", "--c", "1", "--ell", "3", "--lam1", "0", "--lam2", "0.5", "--R", "0.6"],
    ["growth", "--sample", "round_sphere", "--radii", "1:2:x"],
    ["maxprin", "--sample", "plane", "--domain", "torus:1"],
    ["enclosure", "--lam", "0.5", "--H", "0.7", "--c", "0"],
])
def test_input_errors(argv, tmp_path, capsys):
    assert run(argv + ["--report-dir", str(tmp_path)] if argv else argv) == 1
    assert "error:" in capsys.readouterr().err


def test_bad_varifold_file(tmp_path, capsys):
    vf = tmp_path / "bad.vf"
    vf.write_text("varifold m=3 ell=2 n=1\n0 0 0 | 1 | 1 0 0 ; 1 0 0 | 0\n")
    assert run(["growth", "--varifold", str(vf), "--radii", "1:10:1",
                "--report-dir", str(tmp_path)]) == 1
    assert "line 2" in capsys.readouterr().err


def test_determinism(tmp_path):
    hashes = []
    for k in range(2):
        d = tmp_path / str(k)
        assert run(["varifold-check", "--sample", "round_sphere", "--resolution", "2000",
                    "--h", "1", "--n-fields", "3", "--seed", "7", "--report-dir", str(d)]) == 0
        hashes.append(report(d, "varifold-check")["outputs_hash"])
    assert hashes[0] == hashes[1]


def test_report_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("BARRIERKIT_REPORT_DIR", str(tmp_path / "env"))
    assert run(["enclosure", "--lam", "1", "--H", "0", "--c", "0"]) == 0
    assert report(tmp_path / "env", "enclosure")["outputs"]["nonexistence"] is True


def test_console_entry_exit_code(tmp_path):
    res = subprocess.run([sys.executable, "-m", "barrierkit.cli", "barrier", "--c", "1",
                          "--ell", "2", "--lam1", "0.5", "--lam2", "0.5", "--R", "1",
                          "--report-dir", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 1 and "must be below" in res.stderr


def test_parsers():
    assert list(parse_radii("10:30:10")) == [10.0, 20.0, 30.0]
    assert list(parse_radii("1,2.5")) == [1.0, 2.5]
    assert parse_domain("slab:4:-2", 4)["offset"] == -2.0
    assert parse_domain("horoball", 3).kind == "horoball"
    assert parse_domain("cylinder:1:1:1", 4)["c_fiber"] == 1.0
    assert parse_domain("spaceform:1:2", 3).curvature == 1.0
    assert parse_domain("cone:0.5", 3)["theta"] == 0.5
    assert parse_domain("ds-cone:1:2", 4)["c_ds"] == 2.0
    with pytest.raises(DomainError):
        parse_domain("ball", 3)
