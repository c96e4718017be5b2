import json
import subprocess
import sys

import numpy as np
import pytest

from circot._parallel import stream
from circot.cli import main, read_angles
from circot.distributions import VonMises


def write(path, values, header="# angles\n"):
    path.write_text(header + "\n".join(repr(float(v)) for v in values) + "\n", encoding="utf-8")
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def report(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out)


# -- angle files ------------------------------------------------------------


def test_read_angles_skips_comments_and_blanks(tmp_path):
    p = tmp_path / "a.txt"
    p.write_text("# header\n0.25\n\n  # indented comment\n1.5\n", encoding="utf-8")
    assert np.allclose(read_angles(p), [0.25, 0.5])
    p.write_text("180\n-90\n", encoding="utf-8")
    assert np.allclose(read_angles(p, "degrees"), [0.5, 0.75])


def test_unparseable_line_names_line_number(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("0.1\n\nnorth\n", encoding="utf-8")
    code, _, err = run(capsys, "distance", str(bad), "--null", "uniform")
    assert code == 5
    assert ":3:" in err


def test_empty_file_is_an_error(tmp_path, capsys):
    empty = tmp_path / "empty.txt"
    empty.write_text("# nothing here\n", encoding="utf-8")
    code, _, err = run(capsys, "test", str(empty))
    assert code > 3 and "no observations" in err


# -- distance ---------------------------------------------------------------


def test_distance_identical_files_exact(tmp_path, capsys):
    x = stream(1).random(20)
    a, b = write(tmp_path / "a.txt", x), write(tmp_path / "b.txt", x)
    code, rep = report(capsys, "distance", a, b, "--exact")
    assert code == 0 and rep["cot"] == 0.0 and rep["schema"] == 1
    assert rep["method"] == "exact" and rep["n_x"] == rep["n_y"] == 20


def test_distance_point_mass_against_uniform(tmp_path, capsys):
    a = write(tmp_path / "a.txt", [0.3] * 5)
    code, rep = report(capsys, "distance", a, "--null", "uniform", "--grid", "1000")
    assert rep["cot"] == pytest.approx(0.25, abs=0.002)
    assert rep["D"] == 1000 and rep["n_y"] is None


def test_distance_antipodal_points(tmp_path, capsys):
    a, b = write(tmp_path / "a.txt", [0.1]), write(tmp_path / "b.txt", [0.6])
    assert report(capsys, "distance", a, b, "--exact")[1]["cot"] == pytest.approx(0.5, abs=1e-15)


def test_exact_with_named_null_is_usage_error(tmp_path, capsys):
    a = write(tmp_path / "a.txt", [0.1, 0.2])
    code, _, err = run(capsys, "distance", a, "--null", "uniform", "--exact")
    assert code == 4 and "--exact" in err


def test_distance_needs_exactly_one_reference(tmp_path, capsys):
    a = write(tmp_path / "a.txt", [0.1])
    assert run(capsys, "distance", a)[0] == 4
    assert run(capsys, "distance", a, a, "--null", "uniform")[0] == 4
    assert run(capsys, "distance", a, a, "--grid", "10", "--exact")[0] == 4


def test_unit_round_trip(tmp_path, capsys):
    x = VonMises(0.4, 1.0).sample(stream(2), 40)
    y = VonMises(0.7, 2.0).sample(stream(3), 30)
    turns = [write(tmp_path / "xt.txt", x), write(tmp_path / "yt.txt", y)]
    degs = [write(tmp_path / "xd.txt", x * 360), write(tmp_path / "yd.txt", y * 360)]
    rads = [write(tmp_path / "xr.txt", x * 2 * np.pi), write(tmp_path / "yr.txt", y * 2 * np.pi)]
    ref = report(capsys, "distance", *turns, "--exact")[1]["cot"]
    assert report(capsys, "distance", *degs, "--exact", "--unit", "degrees")[1]["cot"] == pytest.approx(ref, abs=1e-12)
    assert report(capsys, "distance", *rads, "--exact", "--unit", "radians")[1]["cot"] == pytest.approx(ref, abs=1e-12)
    t1 = report(capsys, "test", turns[0], "--N", "2000")[1]["statistic"]
    t2 = report(capsys, "test", degs[0], "--N", "2000", "--unit", "degrees")[1]["statistic"]
    assert t1 == pytest.approx(t2, abs=1e-12)


# -- tests ------------------------------------------------------------------


def test_test_exit_codes_follow_decision(tmp_path, capsys):
    conc = write(tmp_path / "c.txt", VonMises(0.5, 2.5).sample(stream(4), 30))
    code, rep = report(capsys, "test", conc, "--null", "uniform", "--N", "20000")
    assert rep["reject"] is True and code == 3
    flat = write(tmp_path / "f.txt", (np.arange(30) + 0.5) / 30)
    code, rep = report(capsys, "test", flat, "--N", "20000")
    assert rep["reject"] is False and code == 0
    assert rep["args"]["null"] == "uniform" and "threads" not in rep["args"]


def test_test_level_and_power_over_seeds(tmp_path, capsys):
    rejects_null, rejects_alt = 0, 0
    for k in range(200):
        f = write(tmp_path / "u.txt", stream(5, k).random(30))
        rejects_null += main(["test", f, "--alpha", "0.05", "--threads", "1"]) == 3
        if k < 40:
            g = write(tmp_path / "v.txt", VonMises(0.5, 2.5).sample(stream(6, k), 30))
            rejects_alt += main(["test", g, "--threads", "1"]) == 3
    capsys.readouterr()
    assert 0.90 <= 1 - rejects_null / 200 <= 0.99
    assert rejects_alt >= 36


def test_invalid_null_is_usage_error(tmp_path, capsys):
    a = write(tmp_path / "a.txt", [0.1, 0.2])
    assert run(capsys, "test", a, "--null", "vonmises:0.5")[0] == 4
    assert run(capsys, "test", a, "--null", "laplace:1,2")[0] == 4
    assert run(capsys, "test", a, "--alpha", "1.5")[0] == 4


def test_test2_report(tmp_path, capsys):
    a = write(tmp_path / "a.txt", VonMises(0.2, 3.0).sample(stream(7), 50))
    b = write(tmp_path / "b.txt", VonMises(0.7, 3.0).sample(stream(8), 50))
    code, rep = report(capsys, "test2", a, b, "--B", "400")
    assert code == 3 and rep["method"] == "cott2"


# -- bulk commands ----------------------------------------------------------


def test_simulate_is_reproducible(capsys):
    first = run(capsys, "simulate", "--N", "10", "--seed", "7")[1]
    second = run(capsys, "simulate", "--N", "10", "--seed", "7", "--threads", "3")[1]
    assert first == second
    rows = [line for line in first.splitlines() if not line.startswith("#")]
    assert rows[0] == "draw" and len(rows) == 11
    assert run(capsys, "simulate", "--N", "10", "--seed", "8")[1] != first


def test_quantiles_uniform_column(capsys):
    code, out, _ = run(capsys, "quantiles", "--null", "uniform", "--alphas", "0.1,0.05,0.01", "--N", "1000000")
    rows = [line.split(",") for line in out.splitlines() if not line.startswith("#")][1:]
    got = [float(q) for _, q in rows]
    assert np.allclose(got, [0.327, 0.367, 0.447], atol=0.005)


def test_quantiles_bad_alphas(capsys):
    assert run(capsys, "quantiles", "--alphas", "0.1,x")[0] == 4
    assert run(capsys, "quantiles", "--alphas", "0.1,2")[0] == 4


def test_bootstrap_m_larger_than_n(tmp_path, capsys):
    a = write(tmp_path / "a.txt", stream(9).random(10))
    code, _, err = run(capsys, "bootstrap", a, "--mode", "m_of_n", "--m", "11")
    assert code > 3 and "exceeds" in err
    code, out, _ = run(capsys, "bootstrap", a, "--m", "5", "--B", "7")
    assert code == 0 and len([r for r in out.splitlines() if not r.startswith("#")]) == 8


def test_bootstrap_n_of_n_with_null(tmp_path, capsys):
    a = write(tmp_path / "a.txt", VonMises(0.5, 1.0).sample(stream(10), 100))
    code, out, _ = run(capsys, "bootstrap", a, "--mode", "n_of_n", "--null", "uniform", "--B", "20")
    assert code == 0 and "# mode: \"n_of_n\"" in out


def test_experiment_with_config_file(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "cot_curves", "D": 500, "grids": {"kappa": [0.0, 1.0], "L": [2.0]}}))
    out1 = tmp_path / "one.csv"
    out4 = tmp_path / "four.csv"
    assert main(["experiment", "--config", str(cfg), "--out", str(out1), "--threads", "1"]) == 0
    assert main(["experiment", "--config", str(cfg), "--out", str(out4), "--threads", "4"]) == 0
    assert out1.read_bytes() == out4.read_bytes()
    assert "# D: 500" in out1.read_text()
    assert run(capsys, "experiment", "--config", str(cfg), "--id", "clt")[0] == 4
    assert run(capsys, "experiment")[0] == 4


def test_module_entry_point(tmp_path):
    a = write(tmp_path / "a.txt", VonMises(0.5, 3.0).sample(stream(11), 40))
    proc = subprocess.run(
        [sys.executable, "-m", "circot", "test", a, "--N", "5000"], capture_output=True, text=True
    )
    assert proc.returncode == 3
    assert json.loads(proc.stdout)["reject"] is True
