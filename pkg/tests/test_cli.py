import csv
import io
import json
import subprocess
import sys

import pytest

from ring_analyzer.cli import main


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.reader(io.StringIO("\n".join(body))))


def strip_timestamp(text):
    return "\n".join(line for line in text.splitlines() if "timestamp" not in line)


def test_moments(capsys):
    code, out, _ = run(["moments", "--n", "2", "--t", "1"], capsys)
    assert code == 0
    table = dict(rows(out)[1:])
    assert table["mean"] == "2" and table["second_moment"] == "6" and table["variance"] == "2"
    assert out.startswith("# manifest: ")
    assert out.splitlines()[1].startswith("# timestamp: ")


def test_moments_n1(capsys):
    code, out, _ = run(["moments", "--n", "1", "--t", "1"], capsys)
    assert code == 0
    assert dict(rows(out)[1:])["mean"] == "0"


def test_exit_codes(capsys):
    assert run(["moments", "--n", "2", "--t", "2"], capsys)[0] == 3
    code, _, err = run(["moments", "--n", "2", "--t", "2.5"], capsys)
    assert code == 2 and "t/n" in err
    assert run(["simulate", "--t", "2", "--n", "2", "--trials", "10"], capsys)[0] == 2
    assert run(["convergence", "--fit-lo", "3", "--fit-hi", "40"], capsys)[0] == 4
    assert run(["scan", "--segment", "bogus"], capsys)[0] == 2


def test_limits_panel(capsys):
    code, out, _ = run(["limits"], capsys)
    assert code == 0
    table = {r[0]: r[1:] for r in rows(out)[1:]}
    assert set(table) == {"M_inf", "M2_inf", "var_inf", "C1", "C2", "rho", "coef"}
    assert float(table["M_inf"][0]) == pytest.approx(2.441715879, abs=1e-9)
    assert float(table["rho"][0]) == pytest.approx(0.2950911517, abs=1e-9)
    assert float(table["coef"][0]) == pytest.approx(2.233499118, abs=1e-8)
    assert all(float(v[1]) >= 0 for v in table.values())


def test_distribution_inf_overlay(capsys):
    code, out, _ = run(["distribution", "--n", "inf", "--j-max", "30", "--overlay"], capsys)
    assert code == 0
    r = rows(out)
    assert r[0] == ["j", "P", "coef_2^-j"]
    assert r[1][0] == "1" and float(r[1][1]) == pytest.approx(0.3678794411, abs=1e-10)
    j25 = r[25]
    assert float(j25[1]) / float(j25[2]) == pytest.approx(1.0, abs=1e-3)


def test_distribution_n2(capsys):
    _, out, _ = run(["distribution", "--n", "2", "--j-max", "10"], capsys)
    for j, p in rows(out)[1:]:
        assert float(p) == 0.5 ** int(j)


def test_distribution_overlay_needs_inf(capsys):
    assert run(["distribution", "--n", "5", "--overlay"], capsys)[0] == 2


def test_convergence(capsys):
    code, out, _ = run(["convergence", "--n-lo", "250", "--n-hi", "300"], capsys)
    assert code == 0
    data = {int(r[0]): (float(r[1]), float(r[2])) for r in rows(out)[1:]}
    assert abs(data[300][0] - data[300][1]) <= 5e-8
    assert abs(data[250][0] - data[250][1]) <= 1e-7


def test_convergence_empty_range(capsys):
    code, out, _ = run(["convergence", "--n-lo", "10", "--n-hi", "9"], capsys)
    assert code == 0
    assert rows(out) == [["n", "M_minus_Minf_minus_C1_over_n", "C2_over_n2"]]


def test_optimize(capsys):
    _, out, _ = run(["optimize"], capsys)
    table = dict(rows(out)[1:])
    assert float(table["t_star"]) == pytest.approx(1.0654388, abs=1e-6)
    assert float(table["m_star"]) == pytest.approx(2.43481096, abs=1e-8)
    assert float(table["gain_percent"]) == pytest.approx(0.283, abs=1e-3)


def test_scan(capsys):
    code, out, _ = run(["scan", "--segment", "open02", "--step", "0.1"], capsys)
    assert code == 0
    assert "# convex: true" in out
    r = rows(out)
    assert r[0] == ["t", "M_inf_t", "dM_inf_t"]
    assert len(r) == 20


def test_simulate_json(capsys):
    code, out, _ = run(["simulate", "--n", "1000", "--t", "1", "--trials", "100000", "--seed", "7"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["manifest"]["seed"] == 7
    rep = doc["report"]
    assert isinstance(rep["mean_rounds"], str)
    assert -3 < float(rep["z_score"]) < 3
    assert rep["rng"].startswith("numpy PCG64")


def test_csv_is_twelve_digits(capsys):
    _, out, _ = run(["moments", "--n", "7"], capsys)
    mean = dict(rows(out)[1:])["mean"]
    assert len(mean.replace(".", "").lstrip("0")) <= 12


@pytest.mark.parametrize("argv", [
    ["distribution", "--n", "inf", "--j-max", "12", "--overlay"],
    ["simulate", "--n", "50", "--trials", "500", "--seed", "3"],
    ["scan", "--segment", "xi:3", "--step", "0.2", "--format", "json"],
])
def test_replay_roundtrip(tmp_path, capsys, argv):
    first = tmp_path / "first.out"
    second = tmp_path / "second.out"
    assert main(argv + ["--out", str(first)]) == 0
    assert main(["--replay", str(first), "--out", str(second)]) == 0
    assert strip_timestamp(first.read_text()) == strip_timestamp(second.read_text())


def test_validate_subset(capsys):
    code, out, _ = run(["validate", "--only", "1,4"], capsys)
    assert code == 0
    assert "# failed: none" in out
    assert run(["validate", "--only", "7b"], capsys)[0] == 5


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "ring_analyzer", "moments", "--n", "3"],
        capture_output=True, text=True, check=True,
    )
    assert "mean,2.16666666667" in proc.stdout
