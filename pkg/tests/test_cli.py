import json
import math
import subprocess
import sys

import pytest

from hecke_twists import cli


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_coeffs(tmp_path, capsys):
    out = tmp_path / "c.csv"
    code, _, _ = run(["coeffs", "--N", "100", "-o", str(out)], capsys)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "# schema=1" and lines[1] == "n,tau,a"
    assert lines[2] == "1,1,1"
    assert len(lines) == 102
    assert lines[3].startswith("2,-24,")
    first = (out.read_bytes(), (tmp_path / "c.csv.tau").read_bytes())
    run(["coeffs", "--N", "100", "-o", str(out)], capsys)
    assert (out.read_bytes(), (tmp_path / "c.csv.tau").read_bytes()) == first


def test_coeffs_from_file(tmp_path, capsys):
    f = tmp_path / "f.txt"
    f.write_text("2 0.5\n3 -0.25\n5 0\n7 1\n")
    code, out, _ = run(["coeffs", "--N", "8", "--coeffs", str(f)], capsys)
    assert code == 0
    assert out.splitlines()[5] == "4,,-0.75"


@pytest.mark.parametrize("argv", [["coeffs", "--N", "0"], ["moment", "--q", "100", "--tol", "1e-2"],
                                  ["moment", "--q", "100", "--threads", "0"], ["chars"],
                                  ["lvalue", "--q", "4", "--char", "0"], ["bogus"],
                                  ["moment", "--q-range", "9:3"], ["moment", "--q", "2"]])
def test_config_errors(argv, capsys):
    assert run(argv, capsys)[0] == 1


def test_io_error(tmp_path, capsys):
    code, _, err = run(["coeffs", "--N", "10", "--coeffs", str(tmp_path / "missing.txt")], capsys)
    assert code == 2


def test_budget_exit(capsys):
    assert run(["moment", "--q", "3001", "--budget", "1000"], capsys)[0] == 3


def test_lvalue(capsys):
    code, out, _ = run(["lvalue", "--q", "3", "--char", "1"], capsys)
    assert code == 0
    d = json.loads(out)
    assert math.hypot(d["value"]["re"], d["value"]["im"]) <= 1e-6
    assert d["fe_residual"] <= 1e-6
    code, out, _ = run(["lvalue", "--q", "13", "--char", "1", "--s", "0.3j"], capsys)
    assert code == 0 and json.loads(out)["fe_residual"] <= 1e-6


def test_chars(capsys):
    code, out, _ = run(["chars", "--q", "8", "--format", "csv"], capsys)
    rows = out.splitlines()
    assert code == 0 and rows[0] == "# schema=1" and len(rows) == 2 + 4
    code, out, _ = run(["chars", "--q", "5"], capsys)
    assert sum(c["primitive"] for c in json.loads(out)["characters"]) == 3


def test_moment_json_roundtrip(capsys):
    code, out, _ = run(["moment", "--q", "100"], capsys)
    assert code == 0
    d = json.loads(out)
    r = cli.report_from_dict(d)
    assert cli.report_to_dict(r) == d
    assert cli.dumps(cli.report_to_dict(r)) == out
    assert r.small_divisor_part + r.large_divisor_part == r.double_sum


def test_moment_range_csv(tmp_path, capsys):
    out = tmp_path / "m.csv"
    code, _, _ = run(["moment", "--q-range", "3:50", "--format", "csv", "-o", str(out)], capsys)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "# schema=1"
    assert lines[1] == ",".join(cli.MOMENT_COLUMNS)
    assert len(lines) == 2 + 48
    q45 = [l for l in lines[2:] if l.startswith("45,")][0].split(",")
    assert float(q45[1]) == pytest.approx(float(q45[2]), rel=1e-6)


def test_moment_threads_identical(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(["moment", "--q", "211", "--threads", "1", "-o", str(a)], capsys)
    run(["moment", "--q", "211", "--threads", "4", "-o", str(b)], capsys)
    assert a.read_bytes() == b.read_bytes()


def test_config_precedence(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\ntol = 1e-5\nthreads = 2\nformat = csv\n")
    c, _ = cli.resolve_config(["moment", "--q", "50", "--config", str(cfg), "--tol", "1e-7"])
    assert c.tol == 1e-7 and c.threads == 2 and c.format == "csv"
    monkeypatch.setenv("HTM_THREADS", "5")
    c, _ = cli.resolve_config(["moment", "--q", "50"])
    assert c.threads == 5 and c.tol == 1e-6
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    assert run(["moment", "--q", "50", "--config", str(bad)], capsys)[0] == 1


def test_predict_and_check(capsys):
    code, out, _ = run(["predict", "--q", "1009"], capsys)
    assert code == 0 and json.loads(out)["main_term"] == pytest.approx(5349.3151798267445, rel=1e-12)
    code, out, _ = run(["check", "--q", "1009"], capsys)
    d = json.loads(out)
    assert code == 0 and d["holds"] == (d["lhs"] <= d["rhs"])
    assert run(["check", "--q", "16"], capsys)[0] == 1


def test_fit(capsys):
    code, out, _ = run(["fit", "--q-range", "200:230"], capsys)
    d = json.loads(out)
    assert code == 0 and math.isfinite(d["K1"]) and math.isfinite(d["K2"])


def test_fmt():
    assert cli.fmt(1.0) == "1"
    assert float(cli.fmt(0.1 + 0.2)) == 0.1 + 0.2
    assert cli.fmt(3) == "3" and cli.fmt(None) == ""


def test_console_script():
    r = subprocess.run([sys.executable, "-m", "hecke_twists.cli", "predict", "--q", "101"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "main_term" in r.stdout
