import json
import subprocess
import sys

import numpy as np
import pytest

from deformalg import __version__
from deformalg.cli import expand_sweep, main, parse_spin_list


def run(*args):
    proc = subprocess.run([sys.executable, "-m", "deformalg", *args],
                          capture_output=True, text=True, timeout=120)
    return proc.returncode, proc.stdout, proc.stderr


def run_inproc(capsys, *args):
    code = main(list(args))
    out, err = capsys.readouterr()
    return code, out, err


def test_oscillator_spin_one(capsys):
    code, out, err = run_inproc(capsys, "spectrum-oscillator", "--j", "1")
    assert code == 0 and err == ""
    rep = json.loads(out)
    assert rep["command"] == "spectrum-oscillator" and rep["version"] == __version__
    res = rep["results"][0]
    np.testing.assert_allclose(res["analytic"], [0.3535534, 0.7071068], atol=1e-7)
    np.testing.assert_allclose(res["matrix"], [0.3535534, 0.3535534, 0.7071068], atol=1e-7)
    assert res["max_dev"] <= 1e-10 and rep["pass"] is True
    assert rep["tolerances"]["max_dev"] == 1e-10


def test_minimal_length_trig(capsys):
    code, out, _ = run_inproc(capsys, "minimal-length", "--family", "trig", "--lambda", "0.25")
    rep = json.loads(out)
    assert code == 0 and rep["pass"] is True
    assert rep["l0"] == pytest.approx(0.25, abs=1e-10)


def test_contraction_decreases(capsys):
    code, out, _ = run_inproc(capsys, "contraction-study", "--j-list", "10,100,1000", "--n-max", "2")
    rep = json.loads(out)
    assert code == 0
    devs = [[lev["deviation"] for lev in r["levels"]] for r in rep["results"]]
    for n in range(3):
        assert devs[0][n] > devs[1][n] > devs[2][n]
        assert 5 < devs[0][n] / devs[1][n] < 15  # roughly 1/j


def test_position_csv_rows(capsys):
    code, out, _ = run_inproc(capsys, "spectrum-position", "--lambda", "0.5", "--N", "32",
                              "--bc", "periodic", "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "index,computed,reference,deviation"
    rows = [line.split(",") for line in lines[1:3]]
    assert rows[0][0] == "0" and rows[0][2] == "0.0" and abs(float(rows[0][1])) <= 1e-12
    assert rows[1][0] == "1" and rows[1][2] == "1.0" and float(rows[1][3]) <= 1e-12


def test_byte_identical_runs(tmp_path):
    outputs = []
    for name in ("a", "b"):
        path = tmp_path / f"{name}.json"
        code, out, _ = run("expansion-check", "--all", "--output", str(path))
        assert out == ""
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]


def test_workers_preserve_order(capsys):
    sweep = '{"j": ["10", "1/2", "3"]}'
    serial = run_inproc(capsys, "spectrum-oscillator", "--params-json", sweep)[1]
    threaded = run_inproc(capsys, "spectrum-oscillator", "--params-json", sweep, "--workers", "3")[1]
    assert serial == threaded
    assert [p["j"] for p in json.loads(serial)["params"]] == ["10", "1/2", "3"]


def test_injected_tolerance_failure_exit_two(capsys):
    code, out, err = run_inproc(capsys, "spectrum-position", "--tol", "1e-20")
    rep = json.loads(out)
    assert code == 2 and rep["pass"] is False
    assert any(not c["pass"] for c in rep["checks"])
    assert "check failed" in err


@pytest.mark.parametrize("args", [
    ("spectrum-oscillator", "--j", "1/3"),
    ("spectrum-oscillator", "--params-json", '{"lambda": 1}'),
    ("spectrum-oscillator", "--params-json", "not json"),
    ("spectrum-position", "--N", "7"),
    ("spectrum-position", "--bogus"),
    ("verify-algebra", "--relation", "octonion"),
    ("minimal-length", "--family", "hyper", "--beta", "1", "--method", "dirichlet"),
    (),
])
def test_usage_errors_exit_one(capsys, args):
    code, out, err = run_inproc(capsys, *args)
    assert code == 1
    assert out == ""
    assert err


def test_unwritable_output(capsys, tmp_path):
    code, _, err = run_inproc(capsys, "spectrum-oscillator", "--output",
                              str(tmp_path / "missing" / "x.json"))
    assert code == 1 and "cannot write" in err


def test_closure_fit_from_file(capsys, tmp_path):
    p = np.linspace(-3, 3, 301)
    path = tmp_path / "f.txt"
    np.savetxt(path, np.column_stack([p, np.sqrt(1 + 0.5 * p ** 2)]), header="p f")
    code, out, _ = run_inproc(capsys, "closure-fit", "--file", str(path))
    rep = json.loads(out)
    assert code == 0
    assert rep["results"][0]["fit"]["beta"] == pytest.approx(0.5, abs=1e-6)


def test_check_rows_as_csv(capsys):
    code, out, _ = run_inproc(capsys, "verify-algebra", "--relation", "su2", "--j", "2",
                              "--format", "csv")
    assert code == 0
    header, first = out.splitlines()[:2]
    assert header == "point,index,computed,reference,deviation"
    assert first.startswith('0,"[Jx,Jy]-iJz",')


def test_module_entry_point_help():
    code, out, _ = run("--help")
    assert code == 0 and "expansion-check" in out


def test_sweep_expansion_helpers():
    assert expand_sweep({"a": [1, 2], "b": "x"}) == [{"a": 1, "b": "x"}, {"a": 2, "b": "x"}]
    assert expand_sweep([{"a": 1}]) == [{"a": 1}]
    assert [str(j) for j in parse_spin_list("1/2:2")] == ["1/2", "1", "3/2", "2"]
