import json
import shutil
import subprocess
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from heiscalc.cli import main, run
from heiscalc.quantize import load_grid_function

EXAMPLES = Path(__file__).resolve().parents[1] / "examples_manifests"
H3 = str(EXAMPLES / "heisenberg3.toml")
FOL = str(EXAMPLES / "foliation.toml")
C5 = str(EXAMPLES / "contact5.toml")

SCHEMA = json.loads(resources.files("heiscalc").joinpath("schemas/report.schema.json").read_text())


def _run(argv):
    code, report, rows = run(argv)
    jsonschema.validate(report, SCHEMA)
    assert report["exit_code"] == code
    return code, report, rows


def test_levi_h3():
    code, rep, rows = _run(["levi", H3])
    assert code == 0
    pt = rep["results"]["points"][0]
    assert pt["L"] == [["0", "-2"], ["2", "0"]] and pt["lambdas"] == ["2"] and pt["trace_abs"] == "4"
    assert pt["singular_set"]["lowest_positive"][:3] == [2, 6, 10]
    assert rows[0] == ["point", "rank", "lambdas", "trace_abs"]


def test_levi_foliation():
    code, rep, _ = _run(["levi", FOL])
    assert code == 0 and rep["results"]["points"][0]["rank"] == 0


def test_check_verdicts_and_exit_codes():
    assert _run(["check", H3, "xk"])[0] == 1
    assert _run(["check", H3, "xk", "--k", "0,2"])[0] == 0
    assert _run(["check", H3, "sublaplacian", "--mu", "2"])[0] == 1
    assert _run(["check", H3, "sublaplacian"])[0] == 0
    assert _run(["check", H3, "rockland", "--mu", "3"])[0] == 0
    assert _run(["check", H3, "yq"])[0] == 1
    assert _run(["check", C5, "ypq", "--pq", "0,0;1,1"])[0] == 0
    assert _run(["check", C5, "ypq", "--pq", "1,2"])[0] == 1
    assert _run(["check", C5, "contact"])[0] == 0


def test_failure_carries_witness():
    _, rep, _ = _run(["check", H3, "sublaplacian", "--mu", "6", "--points", "0,0,0"])
    (cond,) = rep["conditions"]
    assert cond["verdict"] == "fail" and cond["witnesses"][0]["eigenvalue"] == 6


def test_parallel_sweep_matches_serial():
    a = _run(["check", C5, "ypq"])[1]
    b = _run(["check", C5, "ypq", "--jobs", "4"])[1]
    assert a == b


def test_input_errors():
    assert _run(["levi", "/nonexistent/manifest.toml"])[0] == 2
    assert _run(["levi", H3, "--points", "0,0"])[0] == 2
    assert _run(["check", FOL, "yq"])[0] == 2  # no cr_signature
    assert _run(["check", H3, "sublaplacian", "--mu", "x1 +* 2"])[0] == 2


def test_capability_errors():
    assert _run(["verify", C5])[0] == 3
    assert _run(["parametrix-eval", H3, "--mu", "3", "--xi=-1,0.5,0.5"])[0] == 3


def test_outside_domain_warning():
    _, rep, _ = _run(["levi", H3, "--points", "9,0,0"])
    assert any("outside" in w for w in rep["warnings"])


def test_parametrix_eval_values():
    code, rep, rows = _run(["parametrix-eval", H3])
    assert code == 0
    vals = rep["results"]["values"]
    assert vals[0]["xi"] == [1.0, 0.0, 0.0]
    assert vals[0]["q"] == pytest.approx([np.pi / 4, 0.0], abs=1e-12)
    assert rows[0][0] == "t" and len(rows) == 18
    # the ray table is scale invariant after multiplying by t^2
    t2q = np.array([r[4] for r in rows[1:]])
    assert np.ptp(t2q) <= 1e-8 * abs(t2q).max()


def test_parametrix_eval_matrix():
    code, rep, _ = _run(["parametrix-eval", C5])
    assert code == 0
    q = rep["results"]["values"][0]["q"]
    assert len(q) == 2 and len(q[0]) == 2


def test_determinism():
    a = _run(["parametrix-eval", H3])[1]
    b = _run(["parametrix-eval", H3])[1]
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_main_writes_json_and_csv(tmp_path, capsys):
    out = tmp_path / "levi.json"
    assert main(["levi", H3, "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    jsonschema.validate(rep, SCHEMA)
    assert (tmp_path / "levi.csv").read_text().startswith("point,rank,lambdas,trace_abs")
    assert main(["levi", "/nonexistent.toml"]) == 2
    assert "InputError" in capsys.readouterr().err


def test_verify_small_grid_with_dump(tmp_path):
    out = tmp_path / "v.json"
    prefix = tmp_path / "dump"
    code = main(["verify", H3, "--grid", "16", "--trials", "1", "--out", str(out), "--dump", str(prefix), "--timings"])
    rep = json.loads(out.read_text())
    jsonschema.validate(rep, SCHEMA)
    assert code in (0, 1) and rep["exit_code"] == code
    assert any("coarse" in w for w in rep["warnings"])  # 16^3 is under-resolved
    assert {"coarse", "fine", "refinement_ratio", "negative_control", "timings"} <= set(rep["results"])
    assert (tmp_path / "v.csv").read_text().startswith("N,h,max_error")
    f, grid, meta = load_grid_function(f"{prefix}_f.bin")
    assert grid.points == (16, 16, 16) and meta["field"] == "f" and np.isrealobj(f)
    qf, _, meta = load_grid_function(f"{prefix}_Qf.bin")
    assert meta["field"] == "Qf" and np.iscomplexobj(qf)


def test_verify_refuses_singular_mu():
    code, rep, _ = _run(["verify", H3, "--mu", "2"])
    assert code == 1 and rep["results"]["refused"]


@pytest.mark.skipif(shutil.which("heiscalc") is None, reason="console script not installed")
def test_console_script(tmp_path):
    proc = subprocess.run(["heiscalc", "check", H3, "xk"], capture_output=True, text=True)
    assert proc.returncode == 1
    assert json.loads(proc.stdout)["status"] == "fail"
    proc = subprocess.run([sys.executable, "-m", "heiscalc.cli", "levi", H3], capture_output=True, text=True)
    assert proc.returncode == 0
