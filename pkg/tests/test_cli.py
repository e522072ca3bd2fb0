import re
import subprocess
import sys
from fractions import Fraction as F

import pytest

from symteam.cli import main
from symteam.scenarios import scenario_text, verify_all


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_solve_example1(capsys):
    code, out, _ = run(capsys, "solve", "--model", "example1", "--grid", "2")
    assert code == 0 and "J* = 1/2 (0.5)" in out


def test_solve_deterministic_and_csv(capsys):
    code, out, _ = run(capsys, "solve", "--model", "example1", "--deterministic-only", "--csv")
    assert code == 0 and "J* = 1 " in out + " " and "t,node,x0,private,0,1" in out


def test_solve_refine(capsys):
    code, out, _ = run(capsys, "solve", "--model", "example1", "--grid", "1", "--refine", "3,1/2")
    assert code == 0 and "refine 3,1/2" in out


def test_verify_exit_code_tracks_failures(capsys, tmp_path):
    code, out, _ = run(capsys, "verify", "--csv", str(tmp_path / "v.csv"))
    any_failed = any(not r.passed for r in verify_all())
    assert code == (1 if any_failed else 0)
    assert "checks passed" in out and (tmp_path / "v.csv").read_text().startswith("scenario,")


def test_verify_single_scenario(capsys):
    code, out, _ = run(capsys, "verify", "--scenario", "example1")
    assert code == 0 and "3/3 checks passed" in out


def test_mc_within_four_stderr(capsys):
    code, out, _ = run(capsys, "mc", "--model", "example1", "--seed", "7", "--n", "100000")
    est, se = map(float, re.search(r"J ~ (\S+) \(stderr (\S+),", out).groups())
    assert code == 0 and abs(est - 0.5) <= 4 * se


def test_mc_deterministic_across_runs_and_threads(capsys):
    args = ("mc", "--model", "example2", "--seed", "11", "--n", "50000")
    first = run(capsys, *args)[1]
    assert run(capsys, *args)[1] == first
    assert run(capsys, *args, "--threads", "4")[1] == first


def test_mc_requires_seed(capsys):
    code, _, err = run(capsys, "mc", "--model", "example1")
    assert code == 2 and "--seed" in err


@pytest.mark.parametrize("argv", [
    ["solve", "--model", "no_such_thing"],
    ["solve", "--model", "example1", "--refine", "bad"],
    ["evaluate", "--model", "specialized_cost"],
    ["verify", "--scenario", "nope"],
    ["mc", "--model", "example1", "--seed", "1", "--threads", "0"],
])
def test_bad_input_exit_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_invalid_model_file(capsys, tmp_path):
    path = tmp_path / "m.yaml"
    path.write_text(scenario_text("example1").replace('horizon: 1', 'horizon: -1'))
    assert run(capsys, "solve", "--model", str(path))[0] == 2


def test_evaluate_reduce_independence_belief(capsys):
    assert "J = 1/2" in run(capsys, "evaluate", "--model", "example1")[1]
    code, out, _ = run(capsys, "reduce", "--model", "example2")
    assert code == 0 and "symmetry gap = 1/15" in out
    code, out, _ = run(capsys, "independence", "--model", "p1d_independence", "--t", "2")
    assert code == 0 and "fails, max deviation 3/20" in out
    code, out, _ = run(capsys, "independence", "--model", "p1d_independence", "--info", "p1c")
    assert "fails" not in out
    code, out, _ = run(capsys, "belief", "--model", "example1", "--grid", "2")
    assert code == 0 and out.startswith("t,node,x0,private,pi1,pi2")


def test_output_dir_from_env(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("SYMTEAM_OUTPUT_DIR", str(tmp_path / "out"))
    code, out, _ = run(capsys, "solve", "--model", "example1", "--grid", "2")
    assert code == 0 and (tmp_path / "out" / "prescriptions.csv").is_file()
    assert run(capsys, "reduce", "--model", "example2", "--output", str(tmp_path / "o2"))[0] == 0
    assert (tmp_path / "o2" / "reduction.csv").read_text().startswith("t,x,c,agent,action,probability")


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "symteam", "solve", "--model", "example1", "--grid", "2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "J* = 1/2 (0.5)" in proc.stdout
