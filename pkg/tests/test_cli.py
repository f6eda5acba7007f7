import csv
import io
import json
import shutil
import subprocess
import sys

import pytest

from qcisc.assembler.metrics import fit_slope, slope_metrics
from qcisc.cli import main
from qcisc.library import save_block_library, build_default_library


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--json")
    assert code == 0, err
    return json.loads(out)


def test_bounds_example(capsys):
    code, out, _ = run(capsys, "bounds", "--n", "10", "--m", "2")
    assert code == 0
    assert "g=116505" in out and "t=23301" in out


def test_bounds_json(capsys):
    d = run_json(capsys, "bounds", "--n", "10", "--m", "2")
    assert d["g"] == "116505" and d["t"] == "23301"


def test_bounds_table(capsys):
    code, out, _ = run(capsys, "bounds", "--table")
    assert code == 0 and "116,505" in out
    d = run_json(capsys, "bounds", "--table")
    assert d["n"][-1] == 100


def test_bounds_missing_flag_is_usage(capsys):
    code, _, err = run(capsys, "bounds", "--n", "10")
    assert code == 1 and "--m" in err


def test_bounds_domain_error(capsys):
    code, _, err = run(capsys, "bounds", "--n", "2", "--m", "5")
    assert code == 2 and err.strip()


def test_unknown_subcommand(capsys):
    code, _, err = run(capsys, "frobnicate")
    assert code == 1 and "usage" in err


def test_no_subcommand(capsys):
    assert run(capsys)[0] == 1


def test_help_exits_zero(capsys):
    assert run(capsys, "--help")[0] == 0


def test_assemble_swap2(capsys):
    d = run_json(capsys, "assemble", "swap", "--n", "2")
    assert d["duration_exact"] == "3/2" and d["family"] == "swap"
    assert set(d) >= {"duration", "fidelity", "quality", "slot_count", "block_histogram"}


def test_assemble_text_has_triple(capsys):
    code, out, _ = run(capsys, "assemble", "swap", "--n", "6")
    assert code == 0 and "tau=" in out and "F=" in out and "q=" in out


def test_assemble_swap_plan_and_odd(capsys):
    assert run_json(capsys, "assemble", "swap", "--n", "8", "--plan", "3,4")["n"] == 8
    assert run_json(capsys, "assemble", "swap", "--n", "7", "--plan", "3,4")["n"] == 7


def test_assemble_swap_bad_plan(capsys):
    code, _, err = run(capsys, "assemble", "swap", "--n", "8", "--plan", "4")
    assert code == 2 and "PlanConstraintViolated" in err


def test_assemble_qft(capsys):
    d = run_json(capsys, "assemble", "qft", "--n", "6", "--m", "2")
    assert d["n"] == 6
    code, _, err = run(capsys, "assemble", "qft", "--n", "7", "--m", "2")
    assert code == 2


@pytest.mark.parametrize("scheme", ["basic", "backbone"])
def test_assemble_cnnot(capsys, scheme):
    assert run_json(capsys, "assemble", "cnnot", "--n", "12", "--scheme", scheme)["n"] == 12


def test_assemble_cnnot_half_outer_pair_is_usage(capsys):
    code, _, err = run(capsys, "assemble", "cnnot", "--n", "12", "--scheme", "basic", "--m1", "2")
    assert code == 1 and "--m2" in err


@pytest.mark.parametrize("u", ["x", "h", "z", "random"])
def test_assemble_cu(capsys, u):
    assert run_json(capsys, "assemble", "cu", "--n", "7", "--unitary", u)["n"] == 7


def test_emit_and_verify(capsys, tmp_path):
    path = tmp_path / "c.json"
    run_json(capsys, "assemble", "swap", "--n", "5", "--emit", str(path))
    d = run_json(capsys, "verify", "--circuit", str(path), "--target", "swap")
    assert d["passed"] and d["fidelity"] > 1 - 1e-10


def test_verify_qft_with_metadata(capsys, tmp_path):
    path = tmp_path / "q.json"
    run_json(capsys, "assemble", "qft", "--n", "4", "--m", "2", "--threshold", "0", "--emit",
             str(path))
    assert run_json(capsys, "verify", "--circuit", str(path), "--target", "qft")["passed"]


def test_verify_mismatch_exit_2(capsys, tmp_path):
    path = tmp_path / "c.json"
    run_json(capsys, "assemble", "swap", "--n", "4", "--emit", str(path))
    code, out, _ = run(capsys, "verify", "--circuit", str(path), "--target", "qft")
    assert code == 2 and "FAIL" in out


def test_verify_missing_file(capsys, tmp_path):
    code, _, _ = run(capsys, "verify", "--circuit", str(tmp_path / "nope.json"), "--target", "swap")
    assert code == 1


def test_library_flag_and_env(capsys, tmp_path, monkeypatch):
    lib = build_default_library(fidelity=0.9)
    path = tmp_path / "lib.json"
    save_block_library(lib, path)
    d = run_json(capsys, "assemble", "swap", "--n", "2", "--library", str(path))
    assert d["fidelity"] == pytest.approx(0.9)
    monkeypatch.setenv("QCISC_LIBRARY", str(path))
    assert run_json(capsys, "assemble", "swap", "--n", "2")["fidelity"] == pytest.approx(0.9)
    code, _, err = run(capsys, "assemble", "swap", "--n", "2", "--library", str(tmp_path / "x"))
    assert code == 1 and "--library" in err


def test_grape_single(capsys, tmp_path):
    out = tmp_path / "p.csv"
    d = run_json(capsys, "grape", "--n", "2", "--target", "swap", "--T", "1.5", "--restarts", "2",
                 "--out", str(out))
    assert d["fidelity"] > 0.999 and d["M"] == 30
    assert out.read_text().splitlines()[0].startswith("interval_index,t_start,u_1x")


def test_grape_sweep(capsys):
    d = run_json(capsys, "grape", "--n", "2", "--target", "identity", "--sweep", "0:0.4:0.2",
                 "--restarts", "1")
    assert [r["T"] for r in d["sweep"]] == [0.0, 0.2, 0.4]


def test_grape_usage_errors(capsys):
    assert run(capsys, "grape", "--n", "2", "--target", "swap")[0] == 1
    assert run(capsys, "grape", "--n", "2", "--target", "bogus", "--T", "1")[0] == 1
    assert run(capsys, "grape", "--n", "2", "--target", "swap", "--sweep", "1:0:1")[0] == 1


def test_grape_seed_determinism(capsys):
    args = ("grape", "--n", "2", "--target", "cnot", "--T", "0.6", "--restarts", "2",
            "--max-iters", "40", "--seed", "5", "--json")
    a = run(capsys, *args)[1]
    b = run(capsys, *args)[1]
    assert a == b


def test_mc_errors_csv(capsys, tmp_path):
    out = tmp_path / "mc.csv"
    args = ("mc-errors", "--m", "2", "--rmax", "20", "--trials", "2", "--seed", "3")
    assert run(capsys, *args, "--out", str(out))[0] == 0
    rows = list(csv.reader(io.StringIO(out.read_text())))
    assert rows[0] == ["r", "aaaa_median", "aaaa_best", "aaaa_worst",
                       "abcd_median", "abcd_best", "abcd_worst", "f_ind"]
    assert [int(r[0]) for r in rows[1:]] == [4, 8, 12, 16, 20]
    # byte-identical on repeat
    again = tmp_path / "mc2.csv"
    run(capsys, *args, "--out", str(again))
    assert again.read_bytes() == out.read_bytes()


def test_metrics_reported(capsys):
    d = run_json(capsys, "metrics", "--family", "swap")
    assert round(d["pi_cisc"], 2) == 2.16 and round(d["xi"]["8"], 2) == 1.88


def test_metrics_library(capsys):
    d = run_json(capsys, "metrics", "--family", "swap", "--source", "library", "--delta-inf",
                 "0.69", "--n-max", "12")
    assert abs(d["xi"]["2"] - 1) < 1e-12
    assert run(capsys, "metrics", "--family", "swap", "--source", "library")[0] == 1


def _csv(capsys, *argv):
    code, out, err = run(capsys, "figure-data", *argv)
    assert code == 0, err
    return list(csv.reader(io.StringIO(out)))


def test_figure_empty_range(capsys):
    rows = _csv(capsys, "--family", "swap", "--n-min", "5", "--n-max", "4")
    assert len(rows) == 1 and rows[0][:4] == ["n", "tau_2", "F_2", "q_2"]


def test_figure_swap_monotone_and_slope(capsys):
    rows = _csv(capsys, "--family", "swap", "--n-min", "2", "--n-max", "20")
    head, body = rows[0], rows[1:]
    for m in range(2, 9):
        col = [float(r[head.index(f"tau_{m}")]) for r in body]
        assert col == sorted(col)
    tau2 = {int(r[0]): float(r[1]) for r in body}
    # m=2 chain: tau grows by one SWAP per qubit pair step
    direct = fit_slope(tau2)
    sm = slope_metrics({2: tau2}, 1.0)
    assert sm.slopes[2] == pytest.approx(direct, rel=1e-12)
    assert direct == pytest.approx(1.5, rel=0.05)


def test_figure_qft_columns(capsys):
    rows = _csv(capsys, "--family", "qft", "--n-max", "8")
    assert rows[0] == ["n"] + [f"{p}_{m}" for m in range(2, 6) for p in ("tau", "F", "q")]


def test_figure_cnnot_backbone_steps(capsys):
    rows = _csv(capsys, "--family", "cnnot", "--n-min", "5", "--n-max", "40")
    i = rows[0].index("tau_backbone")
    col = [float(r[i]) for r in rows[1:]]
    diffs = [b - a for a, b in zip(col, col[1:])]
    # flat stretches separated by jumps
    assert any(d == 0 for d in diffs) and any(d > 0 for d in diffs)


def test_figure_out_file(capsys, tmp_path):
    out = tmp_path / "f.csv"
    assert run(capsys, "figure-data", "--family", "swap", "--n-max", "4", "--out", str(out))[0] == 0
    assert out.read_text().startswith("n,tau_2")


def test_global_flags_before_subcommand(capsys):
    code, out, _ = run(capsys, "--json", "bounds", "--n", "3", "--m", "2")
    assert code == 0 and json.loads(out)["g"] == "6"


@pytest.mark.skipif(shutil.which("qcisc") is None, reason="console script not installed")
def test_console_script():
    p = subprocess.run(["qcisc", "bounds", "--n", "10", "--m", "2"], capture_output=True, text=True)
    assert p.returncode == 0 and "g=116505" in p.stdout
    p = subprocess.run([sys.executable, "-m", "qcisc.cli", "nosuch"], capture_output=True, text=True)
    assert p.returncode == 1
