import json

import numpy as np
import pytest

from lsborn import cli, io, precond, spectral, lippmann
from lsborn.problem import ConstantMedium, WaveProblem, make_grid


def run(tmp_path, *args):
    code = cli.main([*args, "--out-dir", str(tmp_path)])
    return code


def summary(tmp_path, command):
    return io.read_json(tmp_path / f"{command}_summary.json")


def test_solve_zero_medium_writes_zero_field(tmp_path):
    assert run(tmp_path, "solve", "--q0", "0", "--n", "32") == 0
    u = io.read_csv(tmp_path / "solve_u.csv")
    assert list(u) == ["x", "re", "im"]
    assert u["x"].size == 32
    assert not np.any(u["re"]) and not np.any(u["im"])


def test_solve_with_oracle(tmp_path):
    assert run(tmp_path, "solve", "--k0", "1", "--L", "1", "--q0", "1", "--oracle") == 0
    s = summary(tmp_path, "solve")
    assert s["rel_l2_err"] < 1e-3
    assert s["config"]["n"] == 256 and s["config"]["rule"] == "midpoint"


def test_solve_strong_scatterer(tmp_path):
    assert run(tmp_path, "solve", "--k0", "50", "--L", "1", "--q0", "1") == 0
    u = io.read_csv(tmp_path / "solve_u.csv")
    assert u["x"].size == 2048 and np.all(np.isfinite(u["re"]))


def test_born_dichotomy(tmp_path):
    assert run(tmp_path / "a", "born", "--k0", "1", "--L", "1", "--q0", "1") == 0
    a = summary(tmp_path / "a", "born")
    assert a["verdict"] == "converged"
    assert a["spr0"] < 1 and a["final_err_vs_direct"] < 1e-8
    assert a["tail_bound"]["passed"]
    trace = io.read_csv(tmp_path / "a" / "born_trace.csv")
    assert list(trace) == ["n", "monitor", "residual", "err_vs_ref"]

    assert run(tmp_path / "b", "born", "--k0", "50", "--L", "1", "--q0", "1", "--n", "512") == 0
    b = summary(tmp_path / "b", "born")
    assert b["verdict"] == "diverged"
    assert b["spr0"] > 1


def test_born_zero_medium(tmp_path):
    assert run(tmp_path, "born", "--q0", "0", "--n", "16") == 0
    s = summary(tmp_path, "born")
    assert s["verdict"] == "converged" and s["iterations"] == 1


def test_born_sweep(tmp_path):
    assert run(tmp_path, "born", "--sweep", "q0=0.5:3:3", "--n", "64") == 0
    s = io.read_json(tmp_path / "born_sweep.json")
    assert [r["q0"] for r in s["sweep"]] == [0.5, 1.75, 3.0]
    assert s["sweep"][0]["verdict"] == "converged"
    assert s["sweep"][-1]["verdict"] == "diverged"


def test_spectrum_rejects_zero_contrast(tmp_path, capsys):
    assert run(tmp_path, "spectrum", "--q0", "0") == cli.EXIT_VALIDATION
    assert "q0" in capsys.readouterr().err


def test_spectrum_summary(tmp_path):
    assert run(tmp_path, "spectrum", "--k0", "1", "--L", "1", "--q0", "5", "--n", "400") == 0
    s = summary(tmp_path, "spectrum")
    assert abs(s["T"] - 0.9320) < 5e-4
    assert s["max_locus_distance"] < 0.02
    assert s["min_im_lambda"] > 0
    loc = io.read_csv(tmp_path / "spectrum_locus.csv")
    assert list(loc) == ["re", "im", "branch", "t"]
    assert set(np.unique(loc["branch"])) == {-1.0, 1.0}


@pytest.mark.slow
@pytest.mark.parametrize("k0,q0,T", [(1, 5, 0.9320), (50, 1, 0.0677)])
def test_spectrum_published_parameters(tmp_path, k0, q0, T):
    assert run(tmp_path, "spectrum", "--k0", str(k0), "--L", "1", "--q0", str(q0), "--n", "2048") == 0
    s = summary(tmp_path, "spectrum")
    assert abs(s["T"] - T) < 5e-4
    assert s["max_locus_distance"] < 0.02


def test_precond_case_a(tmp_path):
    code = run(tmp_path, "precond", "--k0", "1", "--L", "1", "--q0", "5", "--eps-prime", "5.2", "--eps", "0.02",
               "--n", "256")
    assert code == 0
    s = summary(tmp_path, "precond")
    assert s["all_inside"] and s["verdict"] == "converged"
    assert s["params"]["eps_prime"] == 5.2 and abs(s["params"]["alpha"] - 1.3803) < 1e-4
    mu = io.read_csv(tmp_path / "precond_mu.csv")
    assert list(mu) == ["re_mu", "im_mu"]
    assert np.all(np.hypot(mu["re_mu"], mu["im_mu"]) < 1)


@pytest.mark.slow
def test_precond_case_b(tmp_path):
    code = run(tmp_path, "precond", "--k0", "50", "--L", "1", "--q0", "1", "--eps-prime", "50", "--eps", "3e-5",
               "--n", "256")
    assert code == 0
    s = summary(tmp_path, "precond")
    assert s["all_inside"] and s["verdict"] == "converged"
    assert s["rel_err_vs_direct"] < 1e-6


@pytest.mark.xfail(strict=True, reason="the closed-form eps bound is conservative by a factor of about 17 "
                                       "here, so 10 * eps_max still maps every eigenvalue inside the disk")
def test_precond_ten_times_eps_max_leaves_disk(tmp_path):
    eps_max = precond.gamma_analytic(1.0, 5.0, 5.2).eps_max
    code = run(tmp_path, "precond", "--k0", "1", "--q0", "5", "--eps-prime", "5.2", "--eps", repr(10 * eps_max),
               "--n", "128")
    assert not summary(tmp_path, "precond")["all_inside"]
    assert code == cli.EXIT_ASSERTION


def test_precond_eps_beyond_spectral_threshold_fails(tmp_path):
    # threshold computed directly from the matrix spectrum
    op = lippmann.assemble(WaveProblem(1.0, n=128), ConstantMedium(5.0))
    lam = spectral.numeric_spectrum(op)
    alpha = precond.alpha_from_eps_prime(1.0, 5.0, 5.2)
    z = np.exp(1j * alpha) * (1 - lam)
    exact = np.min(2 * z.real / np.abs(z) ** 2)
    code = run(tmp_path, "precond", "--k0", "1", "--q0", "5", "--eps-prime", "5.2", "--eps", repr(float(1.5 * exact)),
               "--n", "128")
    assert code == cli.EXIT_ASSERTION
    s = summary(tmp_path, "precond")
    assert not s["all_inside"] and s["verdict"] == "skipped"
    assert not s["params"]["admissible"]


def test_precond_variable_medium(tmp_path):
    g = make_grid(WaveProblem(3.0, n=64))
    path = tmp_path / "medium.csv"
    io.write_csv(path, ["x", "q"], [g.nodes, np.where(g.nodes < 0.5, 1.0, 0.3)])
    assert run(tmp_path, "precond", "--k0", "3", "--medium", str(path)) == 0
    s = summary(tmp_path, "precond")
    assert s["params"]["mode"] == "spectrum" and s["verdict"] == "converged"
    assert s["config"]["n"] == 64


def test_norm(tmp_path):
    assert run(tmp_path, "norm", "--k0", "1", "--q0", "5", "--n", "256") == 0
    s = summary(tmp_path, "norm")
    assert s["hs_bound"] == 2.5
    assert s["spectral_radius"] <= s["operator_norm"] <= s["hs_bound"]


def test_outputs_are_deterministic(tmp_path):
    names = ("born_summary.json", "born_trace.csv")
    first = None
    for _ in range(2):
        assert run(tmp_path, "born", "--q0", "0.5", "--n", "64", "--seed", "3") == 0
        blobs = [(tmp_path / name).read_bytes() for name in names]
        first = first or blobs
    assert blobs == first


def test_config_file_and_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"k0": 2.0, "q0": 0.5, "n": 48, "max-iter": 7}))
    assert run(tmp_path, "born", "--config", str(cfg), "--n", "40") == 0
    s = summary(tmp_path, "born")
    assert s["config"]["k0"] == 2.0 and s["config"]["n"] == 40 and s["config"]["max_iter"] == 7
    # every resolved default is echoed
    assert set(cli.DEFAULTS) <= set(s["config"])


def test_bad_config_key(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"wavenumber": 2.0}))
    assert run(tmp_path, "born", "--config", str(cfg), "--q0", "1") == cli.EXIT_VALIDATION


@pytest.mark.parametrize("args", [
    ["solve"],
    ["solve", "--q0", "1", "--medium", "x.csv"],
    ["solve", "--q0", "-2"],
    ["solve", "--q0", "1", "--k0", "-1"],
    ["born", "--q0", "1", "--tol", "0"],
    ["solve", "--q0", "1", "--sweep", "q0=1:2:2"],
    ["born", "--sweep", "k0=1:2:2"],
    ["solve", "--medium", "missing.csv"],
])
def test_validation_exit_code(tmp_path, args):
    assert run(tmp_path, *args) == cli.EXIT_VALIDATION
