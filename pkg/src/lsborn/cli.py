"""Command-line experiment runner: ``lsborn {spectrum,born,precond,solve,norm} [options]``.

Every subcommand writes CSV curves and a JSON summary into ``--out-dir``. The summary
always carries the fully resolved configuration. Exit codes: 0 success, 2 invalid
input, 3 numerical failure, 4 a checked claim did not hold.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import born, io, lippmann, precond, spectral
from .errors import LSBornError, NumericalError, ValidationError
from .problem import ConstantMedium, WaveProblem, make_grid, read_medium_csv

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_ASSERTION = 0, 2, 3, 4
COMMANDS = ("spectrum", "born", "precond", "solve", "norm")

DEFAULTS = {
    "k0": 1.0,
    "L": 1.0,
    "q0": None,
    "medium": None,
    "n": None,
    "rule": "midpoint",
    "khat": 1,
    "max_iter": None,
    "tol": None,
    "record_every": None,
    "eps_prime": None,
    "eps": None,
    "alpha": None,
    "numeric_xi": False,
    "oracle": False,
    "fd_m": None,
    "sweep": None,
    "out_dir": ".",
    "seed": 0,
}

# per-command iteration defaults: (max_iter, tol, record_every)
ITERATION_DEFAULTS = {
    "born": (500, 1e-10, 1),
    "precond": (30_000_000, 1e-8, 10_000),
}


class ClaimFailed(Exception):
    """A property checked by a subcommand did not hold."""


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lsborn", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON file with any of the option names below as keys")
    p.add_argument("--k0", type=float)
    p.add_argument("--L", type=float)
    p.add_argument("--q0", type=float, help="constant contrast")
    p.add_argument("--medium", help="CSV with header x,q sampled at the grid nodes")
    p.add_argument("--n", type=int, help="grid size")
    p.add_argument("--rule", choices=("midpoint", "trapezoid"))
    p.add_argument("--khat", type=int, choices=(1, -1), help="incidence direction")
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--record-every", dest="record_every", type=int)
    p.add_argument("--eps-prime", dest="eps_prime", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--numeric-xi", dest="numeric_xi", action="store_const", const=True)
    p.add_argument("--oracle", action="store_const", const=True, help="compare with the FD solver (solve)")
    p.add_argument("--fd-m", dest="fd_m", type=int, help="FD grid size for --oracle")
    p.add_argument("--sweep", help="born only: q0=a:b:steps")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--seed", type=int)
    return p


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults, then the JSON config file, then explicit command-line values."""
    cfg = dict(DEFAULTS)
    if args.config:
        with open(args.config) as fh:
            loaded = json.load(fh)
        for key, value in loaded.items():
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise ValidationError(f"unknown config key {key!r}")
            cfg[key] = value
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    cfg["command"] = args.command
    max_iter, tol, every = ITERATION_DEFAULTS.get(args.command, (None, None, None))
    for key, default in (("max_iter", max_iter), ("tol", tol), ("record_every", every)):
        if cfg[key] is None:
            cfg[key] = default
    _validate(cfg)
    return cfg


def _validate(cfg: dict) -> None:
    if (cfg["q0"] is None) == (cfg["medium"] is None) and cfg["sweep"] is None:
        raise ValidationError("give exactly one of --q0 and --medium")
    for key in ("max_iter", "record_every", "fd_m"):
        if cfg[key] is not None and int(cfg[key]) < 1:
            raise ValidationError(f"{key} must be >= 1")
    if cfg["tol"] is not None and not cfg["tol"] > 0:
        raise ValidationError("tol must be positive")
    if cfg["sweep"] is not None and cfg["command"] != "born":
        raise ValidationError("--sweep is only available for born")


def _setup(cfg: dict, q0: float | None = None):
    q0 = cfg["q0"] if q0 is None else q0
    if q0 is not None:
        medium = ConstantMedium(float(q0))
        n = cfg["n"]
    else:
        medium = read_medium_csv(cfg["medium"], float(cfg["L"]))
        n = cfg["n"] if cfg["n"] is not None else medium.x.size
    problem = WaveProblem(float(cfg["k0"]), float(cfg["L"]), int(cfg["khat"]), n)
    grid = make_grid(problem, cfg["rule"])
    op = lippmann.assemble(problem, medium, grid)
    cfg["n"] = problem.n
    return problem, medium, op


def _out(cfg: dict, name: str) -> Path:
    return Path(cfg["out_dir"]) / f"{cfg['command']}_{name}"


# --------------------------------------------------------------------------- subcommands


def cmd_spectrum(cfg: dict) -> dict:
    if cfg["q0"] is None:
        raise ValidationError("spectrum needs a constant medium (--q0)")
    if cfg["q0"] == 0:
        raise ValidationError("the eigenvalue locus needs q0 != 0")
    problem, medium, op = _setup(cfg)
    locus = spectral.sample_locus(problem.kappa, medium.q0)
    eig = spectral.numeric_spectrum(op)
    significant = eig[np.abs(eig) > 0.05]
    dist = spectral.locus_distance(significant, locus) if significant.size else np.zeros(0)
    io.write_locus(_out(cfg, "locus.csv"), locus)
    io.write_points(_out(cfg, "eigenvalues.csv"), eig)
    summary = {
        "T": locus.T,
        "max_locus_distance": float(dist.max()) if dist.size else 0.0,
        "min_im_lambda": float(significant.imag.min()) if significant.size else None,
        "spr_estimate": float(np.abs(eig).max()),
        "config": cfg,
    }
    io.write_json(_out(cfg, "summary.json"), summary)
    return summary


def _born_run(cfg: dict, q0: float | None = None) -> tuple[dict, born.ConvergenceTrace]:
    problem, medium, op = _setup(cfg, q0)
    psi = lippmann.incident_rhs(op)
    if medium.is_zero:
        u_direct = np.zeros(op.n, dtype=complex)
    else:
        u_direct = lippmann.direct_solve(op, psi)
    trace = born.iterate(op.fast_matvec, psi, max_iter=int(cfg["max_iter"]), tol=float(cfg["tol"]),
                         reference=u_direct, record_every=int(cfg["record_every"]))
    if medium.is_zero:
        rate = born.RateEstimate(0.0, 0.0, 0, True)
    else:
        rate = born.rate_estimate(op.fast_matvec, psi)
    scale = np.linalg.norm(u_direct)
    final_err = float(np.linalg.norm(trace.solution - u_direct))
    result = {
        "verdict": trace.verdict,
        "iterations": trace.iterations,
        "spr0": rate.spr0,
        "C": rate.C,
        "final_err_vs_direct": final_err,
        "final_rel_err_vs_direct": final_err / scale if scale > 0 else final_err,
        "final_residual": trace.final_residual,
        "psi_norm": trace.psi_norm,
        "diagnostic": trace.diagnostic,
    }
    if trace.verdict == born.CONVERGED and not medium.is_zero:
        report = born.tail_bound_check(trace, rate)
        result["tail_bound"] = {"passed": report.passed, "max_ratio": report.max_ratio}
    return result, trace


def _parse_sweep(text: str) -> tuple[str, np.ndarray]:
    try:
        key, rng = text.split("=")
        a, b, steps = rng.split(":")
        values = np.linspace(float(a), float(b), int(steps))
    except ValueError as exc:
        raise ValidationError(f"--sweep expects q0=a:b:steps, got {text!r}") from exc
    if key.strip() != "q0" or int(steps) < 1:
        raise ValidationError(f"--sweep expects q0=a:b:steps, got {text!r}")
    return key, values


def cmd_born(cfg: dict) -> dict:
    if cfg["sweep"] is not None:
        _, values = _parse_sweep(cfg["sweep"])
        runs = []
        for q0 in values:
            result, _ = _born_run(dict(cfg), float(q0))
            runs.append({"q0": float(q0), **{k: result[k] for k in ("verdict", "iterations", "spr0", "C")}})
        summary = {"sweep": runs, "config": cfg}
        io.write_json(_out(cfg, "sweep.json"), summary)
        return summary
    result, trace = _born_run(cfg)
    io.write_trace(_out(cfg, "trace.csv"), trace)
    summary = {**result, "config": cfg}
    io.write_json(_out(cfg, "summary.json"), summary)
    return summary


def cmd_precond(cfg: dict) -> dict:
    problem, medium, op = _setup(cfg)
    eig = spectral.numeric_spectrum(op)
    if isinstance(medium, ConstantMedium):
        if cfg["numeric_xi"]:
            params = precond.gamma_numeric(problem.kappa, medium.q0, cfg["eps_prime"], cfg["eps"], cfg["alpha"])
        else:
            params = precond.gamma_analytic(problem.kappa, medium.q0, cfg["eps_prime"], cfg["eps"], cfg["alpha"])
    else:
        if cfg["numeric_xi"]:
            raise ValidationError("--numeric-xi needs a constant medium (--q0)")
        params = precond.gamma_from_spectrum(eig, op.q, cfg["alpha"], cfg["eps"])
    mu, inside = precond.transform_spectrum(eig, params.gamma)
    io.write_points(_out(cfg, "mu.csv"), mu, names=("re_mu", "im_mu"))
    summary = {"params": params.as_dict(), "all_inside": inside, "max_abs_mu": float(np.abs(mu).max()),
               "config": cfg}
    if inside:
        u_direct = lippmann.direct_solve(op)
        trace = precond.preconditioned_solve(op, params, max_iter=int(cfg["max_iter"]), tol=float(cfg["tol"]),
                                             record_every=int(cfg["record_every"]), reference=u_direct)
        io.write_trace(_out(cfg, "trace.csv"), trace)
        summary.update(verdict=trace.verdict, iterations=trace.iterations,
                       rel_err_vs_direct=float(np.linalg.norm(trace.solution - u_direct) / np.linalg.norm(u_direct)))
    else:
        summary.update(verdict="skipped", iterations=0, rel_err_vs_direct=None)
    io.write_json(_out(cfg, "summary.json"), summary)
    if not inside:
        raise ClaimFailed(f"some |mu| >= 1 (max {summary['max_abs_mu']:.6g}); gamma is not admissible")
    if summary["verdict"] != born.CONVERGED:
        raise ClaimFailed(f"preconditioned iteration {summary['verdict']} after {summary['iterations']} steps")
    return summary


def cmd_solve(cfg: dict) -> dict:
    problem, medium, op = _setup(cfg)
    if medium.is_zero:
        u = np.zeros(op.n, dtype=complex)
    else:
        u = lippmann.direct_solve(op)
    io.write_field(_out(cfg, "u.csv"), op.grid.nodes, u)
    summary = {"config": cfg}
    if cfg["oracle"]:
        m = cfg["fd_m"] if cfg["fd_m"] is not None else 4 * op.n
        ref = lippmann.fd_oracle(problem, medium, m=int(m), grid=op.grid)
        den = lippmann.weighted_norm(ref, op.grid)
        num = lippmann.weighted_norm(u - ref, op.grid)
        summary["rel_l2_err"] = num / den if den > 0 else num
        summary["fd_m"] = int(m)
    io.write_json(_out(cfg, "summary.json"), summary)
    return summary


def cmd_norm(cfg: dict) -> dict:
    problem, medium, op = _setup(cfg)
    summary = {
        "operator_norm": lippmann.operator_norm(op, seed=int(cfg["seed"])),
        "hs_bound": lippmann.hilbert_schmidt_bound(problem, medium),
        "spectral_radius": lippmann.spectral_radius(op),
        "config": cfg,
    }
    io.write_json(_out(cfg, "summary.json"), summary)
    return summary


HANDLERS = {"spectrum": cmd_spectrum, "born": cmd_born, "precond": cmd_precond, "solve": cmd_solve, "norm": cmd_norm}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        summary = HANDLERS[args.command](cfg)
    except ClaimFailed as exc:
        print(f"lsborn {args.command}: claim failed: {exc}", file=sys.stderr)
        return EXIT_ASSERTION
    except (ValidationError, OSError, json.JSONDecodeError) as exc:
        print(f"lsborn {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"lsborn {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except LSBornError as exc:
        print(f"lsborn {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    brief = {k: v for k, v in summary.items() if k != "config"}
    print(json.dumps(io._jsonable(brief), sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
