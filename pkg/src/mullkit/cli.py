"""Command-line surface: simulate, fit, cv, bench, and the hidden `lp solve`
debug command.

Config precedence is flags > config file > built-in defaults; the config file
is flat key=value text with keys matching the long option names (dashes or
underscores).  `--seed` makes every subcommand deterministic up to timing
fields.  MULLKIT_JOBS mirrors --jobs for the bench worker pool.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .analog import AnalogConfig, spg_fit
from .bench import (BenchPlan, grid_for, render_csv, render_text, resolve_loss,
                    run_bench)
from .data import (Coefficients, Dataset, Task, load_csv, standardize,
                   unstandardize_coefficients)
from .lp import LinearProgram, solve_lp
from .muc import MucConfig, hybrid_fit, muc_fit
from .selection import CvGrid, cv_tune, parse_grid_text, threshold_estimate
from .simulate import SchemeKind, SchemeSpec, gen_scheme

EXIT_USAGE = 2


class CliError(Exception):
    """User-input problem: exits with status 2."""


def _read_config(path: str) -> dict:
    settings = {}
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise CliError(f"{path}:{lineno}: expected key=value")
                key, _, value = line.partition("=")
                settings[key.strip().replace("-", "_")] = value.strip()
    except OSError as exc:
        raise CliError(f"cannot read config file: {exc}") from None
    return settings


def _subparsers(parser: argparse.ArgumentParser):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            yield from action.choices.values()


def _apply_config(parser: argparse.ArgumentParser, args: list[str]):
    """Config file values become parser defaults, so explicit flags win."""
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(args)
    if not known.config:
        return
    settings = _read_config(known.config)
    valid = {a.dest for a in parser._actions}
    for sub in _subparsers(parser):
        valid |= {a.dest for a in sub._actions}
        for nested in _subparsers(sub):
            valid |= {a.dest for a in nested._actions}
    unknown = {k for k in settings if k not in valid}
    if unknown:
        raise CliError(f"unknown config keys: {sorted(unknown)}")
    for sub in _subparsers(parser):
        sub.set_defaults(**{k: v for k, v in settings.items()
                            if k in {a.dest for a in sub._actions}})
        for nested in _subparsers(sub):
            nested.set_defaults(**{k: v for k, v in settings.items()
                                   if k in {a.dest for a in nested._actions}})


def _write_coefficients(path: str, coef: Coefficients, names=None):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "name", "value"])
        for j, value in enumerate(coef.beta):
            name = names[j] if names else f"w{j + 1}"
            writer.writerow([j, name, repr(float(value))])
        if coef.intercept is not None:
            writer.writerow([-1, "_intercept", repr(float(coef.intercept))])


def _read_coefficients(path: str, p: int) -> Coefficients:
    beta = np.zeros(p)
    intercept = None
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            idx = int(row["index"])
            val = float(row["value"])
            if idx == -1:
                intercept = val
            elif 0 <= idx < p:
                beta[idx] = val
            else:
                raise CliError(f"{path}: coefficient index {idx} out of range")
    return Coefficients(beta, intercept)


def _add_loss_flags(sub):
    sub.add_argument("--loss", default="logistic",
                     choices=["logistic", "smooth-hinge", "conquer"])
    sub.add_argument("--sigma2", type=float, default=4.0,
                     help="smooth hinge smoothing (paper default 4)")
    sub.add_argument("--tau", type=float, default=0.5,
                     help="quantile level for the conquer loss")
    sub.add_argument("--bandwidth", type=float, default=None,
                     help="conquer kernel bandwidth (default: data-driven rule)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mullkit",
        description="Measurement-error-robust sparse estimation for Lipschitz losses")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="flat key=value config file")
    subs = parser.add_subparsers(dest="command", required=True)

    sim = subs.add_parser("simulate", help="generate benchmark data")
    sim.add_argument("--scheme", required=True, choices=[k.value for k in SchemeKind])
    sim.add_argument("--n", type=int, default=100)
    sim.add_argument("--p", type=int, default=200)
    sim.add_argument("--sigma-u", type=float, default=0.3)
    sim.add_argument("--noise", default="normal", choices=["normal", "t2"],
                     help="response noise for the quantile scheme")
    sim.add_argument("--tau", type=float, default=0.5)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, help="noisy-feature CSV (y,w1..wp)")
    sim.add_argument("--clean-out", help="optional clean-feature sidecar CSV")
    sim.add_argument("--beta-out", help="optional true-coefficient sidecar CSV")

    fit = subs.add_parser("fit", help="fit one estimator on a CSV dataset")
    fit.add_argument("--in", dest="infile", required=True)
    fit.add_argument("--response", default="y")
    fit.add_argument("--task", default="auto", choices=["auto", "binary", "quantile"])
    fit.add_argument("--method", default="analog", choices=["muc", "analog", "hybrid"])
    _add_loss_flags(fit)
    fit.add_argument("--lambda", dest="lam", type=float, default=None,
                     help="feasible-set width (default: sqrt(log p / n))")
    fit.add_argument("--gamma", type=float, default=0.0)
    fit.add_argument("--lambda2", type=float, default=None)
    fit.add_argument("--gamma2", type=float, default=0.0)
    fit.add_argument("--radius", type=float, default=50.0)
    fit.add_argument("--keep", type=int, default=1000, help="hybrid screen size")
    fit.add_argument("--max-iter", type=int, default=None)
    fit.add_argument("--tol", type=float, default=None)
    fit.add_argument("--threshold", type=float, default=0.0)
    fit.add_argument("--intercept", default="auto", choices=["auto", "on", "off"])
    fit.add_argument("--warm-start", default="analog",
                     help="'analog', 'zero', or a coefficient CSV path")
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--out-prefix", required=True)

    cv = subs.add_parser("cv", help="cross-validate tuning parameters")
    cv.add_argument("--in", dest="infile", required=True)
    cv.add_argument("--response", default="y")
    cv.add_argument("--task", default="auto", choices=["auto", "binary", "quantile"])
    cv.add_argument("--method", default="analog", choices=["muc", "analog"])
    _add_loss_flags(cv)
    cv.add_argument("--grid-file", help="key=list text grid")
    cv.add_argument("--folds", type=int, default=None)
    cv.add_argument("--seed", type=int, default=None)
    cv.add_argument("--out", required=True, help="CV table CSV")

    bench = subs.add_parser("bench", help="reproduce the simulation tables")
    bench.add_argument("--scheme", default="s3", choices=[k.value for k in SchemeKind])
    bench.add_argument("--methods", default="analog",
                       help="comma list from muc,analog,hybrid,baseline")
    _add_loss_flags(bench)
    bench.add_argument("--n", type=int, default=100)
    bench.add_argument("--p", type=int, default=None,
                       help="default 200; 1000 under --paper-scale")
    bench.add_argument("--sigma-u", type=float, default=0.3)
    bench.add_argument("--noise", default="normal", choices=["normal", "t2"])
    bench.add_argument("--taus", default=None,
                       help="comma list of quantile levels (quantile scheme)")
    bench.add_argument("--replicates", type=int, default=10)
    bench.add_argument("--keep", type=int, default=1000)
    bench.add_argument("--grid-file")
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--jobs", type=int, default=None,
                       help="worker processes (default MULLKIT_JOBS or cpu count)")
    bench.add_argument("--paper-scale", action="store_true",
                       help="p=1000 default and no reduced-scale shortcuts")
    bench.add_argument("--out-prefix", required=True)

    lp = subs.add_parser("lp", help="linear-programming debug commands")
    lp_subs = lp.add_subparsers(dest="lp_command", required=True)
    solve = lp_subs.add_parser("solve", help="solve min c'z, Az<=b, z>=0")
    solve.add_argument("--c", required=True, help="objective CSV (one column)")
    solve.add_argument("--a", required=True, help="constraint matrix CSV")
    solve.add_argument("--b", required=True, help="rhs CSV (one column)")
    solve.add_argument("--feas-tol", type=float, default=1e-8)
    solve.add_argument("--max-iter", type=int, default=None)
    return parser


def _load_dataset(ns) -> Dataset:
    task = {"auto": None, "binary": Task.BINARY, "quantile": Task.QUANTILE}[ns.task]
    try:
        return load_csv(ns.infile, response_column=ns.response, task=task)
    except (OSError, ValueError) as exc:
        raise CliError(str(exc)) from None


def _resolve_spec(ns, data: Dataset):
    return resolve_loss(ns.loss, data.task, data.n, data.p, sigma2=ns.sigma2,
                        tau=ns.tau, bandwidth=ns.bandwidth)


def cmd_simulate(ns) -> int:
    spec = SchemeSpec(SchemeKind(ns.scheme), n=ns.n, p=ns.p, sigma_u=ns.sigma_u,
                      tau=ns.tau if ns.scheme == "qhet" else None,
                      noise_dist=ns.noise, seed=ns.seed)
    rep = gen_scheme(spec)
    names = [f"w{j + 1}" for j in range(ns.p)]
    with open(ns.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["y"] + names)
        for i in range(ns.n):
            writer.writerow([repr(float(rep.y[i]))]
                            + [repr(float(v)) for v in rep.w[i]])
    if ns.clean_out:
        with open(ns.clean_out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"x{j + 1}" for j in range(ns.p)])
            for i in range(ns.n):
                writer.writerow([repr(float(v)) for v in rep.x[i]])
    if ns.beta_out:
        _write_coefficients(ns.beta_out, rep.truth, names)
    print(f"wrote {ns.n} samples x {ns.p} predictors to {ns.out}")
    return 0


def cmd_fit(ns) -> int:
    data = _load_dataset(ns)
    raw = data
    try:
        data = standardize(data)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    spec = _resolve_spec(ns, data)
    use_itc = {"auto": None, "on": True, "off": False}[ns.intercept]

    from .selection import lambda_base
    lam_default = lambda_base(data.n, data.p)
    start = time.monotonic()
    if ns.method == "analog":
        cfg = AnalogConfig(
            lambda2=ns.lambda2 if ns.lambda2 is not None else lam_default,
            gamma2=ns.gamma2, radius=ns.radius,
            max_iter=ns.max_iter or 5000, grad_tol=ns.tol or 1e-6,
            use_intercept=use_itc)
        result = spg_fit(data, spec, cfg)
        config_echo = {"method": "analog", "lambda2": cfg.lambda2,
                       "gamma2": cfg.gamma2, "radius": cfg.radius,
                       "max_iter": cfg.max_iter, "grad_tol": cfg.grad_tol}
    else:
        init = None
        warm = ns.warm_start
        if warm not in ("analog", "zero"):
            init = _read_coefficients(warm, data.p)
            warm = "analog"
        mcfg = MucConfig(
            lam=ns.lam if ns.lam is not None else lam_default,
            gamma=ns.gamma, max_outer_iter=ns.max_iter or 50,
            step_tol=ns.tol or 1e-4, init=init, warm_start=warm,
            use_intercept=use_itc)
        if ns.method == "muc":
            result = muc_fit(data, spec, mcfg)
        else:
            acfg = AnalogConfig(
                lambda2=ns.lambda2 if ns.lambda2 is not None else lam_default,
                gamma2=ns.gamma2, radius=ns.radius, use_intercept=use_itc)
            result = hybrid_fit(data, spec, acfg, mcfg, keep=ns.keep)
        config_echo = {"method": ns.method, "lambda": mcfg.lam,
                       "gamma": mcfg.gamma, "max_outer_iter": mcfg.max_outer_iter,
                       "step_tol": mcfg.step_tol, "warm_start": ns.warm_start}
    elapsed = time.monotonic() - start

    coef_std = threshold_estimate(result.coefficients, ns.threshold)
    coef = unstandardize_coefficients(coef_std, data)
    coef_path = f"{ns.out_prefix}.coef.csv"
    report_path = f"{ns.out_prefix}.report.json"
    _write_coefficients(coef_path, coef, raw.feature_names)
    report = {
        "config": {**config_echo, "loss": ns.loss, "threshold": ns.threshold,
                   "seed": ns.seed, "input": ns.infile},
        "n": data.n,
        "p": data.p,
        "task": data.task.value,
        "objective": result.objective,
        "iterations": result.iterations,
        "converged": result.converged,
        "feasibility_gap": result.feasibility_gap,
        "kkt_residual": result.kkt_residual,
        "nonzeros": coef.nnz,
        "outputs": {"coefficients": coef_path},
        "timing_seconds": elapsed,
    }
    with open(report_path, "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"{'converged' if result.converged else 'NOT converged'}; "
          f"{coef.nnz} nonzero coefficients -> {coef_path}")
    return 0


def cmd_cv(ns) -> int:
    data = _load_dataset(ns)
    spec = _resolve_spec(ns, data)
    if ns.grid_file:
        try:
            grid = parse_grid_text(open(ns.grid_file).read())
        except (OSError, ValueError) as exc:
            raise CliError(str(exc)) from None
    else:
        grid = grid_for(ns.method, None, conquer_loss=ns.loss == "conquer")
    if ns.folds is not None:
        grid = CvGrid(grid.lambda_multipliers, grid.gamma_multipliers,
                      grid.threshold_fractions, folds=ns.folds, seed=grid.seed)
    if ns.seed is not None:
        grid = CvGrid(grid.lambda_multipliers, grid.gamma_multipliers,
                      grid.threshold_fractions, folds=grid.folds, seed=ns.seed)
    best, table = cv_tune(data, spec, ns.method, grid)
    keys = ["lambda_multiplier", "gamma_multiplier", "threshold", "lambda",
            "gamma", "criterion", "failed_folds", "error"]
    with open(ns.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(keys)
        for row in table:
            writer.writerow([row[k] for k in keys])
    print(json.dumps({k: best[k] for k in keys if k != "error"}, sort_keys=True))
    return 0


def cmd_bench(ns) -> int:
    p = ns.p if ns.p is not None else (1000 if ns.paper_scale else 200)
    methods = tuple(m.strip() for m in ns.methods.split(",") if m.strip())
    taus = (tuple(float(t) for t in ns.taus.split(",")) if ns.taus else None)
    scheme = SchemeSpec(SchemeKind(ns.scheme), n=ns.n, p=p, sigma_u=ns.sigma_u,
                        tau=(taus[0] if taus else ns.tau)
                        if ns.scheme == "qhet" else None,
                        noise_dist=ns.noise, seed=ns.seed)
    grid = None
    if ns.grid_file:
        try:
            grid = parse_grid_text(open(ns.grid_file).read())
        except (OSError, ValueError) as exc:
            raise CliError(str(exc)) from None
    jobs = ns.jobs
    if jobs is None:
        jobs = int(os.environ.get("MULLKIT_JOBS", "0")) or (os.cpu_count() or 1)
    plan = BenchPlan(scheme=scheme, methods=methods, loss=ns.loss,
                     replicates=ns.replicates, taus=taus, grid=grid,
                     keep=ns.keep, jobs=jobs, sigma2=ns.sigma2)
    rows = run_bench(plan)
    csv_path = f"{ns.out_prefix}.csv"
    txt_path = f"{ns.out_prefix}.txt"
    with open(csv_path, "w") as fh:
        fh.write(render_csv(rows))
    text = render_text(rows)
    with open(txt_path, "w") as fh:
        fh.write(text)
    print(text, end="")
    print(f"wrote {csv_path} and {txt_path}")
    return 0


def _read_numeric_csv(path: str) -> np.ndarray:
    try:
        return np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise CliError(f"{path}: {exc}") from None


def cmd_lp_solve(ns) -> int:
    c = _read_numeric_csv(ns.c).ravel()
    A = _read_numeric_csv(ns.a)
    b = _read_numeric_csv(ns.b).ravel()
    try:
        lp = LinearProgram(c, A, b)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    sol = solve_lp(lp, feas_tol=ns.feas_tol, max_iter=ns.max_iter)
    out = {
        "status": sol.status.value,
        "objective": sol.objective_value,
        "iterations": sol.iterations,
        "z": None if sol.z is None else [float(v) for v in sol.z],
        "message": sol.message,
    }
    print(json.dumps(out, sort_keys=True))
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        ns = parser.parse_args(argv)
        if ns.command == "simulate":
            return cmd_simulate(ns)
        if ns.command == "fit":
            return cmd_fit(ns)
        if ns.command == "cv":
            return cmd_cv(ns)
        if ns.command == "bench":
            return cmd_bench(ns)
        if ns.command == "lp":
            return cmd_lp_solve(ns)
        parser.error(f"unknown command {ns.command}")
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
