"""Command-line surface: fit, tune, simulate, factors, bench.

Exit codes: 0 success (including non-converged fits, which are results, not
failures), 2 usage errors, 3 data errors, 4 numeric/solver errors.  Failures
print one machine-parsable line: "error:<Category>: <detail>".
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import admm
from .errors import PanelFormatError, QuantfactorError
from .factors import extract_factors, variance_explained
from .panel import SolverConfig, compute_column_scales
from .panel_io import (
    RunConfig,
    read_matrix_csv,
    read_panel_csv,
    write_fit,
    write_matrix_csv,
    write_sim_instance,
)
from .selection import TuningGrid, grid_search
from .simulate import DESIGNS, DesignSpec, generate
from .metrics import run_monte_carlo


def _float_list(text: str):
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma list of numbers: {text!r}")


def _str_list(text: str):
    return tuple(tok.strip() for tok in text.split(",") if tok.strip())


def _add_solver_flags(sub):
    sub.add_argument("--eta", type=float, default=1.0)
    sub.add_argument("--max-iter", type=int, default=5000)
    sub.add_argument("--tol-abs", type=float, default=1e-6)
    sub.add_argument("--tol-rel", type=float, default=1e-5)
    sub.add_argument("--loss", choices=("quantile", "squared"), default="quantile")
    sub.add_argument("--fix-pi-zero", action="store_true")
    sub.add_argument("--pi-inf-bound", type=float, default=None)


def _add_design_flags(sub):
    sub.add_argument("--design", choices=DESIGNS, default="D1")
    sub.add_argument("--n", type=int, default=100)
    sub.add_argument("--p", type=int, default=5)
    sub.add_argument("--T", type=int, default=100, dest="t_len")
    sub.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quantfactor",
        description="Sparse plus low-rank panel quantile regression",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p_fit = subs.add_parser("fit", help="fit one (nu1, nu2) pair per quantile")
    p_fit.add_argument("--panel", required=True)
    p_fit.add_argument("--tau", type=_float_list, default=(0.5,))
    p_fit.add_argument("--nu1", type=float, default=0.0)
    p_fit.add_argument("--nu2", type=float, default=0.0)
    _add_solver_flags(p_fit)
    p_fit.add_argument("--out", default=".")

    p_tune = subs.add_parser("tune", help="grid search scored by modified BIC")
    p_tune.add_argument("--panel", required=True)
    p_tune.add_argument("--tau", type=_float_list, default=(0.5,))
    p_tune.add_argument("--grid-nu1", type=_float_list, default=None)
    p_tune.add_argument("--grid-nu2", type=_float_list, default=None)
    p_tune.add_argument("--c1", type=float, default=None)
    _add_solver_flags(p_tune)
    p_tune.add_argument("--out", default=".")

    p_sim = subs.add_parser("simulate", help="write one simulated panel")
    _add_design_flags(p_sim)
    p_sim.add_argument("--out", default=".")

    p_fac = subs.add_parser("factors", help="decompose a stored pi.csv")
    p_fac.add_argument("--pi", required=True, dest="pi_path")
    p_fac.add_argument("--rank", type=int, required=True)
    p_fac.add_argument("--out", default=".")

    p_bench = subs.add_parser("bench", help="Monte Carlo benchmark table")
    _add_design_flags(p_bench)
    p_bench.add_argument("--reps", type=int, default=20)
    p_bench.add_argument("--methods", type=_str_list, default=("l1nnqr",))
    p_bench.add_argument("--tau", type=_float_list, default=(0.5,))
    p_bench.add_argument("--grid-nu1", type=_float_list, default=None)
    p_bench.add_argument("--grid-nu2", type=_float_list, default=None)
    p_bench.add_argument("--c1", type=float, default=None)
    p_bench.add_argument("--oracle", action="store_true")
    _add_solver_flags(p_bench)
    p_bench.add_argument("--out", default=".")

    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    fields = {f for f in RunConfig.__dataclass_fields__}
    payload = {}
    for key, value in vars(args).items():
        name = {"tau": "taus"}.get(key, key)
        if name in fields and value is not None:
            payload[name] = value
    return RunConfig(**payload)


def _solver_config(cfg: RunConfig, tau: float) -> SolverConfig:
    return SolverConfig(
        tau=tau,
        nu1=cfg.nu1,
        nu2=cfg.nu2,
        eta=cfg.eta,
        max_iter=cfg.max_iter,
        tol_abs=cfg.tol_abs,
        tol_rel=cfg.tol_rel,
        loss=cfg.loss,
        fix_pi_zero=cfg.fix_pi_zero,
        pi_inf_bound=cfg.pi_inf_bound,
    )


def _grid(cfg: RunConfig) -> TuningGrid:
    kwargs = {}
    if cfg.grid_nu1 is not None:
        kwargs["nu1_values"] = np.asarray(cfg.grid_nu1)
    if cfg.grid_nu2 is not None:
        kwargs["nu2_values"] = np.asarray(cfg.grid_nu2)
    return TuningGrid(**kwargs)


def _tau_dir(out: str, tau: float) -> Path:
    return Path(out) / f"tau_{tau:g}"


def _write_one_fit(result, data, scales, cfg: RunConfig, tau: float, extra=None):
    decomposition = None
    if result.rank_estimate >= 1:
        decomposition = extract_factors(result.pi, result.rank_estimate)
    echo = asdict(cfg)
    # the output directory is where the file already sits; echoing it would
    # break byte-identity of reruns into different directories
    echo.pop("out", None)
    echo["tau"] = tau
    if extra:
        echo.update(extra)
    return write_fit(
        result, decomposition, _tau_dir(cfg.out, tau), scales=scales, config_echo=echo
    )


def _cmd_fit(cfg: RunConfig) -> int:
    data = read_panel_csv(cfg.panel)
    scales = compute_column_scales(data) if data.p else None
    for tau in cfg.taus:
        result = admm.fit(data, _solver_config(cfg, tau), scales=scales)
        _write_one_fit(result, data, scales, cfg, tau,
                       extra={"nu1": cfg.nu1, "nu2": cfg.nu2})
    return 0


def _cmd_tune(cfg: RunConfig) -> int:
    data = read_panel_csv(cfg.panel)
    scales = compute_column_scales(data) if data.p else None
    grid = _grid(cfg)
    for tau in cfg.taus:
        report = grid_search(data, grid, _solver_config(cfg, tau), c1=cfg.c1,
                             scales=scales)
        out_dir = _tau_dir(cfg.out, tau)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "selection.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["nu1", "nu2", "bic", "sparsity", "rank", "objective", "converged"]
            )
            for row in report.table:
                writer.writerow(
                    [f"{row.nu1:.17g}", f"{row.nu2:.17g}", f"{row.bic:.17g}",
                     row.sparsity, row.rank, f"{row.objective:.17g}",
                     int(row.converged)]
                )
        _write_one_fit(report.best_fit, data, scales, cfg, tau,
                       extra={"nu1": report.best_nu1, "nu2": report.best_nu2})
    return 0


def _cmd_simulate(cfg: RunConfig) -> int:
    spec = DesignSpec(cfg.design, cfg.n, cfg.t_len, cfg.p, cfg.seed)
    inst = generate(spec)
    write_sim_instance(inst, cfg.out, cfg.seed, cfg.design)
    return 0


def _cmd_factors(cfg: RunConfig) -> int:
    pi = read_matrix_csv(cfg.pi_path)
    decomposition = extract_factors(pi, cfg.rank)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_matrix_csv(decomposition.factors, out_dir / "factors.csv")
    write_matrix_csv(decomposition.loadings, out_dir / "loadings.csv")
    shares = variance_explained(decomposition.singular_values)
    with open(out_dir / "variance.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["component", "singular_value", "percent"])
        for k, (sv, share) in enumerate(
            zip(decomposition.singular_values, shares), start=1
        ):
            writer.writerow([k, f"{sv:.17g}", f"{share:.17g}"])
    return 0


def _cmd_bench(cfg: RunConfig) -> int:
    spec = DesignSpec(cfg.design, cfg.n, cfg.t_len, cfg.p, cfg.seed)
    base = _solver_config(cfg, cfg.taus[0])
    reports = run_monte_carlo(
        spec, cfg.methods, _grid(cfg), cfg.reps,
        oracle_tuning=cfg.oracle, base_config=base, c1=cfg.c1,
    )
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    tuning = "oracle" if cfg.oracle else "bic"
    with open(out_dir / "bench.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["method", "design", "n", "p", "T", "reps", "tuning",
             "theta_err_scaled_mean", "quantile_err_mean", "failed_reps"]
        )
        for rep in reports:
            writer.writerow(
                [rep.method, rep.design, rep.n, rep.p, rep.t_len, rep.reps, tuning,
                 f"{rep.mean_theta_err_scaled:.17g}",
                 f"{rep.mean_quantile_err:.17g}", rep.failed_reps]
            )
    with open(out_dir / "per_rep.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "rep", "theta_err_scaled", "quantile_err"])
        for rep in reports:
            for r, (te, qe) in enumerate(
                zip(rep.per_rep_theta_err, rep.per_rep_quantile_err)
            ):
                writer.writerow([rep.method, r, f"{te:.17g}", f"{qe:.17g}"])
    with open(out_dir / "bench_config.json", "w", encoding="utf-8") as fh:
        fh.write(_run_config_json(cfg))
    return 0


def _run_config_json(cfg: RunConfig) -> str:
    payload = json.loads(cfg.to_json())
    payload.pop("out", None)
    return json.dumps(payload, sort_keys=True, indent=2)


_COMMANDS = {
    "fit": _cmd_fit,
    "tune": _cmd_tune,
    "simulate": _cmd_simulate,
    "factors": _cmd_factors,
    "bench": _cmd_bench,
}


def cli_main(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    cfg = _run_config(args)
    try:
        return _COMMANDS[cfg.command](cfg)
    except (PanelFormatError, FileNotFoundError) as exc:
        print(f"error:{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except QuantfactorError as exc:
        print(f"error:{type(exc).__name__}: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error:ValueError: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
