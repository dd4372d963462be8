"""Command line entry point: ``transferlin {predict,simulate,sweep,universality,reproduce}``.

Exit codes: 0 success, 1 runtime or domain error, 2 configuration error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .classification import (
    oracle_class_error,
    predict_class_error,
    predict_class_error_scalar,
    regime,
    w0_class_error,
)
from .config import RunConfig, load_config
from .errors import ConfigError, DegenerateError, TransferLinError
from .experiments import (
    ClassificationSetup,
    RegressionSetup,
    figure_recipes,
    run_sweep,
    universality_report,
    write_gnuplot,
    write_manifest,
    write_table,
)
from .regression import RegressionEnsemble, predict_ep, transfer_benefit
from .spectral import JointSpectralDensity, parse_density

MODEL_FLAGS = ("kappa", "d", "ea")
REG_FLAGS = ("sigma", "spectrum", "noise")
CLASS_FLAGS = ("rho", "r", "c")
RUN_FLAGS = ("trials", "seed", "workers", "out", "stem", "gnuplot")


def _add_model_flags(p, with_mode):
    g = p.add_argument_group("model parameters")
    if with_mode:
        g.add_argument("--mode", choices=["reg", "class"], help="regression or classification")
    g.add_argument("--kappa", help="overparametrization ratio d/n (> 1)")
    g.add_argument("--d", help="dimension")
    g.add_argument("--ea", help="a-priori error of the pretrained weights")
    g.add_argument("--sigma", help="regression label-noise standard deviation")
    g.add_argument("--spectrum", help="R_x spectrum: single, bilevel, uniform or a density literal")
    g.add_argument("--noise", choices=["gauss", "entry"], help="regression noise law")
    g.add_argument("--rho", help="classification signal-to-noise n(1-r)/sigma^2")
    g.add_argument("--r", help="correlation between the class means")
    g.add_argument("--c", help="norm ratio ||t_eta eta|| / ||t_star w*|| of the pretrained start")


def _add_run_flags(p, sweep):
    g = p.add_argument_group("run control")
    if sweep:
        g.add_argument("--var", dest="variable", choices=["kappa", "sigma", "rho"], help="swept variable")
        g.add_argument("--grid", help="grid as lo:hi:count or a comma list")
    g.add_argument("--trials", help="trials per grid point and distribution")
    g.add_argument("--seed", help="master seed (64-bit unsigned)")
    g.add_argument("--workers", help="worker processes (default: available CPUs)")
    g.add_argument("--out", help="output directory (default: $TRANSFERLIN_OUT or ./transferlin_out)")
    g.add_argument("--dist", dest="distributions", help="entry laws, e.g. gauss,ber,chi")
    if sweep:
        g.add_argument("--stem", help="output file stem")
    g.add_argument("--gnuplot", action="store_const", const="true", help="also write a gnuplot script")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="transferlin",
        description="Asymptotic predictions and Monte Carlo checks for fine-tuning linear models from a pretrained start.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("predict", help="evaluate the asymptotic prediction")
    p.add_argument("model", choices=["reg", "class"], help="regression or classification")
    p.add_argument("--config", help="configuration file")
    _add_model_flags(p, with_mode=False)
    p.add_argument("--json", action="store_true", help="print a JSON record instead of text")

    for name, helptext in (
        ("simulate", "Monte Carlo trials at a single parameter point"),
        ("sweep", "Monte Carlo sweep with theory columns"),
        ("universality", "sweep and compare entry distributions"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="configuration file")
        _add_model_flags(p, with_mode=True)
        _add_run_flags(p, sweep=name != "simulate")

    p = sub.add_parser("reproduce", help="run a pinned figure configuration")
    p.add_argument("figure", choices=["fig1", "fig2", "fig3"], help="figure recipe")
    p.add_argument("--config", help="configuration file (only [run] keys apply)")
    _add_run_flags(p, sweep=False)
    return parser


def _resolve(args, mode=None):
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    flags = vars(args)
    for key in RUN_FLAGS + ("distributions",):
        if flags.get(key) is not None:
            cfg.set("run", key, flags[key])
    if flags.get("mode") is not None:
        cfg.set("run", "mode", flags["mode"])
    if mode is not None:
        cfg.set("run", "mode", mode)
    mode = cfg.get("run", "mode")
    section = "regression" if mode == "reg" else "classification"
    for key in MODEL_FLAGS + (REG_FLAGS if mode == "reg" else CLASS_FLAGS):
        if flags.get(key) is not None:
            cfg.set(section, key, flags[key])
    for key in REG_FLAGS if mode == "class" else CLASS_FLAGS:
        if flags.get(key) is not None:
            raise ConfigError(f"flag --{key} does not apply to mode '{mode}'", key=key)
    for key in ("variable", "grid"):
        if flags.get(key) is not None:
            cfg.set("sweep", key, flags[key])
    return cfg


def _setup(cfg):
    if cfg.get("run", "mode") == "reg":
        v = cfg.values["regression"]
        name = v["spectrum"] if v["spectrum"] in ("single", "bilevel", "uniform") else "custom"
        return RegressionSetup(
            d=v["d"], kappa=v["kappa"], sigma=v["sigma"], e_a=v["ea"],
            p=parse_density(v["spectrum"]), spectrum_name=name, noise=v["noise"],
        )
    v = cfg.values["classification"]
    return ClassificationSetup(d=v["d"], kappa=v["kappa"], rho=v["rho"], r=v["r"], c=v["c"], e_a=v["ea"])


def _emit(record, as_json):
    if as_json:
        print(json.dumps(record, sort_keys=True))
        return
    for k, v in record.items():
        if isinstance(v, float):
            print(f"{k:<14} {v:.12g}")
        else:
            print(f"{k:<14} {v}")


def cmd_predict(args):
    cfg = _resolve(args, mode=args.model)
    hi, lo = cfg.get("regime", "high"), cfg.get("regime", "low")
    if args.model == "reg":
        v = cfg.values["regression"]
        ens = RegressionEnsemble(v["kappa"], v["sigma"] ** 2, v["ea"], parse_density(v["spectrum"]))
        pred = predict_ep(ens)
        decision = transfer_benefit(v["sigma"], v["ea"])
        record = {
            "model": "regression", "kappa": v["kappa"], "theta": pred.theta, "t": pred.t,
            "e_p": pred.e_p, "lower_bound": pred.lower_bound, "e_a": v["ea"],
            "best_error": decision.best_error,
            "regime": "transfer_can_help" if decision.helps else "transfer_cannot_help",
        }
    else:
        v = cfg.values["classification"]
        setup = _setup(cfg)
        kappa, rho = v["kappa"], v["rho"]
        spectra = JointSpectralDensity.scalar(setup.d / kappa * (1.0 - setup.r) / rho, setup.d)
        oracle = oracle_class_error(spectra, setup.r)
        if v["ea"] is not None:
            pred = predict_class_error_scalar(kappa, rho, v["ea"], setup.d / kappa, setup.d, setup.r)
            e_a = v["ea"]
            if e_a < oracle:
                print(f"warning: e_a = {e_a} is below the oracle error {oracle:.6g}", file=sys.stderr)
        else:
            ens = setup.ensemble()
            pred = predict_class_error(ens)
            e_a = w0_class_error(ens)
        record = {
            "model": "classification", "kappa": kappa, "rho": rho, "theta": pred.theta,
            "alpha": pred.alpha, "gamma": pred.gamma, "tau2": pred.tau2, "error": pred.error,
            "e_a": e_a, "oracle_error": oracle, "regime": regime(rho, hi, lo),
        }
    _emit(record, args.json)
    return 0


def _finish_tables(cfg, tables, report=False):
    out = cfg.out
    os.makedirs(out, exist_ok=True)
    for stem, table in tables:
        dat, csv = write_table(table, out, stem)
        if cfg.get("run", "gnuplot"):
            write_gnuplot(table, dat, os.path.join(out, stem + ".gp"))
        print(f"wrote {dat} ({len(table.rows)} rows) and {csv}")
        for f in table.failures():
            print(f"  failure: {f}")
        if report and len(set(table.distributions)) >= 2:
            print(universality_report(table).format())
    manifest = write_manifest(os.path.join(out, "manifest.txt"), cfg.to_text(), tables)
    print(f"wrote {manifest}")
    return 0


def _sweep_common(args, single_point=False, report=False):
    cfg = _resolve(args)
    setup = _setup(cfg)
    mode = setup.mode
    if single_point:
        variable = "kappa"
        grid = [setup.kappa]
    else:
        variable = cfg.get("sweep", "variable")
        grid = cfg.get("sweep", "grid")
        if grid is None:
            raise ConfigError("a grid is required (--grid or [sweep] grid)", key="grid")
        if variable not in setup.variables:
            raise ConfigError(f"mode '{mode}' cannot sweep '{variable}'", key="variable")
    table = run_sweep(
        setup, variable, grid, trials=cfg.get("run", "trials"),
        distributions=cfg.get("run", "distributions"), master_seed=cfg.get("run", "seed"),
        workers=cfg.workers,
    )
    stem = cfg.get("run", "stem") or (f"{mode}_point" if single_point else f"{mode}_{variable}")
    for row in table.rows:
        cols = "  ".join(
            f"{t}={row.means[t]:.6g}+-{row.stderrs[t]:.2g}" for t in dict.fromkeys(table.distributions)
        )
        print(f"{variable}={row.x:g}  {cols}  {table.theory_name}={row.theory:.6g}")
    return _finish_tables(cfg, [(stem, table)], report=report or len(set(table.distributions)) >= 2)


def cmd_simulate(args):
    return _sweep_common(args, single_point=True)


def cmd_sweep(args):
    return _sweep_common(args)


def cmd_universality(args):
    return _sweep_common(args, report=True)


def cmd_reproduce(args):
    cfg = _resolve(args)
    tables = []
    for stem, setup, variable, grid in figure_recipes(args.figure):
        print(f"{stem}: {variable} over {len(grid)} points")
        table = run_sweep(
            setup, variable, grid, trials=cfg.get("run", "trials"),
            distributions=cfg.get("run", "distributions"), master_seed=cfg.get("run", "seed"),
            workers=cfg.workers,
        )
        tables.append((stem, table))
    return _finish_tables(cfg, tables, report=True)


COMMANDS = {
    "predict": cmd_predict, "simulate": cmd_simulate, "sweep": cmd_sweep,
    "universality": cmd_universality, "reproduce": cmd_reproduce,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DegenerateError as exc:
        guard = f" (failed guard: {exc.guard})" if exc.guard else ""
        print(f"error: {exc}{guard}", file=sys.stderr)
        return 1
    except (TransferLinError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
