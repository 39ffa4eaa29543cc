"""Command-line interface: ``refprior {estimate,grid,fit,sweep,selftest}``.

Data goes to stdout, diagnostics to stderr. Exit codes: 0 success, 2 usage or
configuration error, 3 numerical failure. ``REFPRIOR_SEED`` supplies the
master seed when neither a flag nor a config file sets one.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from refprior import estimators as est
from refprior import experiments as ex
from refprior import golden
from refprior.errors import InternalError, QuadratureError, RefPriorError
from refprior.models import get_model
from refprior.sampling import StreamKey, uniform_matrix

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3

# flag dest -> config key, shared by grid and sweep
EXPERIMENT_FLAGS = {
    "model": "model", "theta_grid": "theta_grid", "theta_count": "theta_count",
    "theta_low": "theta_low", "theta_high": "theta_high", "theta_spacing": "theta_spacing",
    "theta0": "theta0", "k_values": "k_values", "m": "m", "alpha": "alpha",
    "estimators": "estimators", "replications": "replications", "seed": "master_seed",
    "output": "output_path", "workers": "workers",
}


class UsageError(Exception):
    pass


def _env_seed() -> int:
    raw = os.environ.get("REFPRIOR_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError as exc:
        raise UsageError(f"REFPRIOR_SEED must be an integer, got {raw!r}") from exc


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file; flags override its values")
    p.add_argument("--model")
    p.add_argument("--theta-grid", help="explicit comma-separated theta values")
    p.add_argument("--theta-count")
    p.add_argument("--theta-low")
    p.add_argument("--theta-high")
    p.add_argument("--theta-spacing", choices=ex.SPACINGS)
    p.add_argument("--theta0")
    p.add_argument("--k-values", help="comma list; a:b is an inclusive range")
    p.add_argument("--m", help="'equal_k' or a fixed number of replicate samples")
    p.add_argument("--alpha")
    p.add_argument("--estimators", help="comma subset of fk,f,fnac")
    p.add_argument("--replications")
    p.add_argument("--seed")
    p.add_argument("--output", help="directory for records.csv and summary.csv")
    p.add_argument("--workers")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp header line")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="refprior", description="Monte Carlo reference-prior estimation.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate the prior at one theta")
    p.add_argument("--model", required=True)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--theta0", type=float)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--m", type=int, help="replicate samples (default k)")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--estimator", choices=ex.ESTIMATORS, default="fk")
    p.add_argument("--seed", type=int)
    p.add_argument("--fixture", help="JSON with theta_samples (and theta0_samples) to use instead of simulation")
    p.add_argument("--csv", action="store_true", help="also print a records-CSV row")

    p = sub.add_parser("grid", help="one (k, replication) cell over a theta grid; records CSV on stdout")
    _add_experiment_flags(p)
    p.add_argument("--k", type=int, help="sample size (default: first of k_values)")
    p.add_argument("--replication", type=int, default=0)

    p = sub.add_parser("fit", help="fit proportionality constants to estimates in a CSV")
    p.add_argument("input", help="CSV with theta and value columns (optional estimator column); '-' for stdin")
    p.add_argument("--model", required=True, help="model whose known prior is the reference")

    p = sub.add_parser("sweep", help="k-sweep from a config file; summary CSV on stdout")
    p.add_argument("config_path", nargs="?", help="config file (same as --config)")
    _add_experiment_flags(p)

    p = sub.add_parser("selftest", help="run the golden-value and oracle checks")
    p.add_argument("--fixture", help="JSON overriding sections of the golden data")
    return parser


def _config_from_args(args) -> ex.ExperimentConfig:
    path = getattr(args, "config_path", None) or args.config
    overrides = {key: getattr(args, dest) for dest, key in EXPERIMENT_FLAGS.items()}
    if args.no_timestamp:
        overrides["timestamp"] = "false"
    if path is not None:
        if not Path(path).is_file():
            raise UsageError(f"config file not found: {path}")
        values = dict(ex.parse_config_text(Path(path).read_text()))
    else:
        values = {}
    values.setdefault("master_seed", str(_env_seed()))
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ex.config_from_mapping(values)


def cmd_estimate(args) -> int:
    model = get_model(args.model)
    theta0 = model.default_theta0 if args.theta0 is None else args.theta0
    name = args.estimator
    if args.fixture:
        data = json.loads(Path(args.fixture).read_text())
        data = data.get("worked_example", data)
        xs = np.asarray(data["theta_samples"], dtype=float)
        k, m = xs.shape[1], xs.shape[0]
        if name == "fk":
            e = est.fk_from_samples(model, args.theta, xs)
        elif name == "f":
            e = est.ratio_from_samples(model, args.theta, theta0, xs, np.asarray(data["theta0_samples"], dtype=float))
        else:
            e = est.fnac_from_samples(model, args.theta, theta0, xs)
        path = "fixture"
    else:
        k = args.k
        m = args.m if args.m is not None else k
        seed = args.seed if args.seed is not None else _env_seed()
        key = StreamKey(seed, (0, 0))
        U0 = uniform_matrix(key.child(0), m, k)
        path = key.child(0).label()
        if name == "fk":
            e = est.fk_hat(model, args.theta, U0)
        elif name == "f":
            e = est.f_hat(model, args.theta, theta0, U0, uniform_matrix(key.child(1), m, k))
            path += "+" + key.child(1).label()
        else:
            e = est.fnac_hat(model, args.theta, theta0, U0)
    if name == "fk":
        iv = est.half_width_fk(e, args.alpha)
        extra = dict(mu1_hat=e.mu1_hat, mu2_hat=None, sigma1_sq=e.sigma1_hat**2, sigma2_sq=None, sigma12=None)
        t0 = None
    else:
        iv = est.half_width_f(e, args.alpha)
        extra = dict(mu1_hat=e.mu1_hat, mu2_hat=e.mu2_hat, sigma1_sq=e.sigma1_sq, sigma2_sq=e.sigma2_sq,
                     sigma12=e.sigma12)
        t0 = theta0
    print(f"{name} theta={args.theta:g} value={e.value:.10g} half_width={iv.half_width:.10g} "
          f"lo={iv.lo:.10g} hi={iv.hi:.10g}")
    if args.csv:
        rec = ex.EstimateRecord(model.id.value, name, float(args.theta), t0, k, m, args.alpha, 0, e.value,
                                half_width=iv.half_width, lo=iv.lo, hi=iv.hi, scaled_ref=None, seed_path=path,
                                **extra)
        sys.stdout.write(ex.records_csv([rec]))
    return EXIT_OK


def cmd_grid(args) -> int:
    config = _config_from_args(args)
    k = args.k if args.k is not None else config.k_values[0]
    if k < 2:
        raise UsageError("--k must be >= 2")
    records, scores = ex.run_cell(config, k, args.replication)
    sys.stdout.write(ex.records_csv(records))
    for s in scores:
        a = s.fit.a_hat if s.fit else float("nan")
        print(f"{s.estimator}: a_hat={a:.6g} CE={s.CE:.4f} AMRP={s.AMRP:.4f} EARP={s.EARP:.4f} "
              f"excluded={s.excluded}", file=sys.stderr)
    return EXIT_OK


def cmd_fit(args) -> int:
    model = get_model(args.model)
    text = sys.stdin.read() if args.input == "-" else Path(args.input).read_text()
    rows = list(csv.DictReader(line for line in text.splitlines() if not line.startswith("#")))
    if not rows or "theta" not in rows[0] or "value" not in rows[0]:
        raise UsageError("fit input needs 'theta' and 'value' columns")
    groups: dict[str, list[tuple[float, float]]] = {}
    for r in rows:
        if r.get("status", "ok") not in ("ok", ""):
            continue
        groups.setdefault(r.get("estimator") or "estimate", []).append((float(r["theta"]), float(r["value"])))
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["estimator", "a_hat", "s_hat", "EARP", "R"])
    for name, pairs in groups.items():
        fit = est.fit_constant_earp(pairs, model)
        w.writerow([name, format(fit.a_hat, ".10g"), fit.s_hat, format(fit.earp_min, ".10g"), len(pairs)])
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _config_from_args(args)
    summary = ex.k_sweep(config)
    sys.stdout.write(ex.summary_csv(summary))
    if config.output_path:
        print(f"wrote {Path(config.output_path) / 'records.csv'} and summary.csv", file=sys.stderr)
    return EXIT_OK


def cmd_selftest(args) -> int:
    data = golden.load_golden(args.fixture) if args.fixture else None
    results = golden.run_checks(data)
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed", file=sys.stderr)
    return EXIT_OK if failed == 0 else 1


COMMANDS = {
    "estimate": cmd_estimate, "grid": cmd_grid, "fit": cmd_fit, "sweep": cmd_sweep, "selftest": cmd_selftest,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # argparse exits with status 2 on bad usage
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except (QuadratureError, InternalError, ArithmeticError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, RefPriorError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
