"""Command-line entry point: ``hallmhd <subcommand> ...``.

Exit codes: 0 success, 2 invalid input or parameters, 3 numerical
non-convergence.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict

import numpy as np

from .constraints import InfeasibleParameters, ParamSet, beta_case_grid, beta_check, feasibility
from .duhamel import hall_identity_check
from .emhd import EmhdRunSpec, decay_monitor, emhd_solve, scaling_test, smallness_check
from .generators import random_band_limited
from .grid import GridSpec, SpectralField
from .io import ConfigError, MetricsWriter, SnapshotError, load_config, write_decay_csv
from .io import write_probe_csv
from .littlewood_paley import besov_report
from .picard import NonConvergence, StepperInstability, direct_stepper, picard_solve
from .semigroup import smoothing_probe

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NONCONVERGED = 3

BETA_TOL = 1e-6
IDENTITY_TOL = 1e-10

log = logging.getLogger("hallmhd")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _emit(obj):
    print(json.dumps(obj, indent=2, sort_keys=True, default=_default))


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _params_from_args(args) -> ParamSet:
    if args.config:
        cfg = load_config(args.config)
        if cfg.model != "hall-mhd":
            raise ConfigError("check-params needs a hall-mhd config")
        return cfg.params
    names = ("alpha1", "alpha2", "beta", "gamma")
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise ConfigError("give --config or all of --alpha1 --alpha2 --beta --gamma "
                          f"(missing {', '.join('--' + m for m in missing)})")
    return ParamSet(args.alpha1, args.alpha2, args.beta, args.gamma, args.nu, args.mu, args.eta)


def cmd_check_params(args) -> int:
    try:
        p = _params_from_args(args)
    except InfeasibleParameters as exc:
        _emit(exc.report.to_dict())
        return EXIT_INVALID
    report = feasibility(p)
    _emit(report.to_dict())
    return EXIT_OK if report.feasible else EXIT_INVALID


def _field_for_analysis(args) -> SpectralField:
    if args.config:
        cfg = load_config(args.config).with_seed(args.seed)
        fields = cfg.initial_fields()
        return fields["b"] if args.field == "b" or "u" not in fields else fields["u"]
    rng = np.random.default_rng(0 if args.seed is None else args.seed)
    return random_band_limited(GridSpec(args.n), rng)


def cmd_besov(args) -> int:
    f = _field_for_analysis(args)
    r = besov_report(f, args.s, args.alpha, args.method)
    out = {k: v for k, v in asdict(r).items() if k != "t_grid"}
    _emit(out)
    return EXIT_OK


def cmd_probe(args) -> int:
    r = smoothing_probe(args.alpha, args.s0, args.s1, args.corpus, GridSpec(args.n),
                        0 if args.seed is None else args.seed)
    if args.csv:
        write_probe_csv([r], args.csv)
    _emit(asdict(r))
    return EXIT_OK


def cmd_identity_check(args) -> int:
    rng = np.random.default_rng(0 if args.seed is None else args.seed)
    grid = GridSpec(args.n)
    gaps = [hall_identity_check(random_band_limited(grid, rng, kmax=grid.n / 4))
            for _ in range(args.count)]
    worst = max(gaps)
    _emit({"count": args.count, "n": args.n, "max_relative_gap": worst,
           "passed": worst <= IDENTITY_TOL})
    return EXIT_OK if worst <= IDENTITY_TOL else EXIT_NONCONVERGED


def cmd_beta_check(args) -> int:
    rows = [asdict(beta_check(a, th, t)) for a, th, t in beta_case_grid()]
    worst = max(r["rel_error"] for r in rows)
    _emit({"cases": len(rows), "max_rel_error": worst, "passed": worst <= BETA_TOL,
           "rows": rows if args.verbose else None})
    return EXIT_OK if worst <= BETA_TOL else EXIT_NONCONVERGED


def _override(cfg, args):
    cfg = cfg.with_seed(args.seed)
    for attr, name in (("horizon", "T"), ("node_count", "M"), ("tolerance", "tol"),
                       ("max_iter", "max_iter")):
        v = getattr(args, name)
        if v is not None:
            setattr(cfg, attr, v)
    return cfg


def _metrics(args, meta):
    return MetricsWriter(args.metrics, meta) if args.metrics else None


def cmd_picard(args) -> int:
    cfg = _override(load_config(args.config), args)
    if cfg.model != "hall-mhd":
        raise ConfigError("picard needs a hall-mhd config (use the emhd subcommand)")
    fields = cfg.initial_fields()
    meta = {"command": "picard", "params": cfg.params.as_dict(), "n": cfg.grid.n,
            "T": cfg.horizon, "M": cfg.node_count, "seed": cfg.seed}
    writer = _metrics(args, meta)
    report = picard_solve(fields["u"], fields["b"], cfg.params, cfg.horizon, cfg.node_count,
                          cfg.tolerance, cfg.max_iter, on_iteration=writer)
    summary = report.summary()
    summary["contraction_ratios"] = report.contraction_ratios
    if args.oracle and report.converged:
        u, b = report.solution
        steps = cfg.node_count * args.oracle_substeps
        try:
            us, bs = direct_stepper(fields["u"], fields["b"], cfg.params, cfg.horizon, steps,
                                    cfg.node_count)
        except StepperInstability as exc:
            summary["oracle_error"] = str(exc)
        else:
            summary["oracle_sup_difference"] = max(
                max((u.field(m) - us.field(m)).sup_norm(), (b.field(m) - bs.field(m)).sup_norm())
                for m in range(cfg.node_count + 1))
    if writer is not None:
        writer.summary(summary)
    _emit(summary)
    return EXIT_OK if report.converged else EXIT_NONCONVERGED


def cmd_emhd(args) -> int:
    cfg = _override(load_config(args.config), args)
    if cfg.model != "emhd":
        raise ConfigError("emhd needs a config with \"model\": \"emhd\"")
    p = cfg.params
    setup = EmhdRunSpec(p["alpha2"], p["mu"], p["eta"], cfg.horizon, cfg.node_count,
                       tolerance=cfg.tolerance, max_iter=cfg.max_iter)
    b0 = cfg.initial_fields()["b"]
    small = smallness_check(b0, setup.alpha2, setup.epsilon, setup.mu, setup.eta)
    if args.check_smallness and not small.passed:
        _emit({"smallness": {"norm": small.norm, "epsilon": small.epsilon, "passed": False}})
        return EXIT_INVALID
    meta = {"command": "emhd", "params": p, "n": cfg.grid.n, "T": cfg.horizon,
            "M": cfg.node_count, "seed": cfg.seed}
    writer = _metrics(args, meta)
    b, report = emhd_solve(b0, setup, on_iteration=writer)
    summary = report.summary()
    summary["smallness"] = {"norm": small.norm, "epsilon": small.epsilon,
                            "passed": small.passed}
    if report.converged:
        decay = decay_monitor(b, setup.alpha2)
        summary["decay_sup"] = decay.sup
        summary["decay_argmax_t"] = decay.argmax_t
        if args.decay_csv:
            write_decay_csv(decay, args.decay_csv)
    if args.scaling_lambda:
        sr = scaling_test(b0, args.scaling_lambda, setup)
        summary["scaling"] = asdict(sr)
    if writer is not None:
        writer.summary(summary)
    _emit(summary)
    return EXIT_OK if report.converged else EXIT_NONCONVERGED


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="hallmhd", description="Mild-solution laboratory for generalized Hall-MHD")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("check-params", help="feasibility of a parameter set")
    c.add_argument("--config")
    for name in ("alpha1", "alpha2", "beta", "gamma"):
        c.add_argument(f"--{name}", type=float)
    for name in ("nu", "mu", "eta"):
        c.add_argument(f"--{name}", type=float, default=1.0)
    c.set_defaults(func=cmd_check_params)

    def field_source(p):
        p.add_argument("--config", help="take the field from a config's initial data")
        p.add_argument("--field", choices=("u", "b"), default="u")
        p.add_argument("--n", type=int, default=32)
        p.add_argument("--seed", type=int)

    c = sub.add_parser("besov", help="Besov norms of one field")
    c.add_argument("--s", type=float, required=True)
    c.add_argument("--alpha", type=float, default=1.0)
    c.add_argument("--method", choices=("lp", "heat", "both"), default="both")
    field_source(c)
    c.set_defaults(func=cmd_besov)

    c = sub.add_parser("probe", help="empirical smoothing constants")
    c.add_argument("--alpha", type=float, required=True)
    c.add_argument("--s0", type=float, required=True)
    c.add_argument("--s1", type=float, required=True)
    c.add_argument("--corpus", type=int, default=50)
    c.add_argument("--n", type=int, default=16)
    c.add_argument("--seed", type=int)
    c.add_argument("--csv", help="write the probe table to this CSV file")
    c.set_defaults(func=cmd_probe)

    c = sub.add_parser("identity-check", help="Hall vector identity on random fields")
    c.add_argument("--seed", type=int)
    c.add_argument("--count", type=int, default=50)
    c.add_argument("--n", type=int, default=32)
    c.set_defaults(func=cmd_identity_check)

    def run_controls(p):
        p.add_argument("--config", required=True)
        p.add_argument("--T", type=float)
        p.add_argument("--M", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--max-iter", dest="max_iter", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--metrics", help="NDJSON metrics output path")

    c = sub.add_parser("picard", help="fixed-point solve of the full system")
    run_controls(c)
    c.add_argument("--oracle", action="store_true",
                   help="compare with the integrating-factor stepper")
    c.add_argument("--oracle-substeps", type=int, default=8)
    c.set_defaults(func=cmd_picard)

    c = sub.add_parser("emhd", help="electron-MHD run with decay monitor")
    run_controls(c)
    c.add_argument("--check-smallness", action="store_true",
                   help="refuse to run when the data exceed the smallness threshold")
    c.add_argument("--scaling-lambda", type=int)
    c.add_argument("--decay-csv", help="write t, sup_norm, weighted, running_sup here")
    c.set_defaults(func=cmd_emhd)

    c = sub.add_parser("beta-check", help="Beta-function identity on the case grid")
    c.set_defaults(func=cmd_beta_check)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except InfeasibleParameters as exc:
        _emit(exc.report.to_dict())
        print(f"hallmhd: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ConfigError, SnapshotError, ValueError, OSError) as exc:
        print(f"hallmhd: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NonConvergence, StepperInstability) as exc:
        print(f"hallmhd: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED


if __name__ == "__main__":
    sys.exit(main())
