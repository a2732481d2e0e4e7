"""Command-line surface.

Subcommands: stream (decide a p-value file), batch (offline procedures),
simulate (Monte-Carlo campaigns), tune (hyperparameter surfaces), compare
(diff two rules on one stream). Exit codes: 0 success, 2 usage, 3 validation,
4 invariant violation. Errors are single lines prefixed ``fdrlab:error:<class>:``;
data goes only to the output target, progress only to stderr.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys
from dataclasses import replace

from . import fileio
from .async_online import fdp_hat_addis_async_series, run_schedule
from .gamma import parse_gamma
from .offline import bh, d_stbh, storey_bh
from .online import ESTIMATOR_SERIES, make_algorithm
from .simulate import GaussianModelConfig, InvariantViolation, estimate_metrics
from .tuning import MixtureCdf, empirical_power_surface, tune_surface
from .types import AlgorithmConfig, PValueRecord

DEFAULT_SEED = 42

_CLI_KINDS = {
    "addis": "addis",
    "addis-discard": "addis_discard_form",
    "dlord": "dlord",
    "saffron": "saffron",
    "lordpp": "lordpp",
    "lond": "lond",
    "alpha-investing": "alpha_investing",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _algorithm_flags(parser, suffix=""):
    parser.add_argument(f"--alg{suffix}", choices=sorted(_CLI_KINDS), default="addis")
    parser.add_argument("--alpha", type=float, default=0.05, help="target FDR level")
    parser.add_argument("--lambda", dest="lam", type=float, default=0.25, help="candidate threshold")
    parser.add_argument("--tau", type=float, default=0.5, help="discarding threshold")
    parser.add_argument("--w0", type=float, default=None, help="initial wealth (default alpha/2)")
    parser.add_argument("--gamma", default="power:1.6", help="spending schedule: power:<s> or lord")


def _config_from_flags(args) -> AlgorithmConfig:
    try:
        return AlgorithmConfig(
            alpha=args.alpha,
            w0=args.alpha / 2 if args.w0 is None else args.w0,
            lam=args.lam,
            tau=args.tau,
            gamma=parse_gamma(args.gamma),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


@contextlib.contextmanager
def _open_output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _read_stream_file(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return fileio.read_pvalue_csv(fh)


def cmd_stream(args) -> int:
    config = _config_from_flags(args)
    kind = _CLI_KINDS[args.alg]
    if args.use_async and kind != "addis":
        raise UsageError("--async is only defined for --alg addis")
    rows, has_finish = _read_stream_file(args.input)
    if has_finish and not args.use_async:
        raise UsageError("input carries a finish_time column; pass --async to use it")
    if args.use_async:
        if not has_finish:
            raise ValueError("--async requires a finish_time column in the input")
        records = [PValueRecord(index=i, p=p, finish_time=e) for i, p, e in rows]
        decisions, machine = run_schedule(config, records)
        if args.assert_invariant and rows:
            series = fdp_hat_addis_async_series(
                machine.levels,
                [machine.pvalues[i] for i, _, _ in rows],
                [machine.finish_times[i] for i, _, _ in rows],
                config.lam,
                config.tau,
            )
            if series.size and series.max() > config.alpha:
                raise InvariantViolation(f"async estimator reached {series.max():.6g} > {config.alpha}")
    else:
        if args.assert_invariant and kind not in ESTIMATOR_SERIES:
            raise UsageError(f"--assert-invariant is not defined for --alg {args.alg}")
        alg = make_algorithm(kind, config)
        decisions = [alg.observe(p) for _, p, _ in rows]
        if args.assert_invariant and decisions:
            series = ESTIMATOR_SERIES[kind](decisions)
            if series.size and series.max() > config.alpha:
                raise InvariantViolation(f"estimator reached {series.max():.6g} > {config.alpha}")
    with _open_output(args.output) as fh:
        fileio.write_decisions_csv(fh, decisions)
    return 0


def cmd_batch(args) -> int:
    if not 0.0 < args.alpha < 1.0:
        raise UsageError(f"alpha must lie in (0, 1), got {args.alpha}")
    if args.method == "d-stbh" and not (0.0 <= args.lam < args.tau <= 1.0):
        raise UsageError(f"need 0 <= lambda < tau <= 1, got lambda={args.lam}, tau={args.tau}")
    if args.method == "storey-bh" and not (0.0 <= args.lam < 1.0):
        raise UsageError(f"lambda must lie in [0, 1), got {args.lam}")
    rows, has_finish = _read_stream_file(args.input)
    if has_finish:
        raise UsageError("batch mode takes a plain p-value file without finish times")
    pvalues = [p for _, p, _ in rows]
    if args.method == "bh":
        result = bh(pvalues, args.alpha)
    elif args.method == "storey-bh":
        result = storey_bh(pvalues, args.alpha, args.lam)
    else:
        result = d_stbh(pvalues, args.alpha, args.lam, args.tau)
    rejected = sorted(result.rejected)
    with _open_output(args.output) as fh:
        if args.json:
            json.dump(
                {"method": args.method, "s_hat": result.s_hat, "pi0_hat": result.pi0_hat, "rejected": rejected},
                fh,
            )
            fh.write("\n")
        else:
            fh.write(f"s_hat = {result.s_hat!r}\n")
            if result.pi0_hat is not None:
                fh.write(f"pi0_hat = {result.pi0_hat!r}\n")
            fh.write(f"rejected ({len(rejected)}): {' '.join(map(str, rejected))}\n")
    return 0


def cmd_simulate(args) -> int:
    try:
        plan = fileio.load_experiment_plan(args.config)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.trials is not None:
        if args.trials < 1:
            raise UsageError(f"--trials must be >= 1, got {args.trials}")
        plan = replace(plan, trials=args.trials)
    if args.seed is not None:
        plan = replace(plan, seed=args.seed)
    try:
        rows = []
        for model in plan.models():
            print(
                f"simulate: pi_alt={model.pi_alt} mu_null={model.mu_null} mu_alt={model.mu_alt} "
                f"trials={plan.trials}",
                file=sys.stderr,
            )
            rows.extend(estimate_metrics(model, list(plan.specs), plan.trials).rows)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    with _open_output(args.output) as fh:
        fileio.write_results_csv(fh, rows)
    return 0


def cmd_tune(args) -> int:
    if args.grid < 2:
        raise UsageError(f"--grid must be >= 2, got {args.grid}")
    if args.trials < 1:
        raise UsageError(f"--trials must be >= 1, got {args.trials}")
    try:
        cdf = MixtureCdf(pi_alt=args.pi_alt, mu_null=args.mu_null, mu_alt=args.mu_alt)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    surface = tune_surface(cdf, args.grid)
    power = None
    if args.empirical:
        model = GaussianModelConfig(m=args.m, pi_alt=args.pi_alt, mu_null=args.mu_null, mu_alt=args.mu_alt, seed=args.seed)
        power = empirical_power_surface(model, surface.thetas, surface.taus, alpha=args.alpha, n_trials=args.trials)
    with _open_output(args.output) as fh:
        fileio.write_heatmap_csv(fh, surface, power)
    print(
        f"tune: argmin theta*={surface.theta_star!r} tau*={surface.tau_star!r} "
        f"=> lambda*={surface.lambda_star!r} tau*={surface.tau_star!r}",
        file=sys.stderr,
    )
    return 0


def cmd_compare(args) -> int:
    config = _config_from_flags(args)
    kind_a, kind_b = _CLI_KINDS[args.alg], _CLI_KINDS[args.alg2]
    rows, has_finish = _read_stream_file(args.input)
    if has_finish:
        raise UsageError("compare runs synchronous rules; drop the finish_time column")
    alg_a, alg_b = make_algorithm(kind_a, config), make_algorithm(kind_b, config)
    logs_a = [alg_a.observe(p) for _, p, _ in rows]
    logs_b = [alg_b.observe(p) for _, p, _ in rows]
    first_diff = None
    for a, b in zip(logs_a, logs_b):
        if (a.rejected, a.candidate, a.selected, a.alpha_t) != (b.rejected, b.candidate, b.selected, b.alpha_t):
            first_diff = a.index
            break
    with _open_output(args.output) as fh:
        fh.write(f"algorithms: {args.alg} vs {args.alg2}\n")
        fh.write(f"steps: {len(rows)}\n")
        fh.write(f"rejections: {sum(r.rejected for r in logs_a)} vs {sum(r.rejected for r in logs_b)}\n")
        fh.write(f"identical: {'yes' if first_diff is None else f'no (first divergence at index {first_diff})'}\n")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="fdrlab", description=__doc__.splitlines()[0] if __doc__ else None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stream", help="decide an online p-value stream from a CSV")
    _algorithm_flags(p)
    p.add_argument("--input", required=True, help="CSV with header index,p_value[,finish_time]")
    p.add_argument("--output", default=None, help="decisions CSV (default stdout)")
    p.add_argument("--async", dest="use_async", action="store_true", help="asynchronous mode (finish_time column)")
    p.add_argument("--assert-invariant", action="store_true", help="fail (exit 4) if the estimator exceeds alpha")
    p.set_defaults(func=cmd_stream)

    p = sub.add_parser("batch", help="run an offline procedure over a p-value CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--output", default=None)
    p.add_argument("--method", choices=("bh", "storey-bh", "d-stbh"), default="d-stbh")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--lambda", dest="lam", type=float, default=0.25)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("simulate", help="run a seeded Monte-Carlo campaign from a config JSON")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--output", default=None, help="long-format results CSV (default stdout)")
    p.add_argument("--trials", type=int, default=None, help="override the config trial count")
    p.add_argument("--seed", type=int, default=None, help="override the config master seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("tune", help="emit the tuning objective surface (and optional power surface)")
    p.add_argument("--mu-null", dest="mu_null", type=float, default=-1.0)
    p.add_argument("--mu-alt", dest="mu_alt", type=float, default=3.0)
    p.add_argument("--pi-alt", dest="pi_alt", type=float, default=0.2)
    p.add_argument("--grid", type=int, default=50)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--empirical", action="store_true", help="add the empirical power column")
    p.add_argument("--trials", type=int, default=100, help="trials per cell for --empirical")
    p.add_argument("--m", type=int, default=1000, help="stream length for --empirical")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("compare", help="run two rules over one stream and diff the logs")
    _algorithm_flags(p)
    p.add_argument("--alg2", choices=sorted(_CLI_KINDS), default="addis-discard")
    p.add_argument("--input", required=True)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"fdrlab:error:usage: {exc}", file=sys.stderr)
        return 2
    except InvariantViolation as exc:
        print(f"fdrlab:error:invariant: {exc}", file=sys.stderr)
        return 4
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"fdrlab:error:validation: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
