"""Command-line entry point: ``robust-hellinger <subcommand> ...``.

Exit codes: 0 success, 1 usage, 2 input error, 3 a reproduction preset failed.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from . import adversarial as adv
from .dist import entropy_seed, sample
from .divergences import divergence_report
from .geodesic import critical_radius, geodesic_point, hellinger_midpoint
from .harness import (
    THREADS_ENV,
    classify_truth,
    default_threads,
    estimate_error,
    first_m_below,
    sample_complexity_sweep,
    sweep_to_csv,
)
from .reproduce import PRESETS, SCHEMA_VERSION, reproduce_claims
from .robust_tests import Family, TestSpec, decide
from .schemas import (
    InputError,
    distribution_to_dict,
    dumps,
    load_config,
    load_distribution,
    load_samples,
    samples_to_dict,
)

log = logging.getLogger("robust_hellinger")

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_CRITERION = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with 2, which we reserve for input errors
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _seed_arg(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _m_list(text: str) -> list[int]:
    try:
        return [_positive_int(part) for part in text.split(",") if part.strip()]
    except (ValueError, argparse.ArgumentTypeError):
        raise argparse.ArgumentTypeError(f"expected comma-separated positive integers, got {text!r}") from None


def _report(kind: str, seed: int | None, **body) -> dict:
    return {"schema_version": SCHEMA_VERSION, "report": kind, "seed": seed, **body}


# -- subcommands --------------------------------------------------------------


def cmd_distances(args) -> tuple[str, int]:
    a, b = load_distribution(args.a), load_distribution(args.b)
    return dumps(_report("distances", None, a=a.label, b=b.label, **divergence_report(a, b).to_dict())), EXIT_OK


def cmd_geodesic(args) -> tuple[str, int]:
    a, b = load_distribution(args.a), load_distribution(args.b)
    if args.midpoint:
        body = {
            "midpoint": distribution_to_dict(hellinger_midpoint(a, b)),
            "critical_radius": critical_radius(a, b),
        }
    else:
        point = geodesic_point(a, b, args.phi)
        body = {"phi": point.phi, "theta": point.theta, "distribution": distribution_to_dict(point.distribution)}
    return dumps(_report("geodesic", None, **body)), EXIT_OK


def cmd_sample(args) -> tuple[str, int]:
    d = load_distribution(args.dist)
    return dumps(samples_to_dict(sample(d, args.m, args.seed))), EXIT_OK


def cmd_decide(args) -> tuple[str, int]:
    spec = TestSpec(Family(args.test), load_distribution(args.a), load_distribution(args.b))
    batch = load_samples(args.samples)
    decision = decide(spec, batch)
    return dumps(_report("decision", batch.seed, test=spec.family.value, m=len(batch), **decision.to_dict())), EXIT_OK


def cmd_lower_bound(args) -> tuple[str, int]:
    c = adv.minimal_collision_constant()
    if args.bins is None:
        n_half = adv.schedule_n_half(args.m, c)
    elif args.bins % 2:
        raise InputError(f"--bins must be even (2N), got {args.bins}")
    else:
        n_half = args.bins // 2
    params = adv.FamilyParams(args.b, args.a1, args.a2, n_half)
    profile = adv.family_distance_profile(params, adv.Side.PERTURB_P1)
    p_e = adv.collision_probability(params, args.m)
    tv_bound = adv.conditioning_tv_bound(0.0, 1 - p_e, 1 - p_e)
    body = {
        "params": params.to_dict(),
        "m": args.m,
        "schedule_constant": c,
        "distance_profile": profile.to_dict(),
        "ratio": profile.ratio,
        "chi2_ratio": profile.chi2_ratio,
        "collision_prob": p_e,
        "collision_prob_exp_approx": math.exp(-((args.m - 1) ** 2) / n_half),
        "tv_bound": tv_bound,
        "lecam_floor": adv.lecam_floor(tv_bound),
    }
    if params.is_integral:
        d1 = adv.member_collision_probability(params, args.m, adv.Side.PERTURB_P1)
        d2 = adv.member_collision_probability(params, args.m, adv.Side.PERTURB_P2)
        member_tv = adv.conditioning_tv_bound(0.0, 1 - d1, 1 - d2)
        est = adv.indistinguishability_experiment(
            params, args.m, Family(args.test), args.trials, args.seed, args.threads
        )
        body.update(
            member_collision_prob={"perturb-p1": d1, "perturb-p2": d2},
            member_tv_bound=member_tv,
            member_lecam_floor=adv.lecam_floor(member_tv),
            test=args.test,
            empirical_error=est.mixed_error,
            empirical_standard_error=est.mixed_standard_error,
            estimate=est.to_dict(),
        )
    else:
        log.warning("|R1| or |R2| is non-integral at N=%d; skipping the Monte Carlo game", n_half)
        body.update(empirical_error=None)
    return dumps(_report("lower-bound", args.seed, **body)), EXIT_OK


def cmd_simulate(args) -> tuple[str, int]:
    cfg = load_config(args.config, args.seed, args.threads)
    truths = [classify_truth(t, cfg.p1, cfg.p2, cfg.gamma).value for t in cfg.targets]
    est = estimate_error(cfg)
    body = {
        "test": cfg.family.value,
        "m": cfg.m,
        "delta": cfg.delta,
        "gamma": cfg.gamma,
        "target_truths": truths,
        "estimate": est.to_dict(),
        "below_delta": est.max_error < cfg.delta,
    }
    return dumps(_report("simulate", cfg.seed, **body)), EXIT_OK


def cmd_sweep(args) -> tuple[str, int]:
    cfg = load_config(args.config, args.seed, args.threads)
    rows = sample_complexity_sweep(cfg, args.m)
    if args.format == "csv":
        return sweep_to_csv(rows), EXIT_OK
    body = {
        "test": cfg.family.value,
        "delta": cfg.delta,
        "first_m_below_delta": first_m_below(rows, cfg.delta),
        "rows": [{"m": r.m, **r.estimate.to_dict()} for r in rows],
    }
    return dumps(_report("sweep", cfg.seed, **body)), EXIT_OK


def cmd_reproduce(args) -> tuple[str, int]:
    report = reproduce_claims(args.preset, args.seed)
    for crit in report["criteria"]:
        log.info("%-22s %s", crit["preset"], "PASS" if crit["passed"] else "FAIL")
    return dumps(report), EXIT_OK if report["passed"] else EXIT_CRITERION


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--output", "-o", type=Path, help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json", help="csv applies to sweep only")
    common.add_argument("-v", "--verbose", action="store_true")

    seeded = _Parser(add_help=False)
    seeded.add_argument("--seed", type=_seed_arg, help="64-bit seed; a fresh one is drawn and reported if absent")
    seeded.add_argument(
        "--threads", type=_positive_int, default=None, help=f"worker threads (default ${THREADS_ENV} or 1)"
    )

    parser = _Parser(prog="robust-hellinger", description="Robust Hellinger hypothesis testing toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("distances", parents=[common], help="H^2, Bhattacharyya, TV and symmetric chi^2")
    p.add_argument("--a", required=True, type=Path)
    p.add_argument("--b", required=True, type=Path)
    p.set_defaults(func=cmd_distances)

    p = sub.add_parser("geodesic", parents=[common], help="point on the Hellinger geodesic")
    p.add_argument("--a", required=True, type=Path)
    p.add_argument("--b", required=True, type=Path)
    where = p.add_mutually_exclusive_group(required=True)
    where.add_argument("--phi", type=float, help="angle in [0, theta]")
    where.add_argument("--midpoint", action="store_true", help="emit the midpoint u and the critical radius")
    p.set_defaults(func=cmd_geodesic)

    p = sub.add_parser("sample", parents=[common, seeded], help="draw i.i.d. atom indices into a samples file")
    p.add_argument("--dist", required=True, type=Path)
    p.add_argument("--m", required=True, type=_positive_int)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("decide", parents=[common], help="run one test on a samples file")
    p.add_argument("--test", required=True, choices=[f.value for f in Family])
    p.add_argument("--a", required=True, type=Path, help="p1 (the H0 model)")
    p.add_argument("--b", required=True, type=Path, help="p2 (the H1 model)")
    p.add_argument("--samples", required=True, type=Path)
    p.set_defaults(func=cmd_decide)

    p = sub.add_parser("lower-bound", parents=[common, seeded], help="two-mixture lower-bound construction")
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--a1", type=float, default=4.0)
    p.add_argument("--a2", type=float, default=1.0)
    p.add_argument("--bins", type=_positive_int, help="total bins 2N (default: collision schedule)")
    p.add_argument("--m", type=_positive_int, default=50)
    p.add_argument("--trials", type=_positive_int, default=10_000)
    p.add_argument("--test", choices=[f.value for f in Family if f is not Family.DISJOINT], default="baraud")
    p.set_defaults(func=cmd_lower_bound)

    p = sub.add_parser("simulate", parents=[common, seeded], help="estimate error rates from a config")
    p.add_argument("--config", required=True, type=Path)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", parents=[common, seeded], help="error rate across sample sizes")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--m", required=True, type=_m_list, help="comma-separated ascending sample sizes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("reproduce", parents=[common, seeded], help="run a named reproduction preset")
    p.add_argument("--preset", required=True, choices=[*PRESETS, "all"])
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if "seed" in args and args.seed is None and args.command not in ("simulate", "sweep"):
        args.seed = entropy_seed()
        log.info("no --seed given; using entropy seed %d", args.seed)
    if "threads" in args and args.threads is None and args.command == "lower-bound":
        args.threads = default_threads()
    if args.format == "csv" and args.command != "sweep":
        print(f"robust-hellinger {args.command}: --format csv is only available for sweep", file=sys.stderr)
        return EXIT_USAGE

    try:
        text, code = args.func(args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InputError as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    if args.output:
        args.output.write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
