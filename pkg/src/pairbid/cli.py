"""Command-line entry point: ``pairbid {run,compare,oracle-check,fig2}``."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from .checks import SUITES, run_all
from .config import load_config
from .exceptions import ConfigError, OracleLimitError, PreconditionError
from .fixtures import FIG2_BASE_PRICE, fig2_instance
from .lower import run_lower_greedy
from .pricing import vcg_charges
from .report import CompareReport, RunReport, emit_compare_csv, emit_run_csv, pct_delta
from .sim import DYNAMIC_DURATION, RESALE_PROFILES, Scenario, run_simulation

logger = logging.getLogger("pairbid")

EXIT_OK = 0
EXIT_USAGE = 2  # argparse's own code
EXIT_CONFIG = 3
EXIT_CHECK = 4
EXIT_ORACLE_LIMIT = 5
EXIT_IO = 6

OUT_ENV = "PAIRBID_OUT"


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("true", "1", "yes", "on"):
        return True
    if value in ("false", "0", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or "results")


def _scenario(args) -> Scenario:
    sc = load_config(args.config) if args.config else Scenario()
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if args.timeslots is not None:
        changes["horizon"] = args.timeslots
    if getattr(args, "resale_profile", None) is not None and isinstance(args.resale_profile, str):
        changes["resale_profile"] = args.resale_profile
    if args.dynamic is not None:
        duration = DYNAMIC_DURATION if args.dynamic else None
        changes["request_gen"] = replace(sc.request_gen, duration=duration)
    try:
        return replace(sc, **changes)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def cmd_run(args) -> int:
    sc = _scenario(args)
    if args.baseline is not None:
        sc = replace(sc, algorithm=f"baseline{args.baseline}")
    metrics = run_simulation(sc)
    report = RunReport(sc, metrics, dynamic=sc.request_gen.duration is not None)
    paths = emit_run_csv(report, _out_dir(args))
    s = metrics.summary()
    print(f"{sc.algorithm} seed={sc.seed} profile={sc.resale_profile}: MNO revenue {s['mno_revenue']:.6g}, "
          f"cost {s['mno_cost']:.6g}, profit {s['mno_profit']:.6g}, accepted {s['accepted']}/{s['arrivals']}")
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


def _one(job):
    scenario, key = job
    return key, run_simulation(scenario)


def cmd_compare(args) -> int:
    base = _scenario(args)
    baselines = sorted(set(args.baseline or [1, 2]))
    algorithms = ["heuristic"] + [f"baseline{b}" for b in baselines]
    profiles = args.resale_profile or ([base.resale_profile] if args.config and base.resale_profile
                                       else list(RESALE_PROFILES))
    first = base.seed if args.seed is None else args.seed
    jobs = [(replace(base, seed=first + i, algorithm=alg, resale_profile=prof), (prof, alg, first + i))
            for prof in profiles for alg in algorithms for i in range(args.seeds)]
    report = CompareReport()
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_one, jobs))
    else:
        results = [_one(j) for j in jobs]
    for (prof, alg, seed), metrics in results:
        report.add(prof, alg, seed, metrics)
    path = emit_compare_csv(report, _out_dir(args))
    for prof in profiles:
        h = report.mean(prof, "heuristic", "mno_revenue")
        parts = [f"{prof}: heuristic revenue {h:.6g}"]
        for alg in algorithms[1:]:
            b = report.mean(prof, alg, "mno_revenue")
            parts.append(f"{alg} {b:.6g} ({pct_delta(h, b):.1f}% lower)")
        print(", ".join(parts))
    print(f"wrote {path}")
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    if args.suite:
        results = [SUITES[name](args.trials, args.seed) if args.trials else SUITES[name](seed=args.seed)
                   for name in args.suite]
    else:
        results = run_all(args.seed, args.scale)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


def cmd_fig2(args) -> int:
    requests, slices, prices = fig2_instance()

    def clear(reqs):
        return run_lower_greedy(reqs, slices, prices)

    alloc = clear(requests)
    charges = vcg_charges(requests, lambda rs: clear(rs).realized_values(), lambda k: FIG2_BASE_PRICE)
    won = alloc.accepted
    for r in sorted(requests, key=lambda r: -r.id):
        if r.id in won:
            a = won[r.id]
            c = charges[r.id]
            print(f"user{r.id} -> {a.mvno} (bid {r.bid:g}, counter-bid {a.price:g}, "
                  f"vcg {c.q_vcg:g}, charge {c.q_final:g})")
        else:
            print(f"user{r.id} rejected (bid {r.bid:g})")
    print(f"surplus {alloc.surplus:g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pairbid", description="Hierarchical pair-bid slicing auctions.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_flags(p, many_profiles: bool):
        p.add_argument("--config", help="YAML scenario file")
        p.add_argument("--seed", type=int, help="scenario seed (first seed for compare)")
        p.add_argument("--timeslots", type=_positive, help="horizon in slots")
        if many_profiles:
            p.add_argument("--resale-profile", choices=sorted(RESALE_PROFILES), action="append",
                           help="profile(s) to compare; default all")
        else:
            p.add_argument("--resale-profile", choices=sorted(RESALE_PROFILES))
        p.add_argument("--dynamic", type=_bool, metavar="true|false",
                       help="finite request durations instead of the static setting")
        p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./results)")

    p = sub.add_parser("run", help="simulate one scenario")
    scenario_flags(p, many_profiles=False)
    p.add_argument("--baseline", type=int, choices=(1, 2), help="run a baseline instead of the heuristic")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="heuristic vs baselines over several seeds")
    scenario_flags(p, many_profiles=True)
    p.add_argument("--baseline", type=int, choices=(1, 2), action="append", help="baseline(s); default both")
    p.add_argument("--seeds", type=_positive, default=20)
    p.add_argument("--jobs", type=_positive, default=1, help="worker processes")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("oracle-check", help="property suites against the exact oracle")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--suite", choices=sorted(SUITES), action="append")
    p.add_argument("--trials", type=_positive, help="trials per selected suite")
    p.add_argument("--scale", type=float, default=1.0, help="size multiplier when running every suite")
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("fig2", help="the two-MVNO, three-user worked example")
    p.set_defaults(func=cmd_fig2)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OracleLimitError as exc:
        print(f"oracle limit: {exc}", file=sys.stderr)
        return EXIT_ORACLE_LIMIT
    except PreconditionError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
