"""Command-line front end.

Subcommands: solve, prices, mechanism, verify-nash, poa, property-test,
reproduce.  Every numeric output is an exact decimal or fraction string.
Exit codes: 0 success, 1 assertion or property failure, 2 usage/parse error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

from .analysis import BidGrid, EnumerationBudgetExceeded, poa_search, verify_nash
from .bundles import ms_ones
from .instancefile import InstanceFormatError, RunConfig, load_instance
from .mechanisms import allocate_declared, run_mechanism
from .money import format_money
from .reproduce import CASES, run_case
from .serialize import jsonable
from .suites import run_suites
from .walrasian import (
    max_walrasian_prices,
    min_walrasian_prices,
    verify_walrasian_equilibrium,
)
from .welfare import BidProfile, welfare_max


def _emit(payload) -> None:
    print(json.dumps(jsonable(payload), indent=2, sort_keys=True))


def _grid_for(instance, config: RunConfig) -> BidGrid:
    if config.grid_delta is not None and config.grid_cap is not None:
        return BidGrid.additive(instance.m, instance.n,
                                config.grid_delta, config.grid_cap)
    if config.grid_delta is not None or config.grid_cap is not None:
        raise InstanceFormatError("--grid-delta and --grid-cap go together")
    return BidGrid.default_for(instance)


def _cmd_solve(args) -> int:
    instance = load_instance(args.instance)
    value, bundles = welfare_max(instance.true_valuations, ms_ones(instance.m))
    _emit({"welfare": value,
           "allocation": [[j for j in range(instance.m) if b >> j & 1]
                          for b in bundles]})
    return 0


def _cmd_prices(args) -> int:
    instance = load_instance(args.instance)
    profile = instance.true_valuations
    low = min_walrasian_prices(profile)
    high = max_walrasian_prices(profile)
    alloc = allocate_declared(profile)
    _emit({
        "min_prices": low,
        "max_prices": high,
        "allocation": alloc,
        "min_verified": verify_walrasian_equilibrium(profile, alloc, low),
        "max_verified": verify_walrasian_equilibrium(profile, alloc, high),
    })
    return 0


def _cmd_mechanism(args) -> int:
    instance = load_instance(args.instance)
    config = RunConfig.from_args(args)
    outcome = run_mechanism(config.rule, instance.true_valuations)
    _emit(outcome)
    return 0


def _load_bids(args, instance) -> BidProfile:
    if getattr(args, "bids", None):
        bid_instance = load_instance(args.bids)
        if bid_instance.m != instance.m or bid_instance.n != instance.n:
            raise InstanceFormatError("bid profile shape does not match instance")
        return bid_instance.true_valuations
    return instance.true_valuations


def _cmd_verify_nash(args) -> int:
    instance = load_instance(args.instance)
    config = RunConfig.from_args(args)
    profile = _load_bids(args, instance)
    report = verify_nash(instance, config.rule, profile,
                         _grid_for(instance, config), config.eps_dev)
    _emit(report)
    return 0


def _cmd_poa(args) -> int:
    instance = load_instance(args.instance)
    config = RunConfig.from_args(args)
    report = poa_search(instance, config.rule, _grid_for(instance, config),
                        config.gamma, eps_dev=config.eps_dev, jobs=config.jobs)
    if config.fmt == "csv":
        out = io.StringIO()
        writer = csv.writer(out)
        writer.writerow(["instance", "rule", "gamma", "ratio",
                         "witness", "equilibria", "profiles"])
        writer.writerow([
            instance.name or args.instance,
            report.rule.value,
            format_money(report.gamma),
            format_money(report.worst_ratio)
            if isinstance(report.worst_ratio, Fraction) else "inf",
            json.dumps(jsonable(report.witness)) if report.witness else "",
            report.equilibrium_count,
            report.profiles_checked,
        ])
        sys.stdout.write(out.getvalue())
    else:
        _emit(report)
    return 0


def _cmd_property_test(args) -> int:
    config = RunConfig.from_args(args)
    reports = run_suites(args.suite, args.seeds, config.seed)
    rows = [{"suite": r.name, "runs": r.runs, "failures": r.failures,
             "first_counterexample": r.first_failure, "detail": r.detail}
            for r in reports]
    if config.fmt == "csv":
        out = io.StringIO()
        writer = csv.writer(out)
        writer.writerow(["suite", "runs", "failures", "first_counterexample"])
        for row in rows:
            writer.writerow([row["suite"], row["runs"], row["failures"],
                             json.dumps(row["first_counterexample"]) or ""])
        sys.stdout.write(out.getvalue())
    else:
        _emit({"suites": rows, "ok": all(r.ok for r in reports)})
    return 0 if all(r.ok for r in reports) else 1


def _cmd_reproduce(args) -> int:
    ok, report = run_case(args.case)
    _emit(report)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="walras",
        description="Exact desk laboratory for market-clearing auction "
                    "mechanisms over indivisible items.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, rule=False, grid=False, gamma=False, bids=False):
        if rule:
            p.add_argument("--rule", choices=["vcg", "english", "dutch", "paybid"],
                           default="english")
        if grid:
            p.add_argument("--grid-delta", help="bid grid step (exact rational)")
            p.add_argument("--grid-cap", help="bid grid per-item cap")
            p.add_argument("--eps-dev", help="deviation tolerance, default 0")
        if gamma:
            p.add_argument("--gamma", help="exposure-factor budget, default 0")
        if bids:
            p.add_argument("--bids", help="bid profile file; default: truthful")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--format", choices=["json", "csv"], default="json")

    p = sub.add_parser("solve", help="exact declared-welfare maximum")
    p.add_argument("instance")
    common(p)
    p.set_defaults(handler=_cmd_solve)

    p = sub.add_parser("prices", help="price lattice endpoints + verification")
    p.add_argument("instance")
    common(p)
    p.set_defaults(handler=_cmd_prices)

    p = sub.add_parser("mechanism", help="run one payment rule")
    p.add_argument("instance")
    common(p, rule=True)
    p.set_defaults(handler=_cmd_mechanism)

    p = sub.add_parser("verify-nash", help="grid deviation check of a profile")
    p.add_argument("instance")
    common(p, rule=True, grid=True, bids=True)
    p.set_defaults(handler=_cmd_verify_nash)

    p = sub.add_parser("poa", help="exhaustive grid equilibrium/ratio search")
    p.add_argument("instance")
    common(p, rule=True, grid=True, gamma=True)
    p.set_defaults(handler=_cmd_poa)

    p = sub.add_parser("property-test", help="seeded exact property suites")
    p.add_argument("--suite", choices=["lemmas", "ordering", "smoothness",
                                       "lattice", "all"], default="all")
    p.add_argument("--seeds", type=int, default=100,
                   help="number of seeded runs per suite")
    common(p)
    p.set_defaults(handler=_cmd_property_test)

    p = sub.add_parser("reproduce", help="scripted desk scenarios")
    p.add_argument("case", choices=list(CASES))
    common(p)
    p.set_defaults(handler=_cmd_reproduce)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (InstanceFormatError, FileNotFoundError, ValueError,
            EnumerationBudgetExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
