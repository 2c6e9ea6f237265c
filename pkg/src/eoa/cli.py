"""Command-line interface.

Exit codes: 0 ok, 2 usage or parse error, 3 state invariant violation,
4 resource guard. ``EOA_SEED`` supplies the default seed for ``decouple``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Sequence

from eoa import measure, rates, typicality
from eoa.errors import EOAError, UsageError
from eoa.qstate import (
    CHAIN_LINKS,
    EXAMPLES,
    MultiState,
    RoleMap,
    example_state,
    state_from_json,
    state_to_json,
)
from eoa.rates import RateReport, _sig


def _read_json(path: str) -> dict:
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from exc


def _split_list(text: str | None) -> list[str] | None:
    if text is None:
        return None
    return [t for t in (x.strip() for x in text.split(",")) if t]


def _roles(args, roles: RoleMap | None) -> RoleMap:
    base = roles or RoleMap(None, None)
    helpers = _split_list(args.helpers)
    return RoleMap(
        args.a if args.a is not None else base.a,
        args.b if args.b is not None else base.b,
        tuple(helpers) if helpers is not None else base.helpers,
        args.reference if args.reference is not None else base.reference,
    )


def load_state(path: str, args) -> tuple[MultiState, RoleMap]:
    state, roles = state_from_json(_read_json(path))
    roles = _roles(args, roles).validate(state.register)
    return state, roles


def _emit(obj, args) -> None:
    if isinstance(obj, RateReport):
        if args.csv:
            sys.stdout.write(obj.to_csv())
            return
        obj = obj.to_json()
    json.dump(obj, sys.stdout, indent=2)
    sys.stdout.write("\n")


def rates_report(state: MultiState, roles: RoleMap) -> RateReport:
    report = rates.assisted_lower_bound(state, roles)
    test = rates.beats_hashing(state, roles)
    report.quantities["beatsHashing"] = test.beats
    report.quantities["I(C>AB)"] = test.coherent_c_ab
    report.quantities["S(A|BC)"] = test.cond_a_bc
    report.quantities["S(A|B)"] = test.cond_a_b
    return report


def mincut_report(state: MultiState, roles: RoleMap) -> RateReport:
    report = rates.min_cut_coherent_info(state, roles)
    upper = rates.cut_upper_bound_report(state, roles)
    report.quantities["upperRelaxation"] = upper.quantities["upper"]
    report.notes.extend(n for n in upper.notes if n.startswith("relaxation"))
    return report


def cmd_rates(args) -> int:
    _emit(rates_report(*load_state(args.state, args)), args)
    return 0


def cmd_mincut(args) -> int:
    _emit(mincut_report(*load_state(args.state, args)), args)
    return 0


def cmd_measure(args) -> int:
    state, roles = load_state(args.state, args)
    if args.povm:
        povm = measure.POVM.from_json(_read_json(args.povm))
    else:
        block = list(roles.helpers)
        if not block:
            raise UsageError("no helper to measure; give --helpers or --povm")
        povm = measure.POVM.basis(block, state.register.dim_of(block))
    povm.validate()
    ens = measure.measure_helper(state, list(povm.system), povm)
    report = RateReport()
    for o in ens.outcomes:
        report.quantities[f"p[{o.index}]"] = o.prob
        report.quantities[f"I(A>B)[{o.index}]"] = rates.coherent_info(o.state, roles.a, roles.b)
    report.quantities["avgHashingRate"] = measure.avg_hashing_rate(ens, roles.a, roles.b)
    if args.cq:
        report.quantities["cqAssistance"] = measure.cq_assistance(state, roles)
    _emit(report, args)
    return 0


def _example_params(args) -> dict:
    params: dict = {}
    if args.p:
        try:
            params["p"] = [float(x) for x in _split_list(args.p)]
        except ValueError as exc:
            raise UsageError(f"--p: {exc}") from exc
    if args.states:
        params["states"] = _split_list(args.states)
    if args.m is not None:
        params["m"] = args.m
    return params


def example_report(name: str, state: MultiState, roles: RoleMap) -> RateReport:
    if roles.a is None:
        report = RateReport()
        for lab in state.register.labels:
            report.quantities[f"S({lab})"] = rates.von_neumann(state, lab)
        return report
    report = rates_report(state, roles)
    if roles.helpers:
        mc = rates.min_cut_coherent_info(state, roles)
        report.quantities["Icmin"] = mc.quantities["Icmin"]
        report.minimizing_cut = mc.minimizing_cut
    if name in CHAIN_LINKS:
        links = rates.links_from_state(state, CHAIN_LINKS[name])
        for link, value in zip(links, rates.chain_link_values(links)):
            report.quantities[f"I({''.join(link.x)}>{''.join(link.y)})"] = value
        report.quantities["R_hier"] = rates.chain_hierarchical_rate(links)
    if name == "cq":
        report.quantities["cqAssistance"] = measure.cq_assistance(state, roles)
    return report


def cmd_example(args) -> int:
    state, roles = example_state(args.name, **_example_params(args))
    emit_state = args.emit_state or not args.rates
    if args.rates and not emit_state:
        _emit(example_report(args.name, state, roles), args)
    elif args.rates:
        json.dump({"state": state_to_json(state, roles), "report": example_report(args.name, state, roles).to_json()},
                  sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        json.dump(state_to_json(state, roles), sys.stdout, indent=2)
        sys.stdout.write("\n")
    return 0


def _int_list(text: str) -> list[int]:
    try:
        values = [int(x) for x in _split_list(text)]
    except ValueError as exc:
        raise UsageError(f"--n: {exc}") from exc
    if not values or any(v < 1 for v in values):
        raise UsageError("--n needs positive integers")
    return values


def cmd_decouple(args) -> int:
    state, roles = load_state(args.state, args)
    if not roles.helpers or roles.b is None or roles.reference is None:
        raise UsageError("decouple needs a helper, b and a reference in the roles")
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    seed = args.seed if args.seed is not None else int(os.environ.get("EOA_SEED", "0"))
    stats = typicality.decoupling_experiment(
        state, list(roles.helpers), roles.b, roles.reference,
        _int_list(args.n), args.trials, args.delta, args.xi1, args.xi2, seed,
        project_others=_split_list(args.project) or (),
    )
    if args.csv:
        sys.stdout.write(typicality.stats_to_csv(stats))
    else:
        json.dump([st.to_json() for st in stats], sys.stdout, indent=2)
        sys.stdout.write("\n")
    return 0


def cmd_selftest(args) -> int:
    from eoa.selftest import run_selftest

    results = run_selftest()
    failed = 0
    for name, ok, detail in results:
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 1


def _role_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--a", help="recipient A label")
    p.add_argument("--b", help="recipient B label")
    p.add_argument("--helpers", help="comma-separated helper labels")
    p.add_argument("--reference", help="purifying reference label")
    p.add_argument("--csv", action="store_true", help="emit CSV instead of JSON")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eoa", description="Assisted entanglement distillation rate bounds")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("rates", help="I(A>B), L, the assisted lower bound and the beats-hashing test")
    p.add_argument("state")
    _role_flags(p)
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("mincut", help="minimum-cut coherent information over helper bipartitions")
    p.add_argument("state")
    _role_flags(p)
    p.set_defaults(func=cmd_mincut)

    p = sub.add_parser("measure", help="measure the helpers and report the outcome ensemble")
    p.add_argument("state")
    p.add_argument("--povm", help="POVM JSON file (default: computational basis of the helpers)")
    p.add_argument("--cq", action="store_true", help="also report the exact cq assisted rate")
    _role_flags(p)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("example", help="built-in example states")
    p.add_argument("name", choices=EXAMPLES)
    p.add_argument("--emit-state", action="store_true", help="print the state JSON")
    p.add_argument("--rates", action="store_true", help="print the rate report")
    p.add_argument("--p", help="cq weights, comma separated")
    p.add_argument("--states", help="cq AB states: bell, product or theta:<rad>")
    p.add_argument("--m", type=int, help="dimension for maximally-entangled")
    p.add_argument("--csv", action="store_true")
    p.set_defaults(func=cmd_example)

    p = sub.add_parser("decouple", help="Haar-random typical-subspace decoupling experiment")
    p.add_argument("state")
    p.add_argument("--n", default="2,4,6", help="comma-separated copy counts")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--delta", type=float, default=typicality.DEFAULT_DELTA)
    p.add_argument("--xi1", type=float, default=0.5)
    p.add_argument("--xi2", type=float, default=0.5)
    p.add_argument("--seed", type=int)
    p.add_argument("--project", help="also project these unmeasured subsystems onto typical subspaces")
    _role_flags(p)
    p.set_defaults(func=cmd_decouple)

    p = sub.add_parser("selftest", help="run the embedded golden checks")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EOAError as exc:
        print(f"eoa: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
