"""Command-line interface: evaluate, build, match, apply, replay, verify,
export. Exit codes: 0 success, 1 verification failure, 2 usage or domain
error. All numbers print with 12 fixed decimals."""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from . import builders
from .convex import get_generator
from .errors import DivnetError
from .evaluator import phi, phi_breakdown
from .identities import run_identity_suite, special_case_suite
from .netmodel import (load_network, network_from_json, network_to_json,
                       resolve_coordinates, save_network, to_dot)
from .numerics import configured_tol, fmt
from .rewrite import RuleId, RuleMatch, apply_match, list_matches, replay


def _parse_point(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(","))


def _parse_points(text: str) -> list[tuple[float, ...]]:
    return [_parse_point(part) for part in text.split(";") if part]


def _load_spec_for(net, generator: str | None):
    name = generator or net.generator_id
    return get_generator(name, net.dim() or 1)


def _emit_network(net, path: str | None) -> None:
    if path:
        save_network(net, path)
    else:
        json.dump(network_to_json(net), sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")


def _cmd_eval(args) -> int:
    net = load_network(args.network)
    spec = _load_spec_for(net, args.convex)
    if args.breakdown:
        bd = phi_breakdown(net, spec)
        print(f"total {fmt(bd.total)}")
        for nid in sorted(bd.node_terms):
            print(f"node {nid} {fmt(bd.node_terms[nid])} "
                  f"in {fmt(bd.in_weights[nid])} out {fmt(bd.out_weights[nid])}")
        for eid in sorted(bd.edge_terms):
            print(f"edge {eid} {fmt(bd.edge_terms[eid])}")
    else:
        print(fmt(phi(net, spec)))
    return 0


def _cmd_build(args) -> int:
    kind = args.kind
    if kind in ("bregman", "symbregman"):
        spec = get_generator(args.convex, len(_parse_point(args.p)))
        builder = (builders.bregman_net if kind == "bregman"
                   else builders.sym_bregman_net)
        net = builder(spec, _parse_point(args.p), _parse_point(args.q),
                      args.alpha)
    elif kind in ("jensen", "conjjensen"):
        points = _parse_points(args.points)
        weights = [float(w) for w in args.weights.split(",")]
        spec = get_generator(args.convex, len(points[0]))
        wp = builders.WeightedPoints(tuple(points), tuple(weights))
        net = (builders.jensen_net(spec, wp) if kind == "jensen"
               else builders.conj_jensen_net(spec, wp))
    elif kind == "fnet":
        spec = get_generator(args.convex, 1)
        net = builders.f_net(spec, _parse_point(args.p), _parse_point(args.q))
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(kind)
    _emit_network(net, args.output)
    return 0


def _cmd_matches(args) -> int:
    net = load_network(args.network)
    spec = _load_spec_for(net, args.convex)
    rules = [RuleId(args.rule)] if args.rule else list(RuleId)
    found = []
    for rule in rules:
        found.extend(m.to_json() for m in list_matches(net, rule, spec))
    json.dump(found, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0


def _cmd_apply(args) -> int:
    net = load_network(args.network)
    spec = _load_spec_for(net, args.convex)
    if args.match.startswith("@"):
        with open(args.match[1:], "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    else:
        raw = json.loads(args.match)
    match = RuleMatch.from_json(raw)
    new_net, step = apply_match(net, match, spec, check=not args.no_check,
                                tol=configured_tol(args.tol))
    print(f"phi_before {fmt(step.phi_before)}", file=sys.stderr)
    print(f"phi_after {fmt(step.phi_after)}", file=sys.stderr)
    print(f"residual {step.residual:.3e}", file=sys.stderr)
    _emit_network(new_net, args.output)
    return 0


def _cmd_replay(args) -> int:
    with open(args.derivation, "r", encoding="utf-8") as fh:
        script = json.load(fh)
    report = replay(script, tol=configured_tol(args.tol))
    for s in report.steps:
        status = "ok" if s.ok else f"FAIL {s.error}"
        print(f"step {s.index} {s.rule} {s.direction} "
              f"phi {fmt(s.phi_before)} -> {fmt(s.phi_after)} "
              f"residual {s.residual:.3e} {status}")
    if report.final_equal is not None:
        print(f"final network {'matches' if report.final_equal else 'DIFFERS'}")
    print(f"max residual {report.max_residual:.3e}")
    return 0 if report.passed else 1


def _cmd_verify(args) -> int:
    generators = (["quadratic", "negative_entropy", "negative_log"]
                  if args.convex in (None, "all") else [args.convex])
    failed = False
    if args.suite in ("identities", "all"):
        kwargs = {"tol": args.tol} if args.tol else {}
        reports = run_identity_suite(generators, trials=args.trials,
                                     seed=args.seed, **kwargs)
        for r in reports:
            line = (f"{r.identity} {r.generator} trials {r.trials} "
                    f"max_residual {r.max_residual:.3e} ")
            line += "SKIP" if r.skipped else ("pass" if r.passed else "FAIL")
            print(line)
            failed |= not r.passed
    if args.suite in ("special-cases", "all"):
        for r in special_case_suite(seed=args.seed,
                                    trials=max(1, args.trials // 5)):
            print(f"{r.identity} {r.generator} trials {r.trials} "
                  f"max_residual {r.max_residual:.3e} "
                  f"{'pass' if r.passed else 'FAIL'}")
            failed |= not r.passed
    return 1 if failed else 0


def _cmd_export(args) -> int:
    net = load_network(args.network)
    if args.format == "json":
        out = json.dumps(network_to_json(net), indent=2, sort_keys=True) + "\n"
    else:
        coords = None
        try:
            spec = _load_spec_for(net, args.convex)
            coords = resolve_coordinates(net, spec)
        except DivnetError:
            pass
        out = to_dot(net, coords)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="divnet",
        description="Build, evaluate, rewrite, and verify divergence networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="evaluate the network function")
    p_eval.add_argument("network")
    p_eval.add_argument("--convex", default=None)
    p_eval.add_argument("--breakdown", action="store_true")
    p_eval.set_defaults(func=_cmd_eval)

    p_build = sub.add_parser("build", help="emit a named network file")
    p_build.add_argument("kind", choices=["bregman", "symbregman", "jensen",
                                          "conjjensen", "fnet"])
    p_build.add_argument("--convex", default="quadratic")
    p_build.add_argument("--p", default=None, help="comma-separated coordinates")
    p_build.add_argument("--q", default=None)
    p_build.add_argument("--alpha", type=float, default=1.0)
    p_build.add_argument("--points", default=None,
                         help="semicolon-separated comma-vectors")
    p_build.add_argument("--weights", default=None, help="comma-separated weights")
    p_build.add_argument("-o", "--output", default=None)
    p_build.set_defaults(func=_cmd_build)

    p_matches = sub.add_parser("matches", help="enumerate rule matches")
    p_matches.add_argument("network")
    p_matches.add_argument("--rule", default=None,
                           choices=[r.value for r in RuleId])
    p_matches.add_argument("--convex", default=None)
    p_matches.set_defaults(func=_cmd_matches)

    p_apply = sub.add_parser("apply", help="apply one rule match")
    p_apply.add_argument("network")
    p_apply.add_argument("--match", required=True,
                         help="match JSON, or @file to read it")
    p_apply.add_argument("--convex", default=None)
    p_apply.add_argument("--no-check", action="store_true")
    p_apply.add_argument("--tol", type=float, default=None)
    p_apply.add_argument("-o", "--output", default=None)
    p_apply.set_defaults(func=_cmd_apply)

    p_replay = sub.add_parser("replay", help="replay a derivation script")
    p_replay.add_argument("derivation")
    p_replay.add_argument("--tol", type=float, default=None)
    p_replay.set_defaults(func=_cmd_replay)

    p_verify = sub.add_parser("verify", help="run the verification suites")
    p_verify.add_argument("--suite", default="identities",
                          choices=["identities", "special-cases", "all"])
    p_verify.add_argument("--convex", default="all")
    p_verify.add_argument("--trials", type=int, default=1000)
    p_verify.add_argument("--seed", type=int, default=42)
    p_verify.add_argument("--tol", type=float, default=None)
    p_verify.set_defaults(func=_cmd_verify)

    p_export = sub.add_parser("export", help="export a network file")
    p_export.add_argument("network")
    p_export.add_argument("--format", default="dot", choices=["dot", "json"])
    p_export.add_argument("--convex", default=None)
    p_export.add_argument("-o", "--output", default=None)
    p_export.set_defaults(func=_cmd_export)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    tol = getattr(args, "tol", None)
    if tol is not None and tol <= 0:
        parser.error("tolerance must be positive")
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return 2
    except (DivnetError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
