"""Replayable demonstration derivations: multi-step rule sequences that hold
the network function constant end to end.

Three families are provided: the centroid-insertion roundtrip (the ON- and
OFF-centroid insertion targets are mutually reachable), the line-connection
deformation (two lines through a centroid-positioned node reduce to loop and
pairing terms), and the parallelogram deformation (a four-line cycle and the
two diagonals carry equal value when opposite corners sum equally).
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .convex import ConvexFunctionSpec
from .netmodel import Edge, Network, Node, NodeKind, build_network, desugar_lines
from .rewrite import (DESUGAR_STEP, FORWARD, REVERSE, RuleId, RuleMatch,
                      apply_match, list_matches, record_script)


def _drive(initial: Network, spec: ConvexFunctionSpec,
           pickers: Sequence[Callable[[Network], dict]]) -> dict:
    """Apply picker-selected steps in order and emit the replayable script."""
    net = initial
    raw_steps: list[dict] = []
    for picker in pickers:
        raw = picker(net)
        raw_steps.append(raw)
        if raw["rule"] == DESUGAR_STEP:
            net = desugar_lines(net)
        else:
            net, _ = apply_match(net, RuleMatch.from_json(raw), spec)
    return record_script(initial, spec, raw_steps)


def _pick(rule: RuleId, direction: str, spec: ConvexFunctionSpec,
          node: str | None = None,
          edges: tuple[str, ...] | None = None,
          params: dict | None = None) -> Callable[[Network], dict]:
    def picker(net: Network) -> dict:
        for m in list_matches(net, rule, spec):
            if m.direction != direction:
                continue
            if node is not None and m.nodes[:1] != (node,):
                continue
            if edges is not None and set(edges) - set(m.edges):
                continue
            raw = m.to_json()
            if params:
                raw["params"].update(params)
            return raw
        raise LookupError(f"no {direction} {rule.value} match at {node!r}")
    return picker


def centroid_insertion_roundtrip(spec: ConvexFunctionSpec,
                                 points: Sequence[Sequence[float]],
                                 weights: Sequence[float],
                                 q: Sequence[float]) -> dict:
    """From the ON-centroid insertion target back to the plain fan and on to
    the OFF-centroid target, with an ON-OFF excursion at the centroid.

    Steps: state-flip the centroid (compensating loop appears), flip it back,
    remove the centroid entirely (fan restored), insert the OFF-variant
    centroid. The endpoint is the OFF-centroid form of the same fan.
    """
    sigma = float(sum(weights))
    nodes = [Node(f"p{i + 1}", coord=tuple(p)) for i, p in enumerate(points)]
    nodes += [Node("c", kind=NodeKind.CENTROID), Node("q", coord=tuple(q))]
    edges = [Edge(f"e{i + 1}", f"p{i + 1}", "c", w) for i, w in enumerate(weights)]
    edges.append(Edge("b", "c", "q", sigma))
    initial = build_network(nodes, edges, spec.id)
    return _drive(initial, spec, [
        _pick(RuleId.ON_OFF_1, FORWARD, spec, node="c"),
        _pick(RuleId.ON_OFF_1, REVERSE, spec, node="c"),
        _pick(RuleId.INSERTION_1, REVERSE, spec, node="c"),
        _pick(RuleId.INSERTION_1, FORWARD, spec, node="q",
              params={"variant": "off"}),
    ])


def _two_line_star(spec: ConvexFunctionSpec, p: Sequence[float], q: Sequence[float],
                   alpha: float, beta: float) -> Network:
    pv = np.asarray(p, dtype=float)
    qv = np.asarray(q, dtype=float)
    center = (alpha * pv + beta * qv) / (alpha + beta)
    nodes = [Node("p", coord=tuple(pv)), Node("q", coord=tuple(qv)),
             Node("v", coord=tuple(center))]
    edges = [Edge("lp", "p", "v", alpha, directed=False),
             Edge("lq", "q", "v", beta, directed=False)]
    return build_network(nodes, edges, spec.id)


def line_connection_deformation(spec: ConvexFunctionSpec, p: Sequence[float],
                                q: Sequence[float], alpha: float,
                                beta: float) -> dict:
    """Two ON lines through an ON node at the weighted primal centroid,
    deformed by centroid insertion on the in-fan, conjugate-centroid insertion
    on the out-fan, and ON-OFF flips at the outer nodes."""
    initial = _two_line_star(spec, p, q, alpha, beta)
    return _drive(initial, spec, [
        lambda net: {"rule": DESUGAR_STEP},
        _pick(RuleId.INSERTION_1, FORWARD, spec, node="v",
              edges=("lp:f", "lq:f")),
        _pick(RuleId.INSERTION_2, FORWARD, spec, node="v",
              edges=("lp:b", "lq:b")),
        _pick(RuleId.ON_OFF_1, FORWARD, spec, node="p"),
        _pick(RuleId.ON_OFF_1, FORWARD, spec, node="q"),
    ])


def connection_contraction(spec: ConvexFunctionSpec, p: Sequence[float],
                           q: Sequence[float], alpha: float, beta: float) -> dict:
    """One-step contraction of the two-line star into the single weighted line."""
    initial = _two_line_star(spec, p, q, alpha, beta)
    return _drive(initial, spec, [
        _pick(RuleId.CONNECTION, FORWARD, spec, node="p"),
    ])


def parallelogram_scripts(spec: ConvexFunctionSpec, p: Sequence[float],
                          q: Sequence[float], r: Sequence[float],
                          s: Sequence[float]) -> tuple[dict, dict]:
    """Two value-constant scripts behind the symmetric-divergence
    parallelogram law (corners must satisfy P + R = Q + S).

    Script one rewrites the four-line cycle into four centroid fans, all of
    whose centroids land on the common midpoint. Script two contracts the
    midpoint star into the two diagonals. The law itself is the numeric
    equality of the first script's value with the second's.
    """
    pv, qv, rv, sv = (np.asarray(x, dtype=float) for x in (p, q, r, s))
    if not np.allclose(pv + rv, qv + sv, rtol=0, atol=1e-9):
        raise ValueError("corners must satisfy P + R = Q + S")

    cycle = build_network(
        [Node("p", coord=tuple(pv)), Node("q", coord=tuple(qv)),
         Node("r", coord=tuple(rv)), Node("s", coord=tuple(sv))],
        [Edge("pq", "p", "q", 1.0, directed=False),
         Edge("qr", "q", "r", 1.0, directed=False),
         Edge("rs", "r", "s", 1.0, directed=False),
         Edge("sp", "s", "p", 1.0, directed=False)],
        spec.id)
    fan_script = _drive(cycle, spec, [
        lambda net: {"rule": DESUGAR_STEP},
        _pick(RuleId.INSERTION_1, FORWARD, spec, node="q",
              edges=("pq:f", "qr:b"), params={"variant": "on"}),
        _pick(RuleId.INSERTION_1, FORWARD, spec, node="r",
              edges=("qr:f", "rs:b"), params={"variant": "on"}),
        _pick(RuleId.INSERTION_1, FORWARD, spec, node="s",
              edges=("rs:f", "sp:b"), params={"variant": "on"}),
        _pick(RuleId.INSERTION_1, FORWARD, spec, node="p",
              edges=("sp:f", "pq:b"), params={"variant": "on"}),
    ])

    center = (pv + rv) / 2.0
    star = build_network(
        [Node("p", coord=tuple(pv)), Node("q", coord=tuple(qv)),
         Node("r", coord=tuple(rv)), Node("s", coord=tuple(sv)),
         Node("o", coord=tuple(center))],
        [Edge("po", "p", "o", 2.0, directed=False),
         Edge("qo", "q", "o", 2.0, directed=False),
         Edge("ro", "r", "o", 2.0, directed=False),
         Edge("so", "s", "o", 2.0, directed=False)],
        spec.id)
    star_script = _drive(star, spec, [
        _pick(RuleId.CONNECTION, FORWARD, spec, node="p", edges=("po", "ro")),
        _pick(RuleId.CONNECTION, FORWARD, spec, node="q", edges=("qo", "so")),
    ])
    return fan_script, star_script
