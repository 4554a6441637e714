"""Deformation rules: pattern-matched, parameterized rewrites that leave the
network function invariant, verified at application time.

Every rule is bidirectional. Applying with check=True (the default) resolves
coordinates and evaluates the network function before and after; a residual
above tolerance, or any drift in a surviving relevant coordinate, rejects the
application with PhiViolation.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .convex import ConvexFunctionSpec, eval_grad, eval_grad_conjugate
from .errors import DivnetError, NetworkError, PhiViolation, StaleMatch
from .evaluator import phi
from .netmodel import (OFF, ON, Edge, Network, Node, NodeKind, desugar_lines,
                       resolve_coordinates, validate_network)
from .numerics import COORD_MATCH_TOL, configured_tol, rel_residual, vec_close

FORWARD = "forward"
REVERSE = "reverse"


class RuleId(str, Enum):
    SUMMATION = "Summation"
    DELETE_ISOLATED = "DeleteIsolated"
    DELETE_ZERO_WEIGHT = "DeleteZeroWeight"
    DELETE_OFF_BETWEEN_OFF = "DeleteOffBetweenOff"
    DELETE_ON_LOOP_ON_NODE = "DeleteOnLoopOnNode"
    ON_OFF_1 = "OnOff1"
    ON_OFF_2 = "OnOff2"
    INSERTION_1 = "Insertion1"
    INSERTION_2 = "Insertion2"
    CONNECTION = "Connection"


RULE_CATALOG: tuple[RuleId, ...] = tuple(RuleId)


@dataclass(frozen=True)
class RuleMatch:
    """A located, parameterized application of one rule."""

    rule: RuleId
    direction: str = FORWARD
    nodes: tuple[str, ...] = ()
    edges: tuple[str, ...] = ()
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.direction not in (FORWARD, REVERSE):
            raise ValueError(f"direction must be forward/reverse, got {self.direction!r}")
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))

    def to_json(self) -> dict:
        return {"rule": self.rule.value, "direction": self.direction,
                "nodes": list(self.nodes), "edges": list(self.edges),
                "params": dict(self.params)}

    @staticmethod
    def from_json(data: dict) -> "RuleMatch":
        return RuleMatch(rule=RuleId(data["rule"]),
                         direction=data.get("direction", FORWARD),
                         nodes=tuple(data.get("nodes", ())),
                         edges=tuple(data.get("edges", ())),
                         params=dict(data.get("params", {})))


@dataclass
class DerivationStep:
    match: RuleMatch
    phi_before: float
    phi_after: float
    residual: float

    def to_json(self) -> dict:
        out = self.match.to_json()
        out.update({"phi_before": self.phi_before, "phi_after": self.phi_after,
                    "residual": self.residual})
        return out


# --- small helpers ---------------------------------------------------------------

def _hash8(*parts: str) -> str:
    return hashlib.sha1("|".join(parts).encode()).hexdigest()[:8]


def _fresh_id(net: Network, base: str) -> str:
    if base not in net.nodes and base not in net.edges:
        return base
    k = 2
    while f"{base}~{k}" in net.nodes or f"{base}~{k}" in net.edges:
        k += 1
    return f"{base}~{k}"


def _in_out(net: Network, node_id: str, exclude: frozenset[str] = frozenset()
            ) -> tuple[float, float]:
    """Signed in/out weight sums over all edge states, lines on both sides."""
    inw = outw = 0.0
    for e in net.edges.values():
        if e.id in exclude:
            continue
        if e.directed:
            if e.tail == node_id:
                outw += e.weight
            if e.head == node_id:
                inw += e.weight
        else:
            for nid in e.endpoints():
                if nid == node_id:
                    inw += e.weight
                    outw += e.weight
    return inw, outw


def _balanced(inw: float, outw: float) -> bool:
    return abs(inw - outw) <= 1e-9 * (1.0 + abs(inw) + abs(outw))


def _phi_relevant(net: Network) -> set[str]:
    """Ids of nodes whose coordinate can influence the network function:
    endpoints of ON edges, ON nodes with incident edges, and transitively the
    definers of any relevant derived node."""
    degree: dict[str, int] = {nid: 0 for nid in net.nodes}
    rel: set[str] = set()
    for e in net.edges.values():
        degree[e.tail] += 1
        degree[e.head] += 1
        if e.is_on():
            rel.add(e.tail)
            rel.add(e.head)
    for n in net.nodes.values():
        if n.is_on() and degree[n.id] > 0:
            rel.add(n.id)
    changed = True
    while changed:
        changed = False
        for n in net.nodes.values():
            if n.derived and n.id in rel:
                for e in net.defining_edges(n):
                    other = e.tail if n.kind == NodeKind.CENTROID else e.head
                    if other not in rel:
                        rel.add(other)
                        changed = True
    return rel


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise StaleMatch(message)


def _get_node(net: Network, nid: str) -> Node:
    _require(nid in net.nodes, f"node {nid!r} not in network")
    return net.nodes[nid]


def _get_edge(net: Network, eid: str) -> Edge:
    _require(eid in net.edges, f"edge {eid!r} not in network")
    return net.edges[eid]


def _set_state(net: Network, nid: str, state: str) -> Network:
    n = net.nodes[nid]
    return net.with_nodes(add=[Node(n.id, n.kind, n.coord, state)])


def _weights_close(a: float, b: float) -> bool:
    return abs(a - b) <= 1e-9 * (1.0 + abs(a) + abs(b))


# --- Summation -------------------------------------------------------------------

def _parallel_key(e: Edge):
    if e.directed:
        return ("d", e.tail, e.head, e.state)
    return ("u",) + tuple(sorted(e.endpoints())) + (e.state,)


def _match_summation(net: Network, spec: ConvexFunctionSpec) -> list[RuleMatch]:
    groups: dict[tuple, list[Edge]] = {}
    for e in net.edges_sorted():
        groups.setdefault(_parallel_key(e), []).append(e)
    out = []
    for key in sorted(groups):
        es = groups[key]
        if len(es) >= 2:
            out.append(RuleMatch(RuleId.SUMMATION, FORWARD,
                                 edges=tuple(sorted(e.id for e in es))))
    for e in net.edges_sorted():
        out.append(RuleMatch(RuleId.SUMMATION, REVERSE, edges=(e.id,),
                             params={"weights": [e.weight / 2.0, e.weight / 2.0]}))
    return out


def _check_summation(net: Network, m: RuleMatch, spec) -> None:
    if m.direction == FORWARD:
        _require(len(m.edges) >= 2, "summation needs at least two parallel edges")
        es = [_get_edge(net, eid) for eid in m.edges]
        keys = {_parallel_key(e) for e in es}
        _require(len(keys) == 1, "edges are not parallel with equal state")
    else:
        _require(len(m.edges) == 1, "summation reverse splits exactly one edge")
        e = _get_edge(net, m.edges[0])
        weights = m.params.get("weights")
        _require(isinstance(weights, (list, tuple)) and len(weights) >= 2,
                 "summation reverse needs a weights list parameter")
        _require(_weights_close(sum(float(w) for w in weights), e.weight),
                 "split weights must sum to the edge weight")


def _apply_summation(net: Network, m: RuleMatch, spec) -> Network:
    if m.direction == FORWARD:
        es = [net.edges[eid] for eid in m.edges]
        keep = min(es, key=lambda e: e.id)
        total = sum(e.weight for e in es)
        merged = Edge(keep.id, keep.tail, keep.head, total, keep.state, keep.directed)
        return net.with_edges(add=[merged], drop=[e.id for e in es])
    e = net.edges[m.edges[0]]
    weights = [float(w) for w in m.params["weights"]]
    out = net.with_edges(add=[Edge(e.id, e.tail, e.head, weights[0], e.state,
                                   e.directed)])
    for k, w in enumerate(weights[1:], start=2):
        eid = _fresh_id(out, f"{e.id}:s{k}")
        out = out.with_edges(add=[Edge(eid, e.tail, e.head, w, e.state, e.directed)])
    return out


# --- Deletion rules -----------------------------------------------------------------

def _match_delete_isolated(net: Network, spec) -> list[RuleMatch]:
    degree = {nid: 0 for nid in net.nodes}
    for e in net.edges.values():
        degree[e.tail] += 1
        degree[e.head] += 1
    out = [RuleMatch(RuleId.DELETE_ISOLATED, FORWARD, nodes=(nid,))
           for nid in sorted(net.nodes) if degree[nid] == 0]
    dim = net.dim() or (spec.dim if spec is not None else 1)
    coord = [0.0] * dim if spec is None or spec.domain.kind == "all" else [1.0] * dim
    out.append(RuleMatch(RuleId.DELETE_ISOLATED, REVERSE,
                         params={"coord": coord, "state": ON}))
    return out


def _check_delete_isolated(net: Network, m: RuleMatch, spec) -> None:
    if m.direction == FORWARD:
        _require(len(m.nodes) == 1, "deletion anchors exactly one node")
        n = _get_node(net, m.nodes[0])
        _require(not net.incident_edges(n.id), f"node {n.id!r} is not isolated")
    else:
        _require("coord" in m.params, "isolated-node insertion needs a coordinate")


def _apply_delete_isolated(net: Network, m: RuleMatch, spec) -> Network:
    if m.direction == FORWARD:
        return net.with_nodes(drop=[m.nodes[0]])
    nid = m.params.get("node_id") or _fresh_id(
        net, "v_" + _hash8(m.rule.value, m.direction, *map(str, m.params["coord"])))
    node = Node(nid, NodeKind.EXPLICIT, tuple(m.params["coord"]),
                m.params.get("state", ON))
    return net.with_nodes(add=[node])


def _match_delete_zero_weight(net: Network, spec) -> list[RuleMatch]:
    out = [RuleMatch(RuleId.DELETE_ZERO_WEIGHT, FORWARD, edges=(e.id,))
           for e in net.edges_sorted() if e.weight == 0.0]
    nids = net.node_ids()
    if nids:
        tail = nids[0]
        head = nids[1] if len(nids) > 1 else nids[0]
        out.append(RuleMatch(RuleId.DELETE_ZERO_WEIGHT, REVERSE,
                             params={"tail": tail, "head": head, "state": ON,
                                     "directed": True}))
    return out


def _check_delete_zero_weight(net: Network, m: RuleMatch, spec) -> None:
    if m.direction == FORWARD:
        _require(len(m.edges) == 1, "zero-weight deletion anchors exactly one edge")
        e = _get_edge(net, m.edges[0])
        _require(e.weight == 0.0, f"edge {e.id!r} has nonzero weight {e.weight}")
    else:
        _require("tail" in m.params and "head" in m.params,
                 "zero-weight insertion needs endpoints")
        _get_node(net, m.params["tail"])
        _get_node(net, m.params["head"])


def _apply_delete_zero_weight(net: Network, m: RuleMatch, spec) -> Network:
    if m.direction == FORWARD:
        return net.with_edges(drop=[m.edges[0]])
    tail, head = m.params["tail"], m.params["head"]
    eid = m.params.get("edge_id") or _fresh_id(
        net, "z_" + _hash8(m.rule.value, tail, head))
    edge = Edge(eid, tail, head, 0.0, m.params.get("state", ON),
                bool(m.params.get("directed", True)))
    return net.with_edges(add=[edge])


def _off_edge_guard(net: Network, e: Edge, removing: bool) -> Optional[str]:
    """Why an OFF edge between OFF nodes may not be removed/inserted: its
    presence defines a relevant derived coordinate or breaks a weight sum."""
    if not e.directed:
        return None
    rel = _phi_relevant(net)
    for nid, kind in ((e.head, NodeKind.CENTROID), (e.tail, NodeKind.CONJUGATE_CENTROID)):
        n = net.nodes.get(nid)
        if n is None or n.kind != kind or e.is_loop():
            continue
        if nid in rel:
            return (f"edge defines derived node {nid!r} whose coordinate "
                    "feeds an ON contribution")
        if removing:
            remaining = [d for d in net.defining_edges(n) if d.id != e.id]
            total = sum(d.weight for d in remaining)
            scale = sum(abs(d.weight) for d in remaining)
            if abs(total) <= 1e-12 * (1.0 + scale):
                return f"removal would zero the defining weight sum of {nid!r}"
    return None


def _match_delete_off_between_off(net: Network, spec) -> list[RuleMatch]:
    out = []
    for e in net.edges_sorted():
        if e.is_on():
            continue
        if not all(not net.nodes[nid].is_on() for nid in e.endpoints()):
            continue
        if _off_edge_guard(net, e, removing=True) is None:
            out.append(RuleMatch(RuleId.DELETE_OFF_BETWEEN_OFF, FORWARD,
                                 edges=(e.id,)))
    off_nodes = [nid for nid in net.node_ids() if not net.nodes[nid].is_on()]
    if off_nodes:
        tail = off_nodes[0]
        head = off_nodes[1] if len(off_nodes) > 1 else off_nodes[0]
        m = RuleMatch(RuleId.DELETE_OFF_BETWEEN_OFF, REVERSE,
                      params={"tail": tail, "head": head, "weight": 1.0,
                              "directed": True})
        try:
            _check_delete_off_between_off(net, m, spec)
            out.append(m)
        except StaleMatch:
            pass
    return out


def _check_delete_off_between_off(net: Network, m: RuleMatch, spec) -> None:
    if m.direction == FORWARD:
        _require(len(m.edges) == 1, "deletion anchors exactly one edge")
        e = _get_edge(net, m.edges[0])
        _require(not e.is_on(), f"edge {e.id!r} is ON")
        for nid in e.endpoints():
            _require(not _get_node(net, nid).is_on(), f"endpoint {nid!r} is ON")
        reason = _off_edge_guard(net, e, removing=True)
        _require(reason is None, reason or "")
    else:
        tail = m.params.get("tail")
        head = m.params.get("head")
        _require(tail is not None and head is not None, "insertion needs endpoints")
        for nid in (tail, head):
            _require(not _get_node(net, nid).is_on(), f"endpoint {nid!r} is ON")
        probe = Edge("~probe", tail, head, float(m.params.get("weight", 1.0)), OFF,
                     bool(m.params.get("directed", True)))
        reason = _off_edge_guard(net, probe, removing=False)
        _require(reason is None, reason or "")


def _apply_delete_off_between_off(net: Network, m: RuleMatch, spec) -> Network:
    if m.direction == FORWARD:
        return net.with_edges(drop=[m.edges[0]])
    tail, head = m.params["tail"], m.params["head"]
    eid = m.params.get("edge_id") or _fresh_id(
        net, "o_" + _hash8(m.rule.value, tail, head))
    edge = Edge(eid, tail, head, float(m.params.get("weight", 1.0)), OFF,
                bool(m.params.get("directed", True)))
    return net.with_edges(add=[edge])


def _match_delete_on_loop(net: Network, spec) -> list[RuleMatch]:
    out = []
    for e in net.edges_sorted():
        if (e.directed and e.is_loop() and e.is_on()
                and net.nodes[e.tail].is_on()):
            out.append(RuleMatch(RuleId.DELETE_ON_LOOP_ON_NODE, FORWARD,
                                 nodes=(e.tail,), edges=(e.id,)))
    for nid in net.node_ids():
        if net.nodes[nid].is_on():
            out.append(RuleMatch(RuleId.DELETE_ON_LOOP_ON_NODE, REVERSE,
                                 nodes=(nid,), params={"weight": 1.0}))
    return out


def _check_delete_on_loop(net: Network, m: RuleMatch, spec) -> None:
    _require(len(m.nodes) == 1, "loop rule anchors one node")
    n = _get_node(net, m.nodes[0])
    _require(n.is_on(), f"node {n.id!r} must be ON")
    if m.direction == FORWARD:
        _require(len(m.edges) == 1, "loop rule anchors one edge")
        e = _get_edge(net, m.edges[0])
        _require(e.directed and e.is_loop() and e.tail == n.id,
                 f"edge {e.id!r} is not a directed loop on {n.id!r}")
        _require(e.is_on(), f"loop {e.id!r} is OFF")
    else:
        _require("weight" in m.params, "loop insertion needs a weight")


def _apply_delete_on_loop(net: Network, m: RuleMatch, spec) -> Network:
    if m.direction == FORWARD:
        return net.with_edges(drop=[m.edges[0]])
    nid = m.nodes[0]
    eid = m.params.get("edge_id") or _fresh_id(
        net, "loop_" + _hash8(m.rule.value, nid))
    return net.with_edges(add=[Edge(eid, nid, nid, float(m.params["weight"]), ON)])


# --- ON-OFF rules ----------------------------------------------------------------

def _match_onoff(net: Network, spec, rule: RuleId) -> list[RuleMatch]:
    # forward: state flip with a compensating loop inserted
    want_on = rule == RuleId.ON_OFF_1
    loop_state = ON if rule == RuleId.ON_OFF_1 else OFF
    out = []
    for nid in net.node_ids():
        n = net.nodes[nid]
        if n.is_on() != want_on:
            continue
        inw, outw = _in_out(net, nid)
        if _balanced(inw, outw):
            out.append(RuleMatch(rule, FORWARD, nodes=(nid,),
                                 params={"sigma": (inw + outw) / 2.0}))
    for e in net.edges_sorted():
        if not (e.directed and e.is_loop() and e.state == loop_state):
            continue
        n = net.nodes[e.tail]
        if n.is_on() == want_on:
            continue
        inw, outw = _in_out(net, n.id, exclude=frozenset([e.id]))
        sigma = (inw + outw) / 2.0
        if _balanced(inw, outw) and _weights_close(e.weight, -sigma):
            out.append(RuleMatch(rule, REVERSE, nodes=(n.id,), edges=(e.id,),
                                 params={"sigma": sigma}))
    return out


def _check_onoff(net: Network, m: RuleMatch, spec) -> None:
    want_on = m.rule == RuleId.ON_OFF_1
    loop_state = ON if m.rule == RuleId.ON_OFF_1 else OFF
    _require(len(m.nodes) == 1, "ON-OFF rules anchor one node")
    n = _get_node(net, m.nodes[0])
    if m.direction == FORWARD:
        _require(n.is_on() == want_on,
                 f"node {n.id!r} has the wrong state for {m.rule.value}")
        inw, outw = _in_out(net, n.id)
        _require(_balanced(inw, outw),
                 f"node weights unbalanced: {m.rule.value} requires equal "
                 f"in/out sums (in={inw:g}, out={outw:g})")
        if "sigma" in m.params:
            _require(_weights_close(float(m.params["sigma"]), (inw + outw) / 2.0),
                     "recorded weight sum no longer matches the node")
    else:
        _require(n.is_on() != want_on,
                 f"node {n.id!r} has the wrong state for reverse {m.rule.value}")
        _require(len(m.edges) == 1, "reverse ON-OFF anchors the compensating loop")
        e = _get_edge(net, m.edges[0])
        _require(e.directed and e.is_loop() and e.tail == n.id
                 and e.state == loop_state,
                 f"edge {e.id!r} is not the expected {loop_state} loop on {n.id!r}")
        inw, outw = _in_out(net, n.id, exclude=frozenset([e.id]))
        _require(_balanced(inw, outw), "node weights unbalanced excluding the loop")
        _require(_weights_close(e.weight, -(inw + outw) / 2.0),
                 "loop weight does not compensate the balanced sum")


def _apply_onoff(net: Network, m: RuleMatch, spec) -> Network:
    want_on = m.rule == RuleId.ON_OFF_1
    loop_state = ON if m.rule == RuleId.ON_OFF_1 else OFF
    nid = m.nodes[0]
    if m.direction == FORWARD:
        inw, outw = _in_out(net, nid)
        sigma = (inw + outw) / 2.0
        new_state = OFF if want_on else ON
        eid = _fresh_id(net, "loop_" + _hash8(m.rule.value, FORWARD, nid))
        out = _set_state(net, nid, new_state)
        return out.with_edges(add=[Edge(eid, nid, nid, -sigma, loop_state)])
    out = net.with_edges(drop=[m.edges[0]])
    return _set_state(out, nid, ON if want_on else OFF)


# --- Insertion rules ----------------------------------------------------------------

def _fan_edges(net: Network, nid: str, incoming: bool) -> list[Edge]:
    return [e for e in net.edges_sorted()
            if e.directed and not e.is_loop() and e.is_on()
            and (e.head == nid if incoming else e.tail == nid)]


def _match_insertion(net: Network, spec, rule: RuleId) -> list[RuleMatch]:
    incoming = rule == RuleId.INSERTION_1
    blocked_kind = (NodeKind.CONJUGATE_CENTROID if incoming else NodeKind.CENTROID)
    new_kind = NodeKind.CENTROID if incoming else NodeKind.CONJUGATE_CENTROID
    out = []
    for nid in net.node_ids():
        fan = _fan_edges(net, nid, incoming)
        fan = [e for e in fan
               if net.nodes[e.tail if incoming else e.head].kind != blocked_kind]
        if not fan:
            continue
        sigma = sum(e.weight for e in fan)
        if abs(sigma) <= 1e-12 * (1.0 + sum(abs(e.weight) for e in fan)):
            continue
        out.append(RuleMatch(rule, FORWARD, nodes=(nid,),
                             edges=tuple(sorted(e.id for e in fan)),
                             params={"variant": "off", "sigma": sigma}))
    for nid in net.node_ids():
        n = net.nodes[nid]
        if n.kind != new_kind:
            continue
        try:
            m = _reverse_insertion_match(net, n, rule)
        except StaleMatch:
            continue
        out.append(m)
    return out


def _reverse_insertion_match(net: Network, c: Node, rule: RuleId) -> RuleMatch:
    incoming = rule == RuleId.INSERTION_1
    fan = net.defining_edges(c)
    incident = net.incident_edges(c.id)
    others = [e for e in incident if e.id not in {f.id for f in fan}]
    _require(len(others) == 1, f"derived node {c.id!r} must have exactly one "
             "non-defining incident edge")
    bridge = others[0]
    _require(bridge.directed and not bridge.is_loop() and bridge.is_on(),
             "the bridging edge must be an ON arrow")
    if incoming:
        _require(bridge.tail == c.id, "the bridge must leave the centroid")
    else:
        _require(bridge.head == c.id, "the bridge must enter the conjugate centroid")
    _require(bool(fan), "no defining fan")
    _require(all(not f.is_loop() for f in fan), "loops cannot join the fan")
    sigma = sum(f.weight for f in fan)
    _require(_weights_close(bridge.weight, sigma),
             "bridge weight must equal the fan weight sum")
    variant = "on" if c.is_on() else "off"
    want_state = ON if variant == "on" else OFF
    _require(all(f.state == want_state for f in fan),
             f"fan state must match the {variant} variant")
    return RuleMatch(rule, REVERSE, nodes=(c.id,),
                     edges=tuple(sorted(f.id for f in fan)) + (bridge.id,),
                     params={"variant": variant, "sigma": sigma})


def _check_insertion(net: Network, m: RuleMatch, spec) -> None:
    incoming = m.rule == RuleId.INSERTION_1
    blocked_kind = (NodeKind.CONJUGATE_CENTROID if incoming else NodeKind.CENTROID)
    if m.direction == FORWARD:
        _require(len(m.nodes) == 1, "insertion anchors the fan's common node")
        anchor = _get_node(net, m.nodes[0])
        _require(len(m.edges) >= 1, "insertion needs a nonempty fan")
        fan = [_get_edge(net, eid) for eid in m.edges]
        for e in fan:
            _require(e.directed and e.is_on(), f"fan edge {e.id!r} must be an ON arrow")
            _require((e.head if incoming else e.tail) == anchor.id,
                     f"fan edge {e.id!r} does not target {anchor.id!r}")
            far = net.nodes[e.tail if incoming else e.head]
            _require(far.kind != blocked_kind,
                     f"fan endpoint {far.id!r} would have its definition rewired")
        sigma = sum(e.weight for e in fan)
        _require(abs(sigma) > 1e-12 * (1.0 + sum(abs(e.weight) for e in fan)),
                 "fan weight sum must be nonzero")
        _require(m.params.get("variant", "off") in ("off", "on"),
                 "variant must be 'off' or 'on'")
        if anchor.derived and any(e.is_loop() for e in fan):
            raise StaleMatch("loop fans at derived anchors are not insertable")
    else:
        _require(len(m.nodes) == 1, "reverse insertion anchors the derived node")
        c = _get_node(net, m.nodes[0])
        expected = _reverse_insertion_match(net, c, m.rule)
        _require(set(m.edges) in (set(expected.edges), set()),
                 "anchored edges disagree with the derived node's environment")
        for f in net.defining_edges(c):
            far = net.nodes[f.tail if incoming else f.head]
            _require(far.kind != blocked_kind,
                     f"fan endpoint {far.id!r} would have its definition rewired")


def _apply_insertion(net: Network, m: RuleMatch, spec) -> Network:
    incoming = m.rule == RuleId.INSERTION_1
    new_kind = NodeKind.CENTROID if incoming else NodeKind.CONJUGATE_CENTROID
    if m.direction == FORWARD:
        anchor = m.nodes[0]
        fan = [net.edges[eid] for eid in m.edges]
        variant = m.params.get("variant", "off")
        state = ON if variant == "on" else OFF
        sigma = sum(e.weight for e in fan)
        h = _hash8(m.rule.value, FORWARD, anchor, *sorted(e.id for e in fan))
        c_id = m.params.get("centroid_id") or _fresh_id(
            net, ("c_" if incoming else "chat_") + h)
        out = net.with_edges(drop=[e.id for e in fan])
        out = out.with_nodes(add=[Node(c_id, new_kind, None, state)])
        new_edges = []
        for e in fan:
            eid = _fresh_id(out, f"{e.id}:c")
            if incoming:
                new_edges.append(Edge(eid, e.tail, c_id, e.weight, state))
            else:
                new_edges.append(Edge(eid, c_id, e.head, e.weight, state))
            out = out.with_edges(add=new_edges[-1:])
        bridge_id = _fresh_id(out, "b_" + h)
        if incoming:
            bridge = Edge(bridge_id, c_id, anchor, sigma, ON)
        else:
            bridge = Edge(bridge_id, anchor, c_id, sigma, ON)
        return out.with_edges(add=[bridge])
    c = net.nodes[m.nodes[0]]
    fan = net.defining_edges(c)
    incident = net.incident_edges(c.id)
    bridge = next(e for e in incident if e.id not in {f.id for f in fan})
    far_anchor = bridge.head if incoming else bridge.tail
    out = net.with_edges(drop=[e.id for e in incident])
    out = out.with_nodes(drop=[c.id])
    restored = []
    for f in fan:
        eid = _fresh_id(out, f"{f.id}:r")
        if incoming:
            restored.append(Edge(eid, f.tail, far_anchor, f.weight, ON))
        else:
            restored.append(Edge(eid, far_anchor, f.head, f.weight, ON))
        out = out.with_edges(add=restored[-1:])
    return out


# --- Connection rule ----------------------------------------------------------------

def _connection_targets(net: Network, spec: ConvexFunctionSpec,
                        coords: dict[str, np.ndarray], v: Node,
                        e1: Edge, e2: Edge) -> Optional[str]:
    """Which centroid form the middle node realizes: 'a' (primal), 'c' (dual),
    or None."""
    p = next(x for x in e1.endpoints() if x != v.id)
    q = next(x for x in e2.endpoints() if x != v.id)
    alpha, beta = e1.weight, e2.weight
    total = alpha + beta
    if abs(total) <= 1e-12 * (1.0 + abs(alpha) + abs(beta)):
        return None
    c = (alpha * coords[p] + beta * coords[q]) / total
    if vec_close(coords[v.id], c, COORD_MATCH_TOL):
        return "a"
    try:
        chat_dual = (alpha * eval_grad(spec, coords[p])
                     + beta * eval_grad(spec, coords[q])) / total
        chat = eval_grad_conjugate(spec, chat_dual)
    except DivnetError:
        return None
    if vec_close(coords[v.id], chat, COORD_MATCH_TOL):
        return "c"
    return None


def _match_connection(net: Network, spec: ConvexFunctionSpec) -> list[RuleMatch]:
    try:
        coords = resolve_coordinates(net, spec)
    except NetworkError:
        return []
    lines_at: dict[str, list[Edge]] = {}
    for e in net.edges_sorted():
        if not e.directed and e.is_on() and not e.is_loop():
            for nid in e.endpoints():
                lines_at.setdefault(nid, []).append(e)
    out = []
    for vid in sorted(lines_at):
        v = net.nodes[vid]
        if not v.is_on():
            continue
        lines = lines_at[vid]
        for i in range(len(lines)):
            for j in range(i + 1, len(lines)):
                e1, e2 = lines[i], lines[j]
                p = next(x for x in e1.endpoints() if x != vid)
                q = next(x for x in e2.endpoints() if x != vid)
                if p == vid or q == vid or p == q:
                    continue
                form = _connection_targets(net, spec, coords, v, e1, e2)
                if form is None:
                    continue
                total = e1.weight + e2.weight
                out.append(RuleMatch(
                    RuleId.CONNECTION, FORWARD,
                    nodes=(p, q, vid), edges=(e1.id, e2.id),
                    params={"form": form, "alpha": e1.weight, "beta": e2.weight,
                            "merged_weight": e1.weight * e2.weight / total}))
    for e in net.edges_sorted():
        if e.directed or not e.is_on() or e.is_loop() or e.weight == 0.0:
            continue
        out.append(RuleMatch(
            RuleId.CONNECTION, REVERSE,
            nodes=tuple(sorted(e.endpoints())), edges=(e.id,),
            params={"form": "a", "alpha": 2.0 * e.weight, "beta": 2.0 * e.weight}))
    return out


def _check_connection(net: Network, m: RuleMatch, spec: ConvexFunctionSpec) -> None:
    if m.direction == FORWARD:
        _require(len(m.nodes) == 3 and len(m.edges) == 2,
                 "connection anchors nodes (P, Q, V) and the two lines")
        p, q, vid = m.nodes
        v = _get_node(net, vid)
        _require(v.is_on(), f"middle node {vid!r} must be ON")
        e1, e2 = (_get_edge(net, eid) for eid in m.edges)
        for e, far in ((e1, p), (e2, q)):
            _require(not e.directed and e.is_on() and not e.is_loop(),
                     f"edge {e.id!r} must be an ON line")
            _require(set(e.endpoints()) == {vid, far},
                     f"edge {e.id!r} does not join {far!r} and {vid!r}")
        _require(p != q, "the outer nodes must differ")
        coords = resolve_coordinates(net, spec)
        form = _connection_targets(net, spec, coords, v, e1, e2)
        _require(form is not None,
                 "middle node does not sit at the centroid or conjugate centroid")
        want = m.params.get("form")
        _require(want in (None, form), f"form parameter {want!r} does not hold")
    else:
        _require(len(m.edges) == 1, "reverse connection anchors one line")
        e = _get_edge(net, m.edges[0])
        _require(not e.directed and e.is_on() and not e.is_loop(),
                 f"edge {e.id!r} must be an ON line")
        alpha = float(m.params.get("alpha", 2.0 * e.weight))
        beta = float(m.params.get("beta", 2.0 * e.weight))
        total = alpha + beta
        _require(abs(total) > 1e-12 * (1.0 + abs(alpha) + abs(beta)),
                 "alpha + beta must be nonzero")
        _require(_weights_close(alpha * beta / total, e.weight),
                 "alpha, beta must recombine to the line weight")
        _require(m.params.get("form", "a") in ("a", "c"), "form must be 'a' or 'c'")


def _apply_connection(net: Network, m: RuleMatch, spec: ConvexFunctionSpec) -> Network:
    if m.direction == FORWARD:
        p, q, vid = m.nodes
        e1, e2 = (net.edges[eid] for eid in m.edges)
        w = e1.weight * e2.weight / (e1.weight + e2.weight)
        out = net.with_edges(drop=[e1.id, e2.id])
        if not out.incident_edges(vid):
            out = out.with_nodes(drop=[vid])
        eid = _fresh_id(out, "l_" + _hash8(m.rule.value, FORWARD, p, q, vid))
        return out.with_edges(add=[Edge(eid, p, q, w, ON, directed=False)])
    e = net.edges[m.edges[0]]
    p, q = sorted(e.endpoints())
    alpha = float(m.params.get("alpha", 2.0 * e.weight))
    beta = float(m.params.get("beta", 2.0 * e.weight))
    form = m.params.get("form", "a")
    coords = resolve_coordinates(net, spec)
    if form == "a":
        v_coord = (alpha * coords[p] + beta * coords[q]) / (alpha + beta)
    else:
        dual = (alpha * eval_grad(spec, coords[p])
                + beta * eval_grad(spec, coords[q])) / (alpha + beta)
        v_coord = eval_grad_conjugate(spec, dual)
    h = _hash8(m.rule.value, REVERSE, e.id, p, q)
    vid = m.params.get("v_id") or _fresh_id(net, "v_" + h)
    out = net.with_edges(drop=[e.id])
    out = out.with_nodes(add=[Node(vid, NodeKind.EXPLICIT, tuple(v_coord), ON)])
    l1 = Edge(_fresh_id(out, f"{e.id}:p"), p, vid, alpha, ON, directed=False)
    out = out.with_edges(add=[l1])
    l2 = Edge(_fresh_id(out, f"{e.id}:q"), q, vid, beta, ON, directed=False)
    return out.with_edges(add=[l2])


# --- dispatch tables ----------------------------------------------------------------

_MATCHERS: dict[RuleId, Callable] = {
    RuleId.SUMMATION: _match_summation,
    RuleId.DELETE_ISOLATED: _match_delete_isolated,
    RuleId.DELETE_ZERO_WEIGHT: _match_delete_zero_weight,
    RuleId.DELETE_OFF_BETWEEN_OFF: _match_delete_off_between_off,
    RuleId.DELETE_ON_LOOP_ON_NODE: _match_delete_on_loop,
    RuleId.ON_OFF_1: lambda n, s: _match_onoff(n, s, RuleId.ON_OFF_1),
    RuleId.ON_OFF_2: lambda n, s: _match_onoff(n, s, RuleId.ON_OFF_2),
    RuleId.INSERTION_1: lambda n, s: _match_insertion(n, s, RuleId.INSERTION_1),
    RuleId.INSERTION_2: lambda n, s: _match_insertion(n, s, RuleId.INSERTION_2),
    RuleId.CONNECTION: _match_connection,
}

_CHECKERS: dict[RuleId, Callable] = {
    RuleId.SUMMATION: _check_summation,
    RuleId.DELETE_ISOLATED: _check_delete_isolated,
    RuleId.DELETE_ZERO_WEIGHT: _check_delete_zero_weight,
    RuleId.DELETE_OFF_BETWEEN_OFF: _check_delete_off_between_off,
    RuleId.DELETE_ON_LOOP_ON_NODE: _check_delete_on_loop,
    RuleId.ON_OFF_1: _check_onoff,
    RuleId.ON_OFF_2: _check_onoff,
    RuleId.INSERTION_1: _check_insertion,
    RuleId.INSERTION_2: _check_insertion,
    RuleId.CONNECTION: _check_connection,
}

_APPLIERS: dict[RuleId, Callable] = {
    RuleId.SUMMATION: _apply_summation,
    RuleId.DELETE_ISOLATED: _apply_delete_isolated,
    RuleId.DELETE_ZERO_WEIGHT: _apply_delete_zero_weight,
    RuleId.DELETE_OFF_BETWEEN_OFF: _apply_delete_off_between_off,
    RuleId.DELETE_ON_LOOP_ON_NODE: _apply_delete_on_loop,
    RuleId.ON_OFF_1: _apply_onoff,
    RuleId.ON_OFF_2: _apply_onoff,
    RuleId.INSERTION_1: _apply_insertion,
    RuleId.INSERTION_2: _apply_insertion,
    RuleId.CONNECTION: _apply_connection,
}


def list_matches(net: Network, rule: RuleId,
                 spec: ConvexFunctionSpec) -> list[RuleMatch]:
    """Deterministic enumeration of valid matches, sorted by anchors."""
    matches = _MATCHERS[rule](net, spec)
    return sorted(matches, key=lambda m: (m.direction, m.nodes, m.edges))


def all_matches(net: Network, spec: ConvexFunctionSpec) -> list[RuleMatch]:
    out = []
    for rule in RULE_CATALOG:
        out.extend(list_matches(net, rule, spec))
    return out


def validate_match(net: Network, match: RuleMatch, spec: ConvexFunctionSpec) -> None:
    """Raise StaleMatch unless the match fits the current network."""
    _CHECKERS[match.rule](net, match, spec)


def apply_match(net: Network, match: RuleMatch, spec: ConvexFunctionSpec,
                check: bool = True, tol: float | None = None
                ) -> tuple[Network, DerivationStep]:
    """Rewrite and verify: returns the new network and the step record.

    With check=True the application is rejected (PhiViolation) if the network
    function moved beyond tolerance or a surviving relevant coordinate drifted.
    """
    tol = configured_tol(tol)
    validate_match(net, match, spec)
    try:
        new_net = _APPLIERS[match.rule](net, match, spec)
        validate_network(new_net)
    except NetworkError as exc:
        raise StaleMatch(f"application produced an invalid network: {exc}") from exc
    if not check:
        return new_net, DerivationStep(match, math.nan, math.nan, math.nan)
    coords_before = resolve_coordinates(net, spec)
    coords_after = resolve_coordinates(new_net, spec)
    relevant = _phi_relevant(net) | _phi_relevant(new_net)
    for nid in coords_before:
        if nid in coords_after and nid in relevant and not vec_close(
                coords_before[nid], coords_after[nid], COORD_MATCH_TOL):
            raise PhiViolation(
                f"coordinate of node {nid!r} drifted under {match.rule.value}")
    phi_before = phi(net, spec, coords=coords_before)
    phi_after = phi(new_net, spec, coords=coords_after)
    residual = rel_residual(phi_before, phi_after)
    if residual > tol:
        raise PhiViolation(
            f"{match.rule.value} changed the network function: "
            f"{phi_before!r} -> {phi_after!r}",
            phi_before=phi_before, phi_after=phi_after, residual=residual)
    return new_net, DerivationStep(match, phi_before, phi_after, residual)


# --- derivations and replay -------------------------------------------------------

#: pseudo-step allowed in derivation scripts besides the rule catalog: replace
#: every line by its antiparallel arrow pair (a value-preserving model op)
DESUGAR_STEP = "desugar_lines"


@dataclass
class Derivation:
    """An initial network plus an ordered, replayable list of rule steps."""

    generator_id: str
    initial: Network
    steps: list[DerivationStep] = field(default_factory=list)
    final: Optional[Network] = None

    def to_json(self) -> dict:
        from .netmodel import network_to_json
        out = {"generator": self.generator_id,
               "initial": network_to_json(self.initial),
               "steps": [s.to_json() for s in self.steps]}
        if self.final is not None:
            out["final"] = network_to_json(self.final)
        return out

@dataclass
class StepReport:
    index: int
    rule: str
    direction: str
    phi_before: float
    phi_after: float
    residual: float
    ok: bool
    error: Optional[str] = None

    def to_json(self) -> dict:
        return {"index": self.index, "rule": self.rule, "direction": self.direction,
                "phi_before": self.phi_before, "phi_after": self.phi_after,
                "residual": self.residual, "ok": self.ok, "error": self.error}


@dataclass
class ReplayReport:
    steps: list[StepReport]
    phi_initial: float
    phi_final: float
    final_equal: Optional[bool]
    max_residual: float

    @property
    def passed(self) -> bool:
        return all(s.ok for s in self.steps) and self.final_equal is not False

    def to_json(self) -> dict:
        return {"steps": [s.to_json() for s in self.steps],
                "phi_initial": self.phi_initial, "phi_final": self.phi_final,
                "final_equal": self.final_equal, "max_residual": self.max_residual,
                "passed": self.passed}


def replay(script: dict, spec: Optional[ConvexFunctionSpec] = None,
           tol: float | None = None, strict: bool = False) -> ReplayReport:
    """Re-apply every step of a derivation script with checking enabled.

    Script steps carry {rule, direction, nodes, edges, params, expected_phi?};
    the pseudo-rule "desugar_lines" is also accepted. With strict=True the
    first failing step raises PhiViolation; otherwise failures are reported.
    """
    from .convex import get_generator
    from .netmodel import network_from_json
    tol = configured_tol(tol)
    net = network_from_json(script["initial"])
    if spec is None:
        spec = get_generator(script.get("generator", net.generator_id),
                             net.dim() or 1)
    phi_initial = phi(net, spec)
    reports: list[StepReport] = []
    current_phi = phi_initial
    for idx, raw in enumerate(script.get("steps", [])):
        rule_name = raw.get("rule")
        try:
            if rule_name == DESUGAR_STEP:
                new_net = desugar_lines(net)
                phi_after = phi(new_net, spec)
                residual = rel_residual(current_phi, phi_after)
                if residual > tol:
                    raise PhiViolation("line desugaring changed the network function",
                                       phi_before=current_phi, phi_after=phi_after,
                                       residual=residual)
                step = DerivationStep(RuleMatch(RuleId.SUMMATION), current_phi,
                                      phi_after, residual)
                direction = "-"
            else:
                match = RuleMatch.from_json(raw)
                new_net, step = apply_match(net, match, spec, check=True, tol=tol)
                direction = match.direction
            expected = raw.get("expected_phi")
            if expected is not None and rel_residual(step.phi_after,
                                                     float(expected)) > tol:
                raise PhiViolation(
                    f"step {idx} reached {step.phi_after!r}, expected {expected!r}",
                    phi_before=step.phi_before, phi_after=step.phi_after)
            reports.append(StepReport(idx, rule_name, direction, step.phi_before,
                                      step.phi_after, step.residual, True))
            net = new_net
            current_phi = step.phi_after
        except DivnetError as exc:
            if strict:
                raise
            reports.append(StepReport(idx, rule_name, raw.get("direction", "-"),
                                      current_phi, math.nan, math.nan, False,
                                      error=f"{type(exc).__name__}: {exc}"))
            break
    final_equal: Optional[bool] = None
    if "final" in script and script["final"] is not None and all(
            s.ok for s in reports):
        final_equal = net == network_from_json(script["final"])
    max_residual = max((s.residual for s in reports if not math.isnan(s.residual)),
                       default=0.0)
    return ReplayReport(reports, phi_initial, current_phi, final_equal, max_residual)


def record_script(initial: Network, spec: ConvexFunctionSpec,
                  steps: list[dict], tol: float | None = None) -> dict:
    """Apply raw steps once, verifying each, and emit the replayable script
    (with expected_phi and the reached final network filled in)."""
    from .netmodel import network_to_json
    script = {"generator": spec.id, "initial": network_to_json(initial), "steps": []}
    net = initial
    for raw in steps:
        if raw.get("rule") == DESUGAR_STEP:
            net = desugar_lines(net)
            entry = {"rule": DESUGAR_STEP}
        else:
            match = RuleMatch.from_json(raw)
            net, step = apply_match(net, match, spec, check=True, tol=tol)
            entry = dict(raw)
            entry["expected_phi"] = step.phi_after
        script["steps"].append(entry)
    script["final"] = network_to_json(net)
    return script
