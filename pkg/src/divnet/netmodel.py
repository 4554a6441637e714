"""Divergence-network data model: ON/OFF nodes with explicit or derived
coordinates, weighted ON/OFF directed and undirected edges, composition,
coordinate resolution, JSON serialization, and DOT export."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from .convex import ConvexFunctionSpec, eval_grad, eval_grad_conjugate
from .errors import (CentroidCycle, DanglingEndpoint, EdgeOverlap,
                     GeneratorMismatch, NodeConflict, ZeroCentroidWeight)

ON = "on"
OFF = "off"


class NodeKind(str, Enum):
    EXPLICIT = "explicit"
    CENTROID = "centroid"
    CONJUGATE_CENTROID = "conjugate_centroid"


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind = NodeKind.EXPLICIT
    coord: Optional[tuple[float, ...]] = None
    state: str = ON

    def __post_init__(self):
        if self.state not in (ON, OFF):
            raise ValueError(f"node state must be 'on' or 'off', got {self.state!r}")
        if self.kind == NodeKind.EXPLICIT:
            if self.coord is None:
                raise ValueError(f"explicit node {self.id!r} needs a coordinate")
            object.__setattr__(self, "coord", tuple(float(c) for c in self.coord))
        elif self.coord is not None:
            raise ValueError(f"derived node {self.id!r} must not store a coordinate")

    @property
    def derived(self) -> bool:
        return self.kind != NodeKind.EXPLICIT

    def is_on(self) -> bool:
        return self.state == ON


@dataclass(frozen=True)
class Edge:
    """Directed edges are arrows tail->head; undirected edges use (tail, head)
    as an unordered endpoint pair. Loops (tail == head) are allowed."""

    id: str
    tail: str
    head: str
    weight: float
    state: str = ON
    directed: bool = True

    def __post_init__(self):
        if self.state not in (ON, OFF):
            raise ValueError(f"edge state must be 'on' or 'off', got {self.state!r}")
        object.__setattr__(self, "weight", float(self.weight))

    def is_on(self) -> bool:
        return self.state == ON

    def is_loop(self) -> bool:
        return self.tail == self.head

    def endpoints(self) -> tuple[str, str]:
        return (self.tail, self.head)


@dataclass
class Network:
    """Value-semantic network; rewrites construct new instances."""

    nodes: dict[str, Node]
    edges: dict[str, Edge]
    generator_id: str = "quadratic"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Network):
            return NotImplemented
        return (self.nodes == other.nodes and self.edges == other.edges
                and self.generator_id == other.generator_id)

    def node_ids(self) -> list[str]:
        return sorted(self.nodes)

    def edge_ids(self) -> list[str]:
        return sorted(self.edges)

    def edges_sorted(self) -> list[Edge]:
        return [self.edges[i] for i in self.edge_ids()]

    def nodes_sorted(self) -> list[Node]:
        return [self.nodes[i] for i in self.node_ids()]

    def incident_edges(self, node_id: str) -> list[Edge]:
        return [e for e in self.edges_sorted() if node_id in e.endpoints()]

    def dim(self) -> Optional[int]:
        for n in self.nodes_sorted():
            if n.coord is not None:
                return len(n.coord)
        return None

    def defining_edges(self, node: Node) -> list[Edge]:
        """Edges that define a derived node's coordinate: incoming non-loop
        arrows for a centroid, outgoing non-loop arrows for a conjugate
        centroid (any state). Undirected edges and loops never define."""
        if node.kind == NodeKind.CENTROID:
            return [e for e in self.edges_sorted()
                    if e.directed and not e.is_loop() and e.head == node.id]
        if node.kind == NodeKind.CONJUGATE_CENTROID:
            return [e for e in self.edges_sorted()
                    if e.directed and not e.is_loop() and e.tail == node.id]
        return []

    def with_nodes(self, add: Iterable[Node] = (), drop: Iterable[str] = ()) -> Network:
        nodes = dict(self.nodes)
        for nid in drop:
            nodes.pop(nid, None)
        for n in add:
            nodes[n.id] = n
        return Network(nodes, dict(self.edges), self.generator_id)

    def with_edges(self, add: Iterable[Edge] = (), drop: Iterable[str] = ()) -> Network:
        edges = dict(self.edges)
        for eid in drop:
            edges.pop(eid, None)
        for e in add:
            edges[e.id] = e
        return Network(dict(self.nodes), edges, self.generator_id)


def build_network(nodes: Sequence[Node], edges: Sequence[Edge],
                  generator_id: str) -> Network:
    """Validated network: referential integrity, acyclic derived-coordinate
    dependencies, nonzero defining weight sums, consistent coordinate dims."""
    node_map: dict[str, Node] = {}
    for n in nodes:
        if n.id in node_map:
            raise NodeConflict(f"duplicate node id {n.id!r}")
        node_map[n.id] = n
    edge_map: dict[str, Edge] = {}
    for e in edges:
        if e.id in edge_map:
            raise EdgeOverlap(f"duplicate edge id {e.id!r}")
        edge_map[e.id] = e
    net = Network(node_map, edge_map, generator_id)
    validate_network(net)
    return net


def validate_network(net: Network) -> None:
    for e in net.edges.values():
        for nid in e.endpoints():
            if nid not in net.nodes:
                raise DanglingEndpoint(
                    f"edge {e.id!r} references missing node {nid!r}")
    dims = {len(n.coord) for n in net.nodes.values() if n.coord is not None}
    if len(dims) > 1:
        raise NodeConflict(f"inconsistent coordinate dimensions: {sorted(dims)}")
    _derived_order(net)  # raises CentroidCycle / ZeroCentroidWeight
    for n in net.nodes.values():
        if n.derived and any(not e.directed for e in net.incident_edges(n.id)):
            warnings.warn(
                f"undirected edge incident to derived node {n.id!r} does not "
                "contribute to its coordinate definition", stacklevel=2)


def _derived_order(net: Network) -> list[Node]:
    """Topological order of derived nodes; validates Sigma != 0 per node."""
    derived = [n for n in net.nodes_sorted() if n.derived]
    deps: dict[str, set[str]] = {}
    for n in derived:
        defs = net.defining_edges(n)
        total = sum(e.weight for e in defs)
        scale = sum(abs(e.weight) for e in defs)
        if abs(total) <= 1e-12 * (1.0 + scale):
            raise ZeroCentroidWeight(
                f"derived node {n.id!r} has defining weight sum {total}")
        opposite = [e.tail if n.kind == NodeKind.CENTROID else e.head for e in defs]
        deps[n.id] = {o for o in opposite if o in net.nodes and net.nodes[o].derived}
    order: list[Node] = []
    state: dict[str, int] = {}

    def visit(nid: str, stack: list[str]) -> None:
        if state.get(nid) == 2:
            return
        if state.get(nid) == 1:
            raise CentroidCycle(
                f"derived-coordinate cycle through {' -> '.join(stack + [nid])}")
        state[nid] = 1
        for dep in sorted(deps[nid]):
            visit(dep, stack + [nid])
        state[nid] = 2
        order.append(net.nodes[nid])

    for n in derived:
        visit(n.id, [])
    return order


def resolve_coordinates(net: Network, spec: ConvexFunctionSpec) -> dict[str, np.ndarray]:
    """Coordinates for every node: explicit ones as stored, centroids as the
    weight-normalized mean of their defining tails, conjugate centroids as the
    inverse gradient of the weight-normalized dual mean of their defining heads."""
    coords: dict[str, np.ndarray] = {}
    for n in net.nodes_sorted():
        if n.coord is not None:
            coords[n.id] = np.asarray(n.coord, dtype=float)
    for n in _derived_order(net):
        defs = net.defining_edges(n)
        total = sum(e.weight for e in defs)
        if n.kind == NodeKind.CENTROID:
            acc = sum(e.weight * coords[e.tail] for e in defs)
            coords[n.id] = acc / total
        else:
            acc = sum(e.weight * eval_grad(spec, coords[e.head]) for e in defs)
            coords[n.id] = eval_grad_conjugate(spec, acc / total)
    return coords


def compose(n1: Network, n2: Network) -> Network:
    """Disjoint-edge union; shared node ids must agree exactly."""
    if n1.generator_id != n2.generator_id:
        raise GeneratorMismatch(
            f"cannot compose networks over {n1.generator_id!r} and {n2.generator_id!r}")
    overlap = set(n1.edges) & set(n2.edges)
    if overlap:
        raise EdgeOverlap(f"edge ids in both networks: {sorted(overlap)}")
    for nid in set(n1.nodes) & set(n2.nodes):
        if n1.nodes[nid] != n2.nodes[nid]:
            raise NodeConflict(
                f"node {nid!r} differs between the networks being composed")
    nodes = {**n1.nodes, **n2.nodes}
    edges = {**n1.edges, **n2.edges}
    net = Network(nodes, edges, n1.generator_id)
    validate_network(net)
    return net


def empty_network(generator_id: str = "quadratic") -> Network:
    return Network({}, {}, generator_id)


def desugar_lines(net: Network) -> Network:
    """Replace every undirected edge by the antiparallel arrow pair with the
    same weight and state. Idempotent; leaves the network function unchanged."""
    if all(e.directed for e in net.edges.values()):
        return Network(dict(net.nodes), dict(net.edges), net.generator_id)
    edges: dict[str, Edge] = {}
    for e in net.edges_sorted():
        if e.directed:
            edges[e.id] = e
        else:
            fwd = Edge(f"{e.id}:f", e.tail, e.head, e.weight, e.state, directed=True)
            bwd = Edge(f"{e.id}:b", e.head, e.tail, e.weight, e.state, directed=True)
            edges[fwd.id] = fwd
            edges[bwd.id] = bwd
    return Network(dict(net.nodes), edges, net.generator_id)


# --- serialization -------------------------------------------------------------

def network_to_json(net: Network) -> dict:
    nodes = []
    for n in net.nodes_sorted():
        item: dict = {"id": n.id, "kind": n.kind.value, "state": n.state}
        if n.coord is not None:
            item["coord"] = list(n.coord)
        nodes.append(item)
    edges = []
    for e in net.edges_sorted():
        item = {"id": e.id, "weight": e.weight, "state": e.state}
        if e.directed:
            item["tail"], item["head"] = e.tail, e.head
        else:
            item["a"], item["b"] = e.tail, e.head
        edges.append(item)
    return {"generator": net.generator_id, "nodes": nodes, "edges": edges}


def network_from_json(data: dict) -> Network:
    nodes = [Node(id=str(n["id"]), kind=NodeKind(n.get("kind", "explicit")),
                  coord=tuple(n["coord"]) if "coord" in n else None,
                  state=n.get("state", ON))
             for n in data.get("nodes", [])]
    edges = []
    for e in data.get("edges", []):
        if "tail" in e or "head" in e:
            edges.append(Edge(id=str(e["id"]), tail=str(e["tail"]), head=str(e["head"]),
                              weight=e["weight"], state=e.get("state", ON), directed=True))
        else:
            edges.append(Edge(id=str(e["id"]), tail=str(e["a"]), head=str(e["b"]),
                              weight=e["weight"], state=e.get("state", ON), directed=False))
    return build_network(nodes, edges, data.get("generator", "quadratic"))


def save_network(net: Network, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(network_to_json(net), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_network(path: str) -> Network:
    with open(path, "r", encoding="utf-8") as fh:
        return network_from_json(json.load(fh))


_KIND_SHAPE = {NodeKind.EXPLICIT: "ellipse", NodeKind.CENTROID: "diamond",
               NodeKind.CONJUGATE_CENTROID: "box"}


def to_dot(net: Network, coords: Optional[dict[str, np.ndarray]] = None) -> str:
    """Graphviz rendering: solid = ON, dashed = OFF, weights as edge labels,
    derived nodes drawn with distinct shapes."""
    lines = ["digraph divergence_network {", '  rankdir="LR";']
    for n in net.nodes_sorted():
        style = "solid" if n.is_on() else "dashed"
        label = n.id
        c = None
        if n.coord is not None:
            c = n.coord
        elif coords is not None and n.id in coords:
            c = tuple(coords[n.id])
        if c is not None:
            label += "\\n(" + ", ".join(f"{v:g}" for v in c) + ")"
        lines.append(f'  "{n.id}" [shape={_KIND_SHAPE[n.kind]}, style={style}, '
                     f'label="{label}"];')
    for e in net.edges_sorted():
        style = "solid" if e.is_on() else "dashed"
        arrow = "" if e.directed else ", dir=none"
        lines.append(f'  "{e.tail}" -> "{e.head}" [label="{e.weight:g}", '
                     f'style={style}{arrow}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
