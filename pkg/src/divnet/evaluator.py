"""The network function: per-edge and per-node contributions and their sum.

Edge value: an ON arrow P->Q of weight w contributes -w * <P, grad F(Q)>;
OFF edges contribute zero. Node value: an ON node at P with in-weight `a`
and out-weight `b` (summing ALL incident edge weights regardless of state,
lines counting on both sides, loops on both sides of their node) contributes
a*F*(P*) + b*F(P), with F*(P*) taken through the identity <P,P*> - F(P).
OFF and isolated nodes contribute zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .convex import ConvexFunctionSpec, eval_f, eval_grad
from .netmodel import Network
from .netmodel import resolve_coordinates as _resolve


@dataclass
class PhiBreakdown:
    total: float = 0.0
    node_terms: dict[str, float] = field(default_factory=dict)
    edge_terms: dict[str, float] = field(default_factory=dict)
    in_weights: dict[str, float] = field(default_factory=dict)
    out_weights: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"total": self.total,
                "node_terms": dict(sorted(self.node_terms.items())),
                "edge_terms": dict(sorted(self.edge_terms.items())),
                "in_weights": dict(sorted(self.in_weights.items())),
                "out_weights": dict(sorted(self.out_weights.items()))}


def phi_breakdown(net: Network, spec: ConvexFunctionSpec,
                  coords: dict[str, np.ndarray] | None = None) -> PhiBreakdown:
    """Full per-element accounting of the network function.

    Accumulation order is fixed (sorted ids) so results are reproducible
    bit for bit.
    """
    if coords is None:
        coords = _resolve(net, spec)
    bd = PhiBreakdown()
    bd.in_weights = {nid: 0.0 for nid in net.node_ids()}
    bd.out_weights = {nid: 0.0 for nid in net.node_ids()}

    grads: dict[str, np.ndarray] = {}

    def grad_at(nid: str) -> np.ndarray:
        if nid not in grads:
            grads[nid] = eval_grad(spec, coords[nid])
        return grads[nid]

    for e in net.edges_sorted():
        if e.directed:
            bd.out_weights[e.tail] += e.weight
            bd.in_weights[e.head] += e.weight
        else:
            # a line acts as the antiparallel arrow pair
            for nid in e.endpoints():
                bd.in_weights[nid] += e.weight
                bd.out_weights[nid] += e.weight
        if not e.is_on():
            bd.edge_terms[e.id] = 0.0
            continue
        if e.directed:
            term = -e.weight * float(np.dot(coords[e.tail], grad_at(e.head)))
        else:
            term = -e.weight * (float(np.dot(coords[e.tail], grad_at(e.head)))
                                + float(np.dot(coords[e.head], grad_at(e.tail))))
        bd.edge_terms[e.id] = term

    degree = {nid: 0 for nid in net.node_ids()}
    for e in net.edges.values():
        degree[e.tail] += 1
        degree[e.head] += 1

    for n in net.nodes_sorted():
        if not n.is_on() or degree[n.id] == 0:
            bd.node_terms[n.id] = 0.0
            continue
        p = coords[n.id]
        fp = eval_f(spec, p)
        conj = float(np.dot(p, grad_at(n.id))) - fp  # F*(P*) via the identity
        bd.node_terms[n.id] = bd.in_weights[n.id] * conj + bd.out_weights[n.id] * fp

    bd.total = (sum(bd.node_terms[i] for i in sorted(bd.node_terms))
                + sum(bd.edge_terms[i] for i in sorted(bd.edge_terms)))
    return bd


def phi(net: Network, spec: ConvexFunctionSpec,
        coords: dict[str, np.ndarray] | None = None) -> float:
    """Value of the network function."""
    return phi_breakdown(net, spec, coords=coords).total
