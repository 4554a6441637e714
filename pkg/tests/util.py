"""Shared test helpers."""

from __future__ import annotations

import numpy as np

from divnet import resolve_coordinates


def rel(a: float, b: float) -> float:
    return abs(a - b) / (1.0 + max(abs(a), abs(b)))


def structure_signature(net, spec):
    """Network shape up to element ids: node (kind, state, coordinate) multiset
    and edge multiset keyed by endpoint signatures."""
    coords = resolve_coordinates(net, spec)

    def nsig(nid):
        n = net.nodes[nid]
        return (n.kind.value, n.state,
                tuple(round(float(c), 9) for c in coords[nid]))

    nodes = tuple(sorted(nsig(nid) for nid in net.nodes))
    edges = []
    for e in net.edges.values():
        ends = (nsig(e.tail), nsig(e.head))
        if not e.directed:
            ends = tuple(sorted(ends))
        edges.append((e.directed, e.state, round(e.weight, 9), ends))
    return nodes, tuple(sorted(edges))


def finite_difference_grad(f, x, h_scale: float = 1e-6) -> np.ndarray:
    """Central finite differences, step h = h_scale * (1 + |x_mu|)."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for mu in range(x.size):
        h = h_scale * (1.0 + abs(x[mu]))
        xp, xm = x.copy(), x.copy()
        xp[mu] += h
        xm[mu] -= h
        out[mu] = (f(xp) - f(xm)) / (2.0 * h)
    return out
