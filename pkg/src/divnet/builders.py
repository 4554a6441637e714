"""Constructors for the named divergence networks and the closed-form
reference divergences used to cross-check them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .convex import (ConvexFunctionSpec, eval_conjugate, eval_f, eval_grad,
                     eval_grad_conjugate)
from .errors import (DomainError, GeneratorNotAdmissible, MassMismatch,
                     NonPositive, ZeroCentroidWeight)
from .netmodel import Edge, Network, Node, NodeKind, build_network


@dataclass(frozen=True)
class WeightedPoints:
    """Points P_1..P_M with weights a_1..a_M, nonzero total weight."""

    points: tuple[tuple[float, ...], ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        pts = tuple(tuple(float(c) for c in p) for p in self.points)
        wts = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)
        if len(pts) != len(wts):
            raise ValueError("points and weights must have equal lengths")
        if len(pts) == 0:
            raise ValueError("need at least one point")
        if len({len(p) for p in pts}) > 1:
            raise ValueError("points must share one dimension")
        if abs(sum(wts)) <= 1e-12 * (1.0 + sum(abs(w) for w in wts)):
            raise ZeroCentroidWeight("total weight must be nonzero")

    @property
    def total(self) -> float:
        return sum(self.weights)

    def centroid(self) -> np.ndarray:
        acc = sum(w * np.asarray(p) for p, w in zip(self.points, self.weights))
        return acc / self.total


def _check_domain(spec: ConvexFunctionSpec, *points: Sequence[float]) -> None:
    for p in points:
        v = np.asarray(p, dtype=float)
        if v.shape != (spec.dim,):
            raise DomainError(f"expected {spec.dim}-vectors, got shape {v.shape}")
        if not spec.domain.contains(v):
            raise DomainError(f"{list(v)} outside domain of {spec.id!r}")


# --- network constructors ------------------------------------------------------

def bregman_net(spec: ConvexFunctionSpec, p: Sequence[float], q: Sequence[float],
                alpha: float, *, p_id: str = "p", q_id: str = "q",
                edge_id: str = "e") -> Network:
    """ON nodes at P and Q joined by one ON arrow P->Q of weight alpha.

    Evaluates to alpha * B_F(P, Q); under the coordinate identification with
    an affine chart this is also the canonical divergence of a dually flat
    space.
    """
    _check_domain(spec, p, q)
    nodes = [Node(p_id, coord=tuple(p)), Node(q_id, coord=tuple(q))]
    edges = [Edge(edge_id, p_id, q_id, alpha)]
    return build_network(nodes, edges, spec.id)


def sym_bregman_net(spec: ConvexFunctionSpec, p: Sequence[float], q: Sequence[float],
                    alpha: float, *, p_id: str = "p", q_id: str = "q",
                    edge_id: str = "e") -> Network:
    """ON nodes at P and Q joined by one ON line of weight alpha; evaluates to
    alpha * (B_F(P,Q) + B_F(Q,P))."""
    _check_domain(spec, p, q)
    nodes = [Node(p_id, coord=tuple(p)), Node(q_id, coord=tuple(q))]
    edges = [Edge(edge_id, p_id, q_id, alpha, directed=False)]
    return build_network(nodes, edges, spec.id)


def jensen_net(spec: ConvexFunctionSpec, wp: WeightedPoints,
               *, prefix: str = "") -> Network:
    """ON points fanned by ON arrows into an ON centroid; evaluates to
    Sigma * J_F over the weighted points."""
    _check_domain(spec, *wp.points)
    c_id = f"{prefix}c"
    nodes = [Node(f"{prefix}p{i + 1}", coord=p) for i, p in enumerate(wp.points)]
    nodes.append(Node(c_id, kind=NodeKind.CENTROID))
    edges = [Edge(f"{prefix}e{i + 1}", f"{prefix}p{i + 1}", c_id, w)
             for i, w in enumerate(wp.weights)]
    return build_network(nodes, edges, spec.id)


def conj_jensen_net(spec: ConvexFunctionSpec, wp: WeightedPoints,
                    *, prefix: str = "") -> Network:
    """ON arrows from an ON conjugate centroid out to the ON points;
    evaluates to Sigma * J_{F*} over the dual points."""
    _check_domain(spec, *wp.points)
    c_id = f"{prefix}chat"
    nodes = [Node(f"{prefix}p{i + 1}", coord=p) for i, p in enumerate(wp.points)]
    nodes.append(Node(c_id, kind=NodeKind.CONJUGATE_CENTROID))
    edges = [Edge(f"{prefix}e{i + 1}", c_id, f"{prefix}p{i + 1}", w)
             for i, w in enumerate(wp.weights)]
    return build_network(nodes, edges, spec.id)


def f_net(spec: ConvexFunctionSpec, p: Sequence[float], q: Sequence[float],
          *, prefix: str = "") -> Network:
    """Jensen topology over the scalar ratios p_i/q_i with weights q_i; the
    centroid resolves to 1 and the value is Sigma * D_f(P,Q).

    Requires a 1-dimensional generator with F(1) = 0 and balanced positive
    masses.
    """
    if spec.dim != 1:
        raise GeneratorNotAdmissible(
            f"f-networks need a 1-dimensional generator, got dim {spec.dim}")
    if not spec.f_at_one_is_zero:
        raise GeneratorNotAdmissible(
            f"generator {spec.id!r} does not satisfy F(1)=0")
    pv = np.asarray(p, dtype=float)
    qv = np.asarray(q, dtype=float)
    if pv.shape != qv.shape or pv.ndim != 1 or pv.size == 0:
        raise ValueError("p and q must be equal-length nonempty vectors")
    if np.any(pv <= 0.0) or np.any(qv <= 0.0):
        raise NonPositive("all masses must be strictly positive")
    sp, sq = float(pv.sum()), float(qv.sum())
    if abs(sp - sq) > 1e-9 * (1.0 + max(abs(sp), abs(sq))):
        raise MassMismatch(f"sum p = {sp} differs from sum q = {sq}")
    wp = WeightedPoints(tuple((float(a / b),) for a, b in zip(pv, qv)),
                        tuple(float(b) for b in qv))
    return jensen_net(spec, wp, prefix=prefix)


# --- closed-form reference divergences -------------------------------------------

def bregman_div(spec: ConvexFunctionSpec, p: Sequence[float],
                q: Sequence[float]) -> float:
    """B_F(P,Q) = F(P) - F(Q) - <grad F(Q), P - Q>."""
    pv = np.asarray(p, dtype=float)
    qv = np.asarray(q, dtype=float)
    return eval_f(spec, pv) - eval_f(spec, qv) - float(
        np.dot(eval_grad(spec, qv), pv - qv))


def sym_bregman_div(spec: ConvexFunctionSpec, p: Sequence[float],
                    q: Sequence[float]) -> float:
    return bregman_div(spec, p, q) + bregman_div(spec, q, p)


def jensen_div(spec: ConvexFunctionSpec, wp: WeightedPoints) -> float:
    """J_F = (1/Sigma) sum a_i F(P_i) - F(C)."""
    total = wp.total
    avg = sum(w * eval_f(spec, p) for p, w in zip(wp.points, wp.weights)) / total
    return avg - eval_f(spec, wp.centroid())


def conj_jensen_div(spec: ConvexFunctionSpec, wp: WeightedPoints) -> float:
    """J_{F*} over the dual points, evaluated with the conjugate's own
    closed/numeric form (independent of the primal identity path)."""
    total = wp.total
    duals = [eval_grad(spec, p) for p in wp.points]
    avg = sum(w * eval_conjugate(spec, d) for d, w in zip(duals, wp.weights)) / total
    dual_mean = sum(w * d for d, w in zip(duals, wp.weights)) / total
    return avg - eval_conjugate(spec, dual_mean)


def f_div(spec: ConvexFunctionSpec, p: Sequence[float], q: Sequence[float]) -> float:
    """D_f(P,Q) = (1/Sigma) sum q_i F(p_i / q_i)."""
    pv = np.asarray(p, dtype=float)
    qv = np.asarray(q, dtype=float)
    if np.any(pv <= 0.0) or np.any(qv <= 0.0):
        raise NonPositive("all masses must be strictly positive")
    total = float(qv.sum())
    return float(sum(b * eval_f(spec, np.array([a / b])) for a, b in zip(pv, qv))) / total


def conjugate_centroid_dual(spec: ConvexFunctionSpec, wp: WeightedPoints) -> np.ndarray:
    """Dual coordinate of the conjugate centroid: the weighted dual mean."""
    duals = [eval_grad(spec, p) for p in wp.points]
    return sum(w * d for d, w in zip(duals, wp.weights)) / wp.total


def conjugate_centroid(spec: ConvexFunctionSpec, wp: WeightedPoints) -> np.ndarray:
    return eval_grad_conjugate(spec, conjugate_centroid_dual(spec, wp))
