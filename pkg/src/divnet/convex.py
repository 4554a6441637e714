"""Differentiable strictly convex generators: F, its gradient, the convex
conjugate F*, and the inverse gradient, with closed-form built-ins and
numeric fallbacks for user-defined separable generators."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize

from .errors import ConvergenceError, DomainError, DualDomainError

Vector = np.ndarray


@dataclass(frozen=True)
class Domain:
    """Membership descriptor for the primal or dual space.

    kind: "all" (all of d-space), "positive" (strictly positive orthant),
    "negative" (strictly negative orthant), or "custom" with a predicate.
    """

    kind: str = "all"
    predicate: Optional[Callable[[Vector], bool]] = None
    description: str = ""

    def contains(self, x: Vector) -> bool:
        if not np.all(np.isfinite(x)):
            return False
        if self.kind == "all":
            return True
        if self.kind == "positive":
            return bool(np.all(x > 0.0))
        if self.kind == "negative":
            return bool(np.all(x < 0.0))
        if self.kind == "custom":
            assert self.predicate is not None
            return bool(self.predicate(x))
        raise ValueError(f"unknown domain kind {self.kind!r}")

    def sample(self, rng: np.random.Generator, dim: int) -> Vector:
        """Random in-domain point for property tests: uniform on [-5,5]^d for
        full-space domains, log-uniform on [1e-2, 1e2]^d for orthants."""
        if self.kind == "all":
            return rng.uniform(-5.0, 5.0, size=dim)
        if self.kind == "positive":
            return np.exp(rng.uniform(np.log(1e-2), np.log(1e2), size=dim))
        if self.kind == "negative":
            return -np.exp(rng.uniform(np.log(1e-2), np.log(1e2), size=dim))
        raise ValueError(f"cannot sample domain kind {self.kind!r}")


@dataclass(frozen=True)
class ConvexFunctionSpec:
    """A generator F with evaluators for F, grad F, F*, and (grad F)^-1.

    Immutable after construction; every evaluator is pure.
    """

    id: str
    dim: int
    domain: Domain
    f: Callable[[Vector], float]
    grad: Callable[[Vector], Vector]
    conjugate: Optional[Callable[[Vector], float]] = None
    grad_conjugate: Optional[Callable[[Vector], Vector]] = None
    dual_domain: Domain = field(default_factory=Domain)
    f_at_one_is_zero: bool = False
    # set for separable generators: scalar derivative of the per-coordinate
    # term, used by the bisection fallback of eval_grad_conjugate
    coordinatewise_grad: Optional[Callable[[int, float], float]] = None
    coordinatewise_positive: bool = False

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")


def _as_vec(spec: ConvexFunctionSpec, x: Sequence[float]) -> Vector:
    v = np.asarray(x, dtype=float)
    if v.shape != (spec.dim,):
        raise DomainError(
            f"expected a {spec.dim}-vector for generator {spec.id!r}, got shape {v.shape}")
    return v


def eval_f(spec: ConvexFunctionSpec, x: Sequence[float]) -> float:
    """F(x); raises DomainError outside the domain."""
    v = _as_vec(spec, x)
    if not spec.domain.contains(v):
        raise DomainError(f"{list(v)} outside domain of generator {spec.id!r}")
    return float(spec.f(v))


def eval_grad(spec: ConvexFunctionSpec, x: Sequence[float]) -> Vector:
    """grad F(x), the dual coordinate of x."""
    v = _as_vec(spec, x)
    if not spec.domain.contains(v):
        raise DomainError(f"{list(v)} outside domain of generator {spec.id!r}")
    return np.asarray(spec.grad(v), dtype=float)


def eval_conjugate(spec: ConvexFunctionSpec, y: Sequence[float]) -> float:
    """F*(y).

    Resolution order: closed form if present; else the identity
    F*(y) = <x, y> - F(x) at x = grad_conjugate(y); else numeric supremum.
    """
    v = _as_vec(spec, y)
    if not spec.dual_domain.contains(v):
        raise DualDomainError(
            f"{list(v)} outside dual domain of generator {spec.id!r}")
    if spec.conjugate is not None:
        return float(spec.conjugate(v))
    try:
        x = eval_grad_conjugate(spec, v)
        return float(np.dot(x, v) - spec.f(x))
    except ConvergenceError:
        return numeric_conjugate_supremum(spec, v)


def eval_grad_conjugate(spec: ConvexFunctionSpec, y: Sequence[float]) -> Vector:
    """The x with grad F(x) = y (inverse gradient / dual-to-primal map)."""
    v = _as_vec(spec, y)
    if not spec.dual_domain.contains(v):
        raise DualDomainError(
            f"{list(v)} outside dual domain of generator {spec.id!r}")
    if spec.grad_conjugate is not None:
        return np.asarray(spec.grad_conjugate(v), dtype=float)
    if spec.coordinatewise_grad is not None:
        return _invert_separable_grad(spec, v)
    return _invert_grad_newton(spec, v)


# --- numeric fallbacks ---------------------------------------------------------

def _invert_separable_grad(spec: ConvexFunctionSpec, y: Vector) -> Vector:
    """Per-coordinate bisection on g(t) = f_mu'(t) - y_mu (g strictly increasing)."""
    out = np.empty(spec.dim)
    lo0 = 1e-12 if spec.coordinatewise_positive else -1.0
    for mu in range(spec.dim):
        g = lambda t, mu=mu: spec.coordinatewise_grad(mu, t) - y[mu]  # noqa: E731
        lo, hi = (lo0, 1.0) if spec.coordinatewise_positive else (-1.0, 1.0)
        for _ in range(200):
            if g(lo) <= 0.0:
                break
            lo = lo / 2.0 if spec.coordinatewise_positive else lo * 2.0
        else:
            raise ConvergenceError(
                f"could not bracket inverse gradient below, coord {mu}, y={y[mu]}")
        for _ in range(200):
            if g(hi) >= 0.0:
                break
            hi *= 2.0
        else:
            raise ConvergenceError(
                f"could not bracket inverse gradient above, coord {mu}, y={y[mu]}")
        out[mu] = optimize.brentq(g, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=200)
    return out


def _invert_grad_newton(spec: ConvexFunctionSpec, y: Vector,
                        max_iter: int = 100) -> Vector:
    """Damped Newton on grad F(x) = y with a finite-difference Jacobian and
    backtracking into the domain."""
    x = spec.domain.sample(np.random.default_rng(0), spec.dim)
    for _ in range(max_iter):
        r = spec.grad(x) - y
        if np.max(np.abs(r)) <= 1e-12 * (1.0 + np.max(np.abs(y))):
            return x
        jac = np.empty((spec.dim, spec.dim))
        for mu in range(spec.dim):
            h = 1e-7 * (1.0 + abs(x[mu]))
            xp, xm = x.copy(), x.copy()
            xp[mu] += h
            xm[mu] -= h
            if not spec.domain.contains(xm):
                xm = x.copy()
                h_eff = h
            else:
                h_eff = 2 * h
            jac[:, mu] = (spec.grad(xp) - spec.grad(xm)) / h_eff
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"singular Jacobian inverting grad: {exc}") from exc
        t = 1.0
        cand = x + step
        while t > 1e-12 and not (spec.domain.contains(cand)
                                 and np.max(np.abs(spec.grad(cand) - y)) <= np.max(np.abs(r))):
            t /= 2.0
            cand = x + t * step
        if not spec.domain.contains(cand):
            raise ConvergenceError("Newton step left the domain")
        x = cand
    raise ConvergenceError(f"inverse gradient did not converge for y={list(y)}")


def numeric_conjugate_supremum(spec: ConvexFunctionSpec, y: Sequence[float]) -> float:
    """sup_x { <y,x> - F(x) } by direct numeric optimization.

    Slow path; also useful as an independent cross-check of closed forms.
    """
    v = _as_vec(spec, y)
    x0 = spec.domain.sample(np.random.default_rng(1), spec.dim)

    def obj(x: Vector) -> float:
        if not spec.domain.contains(x):
            return np.inf
        return spec.f(x) - float(np.dot(v, x))

    res = optimize.minimize(obj, x0, method="Nelder-Mead",
                            options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 20000,
                                     "maxfev": 20000})
    if not res.success and res.fun in (np.inf, -np.inf):
        raise ConvergenceError(f"numeric supremum failed for y={list(v)}")
    return float(-res.fun)


# --- built-in generators ----------------------------------------------------------

def make_quadratic(dim: int) -> ConvexFunctionSpec:
    """F(x) = 1/2 sum x_mu^2 (self-conjugate; gradient is the identity)."""
    return ConvexFunctionSpec(
        id="quadratic",
        dim=dim,
        domain=Domain("all", description="R^d"),
        f=lambda x: 0.5 * float(np.dot(x, x)),
        grad=lambda x: x.copy(),
        conjugate=lambda y: 0.5 * float(np.dot(y, y)),
        grad_conjugate=lambda y: y.copy(),
        dual_domain=Domain("all", description="R^d"),
        f_at_one_is_zero=False,
        coordinatewise_grad=lambda mu, t: t,
    )


def make_negative_entropy(dim: int) -> ConvexFunctionSpec:
    """F(x) = sum x_mu ln x_mu on the positive orthant."""
    return ConvexFunctionSpec(
        id="negative_entropy",
        dim=dim,
        domain=Domain("positive", description="x > 0"),
        f=lambda x: float(np.sum(x * np.log(x))),
        grad=lambda x: 1.0 + np.log(x),
        conjugate=lambda y: float(np.sum(np.exp(y - 1.0))),
        grad_conjugate=lambda y: np.exp(y - 1.0),
        dual_domain=Domain("all", description="R^d"),
        f_at_one_is_zero=True,
        coordinatewise_grad=lambda mu, t: 1.0 + math.log(t),
        coordinatewise_positive=True,
    )


def make_negative_log(dim: int) -> ConvexFunctionSpec:
    """F(x) = -sum ln x_mu on the positive orthant (dual domain y < 0)."""
    return ConvexFunctionSpec(
        id="negative_log",
        dim=dim,
        domain=Domain("positive", description="x > 0"),
        f=lambda x: -float(np.sum(np.log(x))),
        grad=lambda x: -1.0 / x,
        conjugate=lambda y: float(np.sum(-1.0 - np.log(-y))),
        grad_conjugate=lambda y: -1.0 / y,
        dual_domain=Domain("negative", description="y < 0"),
        f_at_one_is_zero=True,
        coordinatewise_grad=lambda mu, t: -1.0 / t,
        coordinatewise_positive=True,
    )


#: per-coordinate basis for user-defined separable generators:
#: a*x^2 + b*x ln x + c*(-ln x) + d*x + e
SEPARABLE_BASIS = ("x^2", "x ln x", "-ln x", "x", "1")


def make_separable(spec_id: str, coefficients: Sequence[Sequence[float]]) -> ConvexFunctionSpec:
    """User-defined separable generator from per-coordinate basis coefficients.

    coefficients[mu] = (a, b, c, d, e) for the term
    a*t^2 + b*t ln t + c*(-ln t) + d*t + e in coordinate mu.
    Strict convexity requires 2a + b/t + c/t^2 > 0 on the domain; the
    constructor checks the sufficient sign conditions.
    """
    coeffs = np.asarray(coefficients, dtype=float)
    if coeffs.ndim != 2 or coeffs.shape[1] != 5:
        raise ValueError("coefficients must be a (dim, 5) table (a, b, c, d, e)")
    dim = coeffs.shape[0]
    a, b, c, d, e = (coeffs[:, k] for k in range(5))
    needs_positive = bool(np.any(b != 0.0) or np.any(c != 0.0))
    if needs_positive:
        if np.any(b < 0.0) or np.any(c < 0.0) or np.any(a < 0.0):
            raise ValueError("on the positive orthant require a, b, c >= 0")
        if np.any((a == 0.0) & (b == 0.0) & (c == 0.0)):
            raise ValueError("every coordinate needs a strictly convex term")
    else:
        if np.any(a <= 0.0):
            raise ValueError("full-space separable generators require a > 0")

    def f(x: Vector) -> float:
        total = float(np.dot(a, x * x) + np.dot(d, x) + np.sum(e))
        if needs_positive:
            lx = np.log(x)
            total += float(np.dot(b, x * lx) - np.dot(c, lx))
        return total

    def grad(x: Vector) -> Vector:
        g = 2.0 * a * x + d
        if needs_positive:
            g = g + b * (1.0 + np.log(x)) - c / x
        return g

    def cw_grad(mu: int, t: float) -> float:
        g = 2.0 * a[mu] * t + d[mu]
        if needs_positive:
            g += b[mu] * (1.0 + math.log(t)) - c[mu] / t
        return g

    # dual range per coordinate: unbounded except a=b=0, c>0 where f' < d
    if needs_positive and np.any((a == 0.0) & (b == 0.0)):
        upper = np.where((a == 0.0) & (b == 0.0), d, np.inf)
        dual = Domain("custom", predicate=lambda y: bool(np.all(y < upper)),
                      description="componentwise below the gradient supremum")
    else:
        dual = Domain("all", description="R^d")

    f_one = abs(float(np.sum(a) + np.sum(d) + np.sum(e))) < 1e-12 if dim >= 1 else False

    return ConvexFunctionSpec(
        id=spec_id,
        dim=dim,
        domain=Domain("positive", description="x > 0") if needs_positive
        else Domain("all", description="R^d"),
        f=f,
        grad=grad,
        conjugate=None,
        grad_conjugate=None,
        dual_domain=dual,
        f_at_one_is_zero=f_one,
        coordinatewise_grad=cw_grad,
        coordinatewise_positive=needs_positive,
    )


# --- registry ----------------------------------------------------------------

BUILTIN_GENERATORS: dict[str, Callable[[int], ConvexFunctionSpec]] = {
    "quadratic": make_quadratic,
    "negative_entropy": make_negative_entropy,
    "negative_log": make_negative_log,
}

_cache: dict[tuple[str, int], ConvexFunctionSpec] = {}


def get_generator(name: str, dim: int) -> ConvexFunctionSpec:
    """Resolve a generator by registered id, or by path to a declarative
    separable spec file (JSON: {"id": ..., "coefficients": [[a,b,c,d,e], ...]})."""
    key = (name, dim)
    if key in _cache:
        return _cache[key]
    if name in BUILTIN_GENERATORS:
        spec = BUILTIN_GENERATORS[name](dim)
    elif name.endswith(".json"):
        spec = load_generator_file(name)
        if spec.dim != dim:
            raise DomainError(
                f"generator file {name!r} has dim {spec.dim}, network needs {dim}")
    else:
        raise KeyError(f"unknown generator {name!r}; "
                       f"known: {sorted(BUILTIN_GENERATORS)} or a .json spec file")
    _cache[key] = spec
    return spec


def load_generator_file(path: str) -> ConvexFunctionSpec:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return make_separable(data.get("id", path), data["coefficients"])
