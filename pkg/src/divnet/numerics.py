"""Shared numeric policy: relative residuals, tolerances, output formatting."""

from __future__ import annotations

import os

import numpy as np

# Default relative tolerance for all network-function comparisons.
DEFAULT_TOL = 1e-9

# Tolerance used when matching a node coordinate against a computed centroid.
COORD_MATCH_TOL = 1e-9


def rel_residual(a: float, b: float) -> float:
    """|a-b| / (1 + max(|a|,|b|))."""
    return abs(a - b) / (1.0 + max(abs(a), abs(b)))


def rel_close(a: float, b: float, tol: float = DEFAULT_TOL) -> bool:
    return rel_residual(a, b) <= tol


def vec_close(a, b, tol: float = COORD_MATCH_TOL) -> bool:
    """Componentwise relative closeness of two coordinate vectors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        return False
    scale = 1.0 + np.maximum(np.abs(a), np.abs(b))
    return bool(np.all(np.abs(a - b) <= tol * scale))


def configured_tol(override: float | None = None) -> float:
    """Resolve the active tolerance: explicit override > DIVNET_TOL env > default."""
    if override is not None:
        return float(override)
    env = os.environ.get("DIVNET_TOL")
    if env:
        return float(env)
    return DEFAULT_TOL


def fmt(value: float) -> str:
    """Fixed 12-decimal rendering used by every CLI numeric output."""
    return f"{value:.12f}"


def spawn_rngs(seed: int, n: int) -> list[np.random.Generator]:
    """n independent generators split off a single 64-bit seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]
