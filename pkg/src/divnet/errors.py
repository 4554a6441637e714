"""Exception hierarchy for the divergence-network engine."""

from __future__ import annotations


class DivnetError(Exception):
    """Base class for all engine errors."""

    code = "error"


# --- convex generators -----------------------------------------------------

class DomainError(DivnetError):
    """A point lies outside the generator's domain."""

    code = "domain_error"


class DualDomainError(DivnetError):
    """A dual point lies outside the range of the gradient map."""

    code = "dual_domain_error"


class ConvergenceError(DivnetError):
    """A numeric conjugation / inversion routine failed to converge."""

    code = "convergence_error"


# --- network model ----------------------------------------------------------

class NetworkError(DivnetError):
    code = "network_error"


class DanglingEndpoint(NetworkError):
    """An edge references a node id that is not in the network."""

    code = "dangling_endpoint"


class CentroidCycle(NetworkError):
    """Derived-coordinate dependencies form a cycle."""

    code = "centroid_cycle"


class ZeroCentroidWeight(NetworkError):
    """A derived node's defining weight sum is zero."""

    code = "zero_centroid_weight"


class EdgeOverlap(NetworkError):
    """Composition preconditions violated: shared edge ids."""

    code = "edge_overlap"


class NodeConflict(NetworkError):
    """Composition preconditions violated: same node id, different node."""

    code = "node_conflict"


class GeneratorMismatch(NetworkError):
    """Composition of networks with different generator ids."""

    code = "generator_mismatch"


# --- builders ----------------------------------------------------------------

class MassMismatch(DivnetError):
    """f-network masses do not balance (sum p != sum q)."""

    code = "mass_mismatch"


class NonPositive(DivnetError):
    """f-network masses must be strictly positive."""

    code = "non_positive"


class GeneratorNotAdmissible(DivnetError):
    """Generator does not satisfy the f-network requirement F(1)=0."""

    code = "generator_not_admissible"


# --- rewriting ----------------------------------------------------------------

class RewriteError(DivnetError):
    code = "rewrite_error"


class StaleMatch(RewriteError):
    """The match no longer fits the network it is applied to."""

    code = "stale_match"


class PhiViolation(RewriteError):
    """A rule application failed the network-function preservation check."""

    code = "phi_violation"

    def __init__(self, message: str, phi_before: float | None = None,
                 phi_after: float | None = None, residual: float | None = None):
        super().__init__(message)
        self.phi_before = phi_before
        self.phi_after = phi_after
        self.residual = residual


# --- identities ----------------------------------------------------------------

class ConstraintError(DivnetError):
    """Identity-specific input constraint violated."""

    code = "constraint_error"
