"""Divergence networks: weighted ON/OFF graphs whose network function
evaluates to divergence values, plus value-preserving deformation rules,
identity verification, a CLI, and an HTTP session service."""

from .builders import (WeightedPoints, bregman_div, bregman_net,
                       conj_jensen_div, conj_jensen_net, f_div, f_net,
                       jensen_div, jensen_net, sym_bregman_div,
                       sym_bregman_net)
from .convex import (BUILTIN_GENERATORS, ConvexFunctionSpec, Domain,
                     eval_conjugate, eval_f, eval_grad, eval_grad_conjugate,
                     get_generator, make_negative_entropy, make_negative_log,
                     make_quadratic, make_separable)
from .errors import (CentroidCycle, ConstraintError, ConvergenceError,
                     DanglingEndpoint, DivnetError, DomainError,
                     DualDomainError, EdgeOverlap, GeneratorMismatch,
                     GeneratorNotAdmissible, MassMismatch, NodeConflict,
                     NonPositive, PhiViolation, StaleMatch,
                     ZeroCentroidWeight)
from .evaluator import PhiBreakdown, phi, phi_breakdown
from .identities import (IdentityReport, check_identity, identity_sides,
                         run_identity_suite, special_case_suite)
from .netmodel import (Edge, Network, Node, NodeKind, build_network, compose,
                       desugar_lines, empty_network, load_network,
                       network_from_json, network_to_json,
                       resolve_coordinates, save_network, to_dot)
from .rewrite import (Derivation, DerivationStep, ReplayReport, RuleId,
                      RuleMatch, all_matches, apply_match, list_matches,
                      record_script, replay, validate_match)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
