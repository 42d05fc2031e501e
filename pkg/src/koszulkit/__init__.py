"""koszulkit: exact computational checks for adic and derived completion."""

from .errors import (Inconclusive, KoszulkitError, NotIdempotent, ParseError,
                     RingMismatch, SupportNotVerified, UnsupportedQuotient,
                     UnsupportedRing, ZeroInput)
from .linalg import Matrix, ModuleInvariant, merge_invariants, smith_normal_form
from .rings import (Fp, IdealSpec, Q, RingElement, RingMap, Z, ZLoc, Zmod,
                    annihilator_of, cokernel_invariant, counterexample_ring,
                    quotient_ring, square_zero, truncated_completion)

__all__ = [
    "Fp", "IdealSpec", "Inconclusive", "KoszulkitError", "Matrix",
    "ModuleInvariant", "NotIdempotent", "ParseError", "Q", "RingElement",
    "RingMap", "RingMismatch", "SupportNotVerified", "UnsupportedQuotient",
    "UnsupportedRing", "Z", "ZLoc", "Zmod", "ZeroInput", "annihilator_of",
    "cokernel_invariant", "counterexample_ring", "merge_invariants",
    "quotient_ring", "smith_normal_form", "square_zero", "truncated_completion",
]
