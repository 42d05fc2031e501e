"""Exception types shared across the toolkit.

Names follow the error contracts of the individual operations.  `Inconclusive`
is raised only where an operation has no decision procedure for the given
input class; operations whose *result* can be undecided return a verdict value
instead of raising.
"""


class KoszulkitError(Exception):
    """Base class for all toolkit errors."""


class UnsupportedRing(KoszulkitError):
    """The ring class does not support the requested computation."""


class UnsupportedQuotient(KoszulkitError):
    """The quotient ring is not representable in a supported ring kind."""


class RingMismatch(KoszulkitError):
    """Operands live over different rings."""


class Inconclusive(KoszulkitError):
    """No decision procedure exists for this element/class combination."""


class NotIdempotent(KoszulkitError):
    """Input matrix fails the idempotency precondition."""


class ZeroInput(KoszulkitError):
    """The descent step received an input with vanishing bottom homology."""


class SupportNotVerified(KoszulkitError):
    """Support containment in the target closed subset could not be verified."""


class ParseError(KoszulkitError):
    """Malformed textual or JSON representation of a toolkit object."""
