"""Exception types shared across the package.

Everything derives from ValueError so that careless callers still get a
sensible failure; the CLI maps the distinct classes to distinct exit codes.
"""


class FormatError(ValueError):
    """A text artifact (family / form / bundle file) failed to parse."""


class ShapeMismatchError(ValueError):
    """Operands live over different universe shapes."""


class UnsatisfiablePredicateError(ValueError):
    """A window predicate admits no satisfying subset (p(P) = 0)."""


class UniverseTooSmallError(ValueError):
    """A construction ran out of room (e.g. no block extractable)."""


class CapExceededError(ValueError):
    """A configured enumeration budget or vertex cap was exceeded."""


class ContractViolationError(AssertionError):
    """A guaranteed inequality failed where the guarantee was demanded.

    Used as a test-harness signal: raised only when the caller explicitly
    expects the guarantee preconditions to hold.
    """
