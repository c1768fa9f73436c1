"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: configuration / precondition problems
(ValidationError and subclasses) map to exit status 2, resource and budget
problems to exit status 3.
"""


class NilskewError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(NilskewError):
    """A precondition or configuration constraint was violated."""


class UndecidableBandError(ValidationError):
    """A frequency lies beyond the computed convergents, so its resonance
    band membership cannot be decided."""


class SmallDivisorError(ValidationError):
    """A cobounding denominator fell below the configured floor; the
    frequency was misclassified or the working precision is insufficient."""


class PrecisionExhaustedError(ValidationError):
    """The working precision cannot certify the next partial quotient."""


class SieveTooSmallError(ValidationError):
    """A correlation sum was requested beyond the sieve table's range."""


class ResourceBudgetError(NilskewError):
    """An operation would exceed its configured step or memory budget."""


class SizeOverflowError(ResourceBudgetError):
    """A grid or table would exceed the configured materialization budget."""
