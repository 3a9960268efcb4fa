"""Exception types shared across the package."""


class ElladicError(Exception):
    pass


class NotAUnit(ElladicError):
    """Inversion was attempted on an element divisible by the prime."""


class PreconditionViolated(ElladicError):
    """An operation was called outside its stated domain."""


class OddTrace(ElladicError):
    """Theta is undefined at ell=2 for matrices of odd trace."""


class CapExceeded(ElladicError):
    """A closure enumeration grew past the configured element cap."""

    def __init__(self, cap, message=None):
        self.cap = cap
        super().__init__(message or f"closure exceeded cap of {cap} elements")


class InsufficientPrecision(ElladicError):
    """The working precision N is too small for an honest check."""

    def __init__(self, required, message=None):
        self.required = required
        super().__init__(message or f"requires precision N >= {required}")


class CaseNotCovered(ElladicError):
    """Internal assertion: a case excluded by the classification occurred."""


class UnclassifiableInternal(ElladicError):
    """Internal assertion: the subgroup classification is exhaustive."""


class InvalidParams(ElladicError):
    """A fixture or CLI call received parameters outside its domain."""


class MagnitudeOverflow(ElladicError):
    """A magnitude computation exceeded the configured digit budget."""
