"""Exception types shared across the package."""


class ComplianceLabError(Exception):
    """Base class for every error raised by compliance_lab."""


class MalformedConfig(ComplianceLabError):
    """A configuration failed validation (bad powers, zero slots, unknown keys)."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class StrategyArityMismatch(ComplianceLabError):
    pass


class BudgetExhausted(ComplianceLabError):
    """A proof-of-work party asked for more queries than its per-slot budget."""


class FamilyMismatch(ComplianceLabError):
    pass


class LengthMismatch(ComplianceLabError):
    pass


class PreconditionViolated(ComplianceLabError):
    """A planned selfish-signing window no longer fits the live chain."""


class DomainError(ComplianceLabError, ValueError):
    """Parameters outside the domain where a closed-form bound is defined."""


class SchemeInvariantViolated(ComplianceLabError):
    pass


class MissingEstimate(ComplianceLabError):
    pass


class EmptyCandidateSet(ComplianceLabError):
    pass


class DepthExceeded(ComplianceLabError):
    """Cone exploration hit its depth cap; the partial result is attached."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial
