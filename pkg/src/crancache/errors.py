"""Exception types shared across the package.

Kept deliberately small: callers mostly need to distinguish "you passed a
bad parameter" from "the model is outside its domain" from "an iterative
routine gave up".  Everything derives from CrancacheError so the CLI can
catch package failures in one place without swallowing genuine bugs.
"""


class CrancacheError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(CrancacheError, ValueError):
    """A supplied parameter violates a structural precondition."""


class DomainError(CrancacheError, ValueError):
    """Inputs are syntactically fine but outside the model's domain of validity."""


class InfeasibleBackhaulError(DomainError):
    """Backhaul rate too low for the requested delay budget (load factor >= 1)."""


class CoverageError(CrancacheError, LookupError):
    """No RRH in the realization can serve the requested content."""


class ConvergenceError(CrancacheError, RuntimeError):
    """An iterative negotiation exceeded its iteration cap without stabilizing."""


class StabilityViolationError(CrancacheError, RuntimeError):
    """A coalition-formation run revisited a partition it had already left."""
