"""Exception types raised across the package."""


class TransferLinError(Exception):
    """Base class for every error raised by transferlin."""


class DomainError(TransferLinError, ValueError):
    """An argument lies outside the domain where an operation is defined."""


class ConvergenceError(TransferLinError, RuntimeError):
    """A root finder failed to bracket or converge."""


class DegenerateError(TransferLinError, ArithmeticError):
    """A guard on a denominator or square-root argument failed.

    ``guard`` names the failed check so callers (the CLI in particular) can
    report which condition tripped.
    """

    def __init__(self, message, guard=None):
        super().__init__(message)
        self.guard = guard


class EvaluationError(TransferLinError, ArithmeticError):
    """An integrand produced a non-finite value on the support."""


class RankDeficiencyError(TransferLinError, ArithmeticError):
    """The Gram matrix ``X X^T`` is not numerically positive definite."""


class ConfigError(TransferLinError, ValueError):
    """Invalid run configuration (unknown key, bad literal, bad type)."""

    def __init__(self, message, line=None, key=None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if key is not None:
            loc.append(f"key '{key}'")
        if loc:
            message = f"{', '.join(loc)}: {message}"
        super().__init__(message)
        self.line = line
        self.key = key
