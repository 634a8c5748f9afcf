"""Exception hierarchy for the toolkit.

Every failure mode raised on purpose derives from :class:`VmbifError`, so
callers (and the CLI) can distinguish deliberate diagnostics from genuine
bugs.  Numerical failures carry the evidence (residual histories, singular
value estimates) needed to decide what went wrong.
"""

from __future__ import annotations


class VmbifError(Exception):
    """Base class for all toolkit errors."""


class DomainError(VmbifError):
    """A parameter or evaluation point lies outside its validity domain."""


class ConstraintError(VmbifError):
    """A structural constraint (parameter relations, moment proportionality,
    flatness declarations) is violated beyond tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class ConfigError(VmbifError):
    """A run configuration failed to parse or validate.

    ``line`` is the 1-based line number in the config file when known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NumericalError(VmbifError):
    """Base class for failures of iterative numerics."""


class DivergenceError(NumericalError):
    """An iteration exhausted its budget without meeting tolerance.

    ``history`` holds the per-iteration residual norms actually achieved.
    """

    def __init__(self, message: str, history: list[float] | None = None):
        if history:
            message = f"{message} (last residuals: " + ", ".join(
                f"{r:.3e}" for r in history[-4:]) + ")"
        super().__init__(message)
        self.history = list(history) if history else []


class ConditioningError(NumericalError):
    """A linear system is numerically singular.

    ``estimate`` is the smallest-singular-value (or determinant) estimate
    that triggered the failure.
    """

    def __init__(self, message: str, estimate: float | None = None):
        if estimate is not None:
            message = f"{message} (estimate {estimate:.3e})"
        super().__init__(message)
        self.estimate = estimate


class SingularityError(NumericalError):
    """A formula hit a structural singularity (for instance a vanishing
    denominator that the asymptotics divide by)."""


class OrderAmbiguityError(NumericalError):
    """A power-law order fit did not settle near an integer."""

    def __init__(self, message: str, slope: float | None = None):
        if slope is not None:
            message = f"{message} (fitted slope {slope:.4f})"
        super().__init__(message)
        self.slope = slope


class SpectrumLookupError(VmbifError):
    """No eigenvalue cluster matches the requested value within tolerance."""
