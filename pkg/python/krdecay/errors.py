"""Exception and warning types raised by krdecay."""

from __future__ import annotations

from typing import Optional, Sequence


class KrDecayException(Exception):
    """Base class for every error raised by the library."""

    exit_code = 3


class DomainError(KrDecayException, ValueError):
    """A precondition on the arguments of an operation was violated."""


class NumericError(KrDecayException):
    """A linear-algebra or quadrature routine failed."""


class QuadratureError(NumericError):
    """A quadrature failed; ``t`` names the offending time when known."""

    def __init__(self, message: str, t: Optional[float] = None) -> None:
        if t is not None:
            message = f"{message} (t = {t:.17g})"
        super().__init__(message)
        self.t = t


class ToleranceNotReachedError(QuadratureError):
    """The requested absolute tolerance could not be met."""

    def __init__(self, achieved: float, tol: float, t: Optional[float] = None) -> None:
        super().__init__(
            f"tolerance {tol:.3g} not reached, achieved error estimate {achieved:.3g}", t
        )
        self.achieved = achieved
        self.tol = tol


class DivergenceError(NumericError):
    """The requested quantity diverges (e.g. ȧ(0) without a first moment)."""


class DivisionHazardError(NumericError):
    """|a(t)| is too close to its own error estimate to divide by it."""

    def __init__(self, t: float, amplitude: float, error: float) -> None:
        super().__init__(
            f"|a(t)| = {amplitude:.3g} is below twice its error estimate {error:.3g} at t = {t:.17g}"
        )
        self.t = t
        self.amplitude = amplitude
        self.error = error


class NoCrossingError(NumericError):
    """No sign change of log(|a_exp|/|a_non|) could be bracketed."""

    def __init__(self, bracket: Sequence[float]) -> None:
        lo, hi = bracket
        super().__init__(f"no crossing of |a_exp| and |a_non| in [{lo:.6g}, {hi:.6g}]")
        self.bracket = (lo, hi)


class IllConditionedFitError(NumericError):
    """The asymptotic least-squares problem is too ill-conditioned."""

    def __init__(self, condition: float) -> None:
        super().__init__(f"fit condition estimate {condition:.3g} exceeds 1e8; widen the window")
        self.condition = condition


class SingularityError(NumericError):
    """ε hits a discrete eigenvalue of QHQ with no regularization."""

    def __init__(self, eps: float) -> None:
        super().__init__(f"eps = {eps:.17g} coincides with an eigenvalue of QHQ at eta = 0")
        self.eps = eps


class DegenerateCaseError(DomainError):
    """The nondegenerate two-level formula was called with κ = 0."""


class SingularAmplitudeError(NumericError):
    """The amplitude matrix A(t) cannot be inverted reliably."""

    def __init__(self, t: float, condition: float) -> None:
        super().__init__(f"A(t) is singular at t = {t:.17g} (condition estimate {condition:.3g})")
        self.t = t
        self.condition = condition


class ConfigError(KrDecayException):
    """Invalid run configuration; ``line`` is 1-based when known."""

    exit_code = 2

    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None) -> None:
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where = f"{where}{line}: "
        elif where:
            where = f"{where} "
        super().__init__(f"{where}{message}")
        self.line = line
        self.path = path


class ModelFileError(KrDecayException):
    """Malformed model file; ``line`` is 1-based when known."""

    exit_code = 4

    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None) -> None:
        prefix = f"{path or '<model>'}:{line}: " if line is not None else f"{path or '<model>'}: "
        super().__init__(prefix + message)
        self.line = line
        self.path = path


class KrDecayWarning(UserWarning):
    """Base class for non-fatal numerical diagnostics."""


class GridResolutionWarning(KrDecayWarning):
    """The time grid is too coarse for the requested trapezoid accuracy."""


class RegularizationWarning(KrDecayWarning):
    """A t → ∞ limit was taken for a discrete reservoir via eta."""
