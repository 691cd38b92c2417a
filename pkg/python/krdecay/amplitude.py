"""Survival amplitude a(t) = ∫ ω(E) e^{−iEt} dE and its time derivative.

Two independent evaluation paths exist for the Breit–Wigner family:

* the direct path integrates along the real axis with Gauss–Legendre panels
  no wider than half an oscillation and a QUADPACK Fourier tail;
* the contour path rotates the integration to E = emin − is, picking up the
  pole term a_exp and leaving a non-oscillatory background a_non.

The contour path is the reference at large t, where the direct quadrature
loses significant digits. Point masses are summed exactly and piecewise
linear tables use closed-form Filon moments.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, TypeVar

import numpy as np
from numpy.typing import ArrayLike

from .errors import (
    DivergenceError,
    DomainError,
    KrDecayException,
    QuadratureError,
    ToleranceNotReachedError,
)
from .quadrature import Estimate, filon_moments, fourier_tail, oscillatory_panels, quad_complex
from .spectral import (
    ContinuumReservoirDensity,
    InterpolatedDensity,
    PointMassDensity,
    SpectralDensity,
    TruncatedBreitWigner,
)
from .workers import map_ordered

LOGGER = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10

_CONTOUR_OPTIONS = dict(epsabs=1e-15, epsrel=1e-12, limit=200)

R = TypeVar("R")


@dataclass(frozen=True)
class SurvivalSample:
    """a(t) and ȧ(t) at one time, with their absolute error estimates."""

    t: float
    a: complex
    adot: complex
    a_error: float = 0.0
    adot_error: float = 0.0

    @property
    def probability(self) -> float:
        return abs(self.a) ** 2


@dataclass(frozen=True)
class AmplitudeSplit:
    """Pole part and background part of a(t) from the rotated contour."""

    t: float
    a_exp: complex
    a_non: complex
    error: float = 0.0

    @property
    def total(self) -> complex:
        return self.a_exp + self.a_non

    @property
    def log_ratio(self) -> float:
        """log(|a_exp|/|a_non|); positive while the pole term dominates."""
        return math.log(abs(self.a_exp)) - math.log(abs(self.a_non))


def _check_tolerance(estimate: Estimate, tol: float, t: float) -> complex:
    if not tol > 0:
        raise DomainError(f"tolerance must be positive, got {tol}")
    if estimate.error > tol:
        raise ToleranceNotReachedError(estimate.error, tol, t)
    return estimate.value


# ---------------------------------------------------------------------------
# Exact evaluators


def _point_mass(d: PointMassDensity, t: float, moment: int) -> Estimate:
    phases = np.exp(-1j * d.energies * t)
    terms = d.weights * d.energies**moment
    value = np.sum(terms * phases)
    if moment:
        value = -1j * value
    # rounding in the phases grows with |E·t|, in the sum with the number of masses
    spread = d.energies.size + float(np.max(np.abs(d.energies))) * abs(t)
    error = np.finfo(float).eps * spread * float(np.sum(np.abs(terms)))
    return Estimate(complex(value), error)


def _interpolated(d: InterpolatedDensity, t: float, moment: int) -> Estimate:
    """Piecewise-linear ω times e^{−iEt}, integrated exactly per segment."""
    e_lo, e_hi = d.energies[:-1], d.energies[1:]
    w_lo, w_hi = d.samples[:-1], d.samples[1:]
    h = e_hi - e_lo
    slope = w_hi - w_lo
    moments = filon_moments(h * t, 2)
    phase = np.exp(-1j * e_lo * t)
    if moment == 0:
        per_segment = w_lo * moments[0] + slope * moments[1]
    else:
        # (e_lo + h·u)(w_lo + slope·u) expanded in powers of u
        per_segment = e_lo * w_lo * moments[0] + (e_lo * slope + w_lo * h) * moments[1] + h * slope * moments[2]
    value = complex(np.sum(h * phase * per_segment))
    if moment:
        value = -1j * value
    return Estimate(value, 1e-15 * max(1, e_lo.size))


# ---------------------------------------------------------------------------
# Direct quadrature


def _direct_breit_wigner(d: TruncatedBreitWigner, t: float) -> Estimate:
    start = d.tail_start()
    bulk = oscillatory_panels(d.value, d.quadrature_segments(start), t)
    tail = fourier_tail(lambda e: float(d.value(e)), start, t)
    return Estimate(bulk.value + tail.value, bulk.error + tail.error)


def _direct_continuum(d: ContinuumReservoirDensity, t: float, moment: int) -> Estimate:
    if moment:
        est = oscillatory_panels(lambda e: e * d.value(e), d.quadrature_segments(d.upper), t)
        return Estimate(-1j * est.value, est.error)
    return oscillatory_panels(d.value, d.quadrature_segments(d.upper), t)


def _direct(d: SpectralDensity, t: float) -> Estimate:
    if isinstance(d, PointMassDensity):
        return _point_mass(d, t, 0)
    if isinstance(d, InterpolatedDensity):
        return _interpolated(d, t, 0)
    if isinstance(d, TruncatedBreitWigner):
        return _direct_breit_wigner(d, t)
    if isinstance(d, ContinuumReservoirDensity):
        return _direct_continuum(d, t, 0)
    raise DomainError(f"no quadrature available for density kind {d.kind!r}")


def survival_direct(d: SpectralDensity, t: float, tol: float = DEFAULT_TOL) -> complex:
    """a(t) by quadrature along the real energy axis.

    Negative t is allowed. Point masses are summed exactly.

    Raises:
        ToleranceNotReachedError: The error estimate exceeds ``tol``.
    """
    return _check_tolerance(_direct(d, float(t)), tol, t)


# ---------------------------------------------------------------------------
# Contour rotation


def _background(d: TruncatedBreitWigner, t: float, derivative: bool) -> Estimate:
    """−i e^{−i·emin·t} ∫₀^∞ ω(emin − is) e^{−st} ds with s = x/t (or its t-derivative)."""
    emin = d.emin

    def integrand(x: float) -> complex:
        value = complex(d.continued(emin - 1j * x / t)) * math.exp(-x)
        if derivative:
            value *= -x / t - 1j * emin
        return value

    est = quad_complex(integrand, 0.0, np.inf, **_CONTOUR_OPTIONS)
    prefactor = -1j * np.exp(-1j * emin * t) / t
    return Estimate(complex(prefactor * est.value), abs(prefactor) * est.error)


def _contour_split(d: TruncatedBreitWigner, t: float) -> AmplitudeSplit:
    a_exp = d.pole_residue * np.exp(-1j * d.pole * t)
    background = _background(d, t, derivative=False)
    return AmplitudeSplit(t, complex(a_exp), background.value, background.error)


def survival_contour(d: TruncatedBreitWigner, t: float, tol: float = 1e-12) -> AmplitudeSplit:
    """a(t) = a_exp(t) + a_non(t) from the rotated contour, for t > 0.

    a_exp = N·f(z)·e^{−izt} at the pole z = e0 − iγ⁰/2 (f ≡ 1 without a form
    factor, so the prefactor equals the normalization N); a_non is the
    background along E = emin − is.
    """
    if not isinstance(d, TruncatedBreitWigner):
        raise DomainError(f"the contour split is defined for Breit–Wigner densities, got {d.kind!r}")
    if not t > 0:
        raise DomainError(f"the contour method needs t > 0, got {t}")
    split = _contour_split(d, float(t))
    if split.error > tol:
        raise ToleranceNotReachedError(split.error, tol, t)
    return split


def _contour_derivative(d: TruncatedBreitWigner, t: float) -> Estimate:
    a_exp = d.pole_residue * np.exp(-1j * d.pole * t)
    background = _background(d, t, derivative=True)
    return Estimate(complex(-1j * d.pole * a_exp) + background.value, background.error)


# ---------------------------------------------------------------------------
# Best-method dispatch


def amplitude_estimate(d: SpectralDensity, t: float) -> Estimate:
    """a(t) with its error estimate, by the most accurate method for ``d``."""
    if isinstance(d, TruncatedBreitWigner) and t != 0:
        split = _contour_split(d, abs(t))
        value = split.total if t > 0 else split.total.conjugate()
        return Estimate(value, split.error)
    return _direct(d, t)


def derivative_estimate(d: SpectralDensity, t: float) -> Estimate:
    """ȧ(t) with its error estimate."""
    if isinstance(d, PointMassDensity):
        return _point_mass(d, t, 1)
    if isinstance(d, InterpolatedDensity):
        return _interpolated(d, t, 1)
    if isinstance(d, ContinuumReservoirDensity):
        return _direct_continuum(d, t, 1)
    if isinstance(d, TruncatedBreitWigner):
        if t == 0:
            raise DivergenceError("ȧ(0) diverges: the Breit–Wigner density has no finite first moment")
        est = _contour_derivative(d, abs(t))
        # a(−t) = conj a(t)  ⇒  ȧ(−t) = −conj ȧ(t)
        return est if t > 0 else Estimate(-est.value.conjugate(), est.error)
    raise DomainError(f"no derivative available for density kind {d.kind!r}")


def survival_amplitude(d: SpectralDensity, t: float, tol: float = DEFAULT_TOL) -> complex:
    """a(t) by the best available method for the density variant."""
    return _check_tolerance(amplitude_estimate(d, float(t)), tol, t)


def survival_derivative(d: SpectralDensity, t: float, tol: float = DEFAULT_TOL) -> complex:
    """da/dt, analytic wherever possible.

    Breit–Wigner densities differentiate the contour representation term by
    term; point masses give −i Σ w_k E_k e^{−iE_k t}.

    Raises:
        DivergenceError: ``t == 0`` for a density without a finite first moment.
    """
    return _check_tolerance(derivative_estimate(d, float(t)), tol, t)


def survival_sample(d: SpectralDensity, t: float) -> SurvivalSample:
    """a(t) and ȧ(t) with the error estimates the evaluators report."""
    a = amplitude_estimate(d, t)
    adot = derivative_estimate(d, t)
    return SurvivalSample(t, a.value, adot.value, a.error, adot.error)


def at_time(t: float, func: Callable[[float], R]) -> R:
    """Run ``func(t)``, attaching ``t`` to any numerical failure."""
    try:
        return func(t)
    except QuadratureError as exc:
        if exc.t is None:
            exc.t = t
            exc.args = (f"{exc.args[0]} (t = {t:.17g})",)
        raise
    except KrDecayException:
        raise
    except (ArithmeticError, ValueError) as exc:
        raise QuadratureError(f"evaluation failed: {exc}", t) from exc


def validate_grid(t_grid: ArrayLike, allow_zero: bool = True) -> np.ndarray:
    grid = np.asarray(t_grid, dtype=np.float64).ravel()
    if grid.size == 0:
        raise DomainError("time grid is empty")
    if np.any(np.diff(grid) <= 0):
        raise DomainError("time grid must be strictly increasing")
    if np.any(grid < 0) or (not allow_zero and grid[0] == 0):
        raise DomainError("time grid must be nonnegative" if allow_zero else "time grid must be positive")
    return grid


def survival_probability_curve(
    d: SpectralDensity,
    t_grid: Sequence[float],
    tol: float = DEFAULT_TOL,
    workers: Optional[int] = None,
) -> List[Tuple[float, float]]:
    """P(t) = |a(t)|² on a strictly increasing, nonnegative grid, in grid order.

    Raises:
        QuadratureError: A point failed; the exception names the offending t.
    """
    grid = validate_grid(t_grid)

    def evaluate(t: float) -> Tuple[float, float]:
        a = at_time(t, lambda s: survival_amplitude(d, s, tol))
        return t, abs(a) ** 2

    return map_ordered(evaluate, [float(t) for t in grid], workers)
