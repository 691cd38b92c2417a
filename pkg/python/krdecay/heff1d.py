"""One-dimensional effective Hamiltonian h(t) = iȧ/a and what follows from it.

Re h(t) is the instantaneous energy and −2 Im h(t) the instantaneous decay
rate. Around the transition time t_as the pole term and the background of
a(t) have similar size; |a| then nearly vanishes once per oscillation period
and h(t) shows the familiar spikes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike
from scipy import optimize

from .amplitude import (
    DEFAULT_TOL,
    at_time,
    derivative_estimate,
    amplitude_estimate,
    survival_amplitude,
    survival_contour,
    validate_grid,
)
from .errors import (
    DivisionHazardError,
    DomainError,
    IllConditionedFitError,
    NoCrossingError,
    ToleranceNotReachedError,
)
from .spectral import SpectralDensity, TruncatedBreitWigner
from .workers import map_ordered

LOGGER = logging.getLogger(__name__)

#: |a| below TRUST_FACTOR × its error estimate marks a sample untrusted.
TRUST_FACTOR = 10.0
#: |a| below HAZARD_FACTOR × its error estimate refuses the division.
HAZARD_FACTOR = 2.0

MAX_CONDITION = 1e8
MIN_FIT_SAMPLES = 6

#: Upper end of the geometric bracket expansion, in units of τ.
MAX_BRACKET = 1e9
SCAN_POINTS_PER_DECADE = 40


@dataclass(frozen=True)
class EffectiveHamiltonianSample:
    """h(t) = iȧ/a at one time.

    ``trusted`` is false where |a| is comparable to its error estimate;
    ``dip`` is set by sweeps on grid-local minima of |a|.
    """

    t: float
    h: complex
    a: complex
    adot: complex
    a_error: float
    trusted: bool
    dip: bool = False

    @property
    def energy(self) -> float:
        return self.h.real

    @property
    def rate(self) -> float:
        return -2.0 * self.h.imag


@dataclass(frozen=True)
class TransitionTimeResult:
    t_as: float
    bracket: Tuple[float, float]
    iterations: int
    residual: float
    later_crossings: Tuple[float, ...] = ()


@dataclass(frozen=True)
class AsymptoticFit:
    """h(t) ≈ emin − i·c1/t − c2/t² on the fit window."""

    emin_estimate: float
    c1: float
    c2: float
    residual: float
    window: Tuple[float, float]
    condition: float
    imag_residue: float
    limits_hold: bool

    def evaluate(self, t: ArrayLike) -> np.ndarray:
        x = -1j / np.asarray(t, dtype=np.float64)
        return self.emin_estimate + self.c1 * x + self.c2 * x**2


@dataclass(frozen=True)
class PopulationEstimate:
    """n_surviving = P(t)·n0, with the e^{γ⁰·t_as} source-size threshold."""

    n0: float
    t: float
    n_surviving: float
    threshold: Optional[float] = None
    observable: Optional[bool] = None


def effective_hamiltonian(d: SpectralDensity, t: float, tol: float = DEFAULT_TOL) -> EffectiveHamiltonianSample:
    """h(t) = i·ȧ(t)/a(t) from the analytic derivative.

    Raises:
        DomainError: ``t <= 0``.
        DivisionHazardError: |a| is below twice its own error estimate.
    """
    if not t > 0:
        raise DomainError(f"h(t) is evaluated for t > 0, got {t}")
    a = amplitude_estimate(d, t)
    adot = derivative_estimate(d, t)
    for est in (a, adot):
        if est.error > tol:
            raise ToleranceNotReachedError(est.error, tol, t)
    modulus = abs(a.value)
    if modulus < HAZARD_FACTOR * a.error or modulus == 0.0:
        raise DivisionHazardError(t, modulus, a.error)
    h = 1j * adot.value / a.value
    return EffectiveHamiltonianSample(
        t=float(t),
        h=complex(h),
        a=a.value,
        adot=adot.value,
        a_error=a.error,
        trusted=modulus >= TRUST_FACTOR * a.error,
    )


def hamiltonian_sweep(
    d: SpectralDensity,
    t_grid: Sequence[float],
    tol: float = DEFAULT_TOL,
    workers: Optional[int] = None,
) -> List[EffectiveHamiltonianSample]:
    """h(t) over a positive grid, with ``dip`` set at grid-local minima of |a|."""
    grid = validate_grid(t_grid, allow_zero=False)
    samples = map_ordered(
        lambda t: at_time(t, lambda s: effective_hamiltonian(d, s, tol)), [float(t) for t in grid], workers
    )
    moduli = np.array([abs(s.a) for s in samples])
    dips = np.zeros(len(samples), dtype=bool)
    if len(samples) >= 3:
        dips[1:-1] = (moduli[1:-1] < moduli[:-2]) & (moduli[1:-1] < moduli[2:])
    out = []
    for sample, dip in zip(samples, dips):
        if dip:
            sample = EffectiveHamiltonianSample(
                sample.t, sample.h, sample.a, sample.adot, sample.a_error, sample.trusted, True
            )
        out.append(sample)
    LOGGER.debug("sweep of %d points: %d dips, %d untrusted", len(out), int(dips.sum()),
                 sum(not s.trusted for s in out))
    return out


def _log_ratio(d: TruncatedBreitWigner, t: float) -> float:
    # log|a_exp| in closed form; a_exp itself underflows far beyond t_as
    split = survival_contour(d, t, tol=1e-9)
    return math.log(abs(d.pole_residue)) - 0.5 * d.gamma0 * t - math.log(abs(split.a_non))


def _bisect(d: TruncatedBreitWigner, lo: float, hi: float) -> Tuple[float, int]:
    root, info = optimize.bisect(
        lambda t: _log_ratio(d, t), lo, hi, xtol=1e-13 * hi, rtol=4 * np.finfo(float).eps,
        maxiter=200, full_output=True,
    )
    return float(root), int(info.iterations)


def transition_time(d: TruncatedBreitWigner) -> TransitionTimeResult:
    """First crossing t > τ of |a_exp(t)| = |a_non(t)|.

    The bracket starts at [τ, 10³τ] and is expanded geometrically until the
    log-ratio changes sign; a log-spaced scan then locates the first sign
    change, which is refined by bisection. Further sign changes inside the
    bracket are reported in ``later_crossings``.

    Raises:
        NoCrossingError: No sign change up to ``MAX_BRACKET``·τ.
    """
    if not isinstance(d, TruncatedBreitWigner):
        raise DomainError(f"t_as needs the a_exp/a_non split of a Breit–Wigner density, got {d.kind!r}")
    tau = d.tau
    lo, hi = tau, 1e3 * tau
    if _log_ratio(d, lo) <= 0:
        raise NoCrossingError((lo, hi))
    while _log_ratio(d, hi) > 0:
        if hi >= MAX_BRACKET * tau:
            raise NoCrossingError((lo, hi))
        hi *= 10.0
    decades = math.log10(hi / lo)
    scan = np.geomspace(lo, hi, int(math.ceil(decades * SCAN_POINTS_PER_DECADE)) + 1)
    signs = np.array([_log_ratio(d, float(t)) > 0 for t in scan])
    changes = np.flatnonzero(signs[:-1] != signs[1:])
    roots = []
    iterations = 0
    for index in changes:
        root, count = _bisect(d, float(scan[index]), float(scan[index + 1]))
        roots.append(root)
        iterations = iterations or count
    t_as = roots[0]
    residual = abs(math.expm1(2.0 * _log_ratio(d, t_as)))
    LOGGER.debug("t_as = %.12g after %d bisection steps, residual %.3g", t_as, iterations, residual)
    return TransitionTimeResult(t_as, (lo, hi), iterations, residual, tuple(roots[1:]))


def asymptotic_fit(
    samples: Sequence[EffectiveHamiltonianSample], emin_known: Optional[float] = None
) -> AsymptoticFit:
    """Least-squares fit of h(t) ≈ emin − i·c1/t − c2/t² with real coefficients.

    Re h carries emin and c2, Im h carries c1. ``imag_residue`` is the largest
    imaginary part of an unconstrained complex fit on the same basis.

    Raises:
        DomainError: Fewer than six trusted samples.
        IllConditionedFitError: The scaled design matrix has condition > 1e8.
    """
    usable = [s for s in samples if s.trusted]
    if len(usable) < MIN_FIT_SAMPLES:
        raise DomainError(f"the asymptotic fit needs at least {MIN_FIT_SAMPLES} trusted samples, got {len(usable)}")
    t = np.array([s.t for s in usable])
    h = np.array([s.h for s in usable])
    inv = 1.0 / t
    zeros = np.zeros_like(t)

    columns = [np.concatenate([zeros, -inv]), np.concatenate([-inv**2, zeros])]
    target = np.concatenate([h.real, h.imag])
    if emin_known is None:
        columns.insert(0, np.concatenate([np.ones_like(t), zeros]))
    else:
        target = target - np.concatenate([np.full_like(t, emin_known), zeros])
    design = np.column_stack(columns)
    scale = np.linalg.norm(design, axis=0)
    condition = float(np.linalg.cond(design / scale))
    if condition > MAX_CONDITION:
        raise IllConditionedFitError(condition)
    coeffs, *_ = np.linalg.lstsq(design / scale, target, rcond=None)
    coeffs = coeffs / scale
    if emin_known is None:
        emin, c1, c2 = (float(c) for c in coeffs)
    else:
        emin = float(emin_known)
        c1, c2 = (float(c) for c in coeffs)

    model = emin - 1j * c1 * inv - c2 * inv**2
    residual = float(np.sqrt(np.mean(np.abs(h - model) ** 2)))

    basis = np.column_stack([np.ones_like(t), -1j * inv, -(inv**2)])
    free, *_ = np.linalg.lstsq(basis, h, rcond=None)
    imag_residue = float(np.max(np.abs(free.imag)))

    first, last = np.argmin(t), np.argmax(t)
    limits_hold = bool(
        abs(h[last].real - emin) <= abs(h[first].real - emin) + 1e-15 and abs(h[last].imag) < abs(h[first].imag)
    )
    LOGGER.debug("asymptotic fit: emin=%.6g c1=%.6g c2=%.6g cond=%.3g", emin, c1, c2, condition)
    return AsymptoticFit(emin, c1, c2, residual, (float(t.min()), float(t.max())), condition, imag_residue, limits_hold)


def tail_exponent_from_curve(curve: Sequence[Tuple[float, float]]) -> float:
    """−d log P / d log t from a least-squares line through (log t, log P)."""
    if len(curve) < 2:
        raise DomainError("the tail exponent needs at least two points")
    t = np.array([p[0] for p in curve], dtype=np.float64)
    prob = np.array([p[1] for p in curve], dtype=np.float64)
    if np.any(t <= 0) or np.any(prob <= 0):
        raise DomainError("log-log slope needs positive times and probabilities")
    slope, _ = np.polyfit(np.log(t), np.log(prob), 1)
    return float(-slope)


def tail_exponent(
    d: SpectralDensity,
    t_window: Tuple[float, float],
    points: int = 40,
    tol: float = DEFAULT_TOL,
    workers: Optional[int] = None,
) -> float:
    """λ in P(t) ~ t^{−λ} over ``t_window``.

    For Breit–Wigner densities the window must lie above 3·t_as.
    """
    lo, hi = (float(x) for x in t_window)
    if not 0 < lo < hi:
        raise DomainError(f"tail window must satisfy 0 < t_lo < t_hi, got {t_window}")
    if isinstance(d, TruncatedBreitWigner):
        t_as = transition_time(d).t_as
        if lo < 3.0 * t_as:
            raise DomainError(f"tail window starts at {lo:.6g}, below 3·t_as = {3.0 * t_as:.6g}")
    grid = np.geomspace(lo, hi, points)
    curve = map_ordered(
        lambda t: (t, abs(at_time(t, lambda s: survival_amplitude(d, s, tol))) ** 2), [float(t) for t in grid], workers
    )
    return tail_exponent_from_curve(curve)


def surviving_population(
    d: SpectralDensity, n0: float, t: float, tol: float = DEFAULT_TOL
) -> PopulationEstimate:
    """Expected survivors n0·P(t) from a source of n0 particles.

    For Breit–Wigner densities the threshold e^{γ⁰·t_as} is reported too;
    ``observable`` states whether n0 exceeds it.
    """
    if not n0 > 0:
        raise DomainError(f"n0 must be positive, got {n0}")
    prob = min(1.0, abs(survival_amplitude(d, t, tol)) ** 2)
    threshold = observable = None
    if isinstance(d, TruncatedBreitWigner):
        threshold = math.exp(d.gamma0 * transition_time(d).t_as)
        observable = n0 > threshold
    return PopulationEstimate(float(n0), float(t), prob * n0, threshold, observable)


def spike_runs(samples: Sequence[EffectiveHamiltonianSample], reference: float, threshold: float = 0.1) -> List[List[int]]:
    """Index runs where Re h/reference − 1 exceeds ``threshold`` (upward spikes)."""
    runs: List[List[int]] = []
    current: List[int] = []
    for i, s in enumerate(samples):
        if s.energy / reference - 1.0 > threshold:
            current.append(i)
        elif current:
            runs.append(current)
            current = []
    if current:
        runs.append(current)
    return runs
