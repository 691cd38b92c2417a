"""Spectral (energy) densities ω(E) of an initial state.

Every density is normalized at construction so that a(0) = 1; the factor that
was applied is kept in ``applied_factor``. Densities are immutable and all
evaluations are pure, so they can be shared between worker threads.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate

from .errors import DomainError, NumericError

if TYPE_CHECKING:
    from .subspace import ContinuumReservoir, FiniteLevelModel

LOGGER = logging.getLogger(__name__)

#: Segments are ``(lower, upper, max_panel_width)`` triples.
Segment = Tuple[float, float, float]


class SpectralDensity:
    """Common interface of all density variants.

    Subclasses provide ``emin``, ``applied_factor`` and
    ``has_finite_first_moment`` and implement :meth:`value`.
    """

    kind: str = "abstract"
    emin: float
    applied_factor: float
    has_finite_first_moment: bool

    def value(self, energy: ArrayLike) -> NDArray[np.float64]:
        raise NotImplementedError

    def first_moment(self) -> float:
        """Return ∫E ω(E) dE, raising if it diverges."""
        raise DomainError(f"{self.kind} density has no finite first moment")


@dataclass(frozen=True)
class TruncatedBreitWigner(SpectralDensity):
    """ω(E) = (N/2π)·Θ(E − emin)·γ⁰/((E − E⁰)² + (γ⁰/2)²)·f(E).

    With ``onset`` set, the threshold form factor f(E) = (E − emin)/(E − emin + onset)
    makes ω vanish linearly at emin; otherwise f ≡ 1.
    """

    e0: float
    gamma0: float
    emin: float = 0.0
    onset: Optional[float] = None
    norm: float = field(init=False)
    applied_factor: float = field(init=False, repr=False)
    has_finite_first_moment: bool = field(init=False, default=False, repr=False)
    kind = "breit-wigner"

    def __post_init__(self) -> None:
        if not self.gamma0 > 0:
            raise DomainError(f"gamma0 must be positive, got {self.gamma0}")
        if self.e0 < self.emin:
            raise DomainError(f"e0 must not lie below emin, got e0={self.e0}, emin={self.emin}")
        if self.onset is not None and not self.onset > 0:
            raise DomainError(f"onset scale must be positive, got {self.onset}")
        if self.onset is None:
            norm = bw_normalization(self.e0, self.gamma0, self.emin)
        else:
            norm = 1.0 / self._unnormalized_weight()
        object.__setattr__(self, "norm", norm)
        object.__setattr__(self, "applied_factor", norm)

    @property
    def tau(self) -> float:
        """Lifetime τ = 1/γ⁰."""
        return 1.0 / self.gamma0

    @property
    def pole(self) -> complex:
        """Lower half-plane pole E⁰ − iγ⁰/2 of the continued density."""
        return complex(self.e0, -0.5 * self.gamma0)

    @property
    def pole_residue(self) -> complex:
        """Prefactor of a_exp(t); equals N when there is no form factor."""
        return self.norm * complex(self.form_factor(self.pole))

    def form_factor(self, z: ArrayLike) -> NDArray:
        z = np.asarray(z)
        if self.onset is None:
            return np.ones_like(z)
        shifted = z - self.emin
        return shifted / (shifted + self.onset)

    def _lorentzian(self, z: ArrayLike) -> NDArray:
        z = np.asarray(z)
        return (self.gamma0 / (2.0 * math.pi)) / ((z - self.e0) ** 2 + 0.25 * self.gamma0**2)

    def continued(self, z: ArrayLike) -> NDArray[np.complex128]:
        """Analytic continuation of ω off the real axis (no step function)."""
        z = np.asarray(z, dtype=np.complex128)
        return self.norm * self._lorentzian(z) * self.form_factor(z)

    def value(self, energy: ArrayLike) -> NDArray[np.float64]:
        energy = np.asarray(energy, dtype=np.float64)
        inside = energy >= self.emin
        safe = np.where(inside, energy, self.e0)
        dens = self.norm * self._lorentzian(safe) * np.real(self.form_factor(safe))
        return np.where(inside, dens, 0.0)

    def _unnormalized_weight(self) -> float:
        def integrand(e: float) -> float:
            return float(self._lorentzian(e) * self.form_factor(e))

        upper = self.e0 + 200.0 * self.gamma0
        total = 0.0
        for lo, hi in ((self.emin, self.e0), (self.e0, upper)):
            part, _ = integrate.quad(integrand, lo, hi, epsabs=1e-15, epsrel=1e-13, limit=400)
            total += part
        tail, _ = integrate.quad(integrand, upper, np.inf, epsabs=1e-15, epsrel=1e-13, limit=400)
        return total + tail

    def quadrature_segments(self, tail_start: float) -> List[Segment]:
        """Panel layout used by the direct Fourier quadrature."""
        g = self.gamma0
        core_lo = max(self.emin, self.e0 - 10.0 * g)
        core_hi = self.e0 + 10.0 * g
        segments: List[Segment] = []
        lo = self.emin
        if self.onset is not None:
            # the form factor varies on the scale of ``onset`` above threshold
            edge = min(core_lo, self.emin + 10.0 * self.onset)
            if edge > lo:
                segments.append((lo, edge, 0.25 * self.onset))
                lo = edge
        if core_lo > lo:
            segments.append((lo, core_lo, 2.0 * g))
        segments.append((core_lo, core_hi, 0.25 * g))
        segments.append((core_hi, tail_start, 2.0 * g))
        return segments

    def tail_start(self) -> float:
        return self.e0 + 40.0 * self.gamma0


@dataclass(frozen=True, eq=False)
class PointMassDensity(SpectralDensity):
    """Finite sum of point masses Σ w_k δ(E − E_k)."""

    energies: NDArray[np.float64] = field(repr=False)
    weights: NDArray[np.float64] = field(repr=False)
    applied_factor: float = field(init=False, repr=False)
    emin: float = field(init=False)
    has_finite_first_moment: bool = field(init=False, default=True, repr=False)
    kind = "point-mass"
    rule = "point"

    def __post_init__(self) -> None:
        energies = np.asarray(self.energies, dtype=np.float64).ravel()
        weights = np.asarray(self.weights, dtype=np.float64).ravel()
        if energies.size == 0 or energies.shape != weights.shape:
            raise DomainError("point masses need equally many energies and weights (at least one)")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise DomainError("point-mass weights must be finite and nonnegative")
        total = float(weights.sum())
        if total <= 0:
            raise DomainError("point-mass weights sum to zero")
        order = np.argsort(energies, kind="stable")
        energies = energies[order]
        weights = weights[order] / total
        energies.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "applied_factor", 1.0 / total)
        object.__setattr__(self, "emin", float(energies[0]))

    def value(self, energy: ArrayLike) -> NDArray[np.float64]:
        # Atoms have no pointwise density; report the mass sitting at exactly E.
        energy = np.asarray(energy, dtype=np.float64)
        out = np.zeros(energy.shape)
        for e_k, w_k in zip(self.energies, self.weights):
            out = out + np.where(energy == e_k, w_k, 0.0)
        return out

    def first_moment(self) -> float:
        return float(np.dot(self.energies, self.weights))


@dataclass(frozen=True, eq=False)
class InterpolatedDensity(SpectralDensity):
    """Piecewise-linear density through tabulated samples (E_k, ω_k)."""

    energies: NDArray[np.float64] = field(repr=False)
    samples: NDArray[np.float64] = field(repr=False)
    applied_factor: float = field(init=False, repr=False)
    emin: float = field(init=False)
    has_finite_first_moment: bool = field(init=False, default=True, repr=False)
    kind = "tabulated"
    rule = "linear"

    def __post_init__(self) -> None:
        energies = np.asarray(self.energies, dtype=np.float64).ravel()
        samples = np.asarray(self.samples, dtype=np.float64).ravel()
        if energies.size < 2 or energies.shape != samples.shape:
            raise DomainError("interpolated densities need at least two (E, ω) samples")
        if np.any(np.diff(energies) <= 0):
            raise DomainError("tabulated energies must be strictly increasing")
        if np.any(samples < 0):
            raise DomainError("tabulated density samples must be nonnegative")
        total = float(np.trapezoid(samples, energies))
        if total <= 0:
            raise DomainError("tabulated density has zero weight")
        samples = samples / total
        energies.flags.writeable = False
        samples.flags.writeable = False
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "applied_factor", 1.0 / total)
        object.__setattr__(self, "emin", float(energies[0]))

    @property
    def upper(self) -> float:
        return float(self.energies[-1])

    def value(self, energy: ArrayLike) -> NDArray[np.float64]:
        energy = np.asarray(energy, dtype=np.float64)
        return np.interp(energy, self.energies, self.samples, left=0.0, right=0.0)

    def first_moment(self) -> float:
        e, w = self.energies, self.samples
        h = np.diff(e)
        # exact ∫E·ω over each linear segment
        return float(np.sum(h * (w[:-1] * (2 * e[:-1] + e[1:]) + w[1:] * (e[:-1] + 2 * e[1:])) / 6.0))


@dataclass(frozen=True, eq=False)
class ContinuumReservoirDensity(SpectralDensity):
    """One level E₁ coupled to a continuum with coupling g(E) (Friedrichs model).

    ω(E) = |g(E)|² / ((E − E₁ + Re Σ(E))² + π²|g(E)|⁴) on (emin, upper]. Weight
    missing from the continuum belongs to a bound state below emin; it is
    recorded in ``bound_state_weight`` and the continuum part is renormalized.
    """

    level: float
    reservoir: "ContinuumReservoir"
    applied_factor: float = field(init=False, repr=False)
    bound_state_weight: float = field(init=False)
    emin: float = field(init=False)
    has_finite_first_moment: bool = field(init=False, default=True, repr=False)
    kind = "model"

    def __post_init__(self) -> None:
        if len(self.reservoir.couplings) != 1:
            raise DomainError("the one-level continuum density needs exactly one coupling function")
        object.__setattr__(self, "emin", float(self.reservoir.emin))
        object.__setattr__(self, "applied_factor", 1.0)
        weight = self._raw_weight()
        if not weight > 0:
            raise NumericError("continuum part of the reservoir density carries no weight")
        LOGGER.debug("continuum density weight %.12g (bound state %.3g)", weight, 1.0 - weight)
        object.__setattr__(self, "applied_factor", 1.0 / weight)
        object.__setattr__(self, "bound_state_weight", max(0.0, 1.0 - weight))

    @property
    def coupling(self):
        return self.reservoir.couplings[0]

    @property
    def upper(self) -> float:
        return float(self.coupling.upper)

    @property
    def golden_rule_width(self) -> float:
        """2π|g(E₁)|², the width of the quasi-exponential regime."""
        return float(2.0 * math.pi * np.abs(self.coupling.value(self.level)) ** 2)

    def _unscaled(self, energy: NDArray[np.float64]) -> NDArray[np.float64]:
        g2 = np.abs(self.coupling.value(energy)) ** 2
        shift = self.reservoir.principal_value(energy, 0, 0).real
        return g2 / ((energy - self.level + shift) ** 2 + (math.pi * g2) ** 2)

    def value(self, energy: ArrayLike) -> NDArray[np.float64]:
        energy = np.asarray(energy, dtype=np.float64)
        inside = (energy > self.emin) & (energy < self.upper)
        out = np.zeros(energy.shape)
        if np.any(inside):
            out[inside] = self.applied_factor * self._unscaled(energy[inside])
        return out

    def _raw_weight(self) -> float:
        points = [p for p in (self.level,) if self.emin < p < self.upper]
        total, _ = integrate.quad(
            lambda e: float(self._unscaled(np.array([e]))[0]),
            self.emin,
            self.upper,
            points=points or None,
            epsabs=1e-13,
            epsrel=1e-11,
            limit=500,
        )
        return total

    def quadrature_segments(self, tail_start: float) -> List[Segment]:
        width = max(self.golden_rule_width, 1e-6 * max(1.0, abs(self.level)))
        lo = max(self.emin, self.level - 10.0 * width)
        hi = min(self.upper, self.level + 10.0 * width)
        span = self.upper - self.emin
        segments: List[Segment] = []
        if lo > self.emin:
            segments.append((self.emin, lo, max(span / 200.0, width)))
        if hi > lo:
            segments.append((lo, hi, 0.25 * width))
        if self.upper > hi:
            segments.append((hi, self.upper, max(span / 200.0, width)))
        return segments

    def first_moment(self) -> float:
        moment, _ = integrate.quad(
            lambda e: e * float(self.value(np.array([e]))[0]), self.emin, self.upper, limit=500
        )
        return moment


AnyDensity = Union[TruncatedBreitWigner, PointMassDensity, InterpolatedDensity, ContinuumReservoirDensity]


def bw_normalization(e0: float, gamma0: float, emin: float) -> float:
    """Return N such that the truncated Breit–Wigner density integrates to one.

    Raises:
        DomainError: If ``gamma0 <= 0`` or ``e0 < emin``.
    """
    if not gamma0 > 0:
        raise DomainError(f"gamma0 must be positive, got {gamma0}")
    if e0 < emin:
        raise DomainError(f"e0 must not lie below emin, got e0={e0}, emin={emin}")
    return 1.0 / (0.5 + math.atan(2.0 * (e0 - emin) / gamma0) / math.pi)


def density_value(d: SpectralDensity, energy: ArrayLike) -> Union[float, NDArray[np.float64]]:
    """Evaluate ω(E); exactly zero below ``d.emin``."""
    out = d.value(energy)
    if np.ndim(out) == 0:
        return float(out)
    return out


def tabulated(
    energies: Sequence[float], weights: Sequence[float], rule: str = "point"
) -> Union[PointMassDensity, InterpolatedDensity]:
    """Build a tabulated density; ``rule`` is ``"point"`` (default) or ``"linear"``."""
    if rule == "point":
        return PointMassDensity(np.asarray(energies), np.asarray(weights))
    if rule == "linear":
        return InterpolatedDensity(np.asarray(energies), np.asarray(weights))
    raise DomainError(f"unknown tabulated rule {rule!r}; expected 'point' or 'linear'")


def load_tabulated(path: Union[str, Path], rule: str = "point") -> Union[PointMassDensity, InterpolatedDensity]:
    """Read a two-column ``energy weight`` text file (``#`` comments allowed)."""
    try:
        data = np.loadtxt(path, comments="#", ndmin=2)
    except (OSError, ValueError) as exc:
        raise DomainError(f"cannot read tabulated density {path}: {exc}") from exc
    if data.shape[1] != 2:
        raise DomainError(f"{path}: expected two columns, found {data.shape[1]}")
    return tabulated(data[:, 0], data[:, 1], rule)


def density_from_model(m: "FiniteLevelModel", state_index: int) -> SpectralDensity:
    """Spectral measure of basis state ``state_index`` under the model's H.

    Discrete models give point masses |⟨α|φ_k⟩|² at the eigenvalues of H. A
    one-level model with a continuum reservoir gives the Friedrichs density.
    """
    if state_index not in m.subspace_indices:
        raise DomainError(f"state {state_index} is not in the model subspace {m.subspace_indices}")
    if m.reservoir is not None:
        if m.n != 1:
            raise DomainError("continuum densities are defined for one-level subspaces only")
        return ContinuumReservoirDensity(float(m.hamiltonian[state_index, state_index].real), m.reservoir)
    energies, vectors = m.eigensystem
    weights = np.abs(vectors[state_index, :]) ** 2
    return PointMassDensity(energies, weights)
