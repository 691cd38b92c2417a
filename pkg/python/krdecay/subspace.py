"""Krolikowski–Rzewuski reduction of a finite-level model onto a subspace.

The model Hamiltonian H is split by the projector P onto ``subspace_indices``
and Q = I − P. From the blocks PHP, PHQ, QHQ, QHP this module builds the
eigenprojectors of PHP, the self-energy Σ(ε), the first-order potential
V∥⁽¹⁾(t) with its t → ∞ limit V∥, the explicit two-level matrix elements, the
LOY and WW limits, and the kernel series K, G, L.

Discrete reservoirs (an explicit QHQ block) and continuum reservoirs
(coupling functions g_j(E) on [emin, cutoff]) are both supported. For a
discrete reservoir V∥⁽¹⁾(t) oscillates forever; its "limit" is taken either
with a finite ``eta`` in Σ(λ + iη) or by time averaging.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, List, NamedTuple, Optional, Tuple, Union

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from .errors import (
    DegenerateCaseError,
    DomainError,
    GridResolutionWarning,
    NumericError,
    RegularizationWarning,
    SingularityError,
)
from .quadrature import quad_complex

LOGGER = logging.getLogger(__name__)

#: Below this |x·t| the phase kernel is evaluated from its Taylor series.
SERIES_THRESHOLD = 1e-3

MAX_SERIES_ORDER = 4


# ---------------------------------------------------------------------------
# Continuum couplings


@dataclass(frozen=True)
class FlatCoupling:
    """Constant coupling with |g(E)|² = amplitude²·γ/2π up to ``cutoff``."""

    gamma: float
    cutoff: float
    amplitude: complex = 1.0

    def __post_init__(self) -> None:
        if not self.gamma >= 0:
            raise DomainError(f"coupling gamma must be nonnegative, got {self.gamma}")

    @property
    def upper(self) -> float:
        return float(self.cutoff)

    @property
    def strength(self) -> complex:
        return complex(self.amplitude) * math.sqrt(self.gamma / (2.0 * math.pi))

    def value(self, energy: ArrayLike) -> NDArray[np.complex128]:
        energy = np.asarray(energy, dtype=np.float64)
        return np.where(energy <= self.cutoff, self.strength, 0.0).astype(np.complex128)


@dataclass(frozen=True, eq=False)
class TabulatedCoupling:
    """Coupling g(E) interpolated linearly through (E_k, g_k); zero outside."""

    energies: NDArray[np.float64] = field(repr=False)
    values: NDArray[np.complex128] = field(repr=False)

    def __post_init__(self) -> None:
        energies = np.asarray(self.energies, dtype=np.float64).ravel()
        values = np.asarray(self.values, dtype=np.complex128).ravel()
        if energies.size < 2 or energies.shape != values.shape:
            raise DomainError("tabulated couplings need at least two (E, g) samples")
        if np.any(np.diff(energies) <= 0):
            raise DomainError("tabulated coupling energies must be strictly increasing")
        energies.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "values", values)

    @property
    def upper(self) -> float:
        return float(self.energies[-1])

    def value(self, energy: ArrayLike) -> NDArray[np.complex128]:
        energy = np.asarray(energy, dtype=np.float64)
        re = np.interp(energy, self.energies, self.values.real, left=0.0, right=0.0)
        im = np.interp(energy, self.energies, self.values.imag, left=0.0, right=0.0)
        return re + 1j * im


Coupling = Union[FlatCoupling, TabulatedCoupling]


def _quad_complex(func, lo: float, hi: float, **kwargs) -> complex:
    return quad_complex(func, lo, hi, **kwargs).value


@dataclass(frozen=True)
class ContinuumReservoir:
    """A continuum [emin, cutoff] coupled to subspace state j through g_j(E)."""

    emin: float
    couplings: Tuple[Coupling, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "couplings", tuple(self.couplings))
        if not self.couplings:
            raise DomainError("a continuum reservoir needs at least one coupling function")
        for g in self.couplings:
            if not g.upper > self.emin:
                raise DomainError(f"coupling cutoff {g.upper} must lie above emin {self.emin}")

    def coupling_vector(self, energy: float) -> NDArray[np.complex128]:
        """(g_1(E), ..., g_n(E)); zero below emin."""
        if energy < self.emin:
            return np.zeros(len(self.couplings), dtype=np.complex128)
        return np.array([complex(g.value(energy)) for g in self.couplings])

    def _product(self, j: int, k: int):
        gj, gk = self.couplings[j], self.couplings[k]
        return lambda e: gj.value(e) * np.conj(gk.value(e))

    def principal_value(self, eps: ArrayLike, j: int, k: int) -> NDArray[np.complex128]:
        """PV ∫ g_j(E) ḡ_k(E) / (E − ε) dE over the reservoir, vectorized in ε."""
        eps_arr = np.asarray(eps, dtype=np.float64)
        gj, gk = self.couplings[j], self.couplings[k]
        a, b = self.emin, min(gj.upper, gk.upper)
        if isinstance(gj, FlatCoupling) and isinstance(gk, FlatCoupling):
            c = gj.strength * np.conj(gk.strength)
            with np.errstate(divide="ignore"):
                logs = np.log(np.abs(b - eps_arr)) - np.log(np.abs(a - eps_arr))
            return c * logs
        flat = eps_arr.ravel()
        out = np.array([self._principal_value_scalar(float(e), a, b, j, k) for e in flat])
        return out.reshape(eps_arr.shape)

    def _principal_value_scalar(self, eps: float, a: float, b: float, j: int, k: int) -> complex:
        f = self._product(j, k)
        opts = dict(epsabs=1e-13, epsrel=1e-11, limit=400)
        if not a < eps < b:
            return _quad_complex(lambda e: f(e) / (e - eps), a, b, **opts)
        # Symmetric subtraction: PV over [ε−δ, ε+δ] folds into a regular integrand.
        delta = min(eps - a, b - eps)
        total = _quad_complex(lambda u: (f(eps + u) - f(eps - u)) / u if u > 0 else 0.0, 0.0, delta, **opts)
        if eps - delta > a:
            total += _quad_complex(lambda e: f(e) / (e - eps), a, eps - delta, **opts)
        if eps + delta < b:
            total += _quad_complex(lambda e: f(e) / (e - eps), eps + delta, b, **opts)
        return total

    def sigma(self, eps: float) -> NDArray[np.complex128]:
        """Σ_jk(ε) = PV∫ g_j ḡ_k/(E − ε) dE + iπ g_j(ε) ḡ_k(ε)."""
        if eps == self.emin:
            raise DomainError(f"Σ(ε) is not defined at the threshold emin = {self.emin}")
        n = len(self.couplings)
        out = np.empty((n, n), dtype=np.complex128)
        for j in range(n):
            for k in range(n):
                out[j, k] = complex(self.principal_value(eps, j, k))
        g = self.coupling_vector(eps)
        return out + 1j * math.pi * np.outer(g, np.conj(g))

    @property
    def upper(self) -> float:
        return max(g.upper for g in self.couplings)


# ---------------------------------------------------------------------------
# Models and result types


class Blocks(NamedTuple):
    php: NDArray[np.complex128]
    phq: NDArray[np.complex128]
    qhq: NDArray[np.complex128]
    qhp: NDArray[np.complex128]


@dataclass(frozen=True, eq=False)
class FiniteLevelModel:
    """Hermitian H with a designated subspace; optionally a continuum reservoir.

    H is symmetrized at construction; the Frobenius norm of the removed
    anti-Hermitian part is kept in ``hermiticity_correction``. With a continuum
    reservoir, H is the n×n subspace block and the reservoir replaces Q.
    """

    hamiltonian: NDArray[np.complex128] = field(repr=False)
    subspace_indices: Tuple[int, ...]
    reservoir: Optional[ContinuumReservoir] = None
    hermiticity_correction: float = field(init=False, default=0.0)

    def __post_init__(self) -> None:
        h = np.array(self.hamiltonian, dtype=np.complex128)
        if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] == 0:
            raise DomainError(f"H must be a nonempty square matrix, got shape {h.shape}")
        sym = 0.5 * (h + h.conj().T)
        correction = float(np.linalg.norm(h - sym))
        if correction > 1e-12:
            LOGGER.debug("symmetrized H, removed anti-Hermitian part of norm %.3g", correction)
        indices = tuple(int(i) for i in self.subspace_indices)
        dim = h.shape[0]
        if len(set(indices)) != len(indices):
            raise DomainError(f"subspace indices must be distinct, got {indices}")
        if not indices or any(i < 0 or i >= dim for i in indices):
            raise DomainError(f"subspace indices {indices} out of range for dim {dim}")
        if self.reservoir is not None:
            if len(indices) != dim:
                raise DomainError("with a continuum reservoir H must be the subspace block only")
            if len(self.reservoir.couplings) != dim:
                raise DomainError("a continuum reservoir needs one coupling function per subspace state")
        sym.flags.writeable = False
        object.__setattr__(self, "hamiltonian", sym)
        object.__setattr__(self, "subspace_indices", indices)
        object.__setattr__(self, "hermiticity_correction", correction)

    @property
    def dim(self) -> int:
        return int(self.hamiltonian.shape[0])

    @property
    def n(self) -> int:
        return len(self.subspace_indices)

    @property
    def complement_indices(self) -> Tuple[int, ...]:
        chosen = set(self.subspace_indices)
        return tuple(i for i in range(self.dim) if i not in chosen)

    @property
    def is_continuum(self) -> bool:
        return self.reservoir is not None

    @cached_property
    def eigensystem(self) -> Tuple[NDArray[np.float64], NDArray[np.complex128]]:
        """Cached (E_k, V) with H = V diag(E) V†."""
        try:
            energies, vectors = scipy.linalg.eigh(self.hamiltonian)
        except (scipy.linalg.LinAlgError, ValueError) as exc:
            raise NumericError(f"eigendecomposition of H failed: {exc}") from exc
        LOGGER.debug("cached eigendecomposition of %d×%d Hamiltonian", self.dim, self.dim)
        return energies, vectors

    @cached_property
    def reservoir_modes(self) -> Tuple[NDArray[np.float64], NDArray[np.complex128]]:
        """Cached (ω, C) with QHQ = W diag(ω) W† and C = PHQ·W."""
        b = blocks(self)
        if b.qhq.shape[0] == 0:
            return np.zeros(0), np.zeros((self.n, 0), dtype=np.complex128)
        try:
            omega, w = scipy.linalg.eigh(b.qhq)
        except (scipy.linalg.LinAlgError, ValueError) as exc:
            raise NumericError(f"eigendecomposition of QHQ failed: {exc}") from exc
        return omega, b.phq @ w

    def with_coupling_scale(self, c: float) -> "FiniteLevelModel":
        """Copy with PHQ and QHP multiplied by the real factor ``c``."""
        if self.reservoir is not None:
            couplings = []
            for g in self.reservoir.couplings:
                if isinstance(g, FlatCoupling):
                    couplings.append(FlatCoupling(g.gamma, g.cutoff, g.amplitude * c))
                else:
                    couplings.append(TabulatedCoupling(g.energies, g.values * c))
            return FiniteLevelModel(
                self.hamiltonian, self.subspace_indices, ContinuumReservoir(self.reservoir.emin, tuple(couplings))
            )
        h = np.array(self.hamiltonian)
        p = list(self.subspace_indices)
        q = list(self.complement_indices)
        h[np.ix_(p, q)] *= c
        h[np.ix_(q, p)] *= c
        return FiniteLevelModel(h, self.subspace_indices)


@dataclass(frozen=True, eq=False)
class EigenprojectorSet:
    """Eigenvalues λ_j of PHP with orthogonal projectors P_j (one per group)."""

    groups: Tuple[Tuple[float, NDArray[np.complex128]], ...]
    group_tol: float

    def __iter__(self) -> Iterator[Tuple[float, NDArray[np.complex128]]]:
        return iter(self.groups)

    def __len__(self) -> int:
        return len(self.groups)

    @property
    def eigenvalues(self) -> NDArray[np.float64]:
        return np.array([lam for lam, _ in self.groups])

    @property
    def projectors(self) -> List[NDArray[np.complex128]]:
        return [p for _, p in self.groups]

    @property
    def ranks(self) -> List[int]:
        return [int(round(np.trace(p).real)) for _, p in self.groups]

    def reconstruct(self) -> NDArray[np.complex128]:
        """Σ_j λ_j P_j."""
        return sum(lam * p for lam, p in self.groups)

    def phase(self, t: float) -> NDArray[np.complex128]:
        """P e^{+itPHP} = Σ_j e^{+itλ_j} P_j."""
        return sum(np.exp(1j * t * lam) * p for lam, p in self.groups)

    def orthogonality_error(self) -> float:
        worst = 0.0
        for j, (_, pj) in enumerate(self.groups):
            for k, (_, pk) in enumerate(self.groups):
                target = pj if j == k else np.zeros_like(pj)
                worst = max(worst, float(np.max(np.abs(pj @ pk - target))))
        return worst

    def completeness_error(self) -> float:
        total = sum(p for _, p in self.groups)
        return float(np.max(np.abs(total - np.eye(total.shape[0]))))


@dataclass(frozen=True, eq=False)
class SubspaceEffectiveHamiltonian:
    """H∥ = M − (i/2)Γ with Hermitian mass matrix M and decay matrix Γ."""

    matrix: NDArray[np.complex128] = field(repr=False)
    t: Optional[float] = None
    condition: Optional[float] = None

    def __post_init__(self) -> None:
        matrix = np.array(self.matrix, dtype=np.complex128)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DomainError(f"effective Hamiltonian must be square, got shape {matrix.shape}")
        matrix.flags.writeable = False
        object.__setattr__(self, "matrix", matrix)

    @property
    def mass(self) -> NDArray[np.complex128]:
        return 0.5 * (self.matrix + self.matrix.conj().T)

    @property
    def gamma(self) -> NDArray[np.complex128]:
        return 1j * (self.matrix - self.matrix.conj().T)

    def reconstruct(self) -> NDArray[np.complex128]:
        return self.mass - 0.5j * self.gamma


@dataclass(frozen=True, eq=False)
class ParallelPotential:
    """V∥ together with the assembled H∥ = PHP + V∥."""

    v: NDArray[np.complex128] = field(repr=False)
    heff: SubspaceEffectiveHamiltonian
    eta: Optional[float] = None


@dataclass(frozen=True, eq=False)
class KernelSample:
    t: float
    k: NDArray[np.complex128] = field(repr=False)
    l: NDArray[np.complex128] = field(repr=False)
    norm_l: float


@dataclass(frozen=True, eq=False)
class KernelSeries:
    """K and L on a uniform grid and U∥ truncated at each order 0..order."""

    t_grid: NDArray[np.float64] = field(repr=False)
    samples: Tuple[KernelSample, ...] = field(repr=False)
    propagators: Tuple[NDArray[np.complex128], ...] = field(repr=False)
    trapezoid_error: float

    @property
    def max_norm_l(self) -> float:
        return max(s.norm_l for s in self.samples)


# ---------------------------------------------------------------------------
# Operations


def blocks(m: FiniteLevelModel) -> Blocks:
    """PHP, PHQ, QHQ, QHP in the ordered bases of P and Q."""
    if m.is_continuum:
        raise DomainError("continuum models have no discrete Q block")
    p = list(m.subspace_indices)
    q = list(m.complement_indices)
    h = m.hamiltonian
    return Blocks(h[np.ix_(p, p)], h[np.ix_(p, q)], h[np.ix_(q, q)], h[np.ix_(q, p)])


def subspace_block(m: FiniteLevelModel) -> NDArray[np.complex128]:
    """PHP for either kind of model."""
    p = list(m.subspace_indices)
    return m.hamiltonian[np.ix_(p, p)]


def default_group_tol(php: NDArray) -> float:
    scale = float(np.linalg.norm(php, 2)) if php.size else 0.0
    return max(1e-8 * scale, 1e-300)


def eigenprojectors(php: ArrayLike, group_tol: Optional[float] = None) -> EigenprojectorSet:
    """Group the eigenvalues of PHP whose spread is below ``group_tol``.

    One projector per group covers the nondegenerate, fully degenerate and
    mixed cases alike; a group's eigenvalue is the mean of its members.
    """
    php = np.asarray(php, dtype=np.complex128)
    if php.ndim != 2 or php.shape[0] != php.shape[1]:
        raise DomainError(f"PHP must be square, got shape {php.shape}")
    if not np.allclose(php, php.conj().T, atol=1e-12 * max(1.0, float(np.max(np.abs(php))))):
        raise DomainError("PHP must be Hermitian")
    tol = default_group_tol(php) if group_tol is None else float(group_tol)
    try:
        values, vectors = scipy.linalg.eigh(php)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"eigensolver failed on PHP: {exc}") from exc
    groups = []
    start = 0
    for k in range(1, len(values) + 1):
        if k == len(values) or values[k] - values[start] >= tol:
            block = vectors[:, start:k]
            groups.append((float(np.mean(values[start:k])), block @ block.conj().T))
            start = k
    LOGGER.debug("PHP eigenvalues grouped into %d projectors (tol %.3g)", len(groups), tol)
    return EigenprojectorSet(tuple(groups), tol)


def default_eta(m: FiniteLevelModel) -> float:
    """3 × the mean level spacing of QHQ."""
    omega, _ = m.reservoir_modes
    if omega.size < 2:
        raise DomainError("mean level spacing needs at least two reservoir levels; pass eta explicitly")
    return 3.0 * float(omega[-1] - omega[0]) / (omega.size - 1)


def _resolve_eta(m: FiniteLevelModel, eta: Optional[float]) -> Optional[float]:
    if m.is_continuum or eta is not None:
        return eta
    omega, _ = m.reservoir_modes
    if omega.size == 0:
        return 0.0
    eta = default_eta(m)
    warnings.warn(
        f"discrete reservoir: Σ(λ + iη) evaluated with default eta = {eta:.6g}", RegularizationWarning, stacklevel=3
    )
    return eta


def sigma(m: FiniteLevelModel, eps: float, eta: float = 0.0) -> NDArray[np.complex128]:
    """Self-energy Σ(ε) = PHQ (QHQ − ε − iη)⁻¹ QHP.

    Continuum reservoirs ignore ``eta`` and use the exact PV + iπ|g|² form.

    Raises:
        SingularityError: ``eta == 0`` and ε equals an eigenvalue of QHQ.
    """
    if eta < 0:
        raise DomainError(f"eta must be nonnegative, got {eta}")
    if m.is_continuum:
        return m.reservoir.sigma(eps)
    omega, c = m.reservoir_modes
    if omega.size == 0:
        return np.zeros((m.n, m.n), dtype=np.complex128)
    gap = omega - eps
    if eta == 0:
        scale = max(1.0, float(np.max(np.abs(omega))))
        if np.min(np.abs(gap)) <= 1e-12 * scale:
            raise SingularityError(eps)
    return (c / (gap - 1j * eta)) @ c.conj().T


def _phase_kernel(x: NDArray[np.float64], t: float) -> NDArray[np.complex128]:
    """(1 − e^{−ixt})/x, entire in x; Taylor branch for |xt| < SERIES_THRESHOLD."""
    x = np.asarray(x, dtype=np.float64)
    y = x * t
    small = np.abs(y) < SERIES_THRESHOLD
    safe_x = np.where(small, 1.0, x)
    exact = (1.0 - np.exp(-1j * y)) / safe_x
    series = t * (1j + y / 2.0 - 1j * y**2 / 6.0 - y**3 / 24.0)
    return np.where(small, series, exact)


def _averaged_phase_kernel(x: NDArray[np.float64], t_max: float) -> NDArray[np.complex128]:
    """(1/T)∫₀ᵀ (1 − e^{−ixt})/x dt."""
    x = np.asarray(x, dtype=np.float64)
    y = x * t_max
    small = np.abs(y) < SERIES_THRESHOLD
    safe_x = np.where(small, 1.0, x)
    safe_y = np.where(small, 1.0, y)
    exact = (1.0 - (1.0 - np.exp(-1j * safe_y)) / (1j * safe_y)) / safe_x
    series = t_max * (0.5j + y / 6.0 - 1j * y**2 / 24.0)
    return np.where(small, series, exact)


def _continuum_kernel(m: FiniteLevelModel, lam: float, kernel) -> NDArray[np.complex128]:
    """∫ g(E) g(E)† kernel(E − λ) dE over the continuum."""
    res = m.reservoir
    n = m.n
    out = np.empty((n, n), dtype=np.complex128)
    points = [lam] if res.emin < lam < res.upper else None
    for j in range(n):
        for k in range(n):
            f = res._product(j, k)
            out[j, k] = _quad_complex(
                lambda e: complex(f(e) * kernel(np.array(e - lam))),
                res.emin,
                res.upper,
                points=points,
                epsabs=1e-12,
                epsrel=1e-10,
                limit=2000,
            )
    return out


def _first_order(m: FiniteLevelModel, projectors: EigenprojectorSet, kernel) -> NDArray[np.complex128]:
    v = np.zeros((m.n, m.n), dtype=np.complex128)
    if m.is_continuum:
        for lam, p in projectors:
            v -= _continuum_kernel(m, lam, kernel) @ p
        return v
    omega, c = m.reservoir_modes
    if omega.size == 0:
        return v
    for lam, p in projectors:
        v -= (c * kernel(omega - lam)) @ c.conj().T @ p
    return v


def _projectors_for(m: FiniteLevelModel, projectors: Optional[EigenprojectorSet]) -> EigenprojectorSet:
    if projectors is not None:
        return projectors
    return eigenprojectors(subspace_block(m))


def v_parallel_t(
    m: FiniteLevelModel, t: float, projectors: Optional[EigenprojectorSet] = None
) -> NDArray[np.complex128]:
    """First-order potential V∥⁽¹⁾(t) = −i∫₀ᵗ K(s) e^{isPHP} ds.

    Evaluates −Σ_j PHQ [(1 − e^{−it(QHQ−λ_j)})/(QHQ − λ_j)] QHP P_j.
    """
    if t < 0:
        raise DomainError(f"V∥⁽¹⁾(t) is defined for t ≥ 0, got {t}")
    projectors = _projectors_for(m, projectors)
    return _first_order(m, projectors, lambda x: _phase_kernel(x, t))


def v_parallel_time_average(
    m: FiniteLevelModel, t_max: float, projectors: Optional[EigenprojectorSet] = None
) -> NDArray[np.complex128]:
    """Mean of V∥⁽¹⁾(t) over [0, t_max]; the unregularized discrete-reservoir limit."""
    if not t_max > 0:
        raise DomainError(f"averaging window must be positive, got {t_max}")
    projectors = _projectors_for(m, projectors)
    return _first_order(m, projectors, lambda x: _averaged_phase_kernel(x, t_max))


def _limit_potential(
    m: FiniteLevelModel, projectors: EigenprojectorSet, eta: Optional[float]
) -> Tuple[NDArray[np.complex128], Optional[float]]:
    eta = _resolve_eta(m, eta)
    v = np.zeros((m.n, m.n), dtype=np.complex128)
    for lam, p in projectors:
        v -= sigma(m, lam, eta or 0.0) @ p
    return v, eta


def _assemble(m: FiniteLevelModel, v: NDArray[np.complex128], eta: Optional[float]) -> ParallelPotential:
    return ParallelPotential(v, SubspaceEffectiveHamiltonian(subspace_block(m) + v), eta)


def v_parallel_inf(
    m: FiniteLevelModel, projectors: Optional[EigenprojectorSet] = None, eta: Optional[float] = None
) -> ParallelPotential:
    """V∥ = −Σ_j Σ(λ_j) P_j and H∥ = PHP + V∥.

    Degenerate groups enter through their group projector, which reproduces
    the fully and partially degenerate forms. Discrete reservoirs use
    Σ(λ + iη) with ``eta`` defaulting to :func:`default_eta`.
    """
    projectors = _projectors_for(m, projectors)
    v, eta = _limit_potential(m, projectors, eta)
    return _assemble(m, v, eta)


def _two_level_parameters(m: FiniteLevelModel) -> Tuple[complex, complex, float, float, float]:
    if m.n != 2:
        raise DomainError(f"the two-level formulas need n = 2, got n = {m.n}")
    php = subspace_block(m)
    h12, h21 = php[0, 1], php[1, 0]
    hz = 0.5 * float((php[0, 0] - php[1, 1]).real)
    h0 = 0.5 * float((php[0, 0] + php[1, 1]).real)
    kappa = math.sqrt(abs(h12) ** 2 + hz**2)
    return h12, h21, hz, h0, kappa


def two_level_terms(m: FiniteLevelModel, eta: Optional[float] = None) -> NDArray[np.complex128]:
    """The four terms of every v_jk, shape (2, 2, 4), summing to v_jk.

    Raises:
        DegenerateCaseError: κ = 0, where the expressions are undefined.
    """
    h12, h21, hz, h0, kappa = _two_level_parameters(m)
    if kappa <= default_group_tol(subspace_block(m)):
        raise DegenerateCaseError("κ = 0: use v_parallel_inf (degenerate PHP) instead of the two-level formula")
    eta = _resolve_eta(m, eta)
    eta = eta or 0.0
    s_plus = sigma(m, h0 + kappa, eta)
    s_minus = sigma(m, h0 - kappa, eta)
    r = hz / kappa
    terms = np.empty((2, 2, 4), dtype=np.complex128)
    for j in range(2):
        terms[j, 0] = (
            -0.5 * (1 + r) * s_plus[j, 0],
            -0.5 * (1 - r) * s_minus[j, 0],
            -h21 / (2 * kappa) * s_plus[j, 1],
            +h21 / (2 * kappa) * s_minus[j, 1],
        )
        terms[j, 1] = (
            -0.5 * (1 - r) * s_plus[j, 1],
            -0.5 * (1 + r) * s_minus[j, 1],
            -h12 / (2 * kappa) * s_plus[j, 0],
            +h12 / (2 * kappa) * s_minus[j, 0],
        )
    return terms


def two_level_v(m: FiniteLevelModel, eta: Optional[float] = None, strict: bool = False) -> ParallelPotential:
    """V∥ for n = 2 from the explicit v_jk expressions with Σ at H₀ ± κ.

    At κ = 0 the call is routed to the degenerate (LOY) form, or raises
    :class:`DegenerateCaseError` when ``strict`` is set.
    """
    _, _, _, h0, kappa = _two_level_parameters(m)
    if kappa <= default_group_tol(subspace_block(m)):
        if strict:
            raise DegenerateCaseError("κ = 0: use v_parallel_inf (degenerate PHP) instead of the two-level formula")
        LOGGER.debug("κ = 0, routing two-level call to the degenerate formula")
        return v_parallel_inf(m, eta=eta)
    eta = _resolve_eta(m, eta)
    v = two_level_terms(m, eta).sum(axis=2)
    return _assemble(m, v, eta)


def loy_hamiltonian(m: FiniteLevelModel, eta: Optional[float] = None) -> SubspaceEffectiveHamiltonian:
    """H_LOY = m₀P − Σ(m₀) for a two-level subspace with PHP = m₀P."""
    h12, _, hz, h0, _ = _two_level_parameters(m)
    tol = max(default_group_tol(subspace_block(m)), 1e-12)
    if abs(h12) > tol or abs(hz) > tol:
        raise DomainError("the LOY limit needs H₁₁ = H₂₂ and H₁₂ = H₂₁ = 0")
    eta = _resolve_eta(m, eta)
    return SubspaceEffectiveHamiltonian(h0 * np.eye(2) - sigma(m, h0, eta or 0.0))


def ww_hamiltonian(m: FiniteLevelModel, eta: Optional[float] = None) -> SubspaceEffectiveHamiltonian:
    """h_WW = E₁ − Σ₁₁(E₁) for a one-level subspace."""
    if m.n != 1:
        raise DomainError(f"the WW limit needs n = 1, got n = {m.n}")
    e1 = float(subspace_block(m)[0, 0].real)
    eta = _resolve_eta(m, eta)
    return SubspaceEffectiveHamiltonian(e1 * np.eye(1) - sigma(m, e1, eta or 0.0))


def l_operator(m: FiniteLevelModel, t: float, projectors: Optional[EigenprojectorSet] = None) -> NDArray[np.complex128]:
    """Closed form of L(t) = G∗K(t) = −Σ_a e^{−itλ_a} P_a C φ_t(ω − λ_a) C†."""
    if m.is_continuum:
        raise DomainError("L(t) is implemented for discrete reservoirs")
    if t < 0:
        return np.zeros((m.n, m.n), dtype=np.complex128)
    projectors = _projectors_for(m, projectors)
    omega, c = m.reservoir_modes
    out = np.zeros((m.n, m.n), dtype=np.complex128)
    if omega.size == 0:
        return out
    for lam, p in projectors:
        out -= np.exp(-1j * t * lam) * (p @ (c * _phase_kernel(omega - lam, t)) @ c.conj().T)
    return out


def kernel(m: FiniteLevelModel, t: float) -> NDArray[np.complex128]:
    """K(t) = Θ(t)·PHQ e^{−itQHQ} QHP with Θ(0) = 1."""
    if m.is_continuum:
        raise DomainError("the memory kernel is implemented for discrete reservoirs")
    omega, c = m.reservoir_modes
    if t < 0 or omega.size == 0:
        return np.zeros((m.n, m.n), dtype=np.complex128)
    return (c * np.exp(-1j * omega * t)) @ c.conj().T


def kernel_sample(m: FiniteLevelModel, t: float, projectors: Optional[EigenprojectorSet] = None) -> KernelSample:
    """K(t) and the closed-form L(t) at a single time."""
    ell = l_operator(m, t, projectors)
    return KernelSample(float(t), kernel(m, t), ell, float(np.linalg.norm(ell, 2)))


def _uniform_step(t_grid: NDArray[np.float64]) -> float:
    if t_grid.ndim != 1 or t_grid.size < 2:
        raise DomainError("the kernel grid needs at least two points")
    if t_grid[0] != 0.0:
        raise DomainError("the kernel grid must start at t = 0")
    dt = float(t_grid[1] - t_grid[0])
    if not dt > 0 or not np.allclose(np.diff(t_grid), dt, rtol=1e-9, atol=0.0):
        raise DomainError("the kernel grid must be uniform and increasing")
    return dt


def _convolve(a: NDArray[np.complex128], b: NDArray[np.complex128], dt: float) -> NDArray[np.complex128]:
    """Trapezoid rule for (a∗b)(t_k) = ∫₀^{t_k} a(t_k − s) b(s) ds on a uniform grid."""
    out = np.zeros_like(a)
    for k in range(1, a.shape[0]):
        full = np.einsum("jab,jbc->ac", a[k::-1], b[: k + 1])
        out[k] = dt * (full - 0.5 * (a[k] @ b[0]) - 0.5 * (a[0] @ b[k]))
    return out


def kernel_series(m: FiniteLevelModel, t_grid: ArrayLike, order: int = 1) -> KernelSeries:
    """K(t), L(t) = G∗K(t) and U∥ = Σ_{k≤order} (−i)ᵏ L∗…∗L∗U∥⁽⁰⁾ on a uniform grid.

    Convolutions use the trapezoid rule; a :class:`GridResolutionWarning` is
    issued when the step-doubling error estimate of L exceeds 1e−4.
    """
    if m.is_continuum:
        raise DomainError("the kernel series is implemented for discrete reservoirs")
    if not 0 <= order <= MAX_SERIES_ORDER:
        raise DomainError(f"series order must lie in [0, {MAX_SERIES_ORDER}], got {order}")
    grid = np.asarray(t_grid, dtype=np.float64)
    dt = _uniform_step(grid)
    projectors = eigenprojectors(subspace_block(m))
    omega, c = m.reservoir_modes

    u0 = np.array([sum(np.exp(-1j * t * lam) * p for lam, p in projectors) for t in grid])
    if omega.size:
        phases = np.exp(-1j * np.outer(grid, omega))
        kern = np.einsum("ia,ka,ja->kij", c, phases, c.conj())
    else:
        kern = np.zeros_like(u0)
    green = -1j * u0
    ell = _convolve(green, kern, dt)

    error = 0.0
    if grid.size >= 5:
        coarse = _convolve(green[::2], kern[::2], 2 * dt)
        error = float(np.max(np.abs(ell[::2] - coarse))) / 3.0
        if error > 1e-4:
            warnings.warn(
                f"kernel grid step {dt:.3g} too coarse: trapezoid error estimate {error:.3g}",
                GridResolutionWarning,
                stacklevel=2,
            )
    LOGGER.debug("kernel series on %d points, order %d, trapezoid error %.3g", grid.size, order, error)

    propagators = [u0]
    term = u0
    total = u0
    for _ in range(order):
        term = -1j * _convolve(ell, term, dt)
        total = total + term
        propagators.append(total)

    samples = tuple(
        KernelSample(float(t), kern[i], ell[i], float(np.linalg.norm(ell[i], 2))) for i, t in enumerate(grid)
    )
    return KernelSeries(grid, samples, tuple(propagators), error)
