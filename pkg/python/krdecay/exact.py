"""Exact evolution of discrete finite-level models.

One eigendecomposition H = V diag(E) V† (cached on the model) yields U(t),
the amplitude matrix A(t) = PU(t)P and its analytic derivative
Ȧ(t) = −iPHU(t)P, and from those the exact subspace Hamiltonian
H∥(t) = iȦA⁻¹. :func:`compare_approximations` measures the reductions of
:mod:`krdecay.subspace` against it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from .errors import DomainError, NumericError, SingularAmplitudeError
from .subspace import (
    EigenprojectorSet,
    FiniteLevelModel,
    SubspaceEffectiveHamiltonian,
    blocks,
    eigenprojectors,
    l_operator,
    loy_hamiltonian,
    subspace_block,
    v_parallel_inf,
    v_parallel_t,
)
from .workers import map_ordered

LOGGER = logging.getLogger(__name__)

#: A(t) with a larger condition number is treated as singular.
MAX_CONDITION = 1e12

#: Comparison windows must end before this fraction of the recurrence time.
RECURRENCE_FRACTION = 0.5


@dataclass(frozen=True, eq=False)
class PropagatorSample:
    t: float
    u: NDArray[np.complex128] = field(repr=False)

    def unitarity_error(self) -> float:
        return float(np.linalg.norm(self.u.conj().T @ self.u - np.eye(self.u.shape[0])))


@dataclass(frozen=True, eq=False)
class AmplitudeMatrix:
    """A_{αβ}(t) = ⟨α|U(t)|β⟩ on the subspace, and its time derivative."""

    t: float
    a: NDArray[np.complex128] = field(repr=False)
    adot: NDArray[np.complex128] = field(repr=False)


class ExactEvolution:
    """Immutable handle over a discrete model and its eigendecomposition."""

    def __init__(self, model: FiniteLevelModel) -> None:
        if model.is_continuum:
            raise DomainError("exact evolution needs a discrete model; use the amplitude module for continua")
        self.model = model
        self.energies, self.vectors = model.eigensystem
        self.rows = self.vectors[list(model.subspace_indices), :]
        self.decoupled = not np.any(blocks(model).phq)
        self.php_projectors = eigenprojectors(subspace_block(model)) if self.decoupled else None

    def propagator(self, t: float) -> PropagatorSample:
        """U(t) = V e^{−iDt} V†."""
        phases = np.exp(-1j * self.energies * t)
        return PropagatorSample(float(t), (self.vectors * phases) @ self.vectors.conj().T)

    def amplitude_matrix(self, t: float) -> AmplitudeMatrix:
        if self.php_projectors is not None:
            # block-diagonal H: A(t) = Σ_j e^{−itλ_j} P_j over the eigenprojectors of PHP
            a = sum(np.exp(-1j * t * lam) * p for lam, p in self.php_projectors)
            return AmplitudeMatrix(float(t), a, -1j * subspace_block(self.model) @ a)
        phases = np.exp(-1j * self.energies * t)
        weighted = self.rows * phases
        a = weighted @ self.rows.conj().T
        adot = -1j * (weighted * self.energies) @ self.rows.conj().T
        return AmplitudeMatrix(float(t), a, adot)

    def heff(self, t: float, max_condition: float = MAX_CONDITION) -> SubspaceEffectiveHamiltonian:
        """H∥(t) = iȦ(t)A(t)⁻¹, by an LU solve against Ȧ rather than an explicit inverse.

        Raises:
            SingularAmplitudeError: cond A(t) exceeds ``max_condition``.
        """
        if self.decoupled:
            # block-diagonal H: A(t) = e^{−itPHP} and H∥(t) = PHP identically
            return SubspaceEffectiveHamiltonian(subspace_block(self.model), t=float(t), condition=1.0)
        amp = self.amplitude_matrix(t)
        condition = float(np.linalg.cond(amp.a))
        if not math.isfinite(condition) or condition > max_condition:
            raise SingularAmplitudeError(t, condition)
        try:
            # X A = Ȧ  ⇔  Aᵀ Xᵀ = Ȧᵀ
            x = scipy.linalg.solve(amp.a.T, amp.adot.T).T
        except (scipy.linalg.LinAlgError, ValueError) as exc:
            raise SingularAmplitudeError(t, condition) from exc
        return SubspaceEffectiveHamiltonian(1j * x, t=float(t), condition=condition)

    def survival(self, t: ArrayLike, state: int = 0) -> NDArray[np.complex128]:
        """A_{αα}(t) for subspace position ``state``, vectorized in t."""
        t = np.asarray(t, dtype=np.float64)
        weights = np.abs(self.rows[state]) ** 2
        return np.exp(-1j * np.multiply.outer(t, self.energies)) @ weights


def propagator(m: FiniteLevelModel, t: float) -> PropagatorSample:
    return ExactEvolution(m).propagator(t)


def amplitude_matrix(m: FiniteLevelModel, t: float) -> AmplitudeMatrix:
    """A(t) = PU(t)P and Ȧ(t) = −iPHU(t)P in the subspace basis."""
    return ExactEvolution(m).amplitude_matrix(t)


def exact_heff(m: FiniteLevelModel, t: float) -> SubspaceEffectiveHamiltonian:
    """Exact H∥(t) = iȦA⁻¹; for n = 1 this is h(t) of the survival amplitude."""
    return ExactEvolution(m).heff(t)


def recurrence_time(m: FiniteLevelModel) -> float:
    """2π / mean level spacing of QHQ, the revival time of a discretized continuum."""
    omega, _ = m.reservoir_modes
    if omega.size < 2:
        raise DomainError("a recurrence time needs at least two reservoir levels")
    spacing = float(omega[-1] - omega[0]) / (omega.size - 1)
    if spacing <= 0:
        raise DomainError("reservoir levels are fully degenerate")
    return 2.0 * math.pi / spacing


def _check_window(m: FiniteLevelModel, t_end: float) -> None:
    if m.n == m.dim:
        return
    try:
        limit = RECURRENCE_FRACTION * recurrence_time(m)
    except DomainError:
        return
    if t_end > limit:
        raise DomainError(f"window ends at t = {t_end:.6g}, beyond half the recurrence time ({limit:.6g})")


def survival_decay_rate(
    m: FiniteLevelModel, window: Tuple[float, float], points: int = 64, state: int = 0
) -> float:
    """Exponential rate of |A_{αα}(t)|² fitted on ``window`` (before recurrence)."""
    lo, hi = (float(x) for x in window)
    if not 0 <= lo < hi:
        raise DomainError(f"decay window must satisfy 0 ≤ t_lo < t_hi, got {window}")
    _check_window(m, hi)
    t = np.linspace(lo, hi, points)
    prob = np.abs(ExactEvolution(m).survival(t, state)) ** 2
    if np.any(prob <= 0):
        raise NumericError("survival probability vanished inside the decay window")
    slope, _ = np.polyfit(t, np.log(prob), 1)
    return float(-slope)


@dataclass(frozen=True)
class ComparisonRow:
    """‖H∥_exact(t) − H∥_approx(t)‖₂ per approximant; NaN where A(t) was singular."""

    t: float
    php: float
    first_order: float
    limit: float
    loy: Optional[float]
    norm_l: float
    condition: float
    singular: bool = False


@dataclass(frozen=True)
class ComparisonReport:
    rows: Tuple[ComparisonRow, ...]
    max_norm_l: float
    has_loy: bool
    eta: Optional[float] = None

    @property
    def columns(self) -> List[str]:
        names = ["t", "err_php", "err_first_order", "err_limit"]
        if self.has_loy:
            names.append("err_loy")
        return names + ["norm_l", "condition", "singular"]

    def to_rows(self) -> List[Dict[str, Any]]:
        out = []
        for row in self.rows:
            record: Dict[str, Any] = {
                "t": row.t,
                "err_php": row.php,
                "err_first_order": row.first_order,
                "err_limit": row.limit,
            }
            if self.has_loy:
                record["err_loy"] = row.loy
            record.update(norm_l=row.norm_l, condition=row.condition, singular=row.singular)
            out.append(record)
        return out


def _norm(x: NDArray) -> float:
    return float(np.linalg.norm(x, 2))


def compare_approximations(
    m: FiniteLevelModel,
    t_grid: Sequence[float],
    eta: Optional[float] = None,
    workers: Optional[int] = None,
) -> ComparisonReport:
    """Error of PHP, PHP + V∥⁽¹⁾(t), PHP + V∥ and (when it applies) the LOY
    Hamiltonian against the exact H∥(t), with ‖L(t)‖ for scale.

    Points where A(t) is singular are reported with ``singular`` set and NaN
    errors instead of aborting the sweep.
    """
    grid = np.asarray(t_grid, dtype=np.float64).ravel()
    if grid.size == 0 or np.any(grid < 0) or np.any(np.diff(grid) <= 0):
        raise DomainError("comparison grid must be nonempty, nonnegative and strictly increasing")
    evolution = ExactEvolution(m)
    php = subspace_block(m)
    projectors: EigenprojectorSet = eigenprojectors(php)
    try:
        limit = v_parallel_inf(m, projectors, eta=eta)
    except DomainError as exc:
        LOGGER.info("no t → ∞ limit for this model: %s", exc)
        limit = None
    loy = None
    if m.n == 2:
        try:
            loy = loy_hamiltonian(m, eta=limit.eta if limit is not None else eta)
        except DomainError:
            loy = None

    def evaluate(t: float) -> ComparisonRow:
        norm_l = _norm(l_operator(m, t, projectors))
        try:
            exact_h = evolution.heff(t)
        except SingularAmplitudeError as exc:
            LOGGER.info("skipping t = %.6g: %s", t, exc)
            nan = float("nan")
            return ComparisonRow(t, nan, nan, nan, nan if loy is not None else None, norm_l, exc.condition, True)
        exact = exact_h.matrix
        first = php + v_parallel_t(m, t, projectors)
        return ComparisonRow(
            t=t,
            php=_norm(exact - php),
            first_order=_norm(exact - first),
            limit=_norm(exact - limit.heff.matrix) if limit is not None else float("nan"),
            loy=_norm(exact - loy.matrix) if loy is not None else None,
            norm_l=norm_l,
            condition=exact_h.condition,
        )

    rows = map_ordered(evaluate, [float(t) for t in grid], workers)
    max_norm_l = max(r.norm_l for r in rows)
    LOGGER.debug("compared %d times, max ‖L‖ = %.3g", len(rows), max_norm_l)
    return ComparisonReport(tuple(rows), max_norm_l, loy is not None, limit.eta if limit is not None else eta)
