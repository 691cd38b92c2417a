"""Quadrature building blocks shared by the amplitude and subspace modules.

All evaluators return a value together with an absolute error estimate.
Calls into QUADPACK request ``full_output`` so convergence problems are
reported through the return value instead of the (process-global) warnings
machinery; the sweeps run these calls from several threads.
"""

from __future__ import annotations

import logging
import math
from functools import lru_cache
from typing import Callable, List, NamedTuple, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy import integrate

LOGGER = logging.getLogger(__name__)

#: Gauss–Legendre orders of the panel rule and of its error companion.
PANEL_ORDER = 30
COMPANION_ORDER = 20

#: Filon moments switch from the power series to the recursion above this |y|.
FILON_SERIES_LIMIT = 0.5


class Estimate(NamedTuple):
    value: complex
    error: float


@lru_cache(maxsize=8)
def gauss_rule(order: int) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Gauss–Legendre nodes and weights on [−1, 1]."""
    return np.polynomial.legendre.leggauss(order)


def _real_quad(func: Callable[[float], float], lo: float, hi: float, **kwargs) -> Tuple[float, float]:
    result = integrate.quad(func, lo, hi, full_output=1, **kwargs)
    value, error = result[0], result[1]
    if len(result) > 3:
        LOGGER.debug("quad on [%g, %g] reported: %s", lo, hi, result[3].splitlines()[0])
        # a non-converged QUADPACK call cannot claim its own small error
        error = max(error, abs(value) * 1e-6, 1e-12)
    return value, error


def quad_complex(func: Callable[[float], complex], lo: float, hi: float, **kwargs) -> Estimate:
    """Adaptive quadrature of a complex integrand, real and imaginary parts separately."""
    re, re_err = _real_quad(lambda x: float(np.real(func(x))), lo, hi, **kwargs)
    im, im_err = _real_quad(lambda x: float(np.imag(func(x))), lo, hi, **kwargs)
    return Estimate(complex(re, im), math.hypot(re_err, im_err))


def fourier_tail(func: Callable[[float], float], start: float, t: float, epsabs: float = 1e-13) -> Estimate:
    """∫_start^∞ f(E) e^{−iEt} dE for a real, decaying f (QUADPACK QAWF)."""
    if t == 0:
        value, error = _real_quad(func, start, np.inf, epsabs=epsabs, epsrel=1e-12, limit=400)
        return Estimate(complex(value), error)
    omega = abs(t)
    cos_part, cos_err = _real_quad(func, start, np.inf, weight="cos", wvar=omega, epsabs=epsabs, limlst=200)
    sin_part, sin_err = _real_quad(func, start, np.inf, weight="sin", wvar=omega, epsabs=epsabs, limlst=200)
    return Estimate(complex(cos_part, -math.copysign(1.0, t) * sin_part), math.hypot(cos_err, sin_err))


def panel_edges(segments: Sequence[Tuple[float, float, float]], t: float) -> Tuple[NDArray, NDArray]:
    """Split each ``(lo, hi, max_width)`` segment into panels no wider than π/|t|."""
    lows: List[NDArray] = []
    highs: List[NDArray] = []
    for lo, hi, width in segments:
        if not hi > lo:
            continue
        if t != 0:
            width = min(width, math.pi / abs(t))
        count = max(1, int(math.ceil((hi - lo) / width)))
        edges = np.linspace(lo, hi, count + 1)
        lows.append(edges[:-1])
        highs.append(edges[1:])
    if not lows:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(lows), np.concatenate(highs)


def _panel_sum(func, lows: NDArray, highs: NDArray, t: float, order: int) -> complex:
    nodes, weights = gauss_rule(order)
    half = 0.5 * (highs - lows)[:, None]
    mid = 0.5 * (highs + lows)[:, None]
    energy = mid + half * nodes[None, :]
    integrand = func(energy) * np.exp(-1j * energy * t)
    return complex(np.sum(half * weights[None, :] * integrand))


def oscillatory_panels(
    func: Callable[[NDArray], NDArray], segments: Sequence[Tuple[float, float, float]], t: float
) -> Estimate:
    """∫ f(E) e^{−iEt} dE over the segments with Gauss–Legendre panels.

    The error estimate is the difference to a lower-order rule on the same panels.
    """
    lows, highs = panel_edges(segments, t)
    if lows.size == 0:
        return Estimate(0j, 0.0)
    fine = _panel_sum(func, lows, highs, t, PANEL_ORDER)
    coarse = _panel_sum(func, lows, highs, t, COMPANION_ORDER)
    LOGGER.debug("oscillatory quadrature at t=%g on %d panels", t, lows.size)
    return Estimate(fine, abs(fine - coarse) + 1e-16 * lows.size)


def filon_moments(y: NDArray[np.float64], kmax: int) -> NDArray[np.complex128]:
    """F_k(y) = ∫₀¹ uᵏ e^{−iyu} du for k = 0..kmax, shape (kmax + 1,) + y.shape."""
    y = np.asarray(y, dtype=np.float64)
    out = np.empty((kmax + 1,) + y.shape, dtype=np.complex128)
    small = np.abs(y) < FILON_SERIES_LIMIT
    safe_y = np.where(small, 1.0, y)
    phase = np.exp(-1j * safe_y)
    previous = (1.0 - phase) / (1j * safe_y)
    for k in range(kmax + 1):
        if k > 0:
            previous = (k * previous - phase) / (1j * safe_y)
        series = np.zeros(y.shape, dtype=np.complex128)
        term = np.ones(y.shape, dtype=np.complex128)
        for m in range(18):
            if m > 0:
                term = term * (-1j * y) / m
            series = series + term / (m + k + 1)
        out[k] = np.where(small, series, previous)
    return out
