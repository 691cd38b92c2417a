"""Tests for exact evolution of finite-level models."""

import math

import numpy as np
import pytest
import scipy.linalg
from numpy.testing import assert_allclose

import krdecay
from conftest import coupled_model, quasi_continuum, random_hermitian

QC_WIDTH = 0.1
QC_BAND = (-10.0, 10.0)


@pytest.fixture(scope="module")
def qc_model():
    """Level at 0 on a 500-level flat quasi-continuum with golden-rule width 0.1."""
    return quasi_continuum(500, 0.0, QC_WIDTH, QC_BAND)


@pytest.fixture
def leaky_model():
    """Two-level subspace whose second state oscillates fully into one reservoir level."""
    h = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    return krdecay.FiniteLevelModel(h, (0, 1))


@pytest.fixture
def weak_model(rng):
    php = random_hermitian(rng, 2)
    return coupled_model(rng, php, np.array([3.0, 4.0, 5.5, 7.0]), 0.05)


class TestPropagator:
    """Tests for propagator."""

    def test_identity_at_zero(self, rng):
        """Test U(0) = I."""
        m = krdecay.FiniteLevelModel(random_hermitian(rng, 4), (0,))
        assert_allclose(krdecay.propagator(m, 0.0).u, np.eye(4), atol=1e-13)

    def test_diagonal_hamiltonian(self):
        """Test U = diag(e^{−iE_k t}) for diagonal H."""
        energies = np.array([-1.0, 0.5, 3.0])
        m = krdecay.FiniteLevelModel(np.diag(energies), (0,))
        assert_allclose(krdecay.propagator(m, 0.7).u, np.diag(np.exp(-0.7j * energies)), atol=1e-14)

    def test_group_property_and_unitarity(self, rng):
        """Test U(t₁ + t₂) = U(t₁)U(t₂) and U†U = I on a random 6×6 model."""
        evolution = krdecay.ExactEvolution(krdecay.FiniteLevelModel(random_hermitian(rng, 6), (0, 1)))
        u1, u2 = evolution.propagator(0.8).u, evolution.propagator(2.3).u
        assert_allclose(evolution.propagator(3.1).u, u1 @ u2, atol=1e-10)
        assert evolution.propagator(17.0).unitarity_error() <= 1e-10

    def test_matches_matrix_exponential(self, rng):
        """Test the eigendecomposition against scipy's expm."""
        h = random_hermitian(rng, 5)
        m = krdecay.FiniteLevelModel(h, (2,))
        assert_allclose(krdecay.propagator(m, 1.9).u, scipy.linalg.expm(-1.9j * h), atol=1e-12)

    def test_continuum_is_rejected(self, friedrichs_model_path):
        """Test that exact evolution needs a discrete model."""
        with pytest.raises(krdecay.DomainError):
            krdecay.ExactEvolution(krdecay.load_model(friedrichs_model_path))


class TestAmplitudeMatrix:
    """Tests for amplitude_matrix."""

    def test_initial_values(self, loy_model_path):
        """Test A(0) = I and Ȧ(0) = −i·PHP."""
        m = krdecay.load_model(loy_model_path)
        amp = krdecay.amplitude_matrix(m, 0.0)
        assert_allclose(amp.a, np.eye(2), atol=1e-13)
        assert_allclose(amp.adot, -1j * krdecay.subspace_block(m), atol=1e-13)

    def test_entries_are_propagator_elements(self, rng):
        """Test A_{αβ}(t) = ⟨e_α|U(t)|e_β⟩."""
        m = krdecay.FiniteLevelModel(random_hermitian(rng, 6), (4, 1, 2))
        u = krdecay.propagator(m, 2.2).u
        amp = krdecay.amplitude_matrix(m, 2.2)
        idx = list(m.subspace_indices)
        assert_allclose(amp.a, u[np.ix_(idx, idx)], atol=1e-12)

    def test_derivative_is_analytic(self, rng):
        """Test Ȧ against a central difference of A."""
        m = krdecay.FiniteLevelModel(random_hermitian(rng, 5), (0, 3))
        evolution = krdecay.ExactEvolution(m)
        h = 1e-5
        numeric = (evolution.amplitude_matrix(1.0 + h).a - evolution.amplitude_matrix(1.0 - h).a) / (2 * h)
        assert_allclose(evolution.amplitude_matrix(1.0).adot, numeric, atol=1e-8)

    def test_decoupled_subspace(self, zero_coupling_model_path):
        """Test A(t) = e^{−itPHP} exactly for block-diagonal H."""
        m = krdecay.load_model(zero_coupling_model_path)
        php = krdecay.subspace_block(m)
        for t in (0.5, 3.0, 40.0):
            assert_allclose(krdecay.amplitude_matrix(m, t).a, scipy.linalg.expm(-1j * t * php), atol=1e-13)

    def test_survival_matches_diagonal(self, rng):
        """Test the vectorized survival amplitude against A_{αα}."""
        m = krdecay.FiniteLevelModel(random_hermitian(rng, 5), (1, 3))
        evolution = krdecay.ExactEvolution(m)
        times = np.array([0.0, 0.4, 2.5])
        values = evolution.survival(times, state=1)
        for t, value in zip(times, values):
            assert value == pytest.approx(evolution.amplitude_matrix(t).a[1, 1], abs=1e-13)


class TestExactHeff:
    """Tests for exact_heff."""

    def test_full_space_gives_h(self, rng):
        """Test H∥(t) = H when P = I."""
        h = random_hermitian(rng, 4)
        m = krdecay.FiniteLevelModel(h, (0, 1, 2, 3))
        assert_allclose(krdecay.exact_heff(m, 1.3).matrix, m.hamiltonian, atol=1e-10)

    def test_decoupled_is_constant(self, zero_coupling_model_path):
        """Test H∥(t) = PHP at every t for block-diagonal H."""
        m = krdecay.load_model(zero_coupling_model_path)
        for t in (0.1, 2.0, 25.0):
            assert np.array_equal(krdecay.exact_heff(m, t).matrix, krdecay.subspace_block(m))

    def test_one_level_matches_heff1d(self, rng):
        """Test n = 1 against h(t) of the point-mass density."""
        m = krdecay.FiniteLevelModel(random_hermitian(rng, 4), (0,))
        d = krdecay.density_from_model(m, 0)
        for t in (0.2, 1.1):
            exact = krdecay.exact_heff(m, t).matrix[0, 0]
            assert exact == pytest.approx(krdecay.effective_hamiltonian(d, t).h, abs=1e-8)

    def test_quasi_continuum_matches_heff1d(self, qc_model):
        """Test the 500-level model against heff1d over its point-mass density."""
        d = krdecay.density_from_model(qc_model, 0)
        for t in (5.0, 20.0, 45.0):
            exact = krdecay.exact_heff(qc_model, t).matrix[0, 0]
            assert exact == pytest.approx(krdecay.effective_hamiltonian(d, t).h, abs=1e-8)

    def test_mass_and_width_reconstruct(self, loy_model_path):
        """Test M − (i/2)Γ = H∥(t) for the exact Hamiltonian."""
        heff = krdecay.exact_heff(krdecay.load_model(loy_model_path), 2.0)
        assert_allclose(heff.reconstruct(), heff.matrix, atol=1e-15)
        assert heff.condition >= 1.0

    def test_singular_amplitude(self, leaky_model):
        """Test the singular-A error where |A₂₂| = |cos t| vanishes."""
        with pytest.raises(krdecay.SingularAmplitudeError) as exc_info:
            krdecay.exact_heff(leaky_model, math.pi / 2)
        assert exc_info.value.condition > 1e12


class TestQuasiContinuum:
    """Tests for recurrence_time and survival_decay_rate."""

    def test_recurrence_time(self, qc_model):
        """Test 2π over the mean reservoir spacing."""
        spacing = (QC_BAND[1] - QC_BAND[0]) / 499
        assert krdecay.recurrence_time(qc_model) == pytest.approx(2 * math.pi / spacing, rel=1e-10)

    def test_golden_rule_decay(self, qc_model):
        """Test that |A₁₁|² decays with rate 2π|g|²/δ on [τ/2, 3τ]."""
        tau = 1.0 / QC_WIDTH
        rate = krdecay.survival_decay_rate(qc_model, (0.5 * tau, 3.0 * tau))
        assert rate == pytest.approx(QC_WIDTH, rel=0.05)

    def test_window_beyond_recurrence(self, qc_model):
        """Test that windows must end before half the recurrence time."""
        with pytest.raises(krdecay.DomainError):
            krdecay.survival_decay_rate(qc_model, (1.0, 0.6 * krdecay.recurrence_time(qc_model)))

    def test_needs_two_reservoir_levels(self):
        """Test that a single reservoir level has no recurrence time."""
        m = krdecay.FiniteLevelModel(np.array([[0.0, 0.1], [0.1, 1.0]]), (0,))
        with pytest.raises(krdecay.DomainError):
            krdecay.recurrence_time(m)

    def test_limit_tracks_exact_width(self, qc_model):
        """Test that PHP + V∥ tracks the exact decay rate within 5% on [τ, 5τ]."""
        with pytest.warns(krdecay.RegularizationWarning):
            limit = krdecay.v_parallel_inf(qc_model)
        width = limit.heff.gamma[0, 0].real
        assert width == pytest.approx(QC_WIDTH, rel=0.05)
        tau = 1.0 / QC_WIDTH
        for t in np.linspace(tau, 5.0 * tau, 5):
            exact = krdecay.exact_heff(qc_model, float(t))
            assert exact.gamma[0, 0].real == pytest.approx(width, rel=0.05)


class TestCompareApproximations:
    """Tests for compare_approximations."""

    def test_zero_coupling(self, zero_coupling_model_path):
        """Test that every error vanishes without coupling."""
        m = krdecay.load_model(zero_coupling_model_path)
        report = krdecay.compare_approximations(m, [0.0, 0.5, 1.0, 4.0], eta=0.1)
        assert not report.has_loy
        for row in report.rows:
            assert (row.php, row.first_order, row.limit, row.norm_l) == (0.0, 0.0, 0.0, 0.0)
            assert not row.singular

    def test_columns_and_rows(self, loy_model_path):
        """Test the LOY column and that LOY equals the limit for PHP = m₀I."""
        m = krdecay.load_model(loy_model_path)
        report = krdecay.compare_approximations(m, np.linspace(0.0, 3.0, 7), eta=0.2)
        assert report.has_loy
        assert report.columns == [
            "t", "err_php", "err_first_order", "err_limit", "err_loy", "norm_l", "condition", "singular"
        ]
        rows = report.to_rows()
        assert [list(r) for r in rows] == [report.columns] * 7
        for row in report.rows:
            assert row.loy == pytest.approx(row.limit, abs=1e-12)
        assert report.max_norm_l == max(r.norm_l for r in report.rows)
        assert report.eta == 0.2

    def test_first_order_beats_php(self, weak_model):
        """Test that V∥⁽¹⁾(t) improves on PHP at weak coupling."""
        report = krdecay.compare_approximations(weak_model, [0.5, 1.0, 2.0], eta=0.2)
        for row in report.rows:
            assert row.first_order < row.php

    def test_first_order_remainder_scales_as_c4(self, weak_model):
        """Test the log-log slope 4 ± 0.3 of the first-order error against c."""
        scales = np.geomspace(0.25, 1.0, 5)
        errors = [
            krdecay.compare_approximations(weak_model.with_coupling_scale(float(c)), [1.0], eta=0.2).rows[0].first_order
            for c in scales
        ]
        slope, _ = np.polyfit(np.log(scales), np.log(errors), 1)
        assert slope == pytest.approx(4.0, abs=0.3)

    def test_singular_points_are_reported(self, leaky_model):
        """Test that a singular A(t) gives a flagged NaN row instead of an abort."""
        report = krdecay.compare_approximations(leaky_model, [1.0, math.pi / 2, 2.0], eta=0.1)
        flags = [row.singular for row in report.rows]
        assert flags == [False, True, False]
        assert math.isnan(report.rows[1].php)
        assert math.isfinite(report.rows[0].php)

    def test_parallel_matches_serial(self, loy_model_path):
        """Test that worker threads keep grid order and values."""
        m = krdecay.load_model(loy_model_path)
        grid = np.linspace(0.0, 5.0, 11)
        serial = krdecay.compare_approximations(m, grid, eta=0.2, workers=1)
        parallel = krdecay.compare_approximations(m, grid, eta=0.2, workers=3)
        assert serial.rows == parallel.rows

    def test_rejects_bad_grid(self, loy_model_path):
        """Test that the grid must be nonnegative and increasing."""
        m = krdecay.load_model(loy_model_path)
        with pytest.raises(krdecay.DomainError):
            krdecay.compare_approximations(m, [1.0, 0.5], eta=0.2)


class TestSeriesAgainstExact:
    """Order-by-order kernel series against the exact amplitude matrix."""

    def test_first_order_series(self, weak_model):
        """Test that the order-1 U∥ error is second order in ‖L‖."""
        t_end = 3.0
        grid = np.linspace(0.0, t_end, 601)
        series = krdecay.kernel_series(weak_model, grid, order=1)
        exact = np.array([krdecay.amplitude_matrix(weak_model, t).a for t in grid])
        err0 = np.max(np.abs(series.propagators[0] - exact))
        err1 = np.max(np.abs(series.propagators[1] - exact))
        assert err1 < err0
        assert err1 <= t_end**2 * series.max_norm_l**2 + 1e-5
