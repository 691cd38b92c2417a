"""Tests for the one-dimensional effective Hamiltonian."""

import math

import numpy as np
import pytest

import krdecay


def synthetic_samples(times, h_of_t):
    """Trusted samples carrying a prescribed h(t)."""
    return [
        krdecay.EffectiveHamiltonianSample(t=float(t), h=complex(h_of_t(t)), a=1.0, adot=-1j * h_of_t(t),
                                           a_error=0.0, trusted=True)
        for t in times
    ]


class TestEffectiveHamiltonian:
    """Tests for effective_hamiltonian."""

    def test_stationary_point_mass(self):
        """Test h(t) = E₁ and zero rate for a single point mass."""
        d = krdecay.tabulated([2.5], [1.0])
        for t in (0.1, 1.0, 40.0):
            sample = krdecay.effective_hamiltonian(d, t)
            assert sample.h == pytest.approx(2.5, abs=1e-14)
            assert sample.rate == pytest.approx(0.0, abs=1e-14)
            assert sample.trusted

    def test_pole_dominance_at_three_lifetimes(self, fig1_density):
        """Test h(3τ) ≈ e0 − iγ0/2 to within the background-to-pole ratio."""
        t = 3.0 * fig1_density.tau
        sample = krdecay.effective_hamiltonian(fig1_density, t)
        split = krdecay.survival_contour(fig1_density, t)
        pole = fig1_density.pole
        assert abs(sample.h - pole) / abs(pole) <= 2.0 * abs(split.a_non / split.a_exp)

    def test_threshold_regime(self, fig1_density, fig1_t_as):
        """Test h ≈ emin − i/t at t = 100·t_as."""
        t = 100.0 * fig1_t_as
        sample = krdecay.effective_hamiltonian(fig1_density, t)
        assert abs(sample.energy - fig1_density.emin) <= 1e-3 * fig1_density.e0
        assert t * sample.h.imag == pytest.approx(-1.0, abs=1e-2)
        assert sample.trusted

    def test_identity_closes(self, fig1_density, fig1_t_as, rng):
        """Test i·ȧ − h·a = 0 at 30 random times up to 5·t_as."""
        for t in rng.uniform(0.05, 5.0 * fig1_t_as, 30):
            s = krdecay.effective_hamiltonian(fig1_density, float(t))
            assert abs(1j * s.adot - s.h * s.a) <= 1e-8 * abs(s.adot)

    def test_plateau(self, fig1_density):
        """Test the constant energy and rate of the exponential regime on [2τ, 6τ]."""
        tau = fig1_density.tau
        samples = krdecay.hamiltonian_sweep(fig1_density, np.linspace(2.0 * tau, 6.0 * tau, 120))
        energy = np.array([s.energy for s in samples])
        rate = np.array([s.rate for s in samples])
        assert np.std(energy) / fig1_density.e0 <= 1e-3
        assert abs(rate.mean() - fig1_density.gamma0) / fig1_density.gamma0 <= 1e-2

    def test_plateau_follows_background_ratio(self, fig1_density):
        """Test |Re h/e0 − 1| ≤ 2·|a_non/a_exp| pointwise on [2τ, 10τ]."""
        tau = fig1_density.tau
        samples = krdecay.hamiltonian_sweep(fig1_density, np.linspace(2.0 * tau, 10.0 * tau, 160))
        for s in samples:
            split = krdecay.survival_contour(fig1_density, s.t)
            bound = 2.0 * abs(split.a_non / split.a_exp)
            assert abs(s.energy / fig1_density.e0 - 1.0) <= bound
        rate = np.array([s.rate for s in samples])
        assert abs(rate.mean() - fig1_density.gamma0) / fig1_density.gamma0 <= 1e-2

    def test_limit_regime(self, fig1_density, fig1_t_as):
        """Test Re h → emin and |Im h|·t ∈ [0.9, 1.1] on [30·t_as, 300·t_as]."""
        samples = krdecay.hamiltonian_sweep(fig1_density, np.geomspace(30.0 * fig1_t_as, 300.0 * fig1_t_as, 20))
        scaled = [abs(s.h.imag) * s.t for s in samples]
        assert min(scaled) >= 0.9 and max(scaled) <= 1.1
        assert abs(samples[-1].energy - fig1_density.emin) < abs(samples[0].energy - fig1_density.emin)

    def test_rejects_nonpositive_time(self, fig1_density):
        """Test that h(t) is only evaluated for t > 0."""
        with pytest.raises(krdecay.DomainError):
            krdecay.effective_hamiltonian(fig1_density, 0.0)

    def test_division_hazard(self):
        """Test that a vanishing amplitude refuses the division."""
        # flat density on [0, 2π] has a(1) = 0
        d = krdecay.tabulated([0.0, 2.0 * math.pi], [1.0, 1.0], rule="linear")
        with pytest.raises(krdecay.DivisionHazardError) as exc_info:
            krdecay.effective_hamiltonian(d, 1.0)
        assert exc_info.value.t == 1.0

    def test_point_mass_zero_is_hazard(self):
        """Test that a rounding-level amplitude of point masses refuses the division."""
        # a(t) = 0.5·(1 + e^{−2it}) vanishes at t = π/2
        d = krdecay.tabulated([0.0, 2.0], [0.5, 0.5])
        with pytest.raises(krdecay.DivisionHazardError):
            krdecay.effective_hamiltonian(d, math.pi / 2)

    def test_point_mass_near_zero_is_untrusted(self):
        """Test that |a| within ten error estimates clears the trust flag."""
        d = krdecay.tabulated([0.0, 2.0], [0.5, 0.5])
        sample = krdecay.effective_hamiltonian(d, math.pi / 2 + 6e-15)
        assert sample.a_error > 0.0
        assert not sample.trusted
        assert krdecay.effective_hamiltonian(d, 1.0).trusted


class TestSweep:
    """Tests for hamiltonian_sweep."""

    def test_dip_flags_local_minima(self):
        """Test that dip marks the grid-local minimum of |a|."""
        # |a(t)| = |0.7 + 0.3·e^{−2it}| is smallest at t = π/2
        d = krdecay.tabulated([0.0, 2.0], [0.7, 0.3])
        grid = np.linspace(0.1, 3.0, 30)
        samples = krdecay.hamiltonian_sweep(d, grid)
        dips = [i for i, s in enumerate(samples) if s.dip]
        assert dips == [int(np.argmin(np.abs(grid - math.pi / 2)))]

    def test_rejects_zero_time(self, fig1_density):
        """Test that sweeps need a positive grid."""
        with pytest.raises(krdecay.DomainError):
            krdecay.hamiltonian_sweep(fig1_density, [0.0, 1.0])

    @pytest.mark.slow
    def test_spikes_sit_on_dips(self, fig1_density, fig1_t_as):
        """Test that Re h spikes around t_as and every upward spike contains a dip of |a|."""
        grid = np.linspace(0.8 * fig1_t_as, 1.2 * fig1_t_as, 2000)
        samples = krdecay.hamiltonian_sweep(fig1_density, grid)
        deviation = max(abs(s.energy / fig1_density.e0 - 1.0) for s in samples)
        assert deviation > 0.1
        runs = krdecay.spike_runs(samples, fig1_density.e0)
        assert runs
        for run in runs:
            lo, hi = max(0, run[0] - 1), min(len(samples), run[-1] + 2)
            assert any(samples[i].dip for i in range(lo, hi))


class TestSpikeRuns:
    """Tests for spike_runs."""

    def test_groups_consecutive_indices(self):
        """Test that runs are maximal blocks above the threshold."""
        energies = [1.0, 1.2, 1.3, 1.0, 1.15, 1.0, 1.05, 1.5]
        samples = synthetic_samples(range(1, len(energies) + 1), lambda t: energies[int(t) - 1])
        assert krdecay.spike_runs(samples, 1.0) == [[1, 2], [4], [7]]

    def test_custom_threshold(self):
        """Test a stricter threshold."""
        energies = [1.0, 1.2, 1.3, 1.0]
        samples = synthetic_samples(range(1, 5), lambda t: energies[int(t) - 1])
        assert krdecay.spike_runs(samples, 1.0, threshold=0.25) == [[2]]


class TestTransitionTime:
    """Tests for transition_time."""

    def test_fig1_density(self, bw_fig1_vector, fig1_density):
        """Test t_as ≈ 22.8·τ for E0/γ0 = 25."""
        result = krdecay.transition_time(fig1_density)
        expected = bw_fig1_vector["expected"]
        assert result.t_as / fig1_density.tau == pytest.approx(expected["t_as_over_tau"], rel=expected["t_as_rel_tol"])
        assert result.t_as > fig1_density.tau
        assert result.bracket[0] == pytest.approx(fig1_density.tau)
        assert result.residual <= 1e-8

    def test_moduli_are_equal_at_crossing(self, fig1_density, fig1_t_as):
        """Test |a_exp(t_as)| = |a_non(t_as)|."""
        split = krdecay.survival_contour(fig1_density, fig1_t_as)
        assert abs(split.a_exp) == pytest.approx(abs(split.a_non), rel=1e-7)

    def test_wider_resonance_crosses_earlier(self, bw_wide_vector, fig1_density, fig1_t_as):
        """Test that a larger γ0 at fixed e0 lowers t_as/τ."""
        wide = krdecay.TruncatedBreitWigner(**bw_wide_vector["density"])
        assert krdecay.transition_time(wide).t_as / wide.tau < fig1_t_as / fig1_density.tau

    def test_common_factor_cancels(self, fig1_density, fig1_t_as):
        """Test that scaling a_exp and a_non together leaves the log-ratio unchanged."""
        split = krdecay.survival_contour(fig1_density, fig1_t_as)
        doubled = krdecay.AmplitudeSplit(split.t, 2.0 * split.a_exp, 2.0 * split.a_non)
        assert doubled.log_ratio == pytest.approx(split.log_ratio, abs=1e-12)

    def test_rejects_tabulated_density(self):
        """Test that t_as needs a Breit–Wigner density."""
        with pytest.raises(krdecay.DomainError):
            krdecay.transition_time(krdecay.tabulated([0.0, 1.0], [1.0, 1.0]))


class TestAsymptoticFit:
    """Tests for asymptotic_fit."""

    def test_recovers_generator(self):
        """Test that samples of emin − i/t give c1 = 1, c2 = 0."""
        samples = synthetic_samples(np.geomspace(100.0, 1000.0, 12), lambda t: 0.5 - 1j / t)
        fit = krdecay.asymptotic_fit(samples)
        assert fit.emin_estimate == pytest.approx(0.5, abs=1e-10)
        assert fit.c1 == pytest.approx(1.0, abs=1e-8)
        assert fit.c2 == pytest.approx(0.0, abs=1e-6)
        assert fit.residual < 1e-10
        assert fit.imag_residue < 1e-6
        assert fit.window == (pytest.approx(100.0), pytest.approx(1000.0))

    def test_known_emin(self):
        """Test the two-coefficient fit with emin held fixed."""
        samples = synthetic_samples(np.geomspace(50.0, 500.0, 10), lambda t: 2.0 - 2j / t - 3.0 / t**2)
        fit = krdecay.asymptotic_fit(samples, emin_known=2.0)
        assert fit.emin_estimate == 2.0
        assert fit.c1 == pytest.approx(2.0, abs=1e-9)
        assert fit.c2 == pytest.approx(3.0, abs=1e-6)
        assert fit.limits_hold

    def test_evaluate(self):
        """Test that evaluate reproduces the fitted form."""
        samples = synthetic_samples(np.geomspace(50.0, 500.0, 10), lambda t: 1.0 - 1j / t)
        fit = krdecay.asymptotic_fit(samples)
        assert fit.evaluate([200.0])[0] == pytest.approx(1.0 - 0.005j, abs=1e-10)

    def test_breit_wigner_coefficients(self, fig1_density, fig1_t_as):
        """Test emin ≈ 0 and c1 ≈ 1 for a density with ω(emin) > 0."""
        samples = krdecay.hamiltonian_sweep(fig1_density, np.geomspace(10.0 * fig1_t_as, 100.0 * fig1_t_as, 16))
        fit = krdecay.asymptotic_fit(samples)
        assert abs(fit.emin_estimate) <= 1e-3 * fig1_density.gamma0
        assert fit.c1 == pytest.approx(1.0, abs=1e-2)
        assert fit.limits_hold

    def test_linear_onset_coefficient(self, onset_density, onset_linear_vector):
        """Test c1 ≈ 2 for a density vanishing linearly at threshold."""
        t_as = krdecay.transition_time(onset_density).t_as
        samples = krdecay.hamiltonian_sweep(onset_density, np.geomspace(10.0 * t_as, 100.0 * t_as, 16))
        fit = krdecay.asymptotic_fit(samples, emin_known=onset_density.emin)
        expected = onset_linear_vector["expected"]
        assert fit.c1 == pytest.approx(expected["c1"], abs=expected["c1_tol"])

    def test_too_few_samples(self):
        """Test that fewer than six trusted samples are rejected."""
        samples = synthetic_samples(np.geomspace(100.0, 1000.0, 8), lambda t: -1j / t)
        samples = [
            krdecay.EffectiveHamiltonianSample(s.t, s.h, s.a, s.adot, s.a_error, trusted=i < 5)
            for i, s in enumerate(samples)
        ]
        with pytest.raises(krdecay.DomainError):
            krdecay.asymptotic_fit(samples)

    def test_narrow_window_is_ill_conditioned(self):
        """Test that a window too narrow to separate 1 and 1/t² is rejected."""
        samples = synthetic_samples(np.linspace(1000.0, 1000.000001, 8), lambda t: -1j / t)
        with pytest.raises(krdecay.IllConditionedFitError):
            krdecay.asymptotic_fit(samples)


class TestTailExponent:
    """Tests for tail_exponent and tail_exponent_from_curve."""

    def test_synthetic_inverse_square(self):
        """Test λ = 2 for an exact t⁻² curve."""
        curve = [(t, 3.0 / t**2) for t in np.geomspace(1.0, 1e3, 25)]
        assert krdecay.tail_exponent_from_curve(curve) == pytest.approx(2.0, abs=1e-12)

    def test_breit_wigner(self, fig1_density, fig1_t_as):
        """Test λ = 2 ± 0.05 for the Breit–Wigner tail."""
        assert krdecay.tail_exponent(fig1_density, (3.0 * fig1_t_as, 30.0 * fig1_t_as)) == pytest.approx(2.0, abs=0.05)

    def test_linear_onset(self, onset_density, onset_linear_vector):
        """Test λ = 4 ± 0.1 for the linear-onset density."""
        t_as = krdecay.transition_time(onset_density).t_as
        expected = onset_linear_vector["expected"]
        lam = krdecay.tail_exponent(onset_density, (3.0 * t_as, 30.0 * t_as))
        assert lam == pytest.approx(expected["tail_exponent"], abs=expected["tail_exponent_tol"])

    def test_window_below_three_t_as(self, fig1_density, fig1_t_as):
        """Test that the window must start beyond 3·t_as."""
        with pytest.raises(krdecay.DomainError):
            krdecay.tail_exponent(fig1_density, (fig1_t_as, 30.0 * fig1_t_as))

    def test_nonpositive_probability(self):
        """Test that the log-log fit needs positive data."""
        with pytest.raises(krdecay.DomainError):
            krdecay.tail_exponent_from_curve([(1.0, 1.0), (2.0, 0.0)])


class TestSurvivingPopulation:
    """Tests for surviving_population."""

    def test_no_decay_at_zero(self, fig1_density):
        """Test n(0) = n0."""
        estimate = krdecay.surviving_population(fig1_density, 1e6, 0.0)
        assert estimate.n_surviving == pytest.approx(1e6, rel=1e-8)
        assert estimate.n_surviving <= estimate.n0

    def test_source_at_transition_time(self, fig1_density, fig1_t_as):
        """Test n(t_as) for n0 = 10¹² against the pole-term estimate and the threshold."""
        n0 = 1e12
        estimate = krdecay.surviving_population(fig1_density, n0, fig1_t_as)
        pole_only = n0 * fig1_density.norm**2 * math.exp(-fig1_density.gamma0 * fig1_t_as)
        # both terms have equal modulus at t_as, so |a|² lies in [0, 4|a_exp|²]
        assert estimate.n_surviving <= 4.0 * pole_only * (1 + 1e-6)
        assert estimate.threshold == pytest.approx(math.exp(fig1_density.gamma0 * fig1_t_as))
        assert estimate.observable

    def test_small_source_is_not_observable(self, fig1_density):
        """Test that a source below e^{γ0·t_as} is flagged."""
        assert krdecay.surviving_population(fig1_density, 1e3, 1.0).observable is False

    def test_tabulated_density_has_no_threshold(self, point_masses_path):
        """Test that the threshold check is reported for Breit–Wigner densities only."""
        d = krdecay.load_tabulated(point_masses_path)
        estimate = krdecay.surviving_population(d, 10.0, 2.0)
        assert estimate.threshold is None
        assert estimate.observable is None

    def test_rejects_nonpositive_source(self, fig1_density):
        """Test that n0 must be positive."""
        with pytest.raises(krdecay.DomainError):
            krdecay.surviving_population(fig1_density, 0.0, 1.0)
