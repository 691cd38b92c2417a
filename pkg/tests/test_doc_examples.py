"""Tests that verify documentation code examples work correctly.

Each test in this file corresponds to a code example in the documentation.
If a test here fails, the corresponding docs page has a broken example.
"""

import math

import numpy as np
import pytest

import krdecay

DOC_MATRIX = np.array([
    [1.0, 0.0, 0.2, 0.1],
    [0.0, 1.0, 0.0, 0.15],
    [0.2, 0.0, 3.0, 0.3],
    [0.1, 0.15, 0.3, 4.5],
])


# -- Landing Page and README: Quick Start --
# Docs: docs/index.md, README.md


def test_landing_page_quick_start(bw_fig1_vector):
    """Verify P(5), h(3) and t_as of the quick start."""
    d = krdecay.TruncatedBreitWigner(e0=25.0, gamma0=1.0, emin=0.0)

    a = krdecay.survival_amplitude(d, 5.0)
    assert abs(a) ** 2 == pytest.approx(math.exp(-5.0), rel=0.05)
    assert krdecay.effective_hamiltonian(d, 3.0).energy == pytest.approx(25.0, rel=1e-3)

    result = krdecay.transition_time(d)
    assert result.t_as / d.tau == pytest.approx(bw_fig1_vector["expected"]["t_as_over_tau"], rel=0.01)


# -- Getting Started: Spectral Densities --
# Docs: docs/getting-started.md


def test_getting_started_densities(tmp_path):
    """Verify the density constructors and the tabulated loaders."""
    d = krdecay.TruncatedBreitWigner(e0=25.0, gamma0=1.0, emin=0.0)
    assert d.norm == pytest.approx(1.0064, abs=1e-4)
    assert d.tau == 1.0

    onset = krdecay.TruncatedBreitWigner(e0=25.0, gamma0=1.0, emin=0.0, onset=1.0)
    assert onset.value(0.0) == 0.0

    (tmp_path / "levels.txt").write_text("0.0 1.0\n1.0 3.0\n")
    (tmp_path / "omega.txt").write_text("0.0 0.0\n1.0 1.0\n2.0 0.0\n")
    masses = krdecay.load_tabulated(tmp_path / "levels.txt")
    curve = krdecay.load_tabulated(tmp_path / "omega.txt", rule="linear")
    assert masses.applied_factor == pytest.approx(0.25)
    assert np.trapezoid(curve.samples, curve.energies) == pytest.approx(1.0)


# -- Getting Started: Survival Amplitude and Effective Hamiltonian --
# Docs: docs/getting-started.md


def test_getting_started_amplitude():
    """Verify the contour split, the curve and h(t) examples."""
    d = krdecay.TruncatedBreitWigner(e0=25.0, gamma0=1.0, emin=0.0)

    split = krdecay.survival_contour(d, 40.0)
    assert split.log_ratio < 0
    assert split.total == pytest.approx(krdecay.survival_amplitude(d, 40.0), abs=1e-9)

    curve = krdecay.survival_probability_curve(d, [0.0, 1.0, 2.0, 5.0], workers=4)
    assert [t for t, _ in curve] == [0.0, 1.0, 2.0, 5.0]

    s = krdecay.effective_hamiltonian(d, 3.0)
    assert s.trusted
    assert s.energy == pytest.approx(25.0, rel=1e-3)

    samples = krdecay.hamiltonian_sweep(d, [5.0, 10.0, 20.0, 22.0, 24.0])
    runs = krdecay.spike_runs(samples, reference=d.e0)
    assert all(isinstance(i, int) for run in runs for i in run)


def test_getting_started_tail():
    """Verify the transition time, tail exponent and population examples."""
    d = krdecay.TruncatedBreitWigner(e0=25.0, gamma0=1.0, emin=0.0)
    result = krdecay.transition_time(d)

    exponent = krdecay.tail_exponent(d, (3 * result.t_as, 30 * result.t_as))
    assert exponent == pytest.approx(2.0, abs=0.05)

    pop = krdecay.surviving_population(d, n0=1e12, t=2 * result.t_as)
    assert pop.observable is (1e12 > math.exp(result.t_as))
    assert 0 < pop.n_surviving < 1e12


# -- Subspace Reduction --
# Docs: docs/subspace.md


def test_subspace_guide():
    """Verify the model, potential, kernel and comparison examples."""
    m = krdecay.FiniteLevelModel(DOC_MATRIX, (0, 1))
    b = krdecay.blocks(m)
    assert b.php.shape == (2, 2) and b.qhq.shape == (2, 2)

    sigma = krdecay.sigma(m, 1.0, eta=0.0)
    v1 = krdecay.v_parallel_t(m, 2.0)
    limit = krdecay.v_parallel_inf(m, eta=0.05)
    assert np.allclose(limit.v, -sigma, atol=0.05)
    assert v1.shape == (2, 2)
    assert np.allclose(limit.heff.reconstruct(), limit.heff.matrix)

    series = krdecay.kernel_series(m, np.linspace(0.0, 5.0, 1001), order=2)
    assert len(series.propagators) == 3
    exact_a = krdecay.amplitude_matrix(m, 5.0).a
    assert np.abs(series.propagators[2][-1] - exact_a).max() < np.abs(series.propagators[0][-1] - exact_a).max()

    exact = krdecay.exact_heff(m, 2.0)
    report = krdecay.compare_approximations(m, np.linspace(0.0, 10.0, 51), eta=0.05)
    assert len(report.rows) == 51
    assert report.rows[0].php == pytest.approx(0.0, abs=1e-12)
    assert exact.matrix.shape == (2, 2)


# -- Model Files --
# Docs: docs/model-files.md


def test_model_file_examples(tmp_path):
    """Verify the discrete and continuum model listings."""
    discrete = krdecay.parse_model(
        "# two degenerate levels coupled to three reservoir levels\n"
        "5 2                 # dim n\n"
        "0 1                 # 0-based subspace indices\n"
        "0 0 1.0             # i j re [im], upper triangle only\n"
        "1 1 1.0\n0 2 0.2\n1 3 0.15 0.05\n2 2 3.0\n3 3 4.5\n4 4 6.0\n"
    )
    assert discrete.hamiltonian[3, 1] == 0.15 - 0.05j

    flat = krdecay.parse_model(
        "1 1\n0\n0 0 5.0\ncontinuum 0.0\nflat 0.1 100.0            # golden-rule width, cutoff, optional amplitude\n"
    )
    assert flat.is_continuum

    (tmp_path / "coupling.txt").write_text("0.0 0.0\n1.0 0.1\n2.0 0.0\n")
    path = tmp_path / "tabulated.model"
    path.write_text("1 1\n0\n0 0 2.0\ncontinuum 0.0\ntabulated coupling.txt\n")
    assert isinstance(krdecay.load_model(path).reservoir.couplings[0], krdecay.TabulatedCoupling)

    with pytest.raises(krdecay.ModelFileError, match="below the diagonal"):
        krdecay.parse_model("3 1\n0\n0 0 1.0\n1 0 0.5\n")
