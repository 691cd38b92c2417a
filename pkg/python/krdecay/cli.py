"""Command-line front end: ``krdecay <command> [options]``.

Commands::

    fig1           survival probability P(t) against t/τ (log scale)
    fig2           Re h(t)/E0 and the instantaneous rate around t_as
    survival       P(t) and a(t) on a grid, for a density or a model state
    heff           h(t) = iȧ/a on a grid
    tas            transition time t_as of a Breit–Wigner density
    subspace       H∥ = PHP + V∥ of a model file
    exact-compare  exact H∥(t) against the KR approximations

Figure commands report times in units of τ = 1/γ⁰, the others in raw units.
Data go to ``--csv`` (stdout by default), diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .amplitude import at_time, survival_amplitude
from .config import RunConfig, build_config
from .errors import ConfigError, DomainError, KrDecayException
from .exact import ExactEvolution, compare_approximations, recurrence_time
from .heff1d import hamiltonian_sweep, spike_runs, transition_time
from .modelfile import load_model
from .records import CurveTable, Series, render_svg, write_csv, write_svg
from .spectral import SpectralDensity, TruncatedBreitWigner, density_from_model, load_tabulated
from .subspace import FiniteLevelModel, eigenprojectors, kernel_series, subspace_block, v_parallel_inf
from .workers import map_ordered

LOGGER = logging.getLogger(__name__)

FIG1_POINTS = 200
FIG2_DENSE_POINTS = 2000
#: Log-spaced points on each side of the fig2 transition window.
FIG2_SPARSE_POINTS = 60
FIG2_WINDOW = (0.7, 1.3)
FIG2_TAIL = 50.0
DEFAULT_POINTS = 200

#: (flag destination, config section, config key)
FLAG_MAP: Tuple[Tuple[str, str, str], ...] = (
    ("e0", "density", "e0"),
    ("gamma0", "density", "gamma0"),
    ("emin", "density", "emin"),
    ("onset", "density", "onset"),
    ("density_file", "density", "path"),
    ("rule", "density", "rule"),
    ("model", "model", "path"),
    ("eta", "model", "eta"),
    ("group_tol", "model", "group_tol"),
    ("state", "model", "state"),
    ("order", "model", "order"),
    ("tmin", "grid", "tmin"),
    ("tmax", "grid", "tmax"),
    ("points", "grid", "points"),
    ("spacing", "grid", "spacing"),
    ("csv", "output", "csv"),
    ("svg", "output", "svg"),
    ("precision", "output", "precision"),
    ("workers", "run", "workers"),
    ("tol", "run", "tol"),
)

Result = Tuple[CurveTable, Optional[Callable[[], str]]]


# ---------------------------------------------------------------------------
# Argument parsing


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file with [section] headers")
    common.add_argument("--csv", help="CSV output path (default: stdout)")
    common.add_argument("--svg", help="SVG plot output path")
    common.add_argument("--precision", type=int, help="significant digits in the CSV (6 to 17)")
    common.add_argument("--workers", type=int, help="worker threads (default: $KRDECAY_WORKERS or CPU count)")
    common.add_argument("--tol", type=float, help="absolute tolerance of amplitude evaluations")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")

    density = common.add_argument_group("density")
    density.add_argument("--e0", type=float, help="resonance energy E0")
    density.add_argument("--gamma0", type=float, help="resonance width γ0")
    density.add_argument("--emin", type=float, help="spectrum threshold")
    density.add_argument("--onset", type=float, help="threshold form-factor scale Λ")
    density.add_argument("--density-file", help="two-column 'energy weight' table (tabulated density)")
    density.add_argument("--rule", choices=("point", "linear"), help="tabulated density rule")

    model = common.add_argument_group("model")
    model.add_argument("--model", help="model file")
    model.add_argument("--eta", type=float, help="regularization of discrete reservoir limits")
    model.add_argument("--group-tol", type=float, help="eigenvalue grouping tolerance for PHP")
    model.add_argument("--state", type=int, help="0-based basis index of the decaying state")
    model.add_argument("--order", type=int, help="kernel series order for exact-compare")

    grid = common.add_argument_group("grid")
    grid.add_argument("--tmin", type=float)
    grid.add_argument("--tmax", type=float)
    grid.add_argument("--points", type=int)
    grid.add_argument("--spacing", choices=("linear", "log"))
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="krdecay", description="Decay law of unstable states and KR reduction.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = _common_options()
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, (_, summary) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=summary, description=summary)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {}
    for dest, section, key in FLAG_MAP:
        value = getattr(args, dest, None)
        if value is not None:
            overrides[(section, key)] = (value, "--" + dest.replace("_", "-"))
    if args.density_file is not None:
        overrides[("density", "kind")] = ("tabulated", "--density-file")
    return build_config(args.command, args.config, overrides)


def _configure_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr, force=True)
    logging.captureWarnings(True)


# ---------------------------------------------------------------------------
# Inputs


def breit_wigner(config: RunConfig) -> TruncatedBreitWigner:
    d = config.density
    if d.kind != "breit-wigner":
        raise ConfigError(f"{config.command} needs a Breit–Wigner density, got density.kind = {d.kind}")
    try:
        return TruncatedBreitWigner(d.e0, d.gamma0, d.emin, d.onset)
    except DomainError as exc:
        raise ConfigError(f"invalid density: {exc}") from exc


def require_model(config: RunConfig) -> FiniteLevelModel:
    if not config.model.path:
        raise ConfigError(f"{config.command} needs a model file (--model or model.path)")
    return load_model(config.model.path)


def make_density(config: RunConfig) -> SpectralDensity:
    """The model state's density when a model is given, else the [density] block."""
    if config.model.path or config.density.kind == "model":
        model = load_model(config.model.path)
        try:
            return density_from_model(model, config.model.state)
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc
    if config.density.kind == "tabulated":
        try:
            return load_tabulated(config.density.path, config.density.rule)
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc
    return breit_wigner(config)


def make_grid(lo: float, hi: float, points: int, spacing: str) -> np.ndarray:
    if spacing == "log":
        if not lo > 0:
            raise ConfigError("a log-spaced grid needs grid.tmin > 0")
        return np.geomspace(lo, hi, points)
    return np.linspace(lo, hi, points)


def _grid(config: RunConfig, lo: float, hi: float, points: int, spacing: str) -> np.ndarray:
    g = config.grid
    lo = g.tmin if g.tmin is not None else lo
    hi = g.tmax if g.tmax is not None else hi
    if not lo < hi:
        raise ConfigError(f"grid.tmin must be below grid.tmax, got {lo:.6g} ≥ {hi:.6g}")
    return make_grid(lo, hi, g.points or points, g.spacing or spacing)


def _default_tmax(config: RunConfig, density: SpectralDensity) -> float:
    if config.grid.tmax is not None:
        return config.grid.tmax
    if isinstance(density, TruncatedBreitWigner):
        return 10.0 * density.tau
    raise ConfigError(f"{config.command} needs grid.tmax for a {density.kind} density")


# ---------------------------------------------------------------------------
# Commands


def cmd_fig1(config: RunConfig) -> Result:
    """P(t) on a log grid t/τ ∈ [0.1, 10·t_as/τ]."""
    d = breit_wigner(config)
    x_as = transition_time(d).t_as / d.tau
    x = _grid(config, 0.1, 10.0 * x_as, FIG1_POINTS, "log")
    curve = map_ordered(
        lambda t: abs(at_time(t, lambda s: survival_amplitude(d, s, config.run.tol))) ** 2,
        [float(v) * d.tau for v in x],
        config.run.workers,
    )
    table = CurveTable(("t_over_tau", "P"))
    for xv, p in zip(x, curve):
        table.append(float(xv), p)
    LOGGER.info("fig1: %d points, t_as/τ = %.6g", len(x), x_as)

    def plot() -> str:
        return render_svg(
            [Series("P(t)", x, curve)], "t / τ", "P(t)", log_y=True,
            title=f"E0/γ0 = {d.e0 / d.gamma0:g}, t_as/τ = {x_as:.4g}",
        )

    return table, plot


def fig2_grid(x_as: float, lo: float, hi: float, dense: int) -> Tuple[np.ndarray, np.ndarray]:
    """Dense linear window around t_as/τ plus sparse log grids on both sides; returns (grid, window)."""
    w_lo, w_hi = FIG2_WINDOW[0] * x_as, FIG2_WINDOW[1] * x_as
    window = np.linspace(w_lo, w_hi, dense)
    parts = [window]
    if lo < w_lo:
        parts.insert(0, np.geomspace(lo, w_lo, FIG2_SPARSE_POINTS + 1)[:-1])
    if hi > w_hi:
        parts.append(np.geomspace(w_hi, hi, FIG2_SPARSE_POINTS + 1)[1:])
    return np.concatenate(parts), window


def cmd_fig2(config: RunConfig) -> Result:
    """Re h/E0 and −2 Im h/γ0 across the transition region."""
    d = breit_wigner(config)
    x_as = transition_time(d).t_as / d.tau
    g = config.grid
    lo = g.tmin if g.tmin is not None else 0.1
    hi = g.tmax if g.tmax is not None else FIG2_TAIL * x_as
    if not 0 < lo < hi:
        raise ConfigError(f"fig2 needs 0 < grid.tmin < grid.tmax, got {lo:.6g}, {hi:.6g}")
    x, window = fig2_grid(x_as, lo, hi, g.points or FIG2_DENSE_POINTS)
    samples = hamiltonian_sweep(d, x * d.tau, config.run.tol, config.run.workers)

    table = CurveTable(("t_over_tau", "ReH_over_e0", "rate_over_gamma0", "trusted", "dip"))
    for xv, s in zip(x, samples):
        table.append(float(xv), s.energy / d.e0, s.rate / d.gamma0, s.trusted, s.dip)
    runs = spike_runs(samples, d.e0)
    LOGGER.info("fig2: %d points, t_as/τ = %.6g, %d spike runs", len(x), x_as, len(runs))

    def plot() -> str:
        inside = (x >= window[0]) & (x <= window[-1])
        ratio = np.array([s.energy / d.e0 for s in samples])
        return render_svg(
            [Series("Re h / E0", x[inside], ratio[inside])], "t / τ", "Re h(t) / E0",
            title=f"E0/γ0 = {d.e0 / d.gamma0:g}, t_as/τ = {x_as:.4g}",
        )

    return table, plot


def cmd_survival(config: RunConfig) -> Result:
    d = make_density(config)
    t = _grid(config, 0.0, _default_tmax(config, d), DEFAULT_POINTS, "linear")
    amplitudes = map_ordered(
        lambda s: at_time(s, lambda u: survival_amplitude(d, u, config.run.tol)),
        [float(v) for v in t],
        config.run.workers,
    )
    table = CurveTable(("t", "P", "re_a", "im_a"))
    for tv, a in zip(t, amplitudes):
        table.append(float(tv), abs(a) ** 2, a.real, a.imag)

    def plot() -> str:
        return render_svg(
            [Series("P(t)", t, [abs(a) ** 2 for a in amplitudes])], "t", "P(t)", log_y=True
        )

    return table, plot


def cmd_heff(config: RunConfig) -> Result:
    d = make_density(config)
    hi = _default_tmax(config, d)
    t = _grid(config, 1e-3 * hi, hi, DEFAULT_POINTS, "log")
    if t[0] <= 0:
        raise ConfigError("heff needs grid.tmin > 0")
    samples = hamiltonian_sweep(d, t, config.run.tol, config.run.workers)
    table = CurveTable(("t", "re_h", "im_h", "rate", "trusted", "dip"))
    for s in samples:
        table.append(s.t, s.h.real, s.h.imag, s.rate, s.trusted, s.dip)

    def plot() -> str:
        return render_svg(
            [Series("Re h", t, [s.energy for s in samples])], "t", "Re h(t)",
            log_x=(config.grid.spacing or "log") == "log",
        )

    return table, plot


def cmd_tas(config: RunConfig) -> Result:
    d = breit_wigner(config)
    result = transition_time(d)
    lo, hi = result.bracket
    print(f"t_as = {result.t_as:.12g}")
    print(f"t_as/tau = {result.t_as / d.tau:.12g}")
    print(f"bracket = [{lo:.6g}, {hi:.6g}]")
    for t in result.later_crossings:
        print(f"later crossing = {t:.12g}")
    table = CurveTable(("t_as", "t_as_over_tau", "bracket_lo", "bracket_hi", "iterations", "residual"))
    table.append(result.t_as, result.t_as / d.tau, lo, hi, result.iterations, result.residual)
    return table, None


def cmd_subspace(config: RunConfig) -> Result:
    """Entries of H∥ = PHP + V∥ with its mass and decay matrices."""
    m = require_model(config)
    projectors = eigenprojectors(subspace_block(m), config.model.group_tol)
    potential = v_parallel_inf(m, projectors, eta=config.model.eta)
    heff = potential.heff
    table = CurveTable((
        "j", "k", "re_heff", "im_heff", "re_v", "im_v", "re_mass", "im_mass", "re_gamma", "im_gamma",
    ))
    mass, gamma = heff.mass, heff.gamma
    for j in range(m.n):
        for k in range(m.n):
            table.append(
                j, k, heff.matrix[j, k].real, heff.matrix[j, k].imag, potential.v[j, k].real, potential.v[j, k].imag,
                mass[j, k].real, mass[j, k].imag, gamma[j, k].real, gamma[j, k].imag,
            )
    if potential.eta:
        table.comments.append(f"eta = {potential.eta:.17g}")
    LOGGER.info("subspace: n = %d, %d eigenprojector groups", m.n, len(projectors))
    return table, None


def _default_compare_tmax(m: FiniteLevelModel) -> float:
    try:
        return 0.5 * recurrence_time(m)
    except DomainError:
        return 10.0


def _series_errors(m: FiniteLevelModel, t: np.ndarray, order: int) -> Optional[List[float]]:
    """‖A(t) − U∥⁽ᵒʳᵈᵉʳ⁾(t)‖ when ``t`` is a uniform grid starting at 0."""
    if t.size < 2 or t[0] != 0 or not np.allclose(np.diff(t), t[1] - t[0], rtol=1e-9, atol=0.0):
        LOGGER.info("kernel series skipped: the grid is not uniform from t = 0")
        return None
    series = kernel_series(m, t, order)
    evolution = ExactEvolution(m)
    approx = series.propagators[order]
    return [float(np.linalg.norm(evolution.amplitude_matrix(tv).a - approx[i], 2)) for i, tv in enumerate(t)]


def cmd_exact_compare(config: RunConfig) -> Result:
    m = require_model(config)
    t = _grid(config, 0.0, _default_compare_tmax(m), DEFAULT_POINTS, "linear")
    report = compare_approximations(m, t, eta=config.model.eta, workers=config.run.workers)
    series = _series_errors(m, t, config.model.order)
    columns = list(report.columns)
    if series is not None:
        columns.insert(columns.index("norm_l"), "err_series")
    table = CurveTable(tuple(columns))
    for i, record in enumerate(report.to_rows()):
        if series is not None:
            record["err_series"] = series[i]
        table.append(*(record[c] for c in columns))
    if report.eta:
        table.comments.append(f"eta = {report.eta:.17g}")
    LOGGER.info("exact-compare: %d times, max ‖L‖ = %.3g", len(t), report.max_norm_l)

    def plot() -> str:
        names = [c for c in columns if c.startswith("err_")]
        lines = [Series(name, t, table.column(name)) for name in names]
        return render_svg(lines, "t", "‖H∥ exact − approx‖", log_y=True)

    return table, plot


COMMANDS: Dict[str, Tuple[Callable[[RunConfig], Result], str]] = {
    "fig1": (cmd_fig1, "survival probability against t/τ"),
    "fig2": (cmd_fig2, "effective energy and rate around the transition time"),
    "survival": (cmd_survival, "survival amplitude and probability on a grid"),
    "heff": (cmd_heff, "one-level effective Hamiltonian h(t) on a grid"),
    "tas": (cmd_tas, "transition time t_as of a Breit–Wigner density"),
    "subspace": (cmd_subspace, "t → ∞ effective Hamiltonian of a model file"),
    "exact-compare": (cmd_exact_compare, "exact H∥(t) against the KR approximations"),
}


def run(config: RunConfig) -> CurveTable:
    """Execute ``config.command`` and write its CSV (and SVG) outputs."""
    command, _ = COMMANDS[config.command]
    table, plot = command(config)
    table.comments[:0] = [f"krdecay {__version__}", config.describe()]
    if config.command != "tas" or config.output.csv:
        write_csv(table, config.output.csv, config.output.precision)
    if config.output.svg:
        if plot is None:
            LOGGER.warning("%s produces no plot; --svg ignored", config.command)
        else:
            write_svg(config.output.svg, plot())
    return table


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose, args.quiet)
    try:
        run(config_from_args(args))
    except KrDecayException as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return ConfigError.exit_code
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
