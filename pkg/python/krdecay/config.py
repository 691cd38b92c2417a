"""Run configuration for the command-line tools.

Files use ``key = value`` lines under ``[section]`` headers::

    [density]
    kind = breit-wigner      # breit-wigner | tabulated | model
    e0 = 25
    gamma0 = 1
    emin = 0

    [grid]
    tmin = 0.1
    tmax = 500
    points = 400
    spacing = log            # linear | log

Command-line flags override file values. Every error names the line of the
offending key when it came from a file.
"""

from __future__ import annotations

import configparser
import logging
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

from .errors import ConfigError
from .records import MAX_PRECISION, MIN_PRECISION

LOGGER = logging.getLogger(__name__)

DENSITY_KINDS = ("breit-wigner", "tabulated", "model")
SPACINGS = ("linear", "log")


@dataclass(frozen=True)
class DensityConfig:
    kind: str = "breit-wigner"
    e0: float = 25.0
    gamma0: float = 1.0
    emin: float = 0.0
    onset: Optional[float] = None
    path: Optional[str] = None
    rule: str = "point"


@dataclass(frozen=True)
class ModelConfig:
    path: Optional[str] = None
    eta: Optional[float] = None
    group_tol: Optional[float] = None
    state: int = 0
    order: int = 1


@dataclass(frozen=True)
class GridConfig:
    """``None`` fields fall back to the preset of the command."""

    tmin: Optional[float] = None
    tmax: Optional[float] = None
    points: Optional[int] = None
    spacing: Optional[str] = None


@dataclass(frozen=True)
class OutputConfig:
    csv: Optional[str] = None
    svg: Optional[str] = None
    precision: int = 12


@dataclass(frozen=True)
class RunSettings:
    workers: Optional[int] = None
    tol: float = 1e-10


@dataclass(frozen=True)
class RunConfig:
    command: str
    density: DensityConfig = field(default_factory=DensityConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    run: RunSettings = field(default_factory=RunSettings)

    def describe(self) -> str:
        """One ``section.key = value`` line per setting, for CSV headers."""
        lines = [f"command = {self.command}"]
        for section in ("density", "model", "grid", "output", "run"):
            block = getattr(self, section)
            for f in fields(block):
                lines.append(f"{section}.{f.name} = {getattr(block, f.name)}")
        return "\n".join(lines)


SECTIONS = {
    "density": DensityConfig,
    "model": ModelConfig,
    "grid": GridConfig,
    "output": OutputConfig,
    "run": RunSettings,
}

#: Origin of a value: a 1-based file line, or the flag that set it.
Origin = Union[int, str, None]


def _key_lines(text: str) -> Dict[Tuple[str, str], int]:
    located: Dict[Tuple[str, str], int] = {}
    section = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        header = re.match(r"^\[([^\]]+)\]", line)
        if header:
            section = header.group(1).strip().lower()
        elif section and "=" in line and not line.startswith(("#", ";")):
            located[(section, line.split("=", 1)[0].strip().lower())] = number
    return located


def _error(message: str, origin: Origin, path: Optional[str]) -> ConfigError:
    if isinstance(origin, str):
        return ConfigError(f"{origin}: {message}")
    return ConfigError(message, origin, path)


def _convert(raw: Any, annotation: str, name: str, origin: Origin, path: Optional[str]) -> Any:
    if raw is None or (isinstance(raw, str) and raw.strip().lower() in ("", "none")):
        if "Optional" in annotation:
            return None
        raise _error(f"{name} needs a value", origin, path)
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if "float" in annotation:
            return float(text)
        if "int" in annotation:
            return int(text)
    except ValueError:
        raise _error(f"{name} must be a number, got {text!r}", origin, path)
    return text


def read_sections(path: Union[str, Path]) -> Tuple[Dict[Tuple[str, str], Any], Dict[Tuple[str, str], Origin]]:
    """Raw values and their line numbers from a configuration file."""
    where = str(path)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}", None, where) from exc
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        parser.read_string(text, source=where)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside of a [section]", exc.lineno, where) from exc
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(exc.message.split(":")[-1].strip(), exc.lineno, where) from exc
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line, expected 'key = value'", line, where) from exc
    lines = _key_lines(text)
    values: Dict[Tuple[str, str], Any] = {}
    origins: Dict[Tuple[str, str], Origin] = {}
    for section in parser.sections():
        name = section.lower()
        if name not in SECTIONS:
            header_line = next((n for (s, _), n in lines.items() if s == name), None)
            raise ConfigError(f"unknown section [{section}]", header_line, where)
        for key, value in parser.items(section):
            values[(name, key)] = value
            origins[(name, key)] = lines.get((name, key))
    return values, origins


def build_config(
    command: str,
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[Tuple[str, str], Tuple[Any, str]]] = None,
) -> RunConfig:
    """Merge file values and ``{(section, key): (value, flag)}`` overrides, then validate."""
    values: Dict[Tuple[str, str], Any] = {}
    origins: Dict[Tuple[str, str], Origin] = {}
    where = str(path) if path is not None else None
    if path is not None:
        values, origins = read_sections(path)
    for key, (value, flag) in (overrides or {}).items():
        if value is not None:
            values[key] = value
            origins[key] = flag

    blocks: Dict[str, Any] = {}
    for section, cls in SECTIONS.items():
        # keys match field names ignoring case, dashes and underscores (groupTol, group-tol)
        known = {f.name.replace("_", ""): f for f in fields(cls)}
        kwargs = {}
        for (sec, key), raw in values.items():
            if sec != section:
                continue
            target = known.get(key.replace("-", "").replace("_", "").lower())
            if target is None:
                raise _error(f"unknown key {key!r} in [{section}]", origins.get((sec, key)), where)
            kwargs[target.name] = _convert(raw, str(target.type), f"{section}.{key}", origins.get((sec, key)), where)
        blocks[section] = cls(**kwargs)
    config = RunConfig(command, **blocks)
    validate(config, origins, where)
    LOGGER.debug("configuration:\n%s", config.describe())
    return config


def validate(
    config: RunConfig, origins: Optional[Mapping[Tuple[str, str], Origin]] = None, path: Optional[str] = None
) -> None:
    origins = origins or {}

    def fail(section: str, key: str, message: str) -> None:
        raise _error(message, origins.get((section, key)), path)

    d, g, o, r, m = config.density, config.grid, config.output, config.run, config.model
    if d.kind not in DENSITY_KINDS:
        fail("density", "kind", f"density.kind must be one of {', '.join(DENSITY_KINDS)}, got {d.kind!r}")
    if d.kind == "tabulated" and not d.path:
        fail("density", "path", "a tabulated density needs density.path")
    if d.kind == "model" and not m.path:
        fail("density", "kind", "density.kind = model needs model.path")
    if d.rule not in ("point", "linear"):
        fail("density", "rule", f"density.rule must be 'point' or 'linear', got {d.rule!r}")
    if not d.gamma0 > 0:
        fail("density", "gamma0", f"density.gamma0 must be positive, got {d.gamma0}")
    if g.spacing is not None and g.spacing not in SPACINGS:
        fail("grid", "spacing", f"grid.spacing must be 'linear' or 'log', got {g.spacing!r}")
    if g.points is not None and g.points < 2:
        fail("grid", "points", f"grid.points must be at least 2, got {g.points}")
    if g.tmin is not None and g.tmax is not None and not g.tmin < g.tmax:
        fail("grid", "tmax", f"grid.tmin must be below grid.tmax, got {g.tmin} ≥ {g.tmax}")
    if g.tmin is not None and g.tmin < 0:
        fail("grid", "tmin", f"grid.tmin must be nonnegative, got {g.tmin}")
    if g.spacing == "log" and g.tmin is not None and g.tmin <= 0:
        fail("grid", "tmin", "a log-spaced grid needs grid.tmin > 0")
    if not MIN_PRECISION <= o.precision <= MAX_PRECISION:
        fail("output", "precision", f"output.precision must lie in [{MIN_PRECISION}, {MAX_PRECISION}], got {o.precision}")
    if r.workers is not None and r.workers < 1:
        fail("run", "workers", f"run.workers must be at least 1, got {r.workers}")
    if not r.tol > 0:
        fail("run", "tol", f"run.tol must be positive, got {r.tol}")
    if m.eta is not None and m.eta < 0:
        fail("model", "eta", f"model.eta must be nonnegative, got {m.eta}")


def with_grid(config: RunConfig, **changes: Any) -> RunConfig:
    return replace(config, grid=replace(config.grid, **changes))
