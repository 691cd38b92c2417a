"""CSV tables and SVG line plots for the command-line tools.

CSV files are comma separated, start with ``#`` comment lines (run
configuration and library version) and carry the column names in the first
non-comment row. Numbers are written with a fixed number of significant
digits so identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigError

MIN_PRECISION = 6
MAX_PRECISION = 17

Cell = Union[float, int, bool, None]


@dataclass
class CurveTable:
    """Header comments, column names and rows of one output file."""

    columns: Tuple[str, ...]
    rows: List[Tuple[Cell, ...]] = field(default_factory=list)
    comments: List[str] = field(default_factory=list)

    def append(self, *values: Cell) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} values for {len(self.columns)} columns")
        self.rows.append(tuple(values))

    def column(self, name: str) -> np.ndarray:
        index = self.columns.index(name)
        return np.array([float(row[index]) if row[index] is not None else math.nan for row in self.rows])


def format_cell(value: Cell, precision: int) -> str:
    if value is None:
        return "nan"
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.{precision}g}"


def _write(table: CurveTable, stream: IO[str], precision: int) -> None:
    for comment in table.comments:
        for line in comment.splitlines() or [""]:
            stream.write(f"# {line}\n" if line else "#\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([format_cell(v, precision) for v in row])


def write_csv(table: CurveTable, path: Optional[Union[str, Path]] = None, precision: int = 12) -> str:
    """Write ``table`` to ``path`` (stdout when None) and return the text."""
    if not MIN_PRECISION <= precision <= MAX_PRECISION:
        raise ConfigError(f"precision must lie in [{MIN_PRECISION}, {MAX_PRECISION}], got {precision}")
    buffer = io.StringIO()
    _write(table, buffer, precision)
    text = buffer.getvalue()
    if path is None:
        sys.stdout.write(text)
    else:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    return text


def parse_csv(text: str) -> CurveTable:
    comments: List[str] = []
    body: List[str] = []
    for line in text.splitlines():
        if line.startswith("#") and not body:
            comments.append(line[1:].lstrip(" "))
        elif line.strip():
            body.append(line)
    if not body:
        raise ValueError("CSV text has no column header")
    reader = csv.reader(body)
    columns = tuple(next(reader))
    rows = [tuple(float(cell) for cell in row) for row in reader]
    return CurveTable(columns, rows, comments)


def read_csv(path: Union[str, Path]) -> CurveTable:
    """Read a file produced by :func:`write_csv`; every cell comes back as float."""
    return parse_csv(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# SVG

WIDTH, HEIGHT = 720, 460
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 80, 30, 40, 60
COLORS = ("#1f4e9c", "#c0392b", "#2e8b57", "#8e44ad")


@dataclass
class Series:
    label: str
    x: Sequence[float]
    y: Sequence[float]


class _Axis:
    def __init__(self, values: np.ndarray, log: bool, lo_px: float, hi_px: float) -> None:
        self.log = log
        data = np.log10(values) if log else values
        lo, hi = float(np.min(data)), float(np.max(data))
        if hi == lo:
            lo, hi = lo - 0.5, hi + 0.5
        if log:
            lo, hi = math.floor(lo), math.ceil(hi)
        self.lo, self.hi = lo, hi
        self.lo_px, self.hi_px = lo_px, hi_px

    def __call__(self, value: float) -> float:
        v = math.log10(value) if self.log else value
        return self.lo_px + (v - self.lo) / (self.hi - self.lo) * (self.hi_px - self.lo_px)

    def ticks(self) -> List[Tuple[float, str]]:
        if self.log:
            step = max(1, int(math.ceil((self.hi - self.lo) / 10)))
            return [(10.0**k, f"1e{k}") for k in range(int(self.lo), int(self.hi) + 1, step)]
        values = np.linspace(self.lo, self.hi, 6)
        return [(float(v), f"{v:.4g}") for v in values]


def _usable(series: Series, log_x: bool, log_y: bool) -> Tuple[np.ndarray, np.ndarray]:
    x = np.asarray(series.x, dtype=np.float64)
    y = np.asarray(series.y, dtype=np.float64)
    keep = np.isfinite(x) & np.isfinite(y)
    if log_x:
        keep &= x > 0
    if log_y:
        keep &= y > 0
    return x[keep], y[keep]


def render_svg(
    series: Iterable[Series],
    x_label: str,
    y_label: str,
    log_x: bool = False,
    log_y: bool = False,
    title: str = "",
) -> str:
    """A standalone SVG line plot; nonpositive values are dropped on log axes."""
    cleaned = [(s, *_usable(s, log_x, log_y)) for s in series]
    cleaned = [item for item in cleaned if item[1].size]
    if not cleaned:
        raise ValueError("nothing to plot")
    all_x = np.concatenate([c[1] for c in cleaned])
    all_y = np.concatenate([c[2] for c in cleaned])
    x_axis = _Axis(all_x, log_x, MARGIN_LEFT, WIDTH - MARGIN_RIGHT)
    y_axis = _Axis(all_y, log_y, HEIGHT - MARGIN_BOTTOM, MARGIN_TOP)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    left, right = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
    top, bottom = MARGIN_TOP, HEIGHT - MARGIN_BOTTOM
    out.append(f'<rect x="{left}" y="{top}" width="{right - left}" height="{bottom - top}" '
               f'fill="none" stroke="black"/>')
    for value, text in x_axis.ticks():
        px = x_axis(value)
        out.append(f'<line x1="{px:.2f}" y1="{bottom}" x2="{px:.2f}" y2="{bottom + 5}" stroke="black"/>')
        out.append(f'<text x="{px:.2f}" y="{bottom + 20}" text-anchor="middle">{text}</text>')
    for value, text in y_axis.ticks():
        py = y_axis(value)
        out.append(f'<line x1="{left - 5}" y1="{py:.2f}" x2="{left}" y2="{py:.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{py + 4:.2f}" text-anchor="end">{text}</text>')
    out.append(f'<text x="{(left + right) / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle">{x_label}</text>')
    out.append(f'<text x="18" y="{(top + bottom) / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {(top + bottom) / 2:.1f})">{y_label}</text>')
    if title:
        out.append(f'<text x="{(left + right) / 2:.1f}" y="24" text-anchor="middle">{title}</text>')
    for k, (s, x, y) in enumerate(cleaned):
        color = COLORS[k % len(COLORS)]
        points = " ".join(f"{x_axis(a):.2f},{y_axis(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{points}"/>')
        if len(cleaned) > 1:
            out.append(f'<text x="{right - 10}" y="{top + 18 + 16 * k}" text-anchor="end" fill="{color}">'
                       f'{s.label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path: Union[str, Path], svg: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(svg, encoding="utf-8")
