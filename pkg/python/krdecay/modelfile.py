"""Plain-text model files.

Layout, ``#`` starting a comment anywhere on a line::

    dim n
    i_1 ... i_n                 # 0-based subspace indices
    i j re [im]                 # one line per nonzero upper-triangle entry (i ≤ j)
    continuum emin              # optional; H is then the n×n subspace block
    flat gamma cutoff [amp]     # one coupling line per subspace state
    tabulated path              # columns: E re(g) [im(g)], path relative to the model file
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterator, List, Optional, Tuple, Union

import numpy as np

from .errors import DomainError, ModelFileError
from .subspace import ContinuumReservoir, FiniteLevelModel, FlatCoupling, TabulatedCoupling

LOGGER = logging.getLogger(__name__)


def _lines(text: str) -> Iterator[Tuple[int, List[str]]]:
    for number, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split("#", 1)[0].split()
        if tokens:
            yield number, tokens


def _number(token: str, kind, line: int, path: Optional[str]):
    try:
        return kind(token)
    except ValueError:
        raise ModelFileError(f"expected {kind.__name__}, found {token!r}", line, path)


def _load_coupling_table(target: Path, line: int, path: Optional[str]) -> TabulatedCoupling:
    try:
        data = np.loadtxt(target, comments="#", ndmin=2)
    except (OSError, ValueError) as exc:
        raise ModelFileError(f"cannot read coupling table {target}: {exc}", line, path) from exc
    if data.shape[1] not in (2, 3):
        raise ModelFileError(f"coupling table {target} needs 2 or 3 columns", line, path)
    values = data[:, 1] + (1j * data[:, 2] if data.shape[1] == 3 else 0.0)
    try:
        return TabulatedCoupling(data[:, 0], values)
    except DomainError as exc:
        raise ModelFileError(str(exc), line, path) from exc


def parse_model(text: str, path: Optional[Union[str, Path]] = None) -> FiniteLevelModel:
    """Build a :class:`FiniteLevelModel` from model-file text."""
    where = str(path) if path is not None else None
    base = Path(path).parent if path is not None else Path(".")
    lines = list(_lines(text))
    if not lines:
        raise ModelFileError("empty model file", None, where)

    number, header = lines[0]
    if len(header) != 2:
        raise ModelFileError("header must be 'dim n'", number, where)
    dim = _number(header[0], int, number, where)
    n = _number(header[1], int, number, where)
    if dim < 1 or not 1 <= n <= dim:
        raise ModelFileError(f"need dim ≥ 1 and 1 ≤ n ≤ dim, got dim={dim}, n={n}", number, where)

    rest = lines[1:]
    indices: List[int] = []
    while rest and len(indices) < n:
        number, tokens = rest.pop(0)
        indices.extend(_number(tok, int, number, where) for tok in tokens)
    if len(indices) != n:
        raise ModelFileError(f"expected {n} subspace indices, found {len(indices)}", number, where)

    h = np.zeros((dim, dim), dtype=np.complex128)
    reservoir_emin: Optional[float] = None
    couplings: list = []
    continuum_line = None
    for number, tokens in rest:
        keyword = tokens[0].lower()
        if keyword == "continuum":
            if len(tokens) != 2 or reservoir_emin is not None:
                raise ModelFileError("expected a single 'continuum emin' line", number, where)
            reservoir_emin = _number(tokens[1], float, number, where)
            continuum_line = number
        elif keyword == "flat":
            if reservoir_emin is None or len(tokens) not in (3, 4):
                raise ModelFileError("'flat gamma cutoff [amplitude]' must follow 'continuum emin'", number, where)
            gamma = _number(tokens[1], float, number, where)
            cutoff = _number(tokens[2], float, number, where)
            amp = _number(tokens[3], complex, number, where) if len(tokens) == 4 else 1.0
            try:
                couplings.append(FlatCoupling(gamma, cutoff, amp))
            except DomainError as exc:
                raise ModelFileError(str(exc), number, where) from exc
        elif keyword == "tabulated":
            if reservoir_emin is None or len(tokens) != 2:
                raise ModelFileError("'tabulated path' must follow 'continuum emin'", number, where)
            couplings.append(_load_coupling_table(base / tokens[1], number, where))
        else:
            if reservoir_emin is not None:
                raise ModelFileError("matrix entries must precede the continuum block", number, where)
            if len(tokens) not in (3, 4):
                raise ModelFileError("matrix entry must be 'i j re [im]'", number, where)
            i = _number(tokens[0], int, number, where)
            j = _number(tokens[1], int, number, where)
            if not (0 <= i < dim and 0 <= j < dim):
                raise ModelFileError(f"entry ({i}, {j}) outside a {dim}×{dim} matrix", number, where)
            if i > j:
                raise ModelFileError(f"entry ({i}, {j}) is below the diagonal; give the upper triangle", number, where)
            value = complex(_number(tokens[2], float, number, where),
                            _number(tokens[3], float, number, where) if len(tokens) == 4 else 0.0)
            if i == j and value.imag != 0:
                raise ModelFileError(f"diagonal entry ({i}, {i}) must be real", number, where)
            h[i, j] = value
            h[j, i] = value.conjugate()

    reservoir = None
    if reservoir_emin is not None:
        if len(couplings) != n:
            raise ModelFileError(f"expected {n} coupling lines, found {len(couplings)}", continuum_line, where)
        try:
            reservoir = ContinuumReservoir(reservoir_emin, tuple(couplings))
        except DomainError as exc:
            raise ModelFileError(str(exc), continuum_line, where) from exc
    try:
        model = FiniteLevelModel(h, tuple(indices), reservoir)
    except DomainError as exc:
        raise ModelFileError(str(exc), None, where) from exc
    LOGGER.debug("loaded model dim=%d n=%d%s", dim, n, " with continuum" if reservoir else "")
    return model


def load_model(path: Union[str, Path]) -> FiniteLevelModel:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelFileError(f"cannot read model file: {exc}", None, str(path)) from exc
    return parse_model(text, path)


def format_model(m: FiniteLevelModel, precision: int = 17) -> str:
    """Model-file text for a discrete model (upper-triangle entries only)."""
    if m.is_continuum:
        raise DomainError("continuum models reference external coupling tables and are not serialized")
    lines = [f"{m.dim} {m.n}", " ".join(str(i) for i in m.subspace_indices)]
    h = m.hamiltonian
    for i in range(m.dim):
        for j in range(i, m.dim):
            value = h[i, j]
            if value != 0:
                lines.append(f"{i} {j} {value.real:.{precision}g} {value.imag:.{precision}g}")
    return "\n".join(lines) + "\n"
