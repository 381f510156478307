"""Sectioned text input format.

Example (Minkowski identity tetrad)::

    [chart]
    dim = 4
    lo = 0
    hi = 1
    periodic = true
    n = 16

    [frame]
    e1 = 1, 0, 0, 0
    e2 = 0, 1, 0, 0
    e3 = 0, 0, 1, 0
    e4 = 0, 0, 0, 1

Sections:

``[chart]``
    ``dim`` (3 or 4); ``lo``, ``hi``, ``periodic``, ``n`` either a single
    value or one comma-separated value per axis.
``[frame]`` / ``[frame2]``
    rows ``e1 .. e<dim>``, each ``dim`` comma-separated expressions.
``[operator.F<a>.re]``, ``[operator.F<a>.im]``, ``[operator.G.re]``, ``[operator.G.im]``
    2x2 tables as keys ``row1``, ``row2`` with two expressions each; at
    least one of ``.re`` / ``.im`` must be given, a missing one means zero.
``[potential]``
    ``A = <dim expressions>``.
``[gauge]``
    ``group = SL2C | SU2``; entries in ``[gauge.re]`` / ``[gauge.im]``.
``[q]``
    ``q = <dim expressions>`` (reference covector, dimension 4).

Exactly one of ``[frame]`` and the operator sections must be present.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import exprdsl
from .csub import Potential
from .errors import ParseError
from .fields import Chart, MatrixField, VectorFieldSet
from .gauge import Group
from .symbols import Frame, OperatorData

_TRUE = {"true", "yes", "1", "on"}
_FALSE = {"false", "no", "0", "off"}


@dataclass
class GaugeBlock:
    R: MatrixField
    group: Group


@dataclass
class ProblemFile:
    chart: Chart
    frame: Frame | None = None
    operator: OperatorData | None = None
    potential: Potential | None = None
    gauge: GaugeBlock | None = None
    q: object | None = None
    frame2: Frame | None = None
    echo: dict = field(default_factory=dict)
    path: str | None = None


def _values(raw: str, section: str, key: str) -> list[str]:
    parts = exprdsl.split_top_level(raw)
    if any(p == "" for p in parts):
        raise ParseError(f"[{section}] {key}: empty entry in {raw!r}")
    return parts


def _per_axis(raw: str, dim: int, section: str, key: str) -> list[str]:
    parts = _values(raw, section, key)
    if len(parts) == 1:
        parts = parts * dim
    if len(parts) != dim:
        raise ParseError(f"[{section}] {key}: expected 1 or {dim} values, got {len(parts)}")
    return parts


def _bool(text: str, section: str, key: str) -> bool:
    t = text.strip().lower()
    if t in _TRUE:
        return True
    if t in _FALSE:
        return False
    raise ParseError(f"[{section}] {key}: not a boolean: {text!r}")


def _number(text: str, section: str, key: str) -> float:
    try:
        return exprdsl.evaluate(exprdsl.parse(text, 4), np.zeros(4))
    except Exception as err:
        raise ParseError(f"[{section}] {key}: {err}") from err


def _parse_chart(cp, grid_override=None) -> Chart:
    if not cp.has_section("chart"):
        raise ParseError("missing [chart] section")
    sec = cp["chart"]
    try:
        dim = int(sec.get("dim", ""))
    except ValueError:
        raise ParseError("[chart] dim must be 3 or 4") from None
    if dim not in (3, 4):
        raise ParseError(f"[chart] dim must be 3 or 4, got {dim}")
    lo = [_number(v, "chart", "lo") for v in _per_axis(sec.get("lo", "0"), dim, "chart", "lo")]
    hi = [_number(v, "chart", "hi") for v in _per_axis(sec.get("hi", "1"), dim, "chart", "hi")]
    periodic = [_bool(v, "chart", "periodic")
                for v in _per_axis(sec.get("periodic", "true"), dim, "chart", "periodic")]
    try:
        n = [int(v) for v in _per_axis(sec.get("n", "16"), dim, "chart", "n")]
    except ValueError:
        raise ParseError("[chart] n must be integers") from None
    if grid_override is not None:
        n = [grid_override] * dim
    try:
        return Chart(dim, tuple(lo), tuple(hi), tuple(periodic), tuple(n))
    except ValueError as err:
        raise ParseError(f"[chart] {err}") from err


def _with_context(fn, section, key):
    try:
        return fn()
    except ParseError as err:
        raise ParseError(f"[{section}] {key}: {err}") from err


def _parse_frame(cp, name, chart) -> Frame:
    sec = cp[name]
    rows = []
    for j in range(1, chart.dim + 1):
        key = f"e{j}"
        if key not in sec:
            raise ParseError(f"[{name}] missing row {key}")
        row = _values(sec[key], name, key)
        if len(row) != chart.dim:
            raise ParseError(f"[{name}] {key}: expected {chart.dim} entries, got {len(row)}")
        for a, src in enumerate(row):
            _with_context(lambda: exprdsl.parse(src, chart.dim), name, f"{key}[{a + 1}]")
        rows.append(row)
    extra = set(sec) - {f"e{j}" for j in range(1, chart.dim + 1)}
    if extra:
        raise ParseError(f"[{name}] unexpected keys: {', '.join(sorted(extra))}")
    return Frame.from_exprs(rows, chart)


def _matrix_rows(cp, name, chart, required=True):
    if not cp.has_section(name):
        if required:
            raise ParseError(f"missing section [{name}]")
        return None
    sec = cp[name]
    rows = []
    for i in (1, 2):
        key = f"row{i}"
        if key not in sec:
            raise ParseError(f"[{name}] missing {key}")
        row = _values(sec[key], name, key)
        if len(row) != 2:
            raise ParseError(f"[{name}] {key}: expected 2 entries, got {len(row)}")
        for b, src in enumerate(row):
            _with_context(lambda: exprdsl.parse(src, chart.dim), name, f"{key}[{b + 1}]")
        rows.append(row)
    return rows


def _matrix_field(cp, prefix, chart) -> MatrixField:
    re_rows = _matrix_rows(cp, f"{prefix}.re", chart, required=False)
    im_rows = _matrix_rows(cp, f"{prefix}.im", chart, required=False)
    if re_rows is None and im_rows is None:
        raise ParseError(f"missing section [{prefix}.re] or [{prefix}.im]")
    if re_rows is None:
        re_rows = [["0", "0"], ["0", "0"]]
    return MatrixField.parse(re_rows, im_rows, chart)


def _covector(cp, name, key, chart):
    sec = cp[name]
    if key not in sec:
        raise ParseError(f"[{name}] missing {key}")
    row = _values(sec[key], name, key)
    if len(row) != chart.dim:
        raise ParseError(f"[{name}] {key}: expected {chart.dim} entries, got {len(row)}")
    for a, src in enumerate(row):
        _with_context(lambda: exprdsl.parse(src, chart.dim), name, f"{key}[{a + 1}]")
    return row


KNOWN_SECTIONS = {"chart", "frame", "frame2", "potential", "gauge", "gauge.re", "gauge.im", "q"}


def loads(text: str, grid_override: int | None = None, path: str | None = None) -> ProblemFile:
    """Parse a problem file from a string.

    Raises:
        ParseError: for any syntax, structure or expression error.
    """
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",),
                                   comment_prefixes=("#", ";"), empty_lines_in_values=False)
    try:
        cp.read_string(text)
    except configparser.Error as err:
        raise ParseError(f"malformed problem file: {err}") from err

    chart = _parse_chart(cp, grid_override)
    op_sections = [s for s in cp.sections() if s.startswith("operator.")]
    unknown = [s for s in cp.sections() if s not in KNOWN_SECTIONS and s not in op_sections]
    if unknown:
        raise ParseError(f"unknown sections: {', '.join(unknown)}")
    has_frame = cp.has_section("frame")
    if has_frame == bool(op_sections):
        raise ParseError("exactly one of [frame] or [operator.*] sections must be present")

    prob = ProblemFile(chart, path=path)
    prob.echo = {s: dict(cp[s]) for s in cp.sections()}
    if has_frame:
        prob.frame = _parse_frame(cp, "frame", chart)
    else:
        allowed = {f"operator.F{a}.{p}" for a in range(1, chart.dim + 1) for p in ("re", "im")}
        allowed |= {"operator.G.re", "operator.G.im"}
        bad = [s for s in op_sections if s not in allowed]
        if bad:
            raise ParseError(f"unexpected operator sections: {', '.join(bad)}")
        F_list = [_matrix_field(cp, f"operator.F{a}", chart) for a in range(1, chart.dim + 1)]
        G = _matrix_field(cp, "operator.G", chart)
        prob.operator = OperatorData.from_fields(F_list, G, chart)
    if cp.has_section("frame2"):
        prob.frame2 = _parse_frame(cp, "frame2", chart)
    if cp.has_section("potential"):
        prob.potential = Potential.from_exprs(_covector(cp, "potential", "a", chart), chart)
    if cp.has_section("q"):
        row = _covector(cp, "q", "q", chart)
        vfs = VectorFieldSet.parse([row], chart)
        prob.q = lambda x: vfs(x)[:, 0]
    if cp.has_section("gauge") or cp.has_section("gauge.re"):
        group_name = cp.get("gauge", "group", fallback="SL2C" if chart.dim == 4 else "SU2")
        try:
            group = Group.parse(group_name)
        except ValueError as err:
            raise ParseError(f"[gauge] {err}") from err
        prob.gauge = GaugeBlock(_matrix_field(cp, "gauge", chart), group)
    return prob


def load(path, grid_override: int | None = None) -> ProblemFile:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as err:
        raise ParseError(f"cannot read {path}: {err}") from err
    return loads(text, grid_override, str(p))
