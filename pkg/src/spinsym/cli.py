"""Command line front end: ``spinsym inspect|potential|gauge|spin <file>``.

Every command produces a report with two top-level sections:

``canonical``
    inputs, computed quantities and verdicts; byte-identical across runs
    for a fixed file and flags.
``diagnostics``
    wall-clock timings and other run-dependent content.

Exit status: 0 success, 2 usage error, 3 parse error, 4 validation error,
5 numerical verdict failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import fields, problemfile
from .csub import build_operator, covariant_subprincipal, potential_on_grid
from .errors import (
    AmbiguousStepError,
    EvalDomainError,
    NumericalFault,
    ParseError,
    StencilError,
    ValidationError,
)
from .frames import orthonormality_defect
from .gauge import Group, invariance_report, validate_gauge
from .spincover import DEFAULT_SAMPLES, MAX_SAMPLES, framings_equivalent, relating_map
from .symbols import (
    OperatorData,
    check_elliptic_tracefree,
    check_nondegenerate,
    check_self_adjoint,
    charges,
    frame_to_symbol,
    hermitian_defect,
    metric_from_symbol,
    subprincipal_symbol,
    symbol_to_frame,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_VALIDATION = 4
EXIT_VERDICT = 5

POTENTIAL_TOL = 1e-6
GAUGE_TOL = 1e-6
METRIC_TOL = 1e-9
SIG_DIGITS = 12


class CommandError(ParseError):
    """The problem file lacks a block the command needs."""


# ----------------------------------------------------------- formatting


def _num(x) -> float:
    v = float(f"{float(x):.{SIG_DIGITS}g}")
    return 0.0 if v == 0 else v


def _real(a) -> list:
    return np.vectorize(_num, otypes=[float])(np.asarray(a, dtype=float)).tolist()


def _cplx(a) -> dict:
    a = np.asarray(a, dtype=complex)
    return {"re": _real(a.real), "im": _real(a.imag)}


def _sample_indices(chart) -> list[int]:
    """Flat indices of the basepoint node and the central node."""
    return [0, int(np.ravel_multi_index(tuple(n // 2 for n in chart.n), chart.shape))]


def _sample_points(chart) -> np.ndarray:
    return chart.nodes()[_sample_indices(chart)]


def _sig_string(dim) -> str:
    return "(+,+,+,-)" if dim == 4 else "(+,+,+)"


def _chart_dict(chart) -> dict:
    return {"dim": chart.dim, "lo": _real(chart.lo), "hi": _real(chart.hi),
            "periodic": list(chart.periodic), "n": list(chart.n)}


# ---------------------------------------------------------------- setup


class Options:
    def __init__(self, args):
        self.grid = args.grid
        self.h = args.fd_step
        self.samples = args.samples
        self.tolerance = args.tolerance

    def tol(self, default: float) -> float:
        return default if self.tolerance is None else self.tolerance

    def echo(self) -> dict:
        return {"grid": self.grid, "fd_step": self.h, "samples": self.samples,
                "tolerance": self.tolerance}


def _operator(prob, opts, with_potential=True) -> tuple[OperatorData, str]:
    """The operator of the file: given directly, or built from the frame
    with zero subprincipal part (plus the potential when present)."""
    if prob.operator is not None:
        return prob.operator, "operator"
    if with_potential and prob.potential is not None:
        return build_operator(prob.frame, prob.potential, h=opts.h), "frame+potential"
    chart = prob.chart
    sym = frame_to_symbol(prob.frame)

    def F(points):
        return -1j * sym.coefficients(points)

    def G(points):
        pts = np.atleast_2d(points)
        return sum(0.5 * fields.fd_partial(F, pts, a, chart, opts.h)[:, a]
                   for a in range(chart.dim))

    return OperatorData(F, G, chart), "frame"


def _principal(prob):
    if prob.frame is not None:
        return frame_to_symbol(prob.frame)
    return prob.operator.principal_symbol


def _require_nondegenerate(sym):
    res = check_nondegenerate(sym)
    if not res.ok:
        raise ValidationError("principal symbol is degenerate", res.witness_index,
                              res.witness_point)
    return res


def _base(command, prob, opts) -> dict:
    return {"command": command,
            "input": {"file": Path(prob.path).name if prob.path else None,
                      "sections": prob.echo, "flags": opts.echo()},
            "chart": _chart_dict(prob.chart)}


# ------------------------------------------------------------- commands


def cmd_inspect(prob, opts) -> dict:
    chart = prob.chart
    sym = _principal(prob)
    nd = _require_nondegenerate(sym)
    g = metric_from_symbol(sym, check=True)
    frame = prob.frame if prob.frame is not None else symbol_to_frame(sym)
    op, source = _operator(prob, opts, with_potential=False)
    pts = _sample_points(chart)

    rep = _base("inspect", prob, opts)
    rep["operator_source"] = source
    rep["nondegenerate"] = {"ok": True, "min_abs_det": _num(nd.min_abs_det)}
    rep["metric"] = {"signature": _sig_string(chart.dim)}
    ch = charges(sym, prob.q, g)
    rep["charges"] = {"c_top": ch.c_top}
    if chart.dim == 4:
        rep["charges"]["c_tem"] = ch.c_tem
    verdicts = {"nondegenerate": True, "signature": True}
    if chart.dim == 3:
        ell = check_elliptic_tracefree(sym)
        rep["ellipticity"] = {"elliptic": ell.elliptic, "trace_free": ell.trace_free,
                              "max_abs_trace": _num(ell.max_trace),
                              "min_abs_det_unit_sphere": _num(ell.min_abs_det)}
        verdicts.update(elliptic=ell.elliptic, trace_free=ell.trace_free)

    sa = check_self_adjoint(op, h=opts.h, raise_on_failure=False)
    ortho = orthonormality_defect(frame, g).max()
    rep["samples"] = [
        {"x": _real(x), "frame": _real(frame(x)), "metric_upper": _real(g.upper(x[None])[0]),
         "subprincipal": _cplx(subprincipal_symbol(op, x, opts.h))}
        for x in pts
    ]
    tol = opts.tol(1e-9)
    rep["tolerances"] = {"max_hermiticity_defect": _num(sa.worst),
                         "max_orthonormality_defect": _num(ortho)}
    verdicts["self_adjoint"] = bool(sa.worst <= tol)
    rep["verdicts"] = verdicts
    return rep


def cmd_potential(prob, opts) -> dict:
    if prob.operator is None and prob.potential is None:
        raise CommandError("potential needs an operator block or frame and potential blocks")
    chart = prob.chart
    op, source = _operator(prob, opts)
    sym = op.principal_symbol
    _require_nondegenerate(sym)
    g = metric_from_symbol(sym, check=True)
    frame = prob.frame if prob.frame is not None else op.frame
    nodes = chart.nodes()
    C = fields.evaluate_on_grid(covariant_subprincipal(op, g, opts.h), chart, nodes)
    A, imag = potential_on_grid(C, fields.evaluate_on_grid(frame, chart, nodes), chart)
    picks = _sample_indices(chart)

    rep = _base("potential", prob, opts)
    rep["operator_source"] = source
    rep["samples"] = [{"x": _real(nodes[k]), "csub": _cplx(C[k]), "A": _real(A[k])}
                      for k in picks]
    rep["tolerances"] = {"max_hermiticity_defect": _num(hermitian_defect(C).max()),
                         "max_imaginary_part": _num(imag.max())}
    verdicts = {}
    if prob.potential is not None and prob.operator is None:
        tol = opts.tol(POTENTIAL_TOL)
        given = fields.evaluate_on_grid(prob.potential, chart, nodes)
        dev = float(np.abs(A - given).max())
        rep["roundtrip"] = {"max_deviation": _num(dev), "tolerance": tol}
        verdicts["roundtrip"] = dev < tol
    rep["verdicts"] = verdicts
    return rep


def cmd_gauge(prob, opts) -> dict:
    if prob.gauge is None:
        raise CommandError("gauge needs a gauge block")
    chart = prob.chart
    if chart.dim == 3 and prob.gauge.group is not Group.SU2:
        raise ValidationError("dimension 3 gauge maps must be SU2")
    R = validate_gauge(prob.gauge.R, prob.gauge.group, chart)
    op, source = _operator(prob, opts)
    _require_nondegenerate(op.principal_symbol)
    inv = invariance_report(op, R, prob.q, opts.h)

    rep = _base("gauge", prob, opts)
    rep["operator_source"] = source
    rep["group"] = R.group.value
    tol = opts.tol(GAUGE_TOL)
    mtol = min(METRIC_TOL, tol)
    names = ("c_top", "c_tem")
    charge_delta = dict(zip(names, inv.charge_deltas))
    rep["charges"] = {"before": list(inv.charges_before), "after": list(inv.charges_after)}
    rep["deltas"] = {"metric": _num(inv.metric), "charges": charge_delta,
                     "potential": _num(inv.potential), "csub_covariance": _num(inv.csub_covariance)}
    rep["thresholds"] = {"metric": mtol, "potential": tol, "csub_covariance": tol}
    rep["tolerances"] = {"max_hermiticity_defect": _num(inv.hermiticity_after)}
    rep["verdicts"] = {
        "metric_invariant": inv.metric < mtol,
        "charges_invariant": all(v == 0 for v in charge_delta.values()),
        "potential_invariant": inv.potential < tol,
        "csub_covariant": inv.csub_covariance < tol,
    }
    return rep


def cmd_spin(prob, opts) -> dict:
    if prob.frame is None or prob.frame2 is None:
        raise CommandError("spin needs [frame] and [frame2] blocks")
    chart = prob.chart
    if not any(chart.periodic):
        raise ValidationError("spin needs at least one periodic axis")
    f1, f2 = prob.frame, prob.frame2
    sym = frame_to_symbol(f1)
    _require_nondegenerate(sym)
    _require_nondegenerate(f2)
    g = metric_from_symbol(sym, check=True)
    lam = relating_map(f1, f2, g)
    res = framings_equivalent(f1, f2, g, opts.samples, max(MAX_SAMPLES, opts.samples))
    nodes = chart.nodes()
    L = fields.evaluate_on_grid(lam, chart, nodes)

    rep = _base("spin", prob, opts)
    rep["relating_map"] = {
        "group": "SO(3)" if chart.dim == 3 else "SO+(3,1)",
        "min_det": _num(np.linalg.det(L).min()),
        "at_basepoint": _real(L[0]),
    }
    if chart.dim == 4:
        rep["relating_map"]["min_lambda_44"] = _num(L[:, 3, 3].min())
    rep["holonomy"] = {
        "axes": [a + 1 for a in range(chart.dim) if chart.periodic[a]],
        "signs": list(res.signature.signs),
        "signature": str(res.signature),
        "samples_used": list(res.samples),
    }
    rep["equivalent"] = res.equivalent
    rep["tolerances"] = {
        "max_orthonormality_defect": _num(max(orthonormality_defect(f1, g).max(),
                                              orthonormality_defect(f2, g).max()))}
    rep["verdicts"] = {}
    return rep


COMMANDS = {"inspect": cmd_inspect, "potential": cmd_potential, "gauge": cmd_gauge,
            "spin": cmd_spin}


# ------------------------------------------------------------ rendering


def render_structured(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)


def _render_text(node, indent=0) -> list[str]:
    pad = "  " * indent
    lines = []
    for key in sorted(node):
        val = node[key]
        if isinstance(val, dict) and val:
            lines.append(f"{pad}{key}:")
            lines.extend(_render_text(val, indent + 1))
        elif isinstance(val, list) and val and isinstance(val[0], dict):
            lines.append(f"{pad}{key}:")
            for i, item in enumerate(val):
                lines.append(f"{pad}  [{i}]")
                lines.extend(_render_text(item, indent + 2))
        else:
            lines.append(f"{pad}{key}: {json.dumps(val)}")
    return lines


def render_text(report: dict) -> str:
    lines = ["== canonical =="]
    lines += _render_text(report["canonical"], 1)
    lines += ["== diagnostics (not canonical; run-dependent) =="]
    lines += _render_text(report["diagnostics"], 1)
    return "\n".join(lines)


def run_command(command: str, prob, opts) -> dict:
    start = time.perf_counter()
    canonical = COMMANDS[command](prob, opts)
    elapsed = time.perf_counter() - start
    return {"canonical": canonical, "diagnostics": {"elapsed_seconds": elapsed}}


def verdict_ok(report: dict) -> bool:
    return all(report["canonical"].get("verdicts", {}).values())


# ------------------------------------------------------------------ main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinsym", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("file")
    parser.add_argument("--grid", type=int, default=None, metavar="N",
                        help="override the grid resolution on every axis")
    parser.add_argument("--fd-step", type=float, default=None, metavar="H",
                        help="central-difference step (default: width * 1e-5 per axis)")
    parser.add_argument("--samples", type=int, default=DEFAULT_SAMPLES, metavar="K",
                        help="initial samples per loop for holonomy lifting")
    parser.add_argument("--tolerance", type=float, default=None, metavar="T",
                        help="verdict threshold (command-specific default)")
    parser.add_argument("--format", choices=("text", "structured"), default="text")
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.samples < 2 or (args.fd_step is not None and args.fd_step <= 0):
        print("error: --samples must be >= 2 and --fd-step positive", file=stderr)
        return EXIT_USAGE
    opts = Options(args)
    try:
        prob = problemfile.load(args.file, grid_override=args.grid)
        report = run_command(args.command, prob, opts)
    except ParseError as err:
        print(f"parse error: {err}", file=stderr)
        return EXIT_PARSE
    except (NumericalFault, AmbiguousStepError) as err:
        print(f"numerical failure: {err}", file=stderr)
        return EXIT_VERDICT
    except (ValidationError, StencilError, EvalDomainError) as err:
        print(f"validation error: {err}", file=stderr)
        return EXIT_VALIDATION
    out = render_structured(report) if args.format == "structured" else render_text(report)
    print(out, file=stdout)
    if not verdict_ok(report):
        print("verdict failure: " + ", ".join(
            k for k, v in report["canonical"]["verdicts"].items() if not v), file=stderr)
        return EXIT_VERDICT
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
