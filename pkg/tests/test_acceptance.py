"""Acceptance criteria, one test each; every test prints a PASS/FAIL line
(run with ``-s`` to see them inline, they are also repeated in the pytest
terminal summary)."""

import itertools
import json
import subprocess
import sys
from pathlib import Path

import numpy as np

from helpers import (
    boosted_seed_case,
    random_frame,
    random_gauge,
    random_generic_frame,
    random_hermitian_coefficients,
    random_potential,
)
from spinsym import fields
from spinsym.csub import build_operator, correction_term, covariant_subprincipal, extract_potential
from spinsym.fields import Chart
from spinsym.frames import SeedData, gram_schmidt_orthonormalize, orthonormality_defect
from spinsym.gauge import invariance_report
from spinsym.spincover import (
    SO3,
    RotationPath,
    classify_torus_framings,
    holonomy_sign,
    lift_loop,
    rotation_z,
    twisted_frame,
)
from spinsym.symbols import (
    PAULI,
    Frame,
    MetricField,
    OperatorData,
    PrincipalSymbol,
    charge_trace,
    charges,
    check_elliptic_tracefree,
    check_nondegenerate,
    frame_from_coefficients,
    frame_to_symbol,
    metric_from_coefficients,
    metric_from_frame_oracle,
    metric_from_symbol,
    subprincipal_symbol,
)

C4 = Chart.box(4, n=16)
C3 = Chart.box(3, n=16)
ROOT = Path(__file__).resolve().parent.parent


def const(value, chart):
    return fields.constant_field(np.asarray(value), chart)


def test_criterion_01_minkowski(record):
    sym = frame_to_symbol(Frame.identity(C4))
    g = metric_from_symbol(sym, check=True)
    gu = g.upper(C4.nodes())
    err = float(np.abs(gu - np.diag([1.0, 1, 1, -1])).max())
    q = const(np.array([0.0, 0, 0, 1]), C4)
    ch = charges(sym, q, g)
    ok = err <= 1e-12 and (ch.c_top, ch.c_tem) == (1, 1)
    record(1, "Minkowski identity", ok, f"max |g - eta| = {err:.1e}, charges = ({ch.c_top:+d}, {ch.c_tem:+d})")


def _trace_vs_det(rng, chart):
    frame = random_generic_frame(rng, chart)
    nodes = chart.nodes()
    P = fields.evaluate_on_grid(frame_to_symbol(frame).coefficients, chart, nodes)
    trace = charge_trace(P, metric_from_coefficients(P))
    det_sign = np.sign(np.linalg.det(frame_from_coefficients(P)))
    agree = bool(np.all(np.rint(trace.real) == det_sign))
    return agree, float(np.abs(trace - det_sign).max()), int(det_sign[0])


def test_criterion_02_charge_formulas(record):
    rng = np.random.default_rng(2002)
    results = [_trace_vs_det(rng, C4) for _ in range(100)] + [_trace_vs_det(rng, C3) for _ in range(50)]
    ok = all(r[0] for r in results)
    gap = max(r[1] for r in results)
    neg = sum(r[2] < 0 for r in results)
    record(2, "trace formula = sgn det e (100 4-frames, 50 3-frames)", ok,
           f"max gap {gap:.1e}, {neg} negatively oriented")


def test_criterion_03_metric_oracle(record):
    rng = np.random.default_rng(2003)
    worst = 0.0
    for k in range(50):
        chart = C4 if k % 2 == 0 else C3
        frame = random_generic_frame(rng, chart)
        nodes = chart.nodes()[::7]
        e = frame(nodes)
        P = frame_to_symbol(frame).coefficients(nodes)
        worst = max(worst, float(np.abs(metric_from_coefficients(P) - metric_from_frame_oracle(e)).max()))
    record(3, "polarised metric = frame oracle (50 frames)", worst <= 1e-12, f"max error {worst:.1e}")


def test_criterion_04_gauge_invariance(record):
    rng = np.random.default_rng(2004)
    worst = dict(metric=0.0, potential=0.0, cov=0.0)
    charges_ok = True
    for _ in range(10):
        op = build_operator(random_frame(rng, C4), random_potential(rng, C4))
        rep = invariance_report(op, random_gauge(rng, C4))
        worst["metric"] = max(worst["metric"], rep.metric)
        worst["potential"] = max(worst["potential"], rep.potential)
        worst["cov"] = max(worst["cov"], rep.csub_covariance)
        charges_ok &= all(d == 0 for d in rep.charge_deltas)
    ok = worst["metric"] < 1e-9 and charges_ok and worst["potential"] < 1e-6 and worst["cov"] < 1e-6
    record(4, "gauge invariance (10 random SL(2,C) fields)", ok,
           f"metric {worst['metric']:.1e}, potential {worst['potential']:.1e}, "
           f"csub covariance {worst['cov']:.1e}, charges {'equal' if charges_ok else 'CHANGED'}")


def test_criterion_05_constant_coefficients(record):
    rng = np.random.default_rng(2005)
    worst_corr, worst_diff = 0.0, 0.0
    x = C4.nodes()[::97]
    for _ in range(10):
        e = np.eye(4) + 0.3 * rng.normal(size=(4, 4))
        P = frame_to_symbol(Frame.constant(e, C4)).coefficients(np.zeros(4))
        G0 = random_hermitian_coefficients(rng, 1, 1)[0, 0]
        op = OperatorData(const(-1j * P, C4), const(G0, C4), C4)
        sym = op.principal_symbol
        corr = correction_term(sym, metric_from_symbol(sym), x)
        diff = covariant_subprincipal(op)(x) - subprincipal_symbol(op, x)
        worst_corr = max(worst_corr, float(np.abs(corr).max()))
        worst_diff = max(worst_diff, float(np.abs(diff).max()))
    record(5, "constant coefficients: csub = sub", worst_corr < 1e-10 and worst_diff < 1e-10,
           f"max correction {worst_corr:.1e}")


def test_criterion_06_potential_roundtrip(record):
    rng = np.random.default_rng(2006)
    nodes = C4.nodes()
    worst = 0.0
    for _ in range(10):
        frame, A = random_frame(rng, C4), random_potential(rng, C4)
        got = extract_potential(covariant_subprincipal(build_operator(frame, A)), frame)
        worst = max(worst, float(np.abs(got(nodes) - A(nodes)).max()))
    record(6, "potential roundtrip (10 curved frames)", worst < 1e-6, f"max error {worst:.1e}")


def test_criterion_07_gram_schmidt(record):
    rng = np.random.default_rng(2007)
    nodes = C4.nodes()
    worst_rel, worst_loop = 0.0, 0.0
    for _ in range(10):
        g, seed = boosted_seed_case(rng, C4)
        frame = gram_schmidt_orthonormalize(SeedData(g, seed))
        worst_rel = max(worst_rel, float(orthonormality_defect(frame, g).max()))
        back = metric_from_symbol(frame_to_symbol(frame), check=False).upper(nodes)
        worst_loop = max(worst_loop, float(np.abs(back - g.upper(nodes)).max()))
    record(7, "Gram-Schmidt with boosted seed (10 metrics)", worst_rel <= 1e-9 and worst_loop <= 1e-8,
           f"orthonormality {worst_rel:.1e}, metric loop {worst_loop:.1e}")


def test_criterion_08_holonomy(record):
    def loop(turns, k):
        return RotationPath(rotation_z(2 * np.pi * turns * np.arange(k + 1) / k), SO3)

    expected = {1: -1, 2: 1, 0: 1}
    table = {t: [lift_loop(loop(t, k)) for k in (64, 128, 256, 512, 1024)] for t in expected}
    ok = all(all(s == expected[t] for s in signs) for t, signs in table.items())
    # the same through a relating-map field on the chart, at both sample counts
    lam = lambda x: rotation_z(2 * np.pi * np.atleast_2d(x)[:, 0])
    field_signs = [holonomy_sign(lam, C3, 0, k, k)[0] for k in (64, 1024)]
    ok &= field_signs == [-1, -1]
    record(8, "double-cover holonomy (2pi, 4pi, constant; 64..1024 samples)", ok,
           f"2pi {table[1][0]:+d}, 4pi {table[2][0]:+d}, constant {table[0][0]:+d}")


def test_criterion_09_torus_classes(record):
    euclid = MetricField.constant(np.eye(3), C3)
    ref = Frame.identity(C3)

    def twist(n):
        n = np.asarray(n, dtype=float)
        return twisted_frame(ref, lambda x: 2 * np.pi * np.atleast_2d(x) @ n)

    ns = list(itertools.product([0, 1], repeat=3))
    sigs = [s.signs for s in classify_torus_framings([twist(n) for n in ns], euclid, ref)]
    shifted = [s.signs for s in classify_torus_framings([twist(np.add(n, 2)) for n in ns], euclid, ref)]
    ok = len(set(sigs)) == 8 and shifted == sigs
    record(9, "8 torus framings in 8 classes, n ~ n+2", ok,
           f"{len(set(sigs))} distinct classes, shifted twists {'coincide' if shifted == sigs else 'DIFFER'}")


def test_criterion_10_degeneracy(record):
    e = np.eye(4)
    e[1] = e[0]
    res = check_nondegenerate(frame_to_symbol(Frame.constant(e, C4)))
    witness_ok = (not res.ok) and res.witness_index is not None and len(res.witness_index) == 4
    P = np.array(PAULI[:3], dtype=complex)
    P[2] = P[2] + PAULI[3]
    ell = check_elliptic_tracefree(PrincipalSymbol(const(P, C3), C3))
    ok = witness_ok and not ell.trace_free
    record(10, "degenerate frame and s4 component rejected", ok,
           f"witness {res.witness_index}, max |trace| {ell.max_trace:.2f}")


def _canonical_bytes():
    """Canonical section of one ``inspect`` run, as raw text-report bytes and
    as the structured document's canonical subtree."""
    def inspect(fmt):
        return subprocess.run([sys.executable, "-m", "spinsym.cli", "inspect",
                               str(ROOT / "problems" / "minkowski.ini"), "--format", fmt],
                              capture_output=True, check=True).stdout

    text = inspect("text")
    text = text[:text.index(b"== diagnostics")]
    structured = json.dumps(json.loads(inspect("structured"))["canonical"], indent=2, sort_keys=True)
    return text, structured.encode()


def test_criterion_11_determinism(record):
    a, b = _canonical_bytes(), _canonical_bytes()
    record(11, "inspect canonical section byte-identical across runs", a == b,
           f"{len(a[0])} text bytes, {len(a[1])} structured bytes")

