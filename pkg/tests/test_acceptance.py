"""Acceptance criteria 1-16, each at its stated tolerance.

Each test records one ``CRITERION n: PASS|FAIL`` line, printed in the
terminal summary. Criteria that cannot hold for mathematical reasons are
marked ``xfail(strict=True)``: they run unchanged and are reported as FAIL.
"""

import csv
import io
import math
import time

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES, c_solution, gram, scheme

from harmstab import cli
from harmstab.asymptotics import oracle_check
from harmstab.counterexample import (DirectionField, PsiField, build_u, norm_pieces,
                                     perturbation_integrals)
from harmstab.kernel_basis import ZERO_ENTRIES, alpha_r, apply_step, gram_via_gradients
from harmstab.projector import project, random_tangent_field
from harmstab.quadrature import centered_scheme, default_scheme, degree, energy
from harmstab.rational_maps import ComplexPoly, Orientation, RationalMap
from harmstab.sphere_fields import PerturbedField, hopf_differential, lift

PI = math.pi


def record(n, ok, detail):
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_c01_harmonic_energy():
    worst, slowest = 0.0, 0.0
    for r in (2.0, 5.0, 10.0):
        t = time.perf_counter()
        e = energy(lift(alpha_r(r).to_map()), default_scheme(r), rtol=1e-11)
        slowest = max(slowest, time.perf_counter() - t)
        worst = max(worst, abs(e.value / (8 * PI) - 1))
    record(1, worst <= 1e-8 and slowest < 30, f"max rel err {worst:.2e}, slowest {slowest:.2f}s")


def test_c02_degree():
    d2 = degree(lift(alpha_r(10.0).to_map()), default_scheme(10.0), rtol=1e-11).value
    z = RationalMap(ComplexPoly([0, 1]), ComplexPoly([1]))
    zbar = RationalMap(ComplexPoly([0, 1]), ComplexPoly([1]), Orientation.ANTI)
    d_z = degree(lift(z), centered_scheme(), rtol=1e-11).value
    d_zbar = degree(lift(zbar), centered_scheme(), rtol=1e-11).value
    ok = abs(d2 - 2) <= 1e-6 and abs(d_z - 1) <= 1e-6 and abs(d_zbar + 1) <= 1e-6
    record(2, ok, f"deg psi_10 = {d2:.9f}, deg z = {d_z:.9f}, deg zbar = {d_zbar:.9f}")


def test_c03_gram_zero_pattern():
    J = gram(10.0)
    worst = max(abs(J[i, j]) for i, j in ZERO_ENTRIES) / J.max_diag
    record(3, worst <= 1e-8, f"{len(ZERO_ENTRIES)} entries, max |J_ij| / max diag = {worst:.2e}")


@pytest.mark.xfail(strict=True, reason="J_11 equals 32 pi / 3 exactly for every r, so the error "
                   "scaling compares round-off with round-off")
def test_c04_gram_values():
    J, J5 = gram(10.0), gram(5.0)
    e11 = abs(J[1, 1] - 32 * PI / 3)
    e77 = abs(J[7, 7] - (64 * PI / 3 + 8 * PI / 3 * 1e-4))
    e99 = abs(J[9, 9] - (128 * PI / 3 + 64 * PI / 3 * 1e-4))
    e110 = abs(J[1, 10] + 64 * PI / 3)
    values_ok = e11 <= 1e-3 and e77 <= 1e-3 and e99 <= 1e-3 and e110 <= 1e-2
    e11_5 = abs(J5[1, 1] - 32 * PI / 3)
    scaling_ok = e11 <= e11_5 / 16
    record(4, values_ok and scaling_ok,
           f"values {'ok' if values_ok else 'off'} (errors {e11:.1e}, {e77:.1e}, {e99:.1e}, "
           f"{e110:.1e}); scaling |J11-32pi/3|: r=5 {e11_5:.1e}, r=10 {e11:.1e}")


def test_c05_gram_identity():
    J = gram(5.0)
    G = gram_via_gradients(alpha_r(5.0), 5.0, scheme(5.0))
    diff = float(np.max(np.abs(J.entries - G.entries)))
    record(5, diff <= 1e-6, f"max |difference| = {diff:.2e}")


def test_c06_determinant():
    # block determinants in units of 16 pi / 3: two 3x3 blocks -> 32 r^-4, two 2x2 -> 32
    limit = (16 * PI / 3) ** 10 * 32.0**4
    val = gram(20.0).det() * 20.0**8
    rel = abs(val / limit - 1)
    record(6, rel <= 0.05, f"det * r^8 = {val:.6e}, limit {limit:.6e}, rel {rel:.2e}")


def test_c07_asymptotic_evaluators():
    rows = [c for r in (10.0, 20.0) for c in oracle_check(r, gram=gram(r), ref_gram=gram(5.0))]
    worst = max(c.diff / c.allowed for c in rows)
    bad = [f"J{c.i}_{c.j}" for c in rows if not c.passed]
    record(7, not bad, f"{len(rows)} checks, max diff/allowed = {worst:.3f}" + (f", failing {bad}" if bad else ""))


def test_c08_p_and_c():
    _, pres, sol = c_solution(10.0)
    p, c = np.asarray(pres.value), sol.c
    p7_pred, c8_pred = -16 * PI / 3 * 1e-4, -0.25e-4
    ok_vals = abs(p[6] / p7_pred - 1) <= 0.05 and abs(c[7] / c8_pred - 1) <= 0.05
    tol = 1e-10
    sym = (abs(p[2] + p[3]) <= tol * abs(p[2]) + 1e-15 and abs(p[6] - p[7]) <= tol * abs(p[6])
           and abs(c[2] + c[3]) <= tol * abs(c[2]) + 1e-15 and abs(c[6] - c[7]) <= tol * abs(c[6]))
    record(8, ok_vals and sym, f"p7 = {p[6]:.6e} (pred {p7_pred:.6e}), c8 = {c[7]:.6e} "
           f"(pred {c8_pred:.1e}), symmetries {'exact' if sym else 'broken'}")


def test_c09_counterexample_energetics():
    pieces, _ = norm_pieces(10.0, np.zeros(10), scheme(10.0))
    w = pieces["weighted_fK"][0]
    w_ok = abs(w / (64 * PI / 3 * 1e-4) - 1) <= 0.02
    split = abs(pieces["grad_fK"][0] - pieces["grad_f_K"][0] - w) / pieces["grad_fK"][0]
    r = 50.0
    p50, _ = norm_pieces(r, np.zeros(10), default_scheme(r))
    g = p50["grad_f_K"][0]
    g_pred = 32 * PI / (r**4 * math.log(r))
    g_ok = abs(g / g_pred - 1) <= 0.25
    record(9, w_ok and split <= 1e-6 and g_ok,
           f"weighted/pred = {w / (64 * PI / 3 * 1e-4):.4f}, split rel {split:.1e}, "
           f"grad-f term at r=50 / pred = {g / g_pred:.4f}")


_SWEEP = {}


def _sweep(jobs, tag):
    key = (jobs, tag)
    if key not in _SWEEP:
        buf = io.StringIO()
        t = time.perf_counter()
        code = cli.main(["sweep", "--r-list", "10,20,40,80", "--jobs", str(jobs)], stdout=buf)
        _SWEEP[key] = (code, buf.getvalue(), time.perf_counter() - t)
    return _SWEEP[key]


def _sweep_rows():
    code, text, seconds = _sweep(1, "a")
    rows = list(csv.DictReader(line for line in text.splitlines() if not line.startswith("#")))
    return code, rows, seconds


def test_c10_non_uniform_stability():
    code, rows, seconds = _sweep_rows()
    r = np.array([float(x["r"]) for x in rows])
    ratio = np.array([float(x["ratio"]) for x in rows])
    slope = np.polyfit(np.log(r), ratio, 1)[0]
    ok = (code == 0 and bool(np.all(np.diff(ratio) > 0)) and abs(slope / (4 / 3) - 1) <= 0.35
          and seconds < 1200)
    record(10, ok, f"ratios {np.round(ratio, 4).tolist()}, slope vs ln r = {slope:.4f}, "
           f"sweep {seconds:.0f}s")


def test_c11_conjecture_probe():
    _, rows, _ = _sweep_rows()
    conj = np.array([float(x["conj_ratio"]) for x in rows])
    spread = conj.max() / conj.min()
    record(11, spread < 3, f"conj_ratio {np.round(conj, 4).tolist()}, max/min = {spread:.3f}")


@pytest.mark.xfail(strict=True, reason="v = f K is odd under z -> -z and Phi is even, so the "
                   "energy is even in eps and the remainder is O(eps^4) (halving ratio 16)")
def test_c12_second_variation():
    r = 10.0
    s = scheme(r)
    Q = norm_pieces(r, np.zeros(10), s)[0]["grad_f_K"][0]
    rem = []
    for eps in (0.1, 0.05):
        u = PerturbedField(PsiField(r), DirectionField(r, None), eps)
        d = perturbation_integrals(u, s).value[0]
        rem.append(abs(d - 0.5 * eps**2 * Q))
    factor = rem[0] / rem[1]
    record(12, 6 <= factor <= 10, f"remainder shrinks by {factor:.4f} when eps halves")


def test_c13_hopf_differential():
    rng = np.random.default_rng(2024)
    worst = 0.0
    made = 0
    while made < 5:
        p = ComplexPoly(rng.normal(size=3) + 1j * rng.normal(size=3))
        q = ComplexPoly(rng.normal(size=3) + 1j * rng.normal(size=3))
        orient = Orientation.HOLO if made % 2 == 0 else Orientation.ANTI
        m = RationalMap(p, q, orient)
        u = lift(m)
        z = (rng.normal(size=500) + 1j * rng.normal(size=500)) * 2
        J = u.jet(z)
        worst = max(worst, float(np.max(np.abs(hopf_differential(u, z)) / J.grad_sq())))
        made += 1
    record(13, worst <= 1e-10, f"max |H| / |grad u|^2 = {worst:.2e}")


def test_c14_projector():
    r = 10.0
    _, _, sol = c_solution(r)
    u = build_u(r, 0.005, sol.c)
    a = alpha_r(r)
    s = scheme(r)
    starts = (a, apply_step(a, np.full(10, 1e-2 / math.sqrt(10)), r))
    res = [project(u, a0, r, s) for a0 in starts]
    errs = [pr.scaled_error(a, r) for pr in res]
    ok = all(pr.converged and pr.iterations <= 25 for pr in res) and max(errs) <= 1e-4
    record(14, ok, f"scaled errors {[f'{e:.1e}' for e in errs]}, iterations "
           f"{[pr.iterations for pr in res]}")


def test_c15_deficit_identity():
    fields = []
    for r, eps in ((10.0, 0.01), (20.0, 0.005)):
        fields.append((build_u(r, eps, c_solution(r)[2].c), scheme(r)))
    Phi = lift(alpha_r(5.0).to_map())
    v = random_tangent_field(Phi, 5.0, np.random.default_rng(7))
    fields.append((PerturbedField(Phi, v, 0.05), scheme(5.0)))
    worst = 0.0
    for u, s in fields:
        deficit, _, d_grad, d_weighted = perturbation_integrals(u, s).value
        worst = max(worst, abs(2 * deficit - (d_grad - d_weighted)) / (2 * deficit))
    record(15, worst <= 1e-4, f"max rel mismatch {worst:.2e} over {len(fields)} fields")


def test_c16_determinism():
    a = _sweep(1, "a")
    b = _sweep(1, "b")
    c = _sweep(8, "a")
    same = a[1] == b[1] == c[1]
    record(16, same and a[0] == b[0] == c[0] == 0,
           f"repeat identical: {a[1] == b[1]}, jobs 1 vs 8 identical: {a[1] == c[1]}")
