import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harmstab.errors import DegenerateMoebius, ReducibleMap, ZeroNumerator
from harmstab.rational_maps import (ComplexPoly, Moebius, Orientation, RationalMap, coeff_distance,
                                    compose_moebius, gcd_degree, normalize_monic, poly_eval_jet)

R = 10.0
PSI = ComplexPoly([-2j * R * R, 0, 1])

cplx = st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False)


def test_poly_basics():
    assert ComplexPoly([1, 2, 0, 0]).degree == 1
    assert ComplexPoly().degree == -1 and ComplexPoly().is_zero()
    assert ComplexPoly.from_roots([1, -1])(np.array([1, -1, 0])).tolist() == [0, 0, -1]
    assert abs(poly_eval_jet(PSI, R + 1j * R).val) < 1e-12
    with pytest.raises(ZeroNumerator):
        ComplexPoly().leading


def test_poly_arithmetic_and_json():
    p, q = ComplexPoly([1, 1j]), ComplexPoly([2, 0, 3])
    z = np.array([0.3 - 1j, 2 + 0.5j])
    assert np.allclose((p * q)(z), p(z) * q(z))
    assert np.allclose((p - q)(z), p(z) - q(z))
    assert np.allclose((p**3)(z), p(z) ** 3)
    assert np.allclose(q.derivative()(z), 6 * z)
    assert ComplexPoly.from_json(q.to_json()) == q


def test_gcd_examples():
    assert gcd_degree(ComplexPoly([-1, 0, 1]), ComplexPoly([-1, 1])) == 1
    assert gcd_degree(PSI, ComplexPoly([1])) == 0
    assert gcd_degree(ComplexPoly([1, 0, 1]), ComplexPoly([1 + 1e-14, 0, 1]), 1e-10) == 2


@settings(max_examples=30, deadline=None)
@given(p=st.lists(cplx, min_size=2, max_size=3), q=st.lists(cplx, min_size=2, max_size=3),
       g=st.lists(st.complex_numbers(min_magnitude=0.3, max_magnitude=1.5), min_size=1, max_size=2))
def test_gcd_of_common_factor(p, q, g):
    P = ComplexPoly.from_roots(p)
    Q = ComplexPoly.from_roots(q)
    # keep the roots of p and q well separated so the pair is coprime
    gap = min(abs(a - b) for a in p for b in q)
    if gap < 0.3 or min(abs(a - b) for a in p + q for b in g) < 0.3:
        return
    G = ComplexPoly.from_roots(g)
    assert gcd_degree(P * G, Q * G) == len(g) + gcd_degree(P, Q)


def test_rational_map_validation():
    with pytest.raises(ReducibleMap):
        RationalMap(ComplexPoly([-1, 0, 1]), ComplexPoly([-1, 1]))
    with pytest.raises(ValueError):
        RationalMap(ComplexPoly([1]), ComplexPoly())
    m = RationalMap(PSI, ComplexPoly([1]), Orientation.ANTI)
    assert m.degree == -2
    assert RationalMap(PSI, ComplexPoly([1])).degree == 2
    assert RationalMap.from_json(m.to_json()) == m
    assert m(np.array([R - 1j * R]))[0] == pytest.approx(0)


def test_normalize_monic_examples(rng):
    m = normalize_monic(RationalMap(ComplexPoly([0, 0, 2]), ComplexPoly([2])))
    assert m.p.coeffs == (0, 0, 1) and m.q.coeffs == (1,)
    psi = RationalMap(PSI, ComplexPoly([1]))
    assert normalize_monic(psi) == psi
    lead = 3 + 4j
    m = RationalMap(ComplexPoly([1, 2j, lead]), ComplexPoly([1, 1]))
    n = normalize_monic(m)
    assert n.p.leading == pytest.approx(1)
    z = rng.normal(size=20) + 1j * rng.normal(size=20)
    assert np.allclose(n(z), m(z))
    assert normalize_monic(n) == n
    with pytest.raises(ZeroNumerator):
        normalize_monic(RationalMap(ComplexPoly(), ComplexPoly([1])))


def test_coeff_distance():
    a = RationalMap(ComplexPoly([0, 1]), ComplexPoly([1]))
    b = RationalMap(ComplexPoly([0, 2]), ComplexPoly([2, 0.5]))
    # monic forms z/1 and z/(1 + z/4): difference 0.25 in the z-coefficient of q
    assert coeff_distance(a, b) == pytest.approx(0.25)
    assert coeff_distance(a, a) == 0


def test_moebius_examples(rng):
    z_map = RationalMap(ComplexPoly([0, 1]), ComplexPoly([1]))
    assert compose_moebius(z_map, Moebius.identity()) == z_map
    inv = compose_moebius(z_map, Moebius(0, 1, 1, 0))
    w = rng.normal(size=5) + 1j * rng.normal(size=5)
    assert np.allclose(inv(w), 1 / w)
    psi = RationalMap(PSI, ComplexPoly([1]))
    shifted = compose_moebius(psi, Moebius(1, 1, 0, 1))
    # (z + 1)^2 - 2 i r^2 = z^2 + 2 z + 1 - 2 i r^2
    assert np.allclose(shifted.p.coeffs, [1 - 2j * R * R, 2, 1])
    with pytest.raises(DegenerateMoebius):
        Moebius(1, 2, 2, 4)
    F = Moebius(1 + 1j, 0.5, -0.2j, 2)
    assert np.allclose(F.compose(F.inverse())(w), w)


@settings(max_examples=40, deadline=None)
@given(a=cplx, b=cplx, c=cplx, d=cplx, anti=st.booleans(),
       pc=st.lists(cplx, min_size=3, max_size=3), qc=st.lists(cplx, min_size=2, max_size=3))
def test_compose_matches_pointwise(a, b, c, d, anti, pc, qc):
    try:
        F = Moebius(a, b, c, d)
        m = RationalMap(ComplexPoly(pc), ComplexPoly(qc), Orientation.ANTI if anti else Orientation.HOLO)
        if m.p.is_zero() or max(abs(x) for x in m.p.coeffs) < 0.1 or abs(a * d - b * c) < 0.1:
            return
        mf = compose_moebius(m, F)
    except (DegenerateMoebius, ReducibleMap, ZeroNumerator, ValueError):
        return
    z = np.random.default_rng(0).normal(size=100) + 1j * np.random.default_rng(1).normal(size=100)
    Fz = F(z)
    direct = m(Fz)
    comp = mf(z)
    w = np.conj(Fz) if anti else Fz
    good = (np.abs(direct) < 1e6) & (np.abs(m.q(w)) > 1e-3) & (np.abs(z * c + d) > 1e-3)
    rel = np.abs(comp[good] - direct[good]) / (1 + np.abs(direct[good]))
    assert np.all(rel <= 1e-9)
