import math

import numpy as np
import pytest
from conftest import random_points
from hypothesis import given, settings
from hypothesis import strategies as st

from harmstab.counterexample import build_u
from harmstab.errors import AmplitudeTooLarge, TangencyViolation
from harmstab.jets import Jet
from harmstab.rational_maps import ComplexPoly, Orientation, RationalMap
from harmstab.sphere_fields import (ConstantField, FunctionField, PerturbedField, bogomolny_density,
                                    degree_density, density_sample, dirichlet_density, dump_csv,
                                    hopf_differential, lift, perturb_on_sphere, project_tangent)

R = 10.0
Z_MAP = RationalMap(ComplexPoly([0, 1]), ComplexPoly([1]))
PSI = RationalMap(ComplexPoly([-2j * R * R, 0, 1]), ComplexPoly([1]))


def stereo_direct(w):
    """Inverse stereographic projection from the north pole."""
    d = 1 + np.abs(w) ** 2
    return np.stack([2 * w.real / d, 2 * w.imag / d, (np.abs(w) ** 2 - 1) / d])


def fd_jet(u, z, h):
    gx = (u(z + h) - u(z - h)) / (2 * h)
    gy = (u(z + 1j * h) - u(z - 1j * h)) / (2 * h)
    return gx, gy


def test_lift_examples():
    u = lift(Z_MAP)
    assert np.allclose(u(np.array([0j])).ravel(), [0, 0, -1])
    assert np.allclose(u(np.array([1e9 + 0j])).ravel(), [0, 0, 1], atol=1e-8)
    assert np.allclose(lift(PSI)(np.array([R + 1j * R])).ravel(), [0, 0, -1])


def test_lift_is_stereographic_and_pole_safe(rng):
    m = RationalMap(ComplexPoly([1, 2j, 0.5]), ComplexPoly([0.3, -1, 1j]))
    z = random_points(rng, 200, 2)
    assert np.allclose(lift(m)(z), stereo_direct(m(z)), atol=1e-12)
    # exactly at a pole of p/q the lift is the north pole
    poles = np.roots(m.q.coeffs[::-1])
    assert np.allclose(lift(m)(poles), np.array([[0, 0], [0, 0], [1, 1]]), atol=1e-8)


@settings(max_examples=40, deadline=None)
@given(coef=st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
                     min_size=6, max_size=6), anti=st.booleans())
def test_unit_length_and_tangent_derivatives(coef, anti):
    p, q = ComplexPoly(coef[:3]), ComplexPoly(coef[3:])
    if p.is_zero() or q.is_zero():
        return
    try:
        m = RationalMap(p, q, Orientation.ANTI if anti else Orientation.HOLO)
    except Exception:
        return
    z = random_points(np.random.default_rng(3), 50, 2)
    J = lift(m).jet(z)
    assert np.allclose((J.val**2).sum(0), 1, atol=1e-12)
    scale = 1 + np.sqrt(J.grad_sq())
    assert np.all(np.abs((J.val * J.dx).sum(0)) <= 1e-10 * scale)
    assert np.all(np.abs((J.val * J.dy).sum(0)) <= 1e-10 * scale)


def test_jets_match_finite_differences(rng):
    u_fields = [lift(PSI), lift(RationalMap(ComplexPoly([1, 2j, 0.5]), ComplexPoly([0.3, -1, 1j]),
                                            Orientation.ANTI)), build_u(R, 0.01, None)]
    for u in u_fields:
        z = random_points(rng, 200, R)
        for zz in z:
            h = 1e-5 * (1 + abs(zz))
            J = u.jet(np.array([zz]))
            gx, gy = fd_jet(u, np.array([zz]), h)
            scale = 1 + np.sqrt(J.grad_sq())
            assert np.all(np.abs(J.dx - gx) <= 1e-6 * scale)
            assert np.all(np.abs(J.dy - gy) <= 1e-6 * scale)


def test_dirichlet_density_examples(rng):
    assert dirichlet_density(Z_MAP, np.array([0j]))[0] == pytest.approx(8)
    assert dirichlet_density(PSI, np.array([0j]))[0] == 0
    z = random_points(rng, 100, R)
    psi = z**2 - 2j * R * R
    expect = 32 * np.abs(z) ** 2 / (1 + np.abs(psi) ** 2) ** 2
    assert np.allclose(dirichlet_density(PSI, z), expect, rtol=1e-12)
    assert np.allclose(lift(PSI).jet(z).grad_sq(), expect, rtol=1e-9)


def test_degree_density_sign_and_bound(rng):
    dd = degree_density(lift(Z_MAP), np.array([0j]))[0]
    assert dd == pytest.approx(4)
    anti = RationalMap(ComplexPoly([0, 1]), ComplexPoly([1]), Orientation.ANTI)
    assert degree_density(lift(anti), np.array([0j]))[0] == pytest.approx(-4)
    assert degree_density(ConstantField(), np.array([0j, 1j]))[0] == 0
    u = build_u(R, 0.05, None)
    z = random_points(rng, 300, R)
    e, d = density_sample(u, z)
    assert np.all(np.abs(d) <= e / 2 + 1e-14)


def test_bogomolny_identity(rng):
    u = build_u(R, 0.05, None)
    z = random_points(rng, 100, R)
    e, d = density_sample(u, z)
    assert np.allclose(bogomolny_density(u, z, 1), e - 2 * d, atol=1e-14)
    assert np.allclose(bogomolny_density(lift(PSI), z, 1), 0, atol=1e-14)


def test_hopf_differential(rng):
    z = random_points(rng, 300, R)
    for m in (PSI, RationalMap(ComplexPoly([1, 2j, 0.5]), ComplexPoly([0.3, -1, 1j]), Orientation.ANTI)):
        u = lift(m)
        assert np.all(np.abs(hopf_differential(u, z)) <= 1e-10 * u.jet(z).grad_sq())
    assert np.all(hopf_differential(ConstantField(), z) == 0)
    u = build_u(R, 0.01, None)
    # the bubble core, where |grad Phi| ~ r, sits at distance ~ 1/r from (r, r)
    ring = R + 1j * R + 0.05 * np.exp(1j * np.linspace(0, 2 * np.pi, 64))
    assert np.max(np.abs(hopf_differential(u, ring))) > 1e-6


class _Tangent:
    def __init__(self, Phi, w):
        self.Phi, self.w = Phi, np.asarray(w, float)

    def jet(self, z):
        const = Jet.constant(self.w[:, None] * np.ones(np.shape(z)))
        return project_tangent(self.Phi.jet(z), const)


def test_perturbation(rng, tmp_path):
    Phi = lift(PSI)
    v = _Tangent(Phi, [0.3, -0.2, 0.5])
    z = random_points(rng, 100, R)
    assert np.array_equal(perturb_on_sphere(Phi, v, 0.0)(z), Phi(z))
    u = perturb_on_sphere(Phi, v, 0.1)
    assert np.allclose((u(z) ** 2).sum(0), 1, atol=1e-14)
    J = u.jet(z)
    assert np.all(np.abs((J.val * J.dx).sum(0)) <= 1e-10 * (1 + np.sqrt(J.grad_sq())))
    assert np.allclose(u.difference_jet(z).val, u(z) - Phi(z), atol=1e-15)
    with pytest.raises(AmplitudeTooLarge):
        perturb_on_sphere(Phi, v, 5.0)(z)
    with pytest.raises(TangencyViolation):
        PerturbedField(Phi, FunctionField(lambda w: Jet.constant(np.ones((3,) + w.shape))), 0.1)(z)
    path = tmp_path / "u.csv"
    dump_csv(u, z[:5], path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,y,u1,u2,u3" and len(lines) == 6
    assert math.isclose(float(lines[1].split(",")[0]), z[0].real, rel_tol=1e-16)
