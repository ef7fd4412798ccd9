import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harmstab.jets import Jet, cross, dot, grad_inner, stack
from harmstab.rational_maps import ComplexPoly, Orientation, poly_eval_jet

finite = st.floats(-3, 3, allow_nan=False)


def fd(f, z, h=1e-6):
    """Central differences of a complex function of the plane point z."""
    return (f(z + h) - f(z - h)) / (2 * h), (f(z + 1j * h) - f(z - 1j * h)) / (2 * h)


def test_z_squared_at_one_plus_i():
    J = poly_eval_jet(ComplexPoly([0, 0, 1]), 1 + 1j)
    assert J.val == pytest.approx(2j)
    assert J.dx == pytest.approx(2 + 2j)
    assert J.dy == pytest.approx(-2 + 2j)


def test_constant_has_zero_derivatives():
    J = poly_eval_jet(ComplexPoly([1]), np.array([0.3 + 2j, -5j]))
    assert np.all(J.val == 1) and np.all(J.dx == 0) and np.all(J.dy == 0)


@settings(max_examples=50, deadline=None)
@given(x=finite, y=finite, anti=st.booleans())
def test_poly_jet_matches_finite_differences(x, y, anti):
    p = ComplexPoly([0.5 - 1j, 2, 0.3j, 1 + 1j])
    o = Orientation.ANTI if anti else Orientation.HOLO
    z = complex(x, y)
    J = poly_eval_jet(p, z, o)
    gx, gy = fd(lambda w: poly_eval_jet(p, w, o).val, z)
    assert abs(J.dx - gx) <= 1e-6 * (1 + abs(gx))
    assert abs(J.dy - gy) <= 1e-6 * (1 + abs(gy))


@settings(max_examples=50, deadline=None)
@given(x=finite, y=finite)
def test_arithmetic_chain_rule(x, y):
    def f(z):
        Z = Jet.coordinate_z(z)
        A = Z * Z + 3.0
        return A / (Z.abs2() + 1.0) - Z.conj() * 2.0

    z = complex(x, y)
    J = f(z)
    gx, gy = fd(lambda w: f(w).val, z)
    assert abs(J.dx - gx) <= 1e-6 * (1 + abs(gx))
    assert abs(J.dy - gy) <= 1e-6 * (1 + abs(gy))


def test_sqrt_and_pow():
    z = np.array([0.4 + 0.2j, 1.5 - 0.7j])
    R = Jet.coordinate_z(z).abs2() + 1.0
    S = R.sqrt()
    assert np.allclose(S.val**2, R.val)
    assert np.allclose(2 * S.val * S.dx, R.dx)
    P = R**3
    assert np.allclose(P.dx, 3 * R.val**2 * R.dx)
    with pytest.raises(ValueError):
        R**-1


def test_vector_helpers():
    z = np.array([0.1 + 0.3j, -1 + 2j])
    Z = Jet.coordinate_z(z)
    a = stack([Z.real, Z.imag, Z.abs2()])
    b = stack([Z.imag, Z.real * 2.0, Z.real])
    d = dot(a, b)
    assert np.allclose(d.val, (a.val * b.val).sum(0))
    c = cross(a, b)
    assert np.allclose(c.val, np.cross(a.val.T, b.val.T).T)
    assert np.allclose(dot(c, a).val, 0)
    assert np.allclose(grad_inner(a, a), a.grad_sq())
