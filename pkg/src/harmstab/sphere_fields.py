"""S^2-valued fields on the plane and their first-derivative jets.

A field is any object with a ``jet(z)`` method returning a vector
:class:`~harmstab.jets.Jet` with component axis 0 (shape ``(3, n)``).
Stereographic lifts are evaluated through the homogeneous form

    S(N/D) = (2 N conj(D), |N|^2 - |D|^2) / (|N|^2 + |D|^2),

which is smooth across poles of N/D.
"""

from __future__ import annotations

import csv

import numpy as np

from .errors import AmplitudeTooLarge, TangencyViolation
from .jets import Jet, cross, dot, stack
from .rational_maps import Orientation, RationalMap, poly_eval_jet

TANGENCY_TOL = 1e-8


def _split(w: Jet):
    """(Re w, Im w) as two real jets."""
    return w.real, w.imag


def stereo_from_pair(N: Jet, D: Jet) -> Jet:
    """Stereographic lift of N/D from jets of numerator and denominator."""
    nn, dd = N.abs2(), D.abs2()
    inv = (nn + dd).reciprocal()
    A = 2.0 * (N * D.conj())
    re, im = _split(A)
    return stack([re * inv, im * inv, (nn - dd) * inv])


def variation_from_pair(N: Jet, D: Jet, Ndot: Jet | None, Ddot: Jet | None,
                        S: Jet | None = None, inv: Jet | None = None) -> Jet:
    """Derivative of ``S(N/D)`` when (N, D) move in the direction (Ndot, Ddot).

    ``S`` and ``inv = 1/(|N|^2 + |D|^2)`` may be passed in when already known.
    """
    if S is None:
        S = stereo_from_pair(N, D)
    if inv is None:
        inv = (N.abs2() + D.abs2()).reciprocal()
    zero = Jet.constant(np.zeros_like(np.real(N.val)))
    dA_c = None
    dn = zero
    dd = zero
    if Ndot is not None:
        dA_c = Ndot * D.conj()
        dn = (N.conj() * Ndot).real
    if Ddot is not None:
        t = N * Ddot.conj()
        dA_c = t if dA_c is None else dA_c + t
        dd = (D.conj() * Ddot).real
    dA_re, dA_im = _split(2.0 * dA_c)
    dB = 2.0 * (dn - dd)
    dSig = 2.0 * (dn + dd)
    coef = dSig * inv
    return stack([
        (dA_re * inv) - S[0] * coef,
        (dA_im * inv) - S[1] * coef,
        (dB * inv) - S[2] * coef,
    ])


def variation_of_function(w: Jet, wdot: Jet) -> Jet:
    """Derivative of ``S(w)`` along a variation ``wdot`` of a finite function ``w``."""
    one = Jet.constant(np.ones_like(w.val))
    return variation_from_pair(w, one, wdot, None)


class SphereField:
    """Base class; subclasses implement ``jet``."""

    def jet(self, z) -> Jet:  # pragma: no cover - interface
        raise NotImplementedError

    def __call__(self, z):
        return self.jet(z).val


class LiftField(SphereField):
    """The harmonic map S(p/q) of a rational map."""

    def __init__(self, m: RationalMap):
        self.map = m

    def pair(self, z):
        o = self.map.orientation
        return poly_eval_jet(self.map.p, z, o), poly_eval_jet(self.map.q, z, o)

    def jet(self, z) -> Jet:
        N, D = self.pair(z)
        return stereo_from_pair(N, D)


def lift(m: RationalMap) -> LiftField:
    return LiftField(m)


class FunctionField(SphereField):
    """Wraps a callable ``z -> Jet`` as a field."""

    def __init__(self, fn):
        self.fn = fn

    def jet(self, z):
        return self.fn(np.asarray(z, dtype=complex))


class ConstantField(SphereField):
    def __init__(self, v=(0.0, 0.0, 1.0)):
        self.v = np.asarray(v, dtype=float)

    def jet(self, z):
        z = np.asarray(z, dtype=complex)
        val = self.v[:, None] * np.ones(z.shape)[None, :] if z.ndim else self.v.copy()
        return Jet.constant(val)


def dirichlet_density(m: RationalMap, z):
    """|grad S(p/q)|^2 via the cleared form 8 |p'q - pq'|^2 / (|p|^2 + |q|^2)^2."""
    z = np.asarray(z, dtype=complex)
    w = np.conj(z) if m.orientation is Orientation.ANTI else z
    p, q = m.p(w), m.q(w)
    dp, dq = m.p.derivative()(w), m.q.derivative()(w)
    num = np.abs(dp * q - p * dq) ** 2
    return 8.0 * num / (np.abs(p) ** 2 + np.abs(q) ** 2) ** 2


def field_dirichlet_density(u: SphereField, z):
    return u.jet(z).grad_sq()


def degree_density(u: SphereField, z):
    """u . (u_y x u_x); integrates to 4 pi deg(u)."""
    J = u.jet(z)
    return _degree_density_from_jet(J)


def _degree_density_from_jet(J: Jet):
    ux, uy = J.dx, J.dy
    c = np.stack([
        uy[1] * ux[2] - uy[2] * ux[1],
        uy[2] * ux[0] - uy[0] * ux[2],
        uy[0] * ux[1] - uy[1] * ux[0],
    ])
    return (J.val * c).sum(axis=0)


def density_sample(u: SphereField, z):
    """(dirichlet, degree) densities at ``z``."""
    J = u.jet(z)
    return J.grad_sq(), _degree_density_from_jet(J)


def bogomolny_density(u: SphereField, z, sign: int = 1):
    """|u_x - sign * u x u_y|^2 = |grad u|^2 - 2 sign u.(u_y x u_x).

    Its integral is 2 (E(u) - 4 pi sign deg u); it is computed from the
    left-hand side so no cancellation occurs for nearly harmonic u.
    """
    J = u.jet(z)
    return _bogomolny_from_jet(J, sign)


def _bogomolny_from_jet(J: Jet, sign: int = 1):
    u, ux, uy = J.val, J.dx, J.dy
    uxuy = np.stack([
        u[1] * uy[2] - u[2] * uy[1],
        u[2] * uy[0] - u[0] * uy[2],
        u[0] * uy[1] - u[1] * uy[0],
    ])
    d = ux - sign * uxuy
    return (d * d).sum(axis=0)


def hopf_differential(u: SphereField, z):
    J = u.jet(z)
    ux, uy = J.dx, J.dy
    return (uy * uy).sum(0) - (ux * ux).sum(0) + 2j * (ux * uy).sum(0)


class PerturbedField(SphereField):
    """u = eps v + sqrt(1 - eps^2 |v|^2) Phi for a tangent field v."""

    def __init__(self, base: SphereField, v, eps: float, check: bool = True):
        self.base = base
        self.v = v
        self.eps = float(eps)
        self.check = check

    def _parts(self, z):
        Phi = self.base.jet(z)
        V = self.v.jet(z)
        if self.check:
            tang = np.abs(np.sum(Phi.val * V.val, axis=0))
            bad = np.flatnonzero(tang > TANGENCY_TOL)
            if bad.size:
                zz = np.ravel(np.asarray(z))[bad[0]] if np.ndim(z) else z
                raise TangencyViolation(f"|v.Phi| = {tang.ravel()[bad[0]]:.3e} at z={zz}")
        w = dot(V, V) * (self.eps**2)
        if self.check and np.any(w.val >= 1.0):
            raise AmplitudeTooLarge(f"eps^2 |v|^2 reaches {np.max(w.val):.3e}")
        g = (1.0 - w).sqrt()
        return Phi, V, w, g

    def jet(self, z) -> Jet:
        Phi, V, _, g = self._parts(z)
        return V * self.eps + Phi * g

    def difference_jet(self, z) -> Jet:
        """u - Phi = eps v - (eps^2 |v|^2 / (1 + g)) Phi, without cancellation."""
        Phi, V, w, g = self._parts(z)
        return V * self.eps - Phi * (w / (g + 1.0))


def perturb_on_sphere(Phi: SphereField, v, eps: float) -> PerturbedField:
    return PerturbedField(Phi, v, eps)


def project_tangent(Phi: Jet, V: Jet) -> Jet:
    """Pointwise tangent projection V - (V.Phi) Phi, with jets."""
    return V - Phi * dot(V, Phi)


def dump_csv(u: SphereField, z, path):
    """Write samples ``x, y, u1, u2, u3`` to ``path``."""
    z = np.ravel(np.asarray(z, dtype=complex))
    vals = u.jet(z).val
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "u1", "u2", "u3"])
        for k in range(z.size):
            w.writerow([f"{v:.17g}" for v in (z[k].real, z[k].imag, *vals[:, k])])


__all__ = [
    "SphereField", "LiftField", "FunctionField", "ConstantField", "PerturbedField",
    "lift", "stereo_from_pair", "variation_from_pair", "variation_of_function",
    "dirichlet_density", "field_dirichlet_density", "degree_density", "density_sample",
    "bogomolny_density", "hopf_differential", "perturb_on_sphere", "project_tangent",
    "dump_csv", "cross",
]
