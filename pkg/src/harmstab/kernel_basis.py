"""The degree-2 family Psi[alpha], its ten kernel fields and their Gram matrix.

Psi[alpha](z) = (a z^2 + b z + c) / (1 - d z - e z^2) with
a = alpha_1 + i alpha_2, ..., e = alpha_9 + i alpha_10.

Kernel field i is r^{beta_i} times the variation of S(Psi) along a
direction (dN, dD) of numerator and denominator:

====  ==========  ========
 i    direction    beta_i
====  ==========  ========
1, 2  dN = N, iN       0
3, 4  dN = z, iz      -1
5, 6  dN = 1, i        0
7, 8  dD = -z, -iz    -1
9,10  dD = -z^2, ..   -2
====  ==========  ========

At alpha_r, where Psi = psi_r = z^2 - 2 i r^2, the induced velocities of
Psi are psi, i psi, z, i z, 1, i, z psi, i z psi, z^2 psi, i z^2 psi.
Directions 1 and 2 rescale and rotate Psi; the remaining eight are the
coordinate directions of the coefficients.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import HypothesisViolated, PoleHit
from .jets import Jet
from .quadrature import QuadScheme, integrate
from .rational_maps import ComplexPoly, RationalMap, gcd_degree
from .sphere_fields import SphereField, stereo_from_pair, variation_from_pair

BETA = (0, 0, -1, -1, 0, 0, -1, -1, -2, -2)
TRIU = np.triu_indices(10)


@dataclass(frozen=True)
class ParamVec:
    """alpha in R^10 for the family Psi[alpha]."""

    alpha: tuple

    def __post_init__(self):
        a = tuple(float(x) for x in self.alpha)
        if len(a) != 10:
            raise ValueError("ParamVec needs exactly 10 real numbers")
        object.__setattr__(self, "alpha", a)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.alpha)

    def coeffs(self):
        al = self.alpha
        return tuple(complex(al[2 * k], al[2 * k + 1]) for k in range(5))

    def numerator(self) -> ComplexPoly:
        a, b, c, _, _ = self.coeffs()
        return ComplexPoly([c, b, a])

    def denominator(self) -> ComplexPoly:
        _, _, _, d, e = self.coeffs()
        return ComplexPoly([1.0, -d, -e])

    def to_map(self) -> RationalMap:
        return RationalMap(self.numerator(), self.denominator())

    def is_admissible(self) -> bool:
        a = self.coeffs()[0]
        if a == 0:
            return False
        return gcd_degree(self.numerator(), self.denominator()) == 0

    def require_admissible(self):
        if not self.is_admissible():
            raise HypothesisViolated(f"alpha={self.alpha} has a = 0 or a reducible Psi")
        return self

    def to_json(self):
        return list(self.alpha)

    @classmethod
    def from_map(cls, m: RationalMap) -> "ParamVec":
        """Parameters of p/q with deg p, deg q <= 2, normalized so that q(0) = 1."""
        p = list(m.p.coeffs) + [0j] * 3
        q = list(m.q.coeffs) + [0j] * 3
        if m.p.degree > 2 or m.q.degree > 2:
            raise HypothesisViolated("the family has numerator and denominator of degree <= 2")
        if q[0] == 0:
            raise HypothesisViolated("denominator vanishes at 0; not representable with q(0) = 1")
        p = [x / q[0] for x in p[:3]]
        q = [x / q[0] for x in q[:3]]
        vals = [p[2], p[1], p[0], -q[1], -q[2]]
        return cls(tuple(v for x in vals for v in (complex(x).real, complex(x).imag)))


def alpha_r(r: float) -> ParamVec:
    """The parameter with Psi[alpha_r] = z^2 - 2 i r^2 = (z - r - ir)(z + r + ir)."""
    return ParamVec((1.0, 0.0, 0.0, 0.0, 0.0, -2.0 * r * r, 0.0, 0.0, 0.0, 0.0))


# -- parameter chart ---------------------------------------------------------

def step_matrix(alpha: ParamVec, r: float) -> np.ndarray:
    """Real 10x10 matrix M with d alpha = M ds, where ds moves along K_1..K_10."""
    a, b, c, _, _ = alpha.coeffs()
    M = np.zeros((10, 10))
    for i in range(10):
        ds = np.zeros(10)
        ds[i] = 1.0
        d = _coeff_change(a, b, c, ds, r)
        M[:, i] = np.ravel(np.column_stack([np.real(d), np.imag(d)]))
    return M


def _coeff_change(a, b, c, ds, r):
    w = [complex(ds[2 * k], ds[2 * k + 1]) for k in range(5)]
    scale = w[0]
    return np.array([
        scale * a,
        scale * b + w[1] / r,
        scale * c + w[2],
        w[3] / r,
        w[4] / r**2,
    ])


def apply_step(alpha: ParamVec, ds, r: float) -> ParamVec:
    """alpha + M(alpha) ds, the first-order chart around ``alpha``."""
    return ParamVec(alpha.array + step_matrix(alpha, r) @ np.asarray(ds, dtype=float))


def scaled_difference(alpha: ParamVec, ref: ParamVec, r: float) -> np.ndarray:
    """ds with ref + M(ref) ds = alpha (scaled coordinates around ``ref``)."""
    return np.linalg.solve(step_matrix(ref, r), alpha.array - ref.array)


# -- evaluation ------------------------------------------------------------

def _pair(alpha: ParamVec, z):
    z = np.asarray(z, dtype=complex)
    Z = Jet.coordinate_z(z)
    a, b, c, d, e = alpha.coeffs()
    N = (Z * a + b) * Z + c
    D = 1.0 - (Z * e + d) * Z
    return Z, N, D


def psi_eval(alpha: ParamVec, z) -> Jet:
    """Psi[alpha](z) with its x and y derivatives."""
    _, N, D = _pair(alpha, z)
    if np.any(np.abs(D.val) < 1e-300):
        raise PoleHit(f"denominator of Psi vanishes at some of {z!r}")
    return N / D


def _directions(Z: Jet, N: Jet, r: float):
    one = Jet.constant(np.ones_like(Z.val))
    out = [
        (N, None), (N * 1j, None),
        (Z, None), (Z * 1j, None),
        (one, None), (one * 1j, None),
        (None, -Z), (None, Z * (-1j)),
        (None, -(Z * Z)), (None, (Z * Z) * (-1j)),
    ]
    res = []
    for (dn, dd), beta in zip(out, BETA):
        s = float(r) ** beta
        res.append((None if dn is None else dn * s, None if dd is None else dd * s))
    return res


def kernel_jets(alpha: ParamVec, z, r: float):
    """(S(Psi[alpha]), [K_1, ..., K_10]) as vector jets at ``z``."""
    Z, N, D = _pair(alpha, z)
    S = stereo_from_pair(N, D)
    inv = (N.abs2() + D.abs2()).reciprocal()
    Ks = [variation_from_pair(N, D, dn, dd, S=S, inv=inv) for dn, dd in _directions(Z, N, r)]
    return S, Ks


class FamilyField(SphereField):
    """The harmonic map S(Psi[alpha])."""

    def __init__(self, alpha: ParamVec):
        self.alpha = alpha

    def jet(self, z):
        _, N, D = _pair(self.alpha, z)
        return stereo_from_pair(N, D)


class KernelField(SphereField):
    """K_i[alpha] with scale r; ``index`` is 1-based."""

    def __init__(self, alpha: ParamVec, index: int, r: float):
        if not 1 <= index <= 10:
            raise ValueError("kernel index must be in 1..10")
        self.alpha = alpha
        self.index = index
        self.r = float(r)
        self.beta = BETA[index - 1]

    def jet(self, z):
        Z, N, D = _pair(self.alpha, z)
        dn, dd = _directions(Z, N, self.r)[self.index - 1]
        return variation_from_pair(N, D, dn, dd)


def kernel_field(alpha: ParamVec, i: int, r: float) -> KernelField:
    return KernelField(alpha, i, r)


# -- closed forms at alpha_r -------------------------------------------------

def psi_r(r: float, z):
    z = np.asarray(z, dtype=complex)
    return z * z - 2j * r * r


def closed_form_velocities(r: float, z):
    """r^{beta_i} dPsi along direction i at alpha_r, shape (10, n)."""
    z = np.asarray(z, dtype=complex)
    p = psi_r(r, z)
    one = np.ones_like(z)
    w = [p, 1j * p, z, 1j * z, one, 1j * one, z * p, 1j * z * p, z * z * p, 1j * z * z * p]
    return np.array([wi * float(r) ** b for wi, b in zip(w, BETA)])


def closed_form_kernel(i: int, r: float, z):
    """K_i at alpha_r from zeta((1+|psi|^2) w - X psi, X), X = 2 Re(conj(psi) w)."""
    z = np.asarray(z, dtype=complex)
    p = psi_r(r, z)
    w = closed_form_velocities(r, z)[i - 1]
    q = 1.0 + np.abs(p) ** 2
    zeta = 2.0 / q**2
    X = 2.0 * np.real(np.conj(p) * w)
    first = q * w - X * p
    return zeta * np.array([first.real, first.imag, X])


def inner_product_closed_form(r: float, z):
    """I_ij = 1/4 (1 + |psi_r|^2)^2 K_i . K_j = Re(w_i conj(w_j)), shape (10, 10, n)."""
    w = closed_form_velocities(r, z)
    return np.real(w[:, None, :] * np.conj(w[None, :, :]))


def inner_product_table(alpha: ParamVec, z, r: float | None = None):
    """1/4 (1 + |Psi|^2)^2 K_i . K_j from the kernel jets, shape (10, 10, n)."""
    if r is None:
        r = math.sqrt(abs(alpha.alpha[5]) / 2.0)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    _, Ks = kernel_jets(alpha, z, r)
    P = psi_eval(alpha, z).val
    fac = 0.25 * (1.0 + np.abs(P) ** 2) ** 2
    V = np.array([K.val for K in Ks])
    return fac * np.einsum("icn,jcn->ijn", V, V)


# -- Gram matrix --------------------------------------------------------------

@dataclass
class GramMatrix:
    entries: np.ndarray
    err: np.ndarray
    r: float
    alpha: ParamVec
    method: str
    converged: bool = True
    n_evals: int = 0
    meta: dict = field(default_factory=dict)

    def __getitem__(self, ij):
        """1-based access ``J[i, j]``."""
        i, j = ij
        return self.entries[i - 1, j - 1]

    @property
    def norm(self) -> float:
        return float(np.max(np.abs(self.entries)))

    @property
    def max_diag(self) -> float:
        return float(np.max(np.diag(self.entries)))

    def eigvalsh(self):
        return np.linalg.eigvalsh(self.entries)

    def det(self) -> float:
        return float(np.linalg.det(self.entries))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for row in self.entries:
            w.writerow([f"{v:.17g}" for v in row])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({
            "r": self.r,
            "alpha": self.alpha.to_json(),
            "method": self.method,
            "converged": self.converged,
            "n_evals": self.n_evals,
            "entries": self.entries.tolist(),
            "err_est": self.err.tolist(),
            **self.meta,
        }, indent=1)


def _triu_to_full(vals):
    M = np.zeros((10, 10))
    M[TRIU] = vals
    M.T[TRIU] = vals
    return M


def _gram_integrand_weighted(r):
    def f(z):
        p = psi_r(r, z)
        q = (1.0 + np.abs(p) ** 2) ** 2
        weight = 128.0 * (np.abs(z) ** 2 / q) / q
        w = closed_form_velocities(r, z)
        I = np.real(w[TRIU[0]] * np.conj(w[TRIU[1]]))
        return weight * I
    return f


def _gram_integrand_direct(alpha, r):
    def f(z):
        S, Ks = kernel_jets(alpha, z, r)
        V = np.array([K.val for K in Ks])
        dens = S.grad_sq()
        return dens * np.einsum("pcn,pcn->pn", V[TRIU[0]], V[TRIU[1]])
    return f


def _gram_integrand_gradients(alpha, r):
    def f(z):
        _, Ks = kernel_jets(alpha, z, r)
        X = np.array([K.dx for K in Ks])
        Y = np.array([K.dy for K in Ks])
        return (np.einsum("pcn,pcn->pn", X[TRIU[0]], X[TRIU[1]])
                + np.einsum("pcn,pcn->pn", Y[TRIU[0]], Y[TRIU[1]]))
    return f


def _is_alpha_r(alpha: ParamVec, r: float) -> bool:
    return alpha.alpha == alpha_r(r).alpha


def gram_matrix(alpha: ParamVec, r: float, s: QuadScheme, rtol: float = 1e-11,
                atol: float = 1e-12, jobs: int = 1, strict: bool = False) -> GramMatrix:
    """J_ij = int |grad S(Psi[alpha])|^2 K_i . K_j.

    At ``alpha == alpha_r(r)`` the integrand is the closed polynomial form
    128 (x^2 + y^2) I_ij / (1 + |psi_r|^2)^4; otherwise kernel jets are used.

    Parameters
    ----------
    alpha : ParamVec
    r : float
        Scale used in the r^{beta_i} normalisation.
    s : QuadScheme
        Initial quadrature layout (see :func:`~harmstab.quadrature.default_scheme`).
    rtol, atol : float
        Per-entry quadrature tolerance.

    Returns
    -------
    GramMatrix
        Symmetric entries with per-entry error estimates.
    """
    if _is_alpha_r(alpha, r):
        f, method = _gram_integrand_weighted(r), "weighted-closed-form"
    else:
        alpha.require_admissible()
        f, method = _gram_integrand_direct(alpha, r), "weighted-jets"
    res = integrate(f, s, rtol=rtol, atol=atol, jobs=jobs, strict=strict)
    return GramMatrix(_triu_to_full(res.value), _triu_to_full(res.err_est), float(r), alpha, method,
                      res.converged, res.n_evals)


def gram_via_gradients(alpha: ParamVec, r: float, s: QuadScheme, rtol: float = 1e-11,
                       atol: float = 1e-12, jobs: int = 1, strict: bool = False) -> GramMatrix:
    """J_ij = int grad K_i : grad K_j from the kernel jets."""
    alpha.require_admissible()
    res = integrate(_gram_integrand_gradients(alpha, r), s, rtol=rtol, atol=atol, jobs=jobs,
                    strict=strict)
    return GramMatrix(_triu_to_full(res.value), _triu_to_full(res.err_est), float(r), alpha,
                      "gradients", res.converged, res.n_evals)


# Entries (1-based) that vanish by the symmetries z -> -z and x <-> y.
ZERO_ENTRIES = (
    (1, 2), (1, 3), (1, 4), (1, 5), (1, 7), (1, 8), (1, 9), (2, 3), (2, 4), (2, 6),
    (2, 7), (2, 8), (2, 10), (3, 4), (3, 5), (3, 6), (3, 7), (3, 9), (3, 10), (4, 5),
    (4, 6), (4, 8), (4, 9), (4, 10), (5, 6), (5, 7), (5, 8), (5, 10), (6, 7), (6, 8),
    (6, 9), (7, 8), (7, 9), (7, 10), (8, 9), (8, 10), (9, 10),
)

# Block permutation (1-based): {1,10,6}, {2,9,5}, {3,8}, {4,7}.
BLOCKS = ((1, 10, 6), (2, 9, 5), (3, 8), (4, 7))
