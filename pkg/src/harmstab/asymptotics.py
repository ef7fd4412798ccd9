"""Large-r expansions of integrals of p(x, y, r) / (1 + |psi_r|^2)^l.

Polynomials are homogeneous in (x, y, r) with exact rational coefficients;
the power of r may be negative, so Laurent polynomials in r are allowed.
The three expansion formulas below share the evaluation points
``ONE = (1, 1, 1)`` and ``MINUS_ONE = (-1, -1, 1)``, the bubble centers
in units of r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import HypothesisViolated

ONE = (1, 1, 1)
MINUS_ONE = (-1, -1, 1)


class HomogPoly3:
    """sum c * x^i y^j r^k over monomials with a common degree i + j + k."""

    def __init__(self, terms=None):
        t = {}
        for (i, j, k), c in (terms or {}).items():
            c = Fraction(c)
            if c != 0:
                t[(int(i), int(j), int(k))] = t.get((i, j, k), Fraction(0)) + c
        self.terms = {m: c for m, c in t.items() if c != 0}
        degs = {sum(m) for m in self.terms}
        if len(degs) > 1:
            raise ValueError(f"monomials of mixed degree {sorted(degs)}")

    @classmethod
    def x(cls):
        return cls({(1, 0, 0): 1})

    @classmethod
    def y(cls):
        return cls({(0, 1, 0): 1})

    @classmethod
    def r(cls, power: int = 1):
        return cls({(0, 0, power): 1})

    @classmethod
    def const(cls, c):
        return cls({(0, 0, 0): c})

    @property
    def degree(self):
        """Homogeneity degree; None for the zero polynomial."""
        return sum(next(iter(self.terms))) if self.terms else None

    def is_zero(self):
        return not self.terms

    def __add__(self, other):
        other = _as_hp(other)
        t = dict(self.terms)
        for m, c in other.terms.items():
            t[m] = t.get(m, Fraction(0)) + c
        return HomogPoly3(t)

    __radd__ = __add__

    def __neg__(self):
        return HomogPoly3({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-_as_hp(other))

    def __rsub__(self, other):
        return _as_hp(other) - self

    def __mul__(self, other):
        if not isinstance(other, HomogPoly3):
            return HomogPoly3({m: c * Fraction(other) for m, c in self.terms.items()})
        t = {}
        for (a, b, c), u in self.terms.items():
            for (d, e, f), v in other.terms.items():
                key = (a + d, b + e, c + f)
                t[key] = t.get(key, Fraction(0)) + u * v
        return HomogPoly3(t)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = HomogPoly3.const(1)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        return isinstance(other, HomogPoly3) and self.terms == other.terms

    def __repr__(self):
        return f"HomogPoly3({self.terms!r})"

    def dx(self):
        return HomogPoly3({(i - 1, j, k): c * i for (i, j, k), c in self.terms.items() if i})

    def dy(self):
        return HomogPoly3({(i, j - 1, k): c * j for (i, j, k), c in self.terms.items() if j})

    def laplacian(self):
        return self.dx().dx() + self.dy().dy()

    def exact(self, x, y, r) -> Fraction:
        """Exact value at rational (x, y, r); r must be nonzero if any power is negative."""
        x, y, r = Fraction(x), Fraction(y), Fraction(r)
        return sum((c * x**i * y**j * r**k for (i, j, k), c in self.terms.items()), Fraction(0))

    def __call__(self, x, y, r):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape)
        for (i, j, k), c in self.terms.items():
            out = out + float(c) * x**i * y**j * float(r) ** k
        return out


def _as_hp(v) -> HomogPoly3:
    return v if isinstance(v, HomogPoly3) else HomogPoly3.const(v)


X, Y = HomogPoly3.x(), HomogPoly3.y()
RHO2 = X * X + Y * Y


@dataclass(frozen=True)
class AsymptoticPrediction:
    """leading * r^lead_exp + correction * r^corr_exp + O(r^remainder_order).

    ``leading`` and ``correction`` are the evaluated terms at the given r;
    ``lead_coeff`` and ``corr_coeff`` are exact multiples of pi.
    """

    leading: float
    correction: float
    remainder_order: float
    lead_coeff: Fraction
    corr_coeff: Fraction
    lead_exp: int
    corr_exp: int

    @property
    def value(self) -> float:
        return self.leading + self.correction


def _terms(p: HomogPoly3):
    """p, p_x, p_y and the x-y Laplacian at ONE and MINUS_ONE, exactly."""
    px, py, lap = p.dx(), p.dy(), p.laplacian()
    out = {}
    for tag, pt in (("+", ONE), ("-", MINUS_ONE)):
        out["p" + tag] = p.exact(*pt)
        out["px" + tag] = px.exact(*pt)
        out["py" + tag] = py.exact(*pt)
        out["lap" + tag] = lap.exact(*pt)
    return out


def _check(p: HomogPoly3, l: int, lmin: int, shift: Fraction):
    k = p.degree if not p.is_zero() else 0
    if l < lmin or not Fraction(l) > Fraction(k, 4) + shift:
        raise HypothesisViolated(f"expansion needs l >= {lmin} and l > k/4 + {shift}; got k={k}, l={l}")
    return k


def _prediction(lead, corr, k, r, rem):
    return AsymptoticPrediction(
        float(lead) * math.pi * r ** (k - 2),
        float(corr) * math.pi * r ** (k - 6),
        rem, lead, corr, k - 2, k - 6,
    )


def expand_plain(p: HomogPoly3, l: int, r: float) -> AsymptoticPrediction:
    """Expansion of int p / (1 + |psi_r|^2)^l up to O(r^{k-8}).

    Parameters
    ----------
    p : HomogPoly3
        Homogeneous of degree k in (x, y, r).
    l : int
        Power of the denominator; requires l >= 3 and l > k/4 + 1/2.
    r : float
        Scale at which the terms are evaluated.

    Returns
    -------
    AsymptoticPrediction
    """
    k = _check(p, l, 3, Fraction(1, 2))
    t = _terms(p)
    lead = Fraction(1, 8 * (l - 1)) * (t["p+"] + t["p-"])
    corr = (Fraction(1, 256 * (l - 1) * (l - 2)) * (t["lap+"] + t["lap-"])
            + Fraction(1, 128 * (l - 1) * (l - 2))
            * (-t["px+"] - t["py+"] + t["px-"] + t["py-"] + t["p+"] + t["p-"]))
    return _prediction(lead, corr, k, r, k - 8)


def expand_weighted(p: HomogPoly3, l: int, r: float) -> AsymptoticPrediction:
    """Expansion of int p |psi_r|^2 / (1 + |psi_r|^2)^l; needs l >= 4, l > k/4 + 3/2."""
    k = _check(p, l, 4, Fraction(3, 2))
    t = _terms(p)
    lead = Fraction(1, 8 * (l - 1) * (l - 2)) * (t["p+"] + t["p-"])
    corr = (Fraction(1, 128 * (l - 1) * (l - 2) * (l - 3)) * (t["lap+"] + t["lap-"])
            + Fraction(1, 64 * (l - 1) * (l - 2) * (l - 3))
            * (-t["px+"] - t["py+"] + t["px-"] + t["py-"] + t["p+"] + t["p-"]))
    return _prediction(lead, corr, k, r, k - 8)


def expand_centered_zero(p: HomogPoly3, l: int, r: float) -> AsymptoticPrediction:
    """Expansion of int p / (1 + |psi_r|^2)^l when p vanishes at both bubble centers.

    The leading term is of order r^{k-6} and the remainder O(r^{k-17/2}).
    """
    k = _check(p, l, 3, Fraction(1, 2))
    t = _terms(p)
    if t["p+"] != 0 or t["p-"] != 0:
        raise HypothesisViolated("p must vanish at (1, 1, 1) and (-1, -1, 1)")
    corr = Fraction(1, 256 * (l - 1) * (l - 2)) * (
        t["lap+"] + t["lap-"] - 2 * t["px+"] - 2 * t["py+"] + 2 * t["px-"] + 2 * t["py-"])
    return _prediction(Fraction(0), corr, k, r, Fraction(2 * k - 17, 2))


# Integrands of the Gram entries at alpha_r: 128 (x^2 + y^2) I_ij / (1 + |psi_r|^2)^4,
# split as (kind, p) with the weight folded into p.
def _entry_table():
    R = HomogPoly3.r
    w = 128 * RHO2
    xy = X * Y
    t = {}
    t[(1, 1)] = t[(2, 2)] = ("weighted", w)
    t[(1, 10)] = ("weighted", w * (-2) * xy * R(-2))
    t[(2, 9)] = ("weighted", w * 2 * xy * R(-2))
    t[(1, 6)] = ("centered", w * 2 * (xy - R(2)))
    t[(2, 5)] = ("centered", w * 2 * (R(2) - xy))
    t[(3, 3)] = t[(4, 4)] = ("plain", w * RHO2 * R(-2))
    t[(3, 8)] = ("centered", w * 2 * (R(2) - xy) * RHO2 * R(-2))
    t[(4, 7)] = ("centered", w * (-2) * (R(2) - xy) * RHO2 * R(-2))
    t[(5, 5)] = t[(6, 6)] = ("plain", w)
    q = X**4 + 4 * R(2) * xy - 6 * X * X * Y * Y + Y**4
    t[(5, 9)] = t[(6, 10)] = ("centered", w * q * R(-2))
    t[(7, 7)] = t[(8, 8)] = ("weighted", w * RHO2 * R(-2))
    t[(9, 9)] = t[(10, 10)] = ("weighted", w * RHO2 * RHO2 * R(-4))
    return t


ENTRY_TABLE = _entry_table()
_EXPANDERS = {"plain": expand_plain, "weighted": expand_weighted, "centered": expand_centered_zero}


def predict_entry(i: int, j: int, r: float) -> AsymptoticPrediction:
    """Expansion of the Gram entry J_ij at alpha_r (1-based, i <= j) with l = 4."""
    kind, p = ENTRY_TABLE[(min(i, j), max(i, j))]
    return _EXPANDERS[kind](p, 4, r)


@dataclass(frozen=True)
class BlockPrediction:
    """Leading block form of J^r in units of 16 pi / 3, and det J^r."""

    A1: np.ndarray
    A2: np.ndarray
    A3: np.ndarray
    A4: np.ndarray
    det: float
    det_r8_limit: float

    def full(self) -> np.ndarray:
        """10x10 matrix in the original index order, in absolute units."""
        from .kernel_basis import BLOCKS

        J = np.zeros((10, 10))
        for blk, A in zip(BLOCKS, (self.A1, self.A2, self.A3, self.A4)):
            idx = [b - 1 for b in blk]
            J[np.ix_(idx, idx)] = A * (16 * math.pi / 3)
        return J


DET_R8_LIMIT = 2.0**60 * math.pi**10 / 3.0**10


def predicted_blocks(r: float) -> BlockPrediction:
    """Blocks for the orderings (1,10,6), (2,9,5), (3,8), (4,7).

    The O(r^{-9/2}) couplings J_16, J_25, J_59 and J_6,10 are set to 0.
    """
    s = r**-4
    l1, l2, l3 = 8 + 0.25 * s, 4 + 0.5 * s, 8 + 4 * s
    A1 = np.array([[2.0, -4.0, 0.0], [-4.0, l3, 0.0], [0.0, 0.0, 4.0]])
    A2 = np.array([[2.0, 4.0, 0.0], [4.0, l3, 0.0], [0.0, 0.0, 4.0]])
    A3 = np.array([[l1, -r**-2], [-r**-2, l2]])
    A4 = np.array([[l1, r**-2], [r**-2, l2]])
    c = 16 * math.pi / 3
    # det A1 = det A2 = 4 (2 l3 - 16) = 32 r^-4, written out to avoid cancellation
    det = c**10 * (32 * s) ** 2 * (l1 * l2 - s) ** 2
    return BlockPrediction(A1, A2, A3, A4, float(det), DET_R8_LIMIT)


@dataclass(frozen=True)
class EntryCheck:
    i: int
    j: int
    quadrature: float
    prediction: float
    diff: float
    allowed: float
    quad_err: float

    @property
    def passed(self) -> bool:
        return self.diff <= self.allowed


def oracle_check(r: float, ref_r: float = 5.0, slack: float = 4.0, jobs: int = 1,
                 gram=None, ref_gram=None):
    """Compare quadrature Gram entries at alpha_r with :func:`predict_entry`.

    The constant of the O(r^-6) remainder is fitted at ``ref_r`` as
    C = |J_ij(ref_r) - prediction| * ref_r^6, and at ``r`` the difference
    must stay below ``slack * C * r^-6`` plus a quadrature floor of
    max(10 * err_ij, 1e-12 * max diag). Precomputed Gram matrices may be
    passed to avoid recomputation.

    Returns
    -------
    list of EntryCheck
        One row per entry of :data:`ENTRY_TABLE`, in sorted order.
    """
    from .kernel_basis import alpha_r, gram_matrix
    from .quadrature import default_scheme

    if gram is None:
        gram = gram_matrix(alpha_r(r), r, default_scheme(r), jobs=jobs)
    if ref_gram is None:
        ref_gram = gram_matrix(alpha_r(ref_r), ref_r, default_scheme(ref_r), jobs=jobs)
    rows = []
    for (i, j) in sorted(ENTRY_TABLE):
        d_ref = abs(ref_gram[i, j] - predict_entry(i, j, ref_r).value)
        C = d_ref * ref_r**6
        pred = predict_entry(i, j, r).value
        q = gram[i, j]
        err = float(gram.err[i - 1, j - 1])
        floor = max(10 * err, 1e-12 * gram.max_diag)
        rows.append(EntryCheck(i, j, q, pred, abs(q - pred), slack * C * r**-6 + floor, err))
    return rows
