"""Complex polynomials, rational maps and Moebius transformations.

Polynomials store complex coefficients in ascending degree order. A
rational map ``p/q`` additionally carries an orientation; anti-holomorphic
maps are evaluated at the conjugate of the argument, ``p(conj z)/q(conj z)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateMoebius, ReducibleMap, ZeroNumerator
from .jets import Jet

GCD_TOL = 1e-10


class Orientation(str, enum.Enum):
    HOLO = "holo"
    ANTI = "anti"


@dataclass(frozen=True)
class ComplexPoly:
    """Polynomial sum_k coeffs[k] z^k; trailing exact zeros are dropped."""

    coeffs: tuple

    def __init__(self, coeffs: Sequence[complex] = ()):
        c = [complex(x) for x in coeffs]
        while c and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c))

    @classmethod
    def from_roots(cls, roots, lead=1.0):
        c = np.array([complex(lead)])
        for r in roots:
            c = np.convolve(c, [-complex(r), 1.0])
        return cls(c)

    @property
    def degree(self) -> int:
        """Degree; -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def leading(self) -> complex:
        if not self.coeffs:
            raise ZeroNumerator("zero polynomial has no leading coefficient")
        return self.coeffs[-1]

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for a in reversed(self.coeffs):
            out = out * z + a
        return out

    def derivative(self) -> "ComplexPoly":
        return ComplexPoly([k * a for k, a in enumerate(self.coeffs)][1:])

    def conj(self) -> "ComplexPoly":
        return ComplexPoly([np.conj(a) for a in self.coeffs])

    def trimmed(self, rtol=1e-13) -> "ComplexPoly":
        """Drop trailing coefficients below ``rtol`` times the largest modulus."""
        if not self.coeffs:
            return self
        c = list(self.coeffs)
        scale = max(abs(a) for a in c)
        while c and abs(c[-1]) <= rtol * scale:
            c.pop()
        return ComplexPoly(c)

    def __add__(self, other):
        other = _as_poly(other)
        n = max(len(self.coeffs), len(other.coeffs))
        a = np.zeros(n, complex)
        a[: len(self.coeffs)] += self.coeffs
        a[: len(other.coeffs)] += other.coeffs
        return ComplexPoly(a)

    __radd__ = __add__

    def __neg__(self):
        return ComplexPoly([-a for a in self.coeffs])

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) - self

    def __mul__(self, other):
        other = _as_poly(other)
        if self.is_zero() or other.is_zero():
            return ComplexPoly()
        return ComplexPoly(np.convolve(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = ComplexPoly([1.0])
        for _ in range(n):
            out = out * self
        return out

    def to_json(self):
        return [[a.real, a.imag] for a in self.coeffs]

    @classmethod
    def from_json(cls, data):
        return cls([complex(re, im) for re, im in data])


def _as_poly(x) -> ComplexPoly:
    return x if isinstance(x, ComplexPoly) else ComplexPoly([x])


def poly_eval_jet(p: ComplexPoly, z, orientation=Orientation.HOLO) -> Jet:
    """Value and plane partials of ``p`` at ``z``.

    For the holomorphic orientation ``d/dx p = p'(z)`` and ``d/dy p = i p'(z)``;
    the anti-holomorphic orientation evaluates ``p(conj z)`` with
    ``d/dy = -i p'(conj z)``.
    """
    z = np.asarray(z, dtype=complex)
    w = np.conj(z) if Orientation(orientation) is Orientation.ANTI else z
    val = np.zeros_like(w)
    der = np.zeros_like(w)
    for a in reversed(p.coeffs):
        der = der * w + val
        val = val * w + a
    if Orientation(orientation) is Orientation.ANTI:
        return Jet(val, der, -1j * der)
    return Jet(val, der, 1j * der)


def _normalized(c):
    c = np.asarray(c, dtype=complex)
    s = np.max(np.abs(c)) if c.size else 0.0
    return c / s if s > 0 else c


def _trim_top(c, thresh):
    n = len(c)
    while n and abs(c[n - 1]) <= thresh:
        n -= 1
    return c[:n]


def gcd_degree(p: ComplexPoly, q: ComplexPoly, tol: float = GCD_TOL) -> int:
    """Degree of the numerical gcd of ``p`` and ``q``.

    Runs the Euclidean remainder sequence on max-norm normalized
    coefficient vectors; remainder coefficients with modulus at most
    ``tol`` are treated as zero.
    """
    a = _trim_top(_normalized(p.coeffs), tol)
    b = _trim_top(_normalized(q.coeffs), tol)
    if a.size == 0 and b.size == 0:
        raise ValueError("gcd of two zero polynomials is undefined")
    if len(a) < len(b):
        a, b = b, a
    while b.size:
        if len(b) == 1:
            return 0
        # np.polydiv works with descending coefficients
        _, rem = np.polydiv(a[::-1], b[::-1])
        rem = np.atleast_1d(rem)[::-1]
        rem = _trim_top(rem, tol * max(1.0, np.max(np.abs(a))))
        a, b = b, _trim_top(_normalized(rem), tol)
    return len(a) - 1


@dataclass(frozen=True)
class RationalMap:
    """Irreducible pair (p, q) with an orientation; a harmonic map via its lift."""

    p: ComplexPoly
    q: ComplexPoly
    orientation: Orientation = Orientation.HOLO

    def __post_init__(self):
        if not isinstance(self.p, ComplexPoly):
            object.__setattr__(self, "p", ComplexPoly(self.p))
        if not isinstance(self.q, ComplexPoly):
            object.__setattr__(self, "q", ComplexPoly(self.q))
        object.__setattr__(self, "orientation", Orientation(self.orientation))
        if self.q.is_zero():
            raise ValueError("denominator is identically zero")
        if not self.p.is_zero() and gcd_degree(self.p, self.q) > 0:
            raise ReducibleMap(f"p and q share a common factor: {self.p}, {self.q}")

    @property
    def degree(self) -> int:
        d = max(self.p.degree, self.q.degree, 0)
        return d if self.orientation is Orientation.HOLO else -d

    def _arg(self, z):
        z = np.asarray(z, dtype=complex)
        return np.conj(z) if self.orientation is Orientation.ANTI else z

    def __call__(self, z):
        w = self._arg(z)
        return self.p(w) / self.q(w)

    def to_json(self):
        return {"p": self.p.to_json(), "q": self.q.to_json(), "orientation": self.orientation.value}

    @classmethod
    def from_json(cls, data):
        return cls(
            ComplexPoly.from_json(data["p"]),
            ComplexPoly.from_json(data["q"]),
            Orientation(data.get("orientation", "holo")),
        )


def normalize_monic(m: RationalMap) -> RationalMap:
    if m.p.is_zero():
        raise ZeroNumerator("cannot normalize a map with zero numerator")
    lead = m.p.leading
    return RationalMap(
        ComplexPoly([a / lead for a in m.p.coeffs]),
        ComplexPoly([a / lead for a in m.q.coeffs]),
        m.orientation,
    )


def coeff_distance(m1: RationalMap, m2: RationalMap) -> float:
    """Max-modulus coefficient distance between monic normal forms."""
    a, b = normalize_monic(m1), normalize_monic(m2)
    out = 0.0
    for x, y in ((a.p, b.p), (a.q, b.q)):
        n = max(len(x.coeffs), len(y.coeffs))
        u = np.zeros(n, complex)
        v = np.zeros(n, complex)
        u[: len(x.coeffs)] = x.coeffs
        v[: len(y.coeffs)] = y.coeffs
        if n:
            out = max(out, float(np.max(np.abs(u - v))))
    return out


@dataclass(frozen=True)
class Moebius:
    """z -> (a z + b) / (c z + d)."""

    a: complex
    b: complex
    c: complex
    d: complex
    tol: float = 1e-12

    def __post_init__(self):
        scale = max(abs(self.a), abs(self.b), abs(self.c), abs(self.d))
        if scale == 0 or abs(self.a * self.d - self.b * self.c) <= self.tol * scale**2:
            raise DegenerateMoebius(f"ad - bc vanishes for {self}")

    @classmethod
    def identity(cls):
        return cls(1, 0, 0, 1)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return (self.a * z + self.b) / (self.c * z + self.d)

    def compose(self, other: "Moebius") -> "Moebius":
        """The map z -> self(other(z))."""
        return Moebius(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> "Moebius":
        return Moebius(self.d, -self.b, -self.c, self.a)

    def conj(self) -> "Moebius":
        return Moebius(*(np.conj(x) for x in (self.a, self.b, self.c, self.d)))


def compose_moebius(m: RationalMap, F: Moebius) -> RationalMap:
    """Rational map representing ``m(F(z))``, cleared of denominators, monic."""
    if m.orientation is Orientation.ANTI:
        # conj(F(z)) = conj(F)(conj z)
        F = F.conj()
    num = ComplexPoly([F.b, F.a])
    den = ComplexPoly([F.d, F.c])
    n = max(m.p.degree, m.q.degree, 0)

    def clear(poly):
        out = ComplexPoly()
        for k, a in enumerate(poly.coeffs):
            out = out + a * num**k * den ** (n - k)
        return out

    P, Q = clear(m.p), clear(m.q)
    scale = max(max((abs(x) for x in P.coeffs), default=0.0), max(abs(x) for x in Q.coeffs))
    P = _trim_abs(P, 1e-13 * scale)
    Q = _trim_abs(Q, 1e-13 * scale)
    return normalize_monic(RationalMap(P, Q, m.orientation))


def _trim_abs(p: ComplexPoly, thresh: float) -> ComplexPoly:
    c = list(p.coeffs)
    while c and abs(c[-1]) <= thresh:
        c.pop()
    return ComplexPoly(c)
