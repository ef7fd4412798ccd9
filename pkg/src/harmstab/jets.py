"""First-order forward-mode jets in the two plane directions.

A :class:`Jet` carries a value together with its partial derivatives in
``x`` and ``y``. All three parts are numpy arrays (or scalars) that
broadcast elementwise, so a single jet usually holds a field sampled at
many quadrature nodes at once. Vector-valued fields put the component
axis first, e.g. ``val.shape == (3, n)``.
"""

from __future__ import annotations

import numpy as np


class Jet:
    __slots__ = ("val", "dx", "dy")

    def __init__(self, val, dx=None, dy=None):
        self.val = val
        self.dx = np.zeros_like(val) if dx is None else dx
        self.dy = np.zeros_like(val) if dy is None else dy

    @classmethod
    def constant(cls, val):
        val = np.asarray(val)
        return cls(val, np.zeros_like(val), np.zeros_like(val))

    @classmethod
    def coordinate_z(cls, z):
        """The identity map z -> z as a complex jet (dz/dx = 1, dz/dy = i)."""
        z = np.asarray(z, dtype=complex)
        return cls(z, np.ones_like(z), np.full_like(z, 1j))

    # -- arithmetic -----------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val + other.val, self.dx + other.dx, self.dy + other.dy)
        return Jet(self.val + other, self.dx, self.dy)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val - other.val, self.dx - other.dx, self.dy - other.dy)
        return Jet(self.val - other, self.dx, self.dy)

    def __rsub__(self, other):
        return Jet(other - self.val, -self.dx, -self.dy)

    def __neg__(self):
        return Jet(-self.val, -self.dx, -self.dy)

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = self.val, other.val
            return Jet(a * b, self.dx * b + a * other.dx, self.dy * b + a * other.dy)
        return Jet(self.val * other, self.dx * other, self.dy * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return Jet(self.val / other, self.dx / other, self.dy / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def reciprocal(self):
        inv = 1.0 / self.val
        inv2 = -inv * inv
        return Jet(inv, self.dx * inv2, self.dy * inv2)

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers are supported")
        out = Jet.constant(np.ones_like(self.val))
        for _ in range(n):
            out = out * self
        return out

    # -- complex helpers ------------------------------------------------
    def conj(self):
        return Jet(np.conj(self.val), np.conj(self.dx), np.conj(self.dy))

    @property
    def real(self):
        return Jet(np.real(self.val), np.real(self.dx), np.real(self.dy))

    @property
    def imag(self):
        return Jet(np.imag(self.val), np.imag(self.dx), np.imag(self.dy))

    def abs2(self):
        """|f|^2 for a complex jet, as a real jet."""
        v = self.val
        vc = np.conj(v)
        return Jet(
            np.real(v * vc),
            2.0 * np.real(vc * self.dx),
            2.0 * np.real(vc * self.dy),
        )

    def sqrt(self):
        s = np.sqrt(self.val)
        h = 0.5 / s
        return Jet(s, self.dx * h, self.dy * h)

    # -- vector helpers -------------------------------------------------
    def __getitem__(self, idx):
        return Jet(self.val[idx], self.dx[idx], self.dy[idx])

    def grad_sq(self):
        """Sum of squared partials, summed over a leading component axis if present."""
        g = np.abs(self.dx) ** 2 + np.abs(self.dy) ** 2
        return g.sum(axis=0) if g.ndim > 1 else g

    def __repr__(self):
        return f"Jet(val={self.val!r}, dx={self.dx!r}, dy={self.dy!r})"


def stack(jets):
    return Jet(
        np.stack([j.val for j in jets]),
        np.stack([j.dx for j in jets]),
        np.stack([j.dy for j in jets]),
    )


def dot(a: Jet, b: Jet) -> Jet:
    """Componentwise dot product of two vector jets (component axis 0)."""
    p = a * b
    return Jet(p.val.sum(axis=0), p.dx.sum(axis=0), p.dy.sum(axis=0))


def cross(a: Jet, b: Jet) -> Jet:
    comps = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
    return stack(comps)


def grad_inner(a: Jet, b: Jet):
    """Pointwise ``grad a : grad b`` for vector jets (plain array)."""
    g = a.dx * b.dx + a.dy * b.dy
    return g.sum(axis=0) if g.ndim > 1 else g


def vdot(a, b):
    """Pointwise dot product of plain arrays with component axis 0."""
    return (a * b).sum(axis=0)
