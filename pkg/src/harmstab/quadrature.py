"""Adaptive tensor Gauss-Legendre cubature over the whole plane.

The plane is covered by patches, each a parameter rectangle mapped into
the plane by a chart:

* ``polar``    z = c + rho e^{i theta}, Jacobian rho;
* ``exterior`` z = c + (rho0 / t) e^{i theta} for rho >= rho0, clipped to
  the half-plane {<z, n> >= 0} when a finite distance ``h`` from ``c`` to
  the bounding line is given (t = t_min + (1 - t_min) tau);
* ``rect``     z = a + i b, Jacobian 1.

Every patch is integrated with an n-point and a 2n-point tensor rule; the
2n-point value is reported and |Q_n - Q_2n| is its error estimate. Patches
with a large share of the error are split 2x2 until the tolerance is met.
All sums are formed per patch with ``np.sum`` and then combined with
``math.fsum`` in fixed patch order, so results do not depend on the number
of worker threads.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .errors import NonFiniteSample, ToleranceNotMet

DEFAULT_ORDER = 16
DEFAULT_RTOL = 1e-10
DEFAULT_MAX_DEPTH = 12
MAX_PATCHES = 60000
CHUNK_PATCHES = 48


@dataclass(frozen=True)
class Patch:
    chart: str
    a0: float
    a1: float
    b0: float
    b1: float
    center: complex = 0j
    rho0: float = 0.0
    normal: float = 0.0
    h: float = math.inf
    depth: int = 0

    def children(self):
        am = 0.5 * (self.a0 + self.a1)
        bm = 0.5 * (self.b0 + self.b1)
        d = self.depth + 1
        return [
            replace(self, a0=self.a0, a1=am, b0=self.b0, b1=bm, depth=d),
            replace(self, a0=am, a1=self.a1, b0=self.b0, b1=bm, depth=d),
            replace(self, a0=self.a0, a1=am, b0=bm, b1=self.b1, depth=d),
            replace(self, a0=am, a1=self.a1, b0=bm, b1=self.b1, depth=d),
        ]

    def map(self, a, b):
        """Plane points and area Jacobian for parameter arrays ``a, b``."""
        if self.chart == "polar":
            return self.center + a * np.exp(1j * b), a
        if self.chart == "exterior":
            if math.isfinite(self.h):
                kappa = np.cos(b - self.normal)
                tmin = np.maximum(0.0, -kappa * self.rho0 / self.h)
            else:
                tmin = np.zeros_like(b)
            t = tmin + (1.0 - tmin) * a
            rho = self.rho0 / t
            return self.center + rho * np.exp(1j * b), self.rho0 * self.rho0 * (1.0 - tmin) / t**3
        if self.chart == "rect":
            return a + 1j * b, np.ones_like(a)
        raise ValueError(f"unknown chart {self.chart!r}")

    def to_dict(self):
        d = {"chart": self.chart, "a": [self.a0, self.a1], "b": [self.b0, self.b1], "depth": self.depth}
        if self.chart != "rect":
            d["center"] = [self.center.real, self.center.imag]
        if self.chart == "exterior":
            d.update(rho0=self.rho0, normal=self.normal, h=None if math.isinf(self.h) else self.h)
        return d


@dataclass
class QuadScheme:
    patches: list
    order: int = DEFAULT_ORDER
    target_rel_tol: float = DEFAULT_RTOL
    max_refinement_depth: int = DEFAULT_MAX_DEPTH
    meta: dict = field(default_factory=dict)

    def copy(self, patches=None):
        return QuadScheme(list(self.patches if patches is None else patches), self.order,
                          self.target_rel_tol, self.max_refinement_depth, dict(self.meta))

    def to_json(self) -> str:
        return json.dumps({
            "order": self.order,
            "target_rel_tol": self.target_rel_tol,
            "max_refinement_depth": self.max_refinement_depth,
            "meta": self.meta,
            "patches": [p.to_dict() for p in self.patches],
        }, indent=1)


@dataclass
class QuadResult:
    value: object
    err_est: object
    converged: bool
    scheme: QuadScheme
    n_evals: int
    abs_integral: object = None

    def __iter__(self):
        yield self.value
        yield self.err_est

    def __float__(self):
        return float(self.value)

    def scaled(self, k: float) -> "QuadResult":
        return QuadResult(self.value * k, self.err_est * abs(k), self.converged, self.scheme,
                          self.n_evals, None if self.abs_integral is None else self.abs_integral * abs(k))


# ---------------------------------------------------------------------------
# scheme construction

def _radial_breaks(r: float, core: float, extra=()):
    fixed = sorted(set(float(e) for e in extra) | {float(r)})
    geo = []
    x = core
    while x < r:
        # drop geometric breaks crowding a kink circle
        if all(abs(x - e) > 0.25 * e for e in fixed):
            geo.append(x)
        x *= 2.0
    return [0.0] + sorted(set(geo) | set(fixed))


def _bubble_patches(center: complex, rho0: float, normal: float, h: float, core: float,
                    kinks=(), n_theta: int = 4, exterior_breaks=(0.0, 0.25, 0.5, 1.0)):
    patches = []
    radial = _radial_breaks(rho0, core, tuple(k for k in kinks if 0 < k < rho0))
    th = [normal - math.pi / 2 + k * (2 * math.pi / n_theta) for k in range(n_theta + 1)]
    for i in range(len(radial) - 1):
        for j in range(n_theta):
            patches.append(Patch("polar", radial[i], radial[i + 1], th[j], th[j + 1], center=complex(center)))
    for i in range(len(exterior_breaks) - 1):
        for j in range(n_theta):
            patches.append(Patch("exterior", exterior_breaks[i], exterior_breaks[i + 1], th[j], th[j + 1],
                                 center=complex(center), rho0=rho0, normal=normal, h=h))
    return patches


def default_scheme(r: float, order: int = DEFAULT_ORDER, rtol: float = DEFAULT_RTOL,
                   max_depth: int = DEFAULT_MAX_DEPTH) -> QuadScheme:
    """Patch layout adapted to two bubbles at +-(r + i r).

    The plane is cut along x + y = 0. Each half contains polar rings around
    its bubble center out to radius r, graded geometrically from 1e-4/r
    and with the circles of radius sqrt(r) and r as ring boundaries, plus
    an exterior chart for the rest of the half-plane.

    Parameters
    ----------
    r : float
        Construction scale, r >= 1.
    order : int
        Base Gauss-Legendre order n per direction (the estimate uses 2n).
    rtol : float
        Default relative tolerance used by :func:`integrate`.
    max_depth : int
        Maximal number of 2x2 splits of an initial patch.

    Returns
    -------
    QuadScheme
    """
    if r < 1:
        raise ValueError("default_scheme needs r >= 1")
    c = complex(r, r)
    h = math.sqrt(2.0) * r
    kinks = (math.sqrt(r), float(r))
    patches = []
    for cen, nrm in ((c, math.pi / 4), (-c, -3 * math.pi / 4)):
        patches += _bubble_patches(cen, float(r), nrm, h, 1e-4 / r, kinks)
    return QuadScheme(patches, order, rtol, max_depth, {"kind": "two-bubble", "r": float(r)})


def centered_scheme(center: complex = 0j, scale: float = 1.0, order: int = DEFAULT_ORDER,
                    rtol: float = DEFAULT_RTOL, max_depth: int = DEFAULT_MAX_DEPTH) -> QuadScheme:
    """Polar rings around one point out to ``4 * scale`` plus the full exterior."""
    rho0 = 4.0 * scale
    patches = _bubble_patches(center, rho0, 0.0, math.inf, 1e-4 * scale)
    return QuadScheme(patches, order, rtol, max_depth,
                      {"kind": "centered", "center": [complex(center).real, complex(center).imag],
                       "scale": float(scale)})


def rect_scheme(x0, x1, y0, y1, order: int = DEFAULT_ORDER, rtol: float = DEFAULT_RTOL,
                max_depth: int = DEFAULT_MAX_DEPTH) -> QuadScheme:
    return QuadScheme([Patch("rect", x0, x1, y0, y1)], order, rtol, max_depth, {"kind": "rect"})


def scheme_for_map(m, order: int = DEFAULT_ORDER, rtol: float = DEFAULT_RTOL) -> QuadScheme:
    """A centered scheme sized by the roots of numerator and denominator."""
    pts = []
    for poly in (m.p, m.q):
        if poly.degree >= 1:
            pts.extend(np.roots(poly.coeffs[::-1]))
    scale = max([1.0] + [abs(z) for z in pts])
    return centered_scheme(0j, scale, order, rtol)


# ---------------------------------------------------------------------------
# rules and evaluation

@lru_cache(maxsize=None)
def _tensor_rule(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    X, Y = np.meshgrid(x, x, indexing="ij")
    W = np.outer(w, w)
    return X.ravel(), Y.ravel(), W.ravel()


def _patch_nodes(p: Patch, n: int):
    x, y, w = _tensor_rule(n)
    ha, hb = 0.5 * (p.a1 - p.a0), 0.5 * (p.b1 - p.b0)
    a = p.a0 + ha * (x + 1.0)
    b = p.b0 + hb * (y + 1.0)
    z, jac = p.map(a, b)
    return z, w * jac * (ha * hb)


def _eval_chunk(f, patches, order):
    """Per-patch (Q_n, Q_2n, |f| integral) arrays with component axis first."""
    zs, ws, sizes = [], [], []
    for p in patches:
        for n in (order, 2 * order):
            z, w = _patch_nodes(p, n)
            zs.append(z)
            ws.append(w)
            sizes.append(z.size)
    z = np.concatenate(zs)
    w = np.concatenate(ws)
    vals = np.asarray(f(z), dtype=float)
    scalar = vals.ndim == 1
    vals = vals.reshape(1, -1) if scalar else vals.reshape(vals.shape[0], -1)
    bad = ~np.isfinite(vals)
    if bad.any():
        k = int(np.flatnonzero(bad.any(axis=0))[0])
        raise NonFiniteSample(complex(z[k]))
    fw = vals * w
    afw = np.abs(fw)
    m = vals.shape[0]
    qn = np.empty((len(patches), m))
    q2 = np.empty((len(patches), m))
    qa = np.empty((len(patches), m))
    pos = 0
    for i in range(len(patches)):
        s1, s2 = sizes[2 * i], sizes[2 * i + 1]
        qn[i] = np.sum(fw[:, pos:pos + s1], axis=1)
        pos += s1
        q2[i] = np.sum(fw[:, pos:pos + s2], axis=1)
        qa[i] = np.sum(afw[:, pos:pos + s2], axis=1)
        pos += s2
    return qn, q2, qa, z.size, scalar


def _fsum_cols(a):
    return np.array([math.fsum(a[:, c]) for c in range(a.shape[1])])


def integrate(f, s: QuadScheme, rtol: float | None = None, atol: float = 0.0,
              strict: bool = False, jobs: int = 1, max_patches: int = MAX_PATCHES) -> QuadResult:
    """Adaptively integrate ``f`` over the plane.

    Parameters
    ----------
    f : callable
        Maps a 1-D complex array of points to values of shape ``(n,)`` or,
        for several integrands at once, ``(m, n)``.
    s : QuadScheme
        Initial patch layout; it is not modified.
    rtol, atol : float
        Component ``c`` is accepted once its error estimate is at most
        ``max(atol, rtol * integral of |f_c|)``.
    strict : bool
        Raise :class:`ToleranceNotMet` instead of returning an
        unconverged result.
    jobs : int
        Worker threads used for integrand evaluation; the result is
        independent of this number.

    Returns
    -------
    QuadResult
        ``value`` and ``err_est`` (floats or arrays), the refined scheme,
        and the number of integrand evaluations.
    """
    rtol = s.target_rel_tol if rtol is None else rtol
    patches = list(s.patches)
    cache: dict = {}
    n_evals = 0
    scalar = True
    pool = ThreadPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        while True:
            todo = [p for p in patches if p not in cache]
            chunks = [todo[i:i + CHUNK_PATCHES] for i in range(0, len(todo), CHUNK_PATCHES)]
            if pool is None:
                outs = [_eval_chunk(f, ch, s.order) for ch in chunks]
            else:
                outs = list(pool.map(lambda ch: _eval_chunk(f, ch, s.order), chunks))
            for ch, (qn, q2, qa, ne, sc) in zip(chunks, outs):
                scalar = sc
                n_evals += ne
                for k, p in enumerate(ch):
                    cache[p] = (qn[k], q2[k], qa[k])
            QN = np.array([cache[p][0] for p in patches])
            Q2 = np.array([cache[p][1] for p in patches])
            QA = np.array([cache[p][2] for p in patches])
            E = np.abs(QN - Q2)
            value = _fsum_cols(Q2)
            err = _fsum_cols(E)
            absint = _fsum_cols(QA)
            tol = np.maximum(atol, rtol * absint)
            converged = bool(np.all(err <= tol))
            if converged:
                break
            share = np.max(E / np.where(tol > 0, tol, np.inf), axis=1)
            share = np.where(np.isfinite(share), share, 0.0)
            if not np.any(tol > 0):
                share = np.max(E, axis=1)
            limit = 1.0 / len(patches)
            mark = [(sh > limit and p.depth < s.max_refinement_depth) for p, sh in zip(patches, share)]
            if not any(mark):
                # fall back to the worst refinable patch
                order_idx = np.argsort(-share, kind="stable")
                k = next((int(i) for i in order_idx if patches[i].depth < s.max_refinement_depth
                          and share[i] > 0), None)
                if k is None:
                    break
                mark[k] = True
            n_new = len(patches) + 3 * sum(mark)
            if n_new > max_patches:
                break
            new = []
            for p, mk in zip(patches, mark):
                if mk:
                    new.extend(p.children())
                else:
                    new.append(p)
            patches = new
    finally:
        if pool is not None:
            pool.shutdown()
    out_scheme = s.copy(patches)
    if scalar:
        res = QuadResult(float(value[0]), float(err[0]), converged, out_scheme, n_evals, float(absint[0]))
    else:
        res = QuadResult(value, err, converged, out_scheme, n_evals, absint)
    if strict and not converged:
        raise ToleranceNotMet(res)
    return res


# ---------------------------------------------------------------------------
# energy and degree

def energy(u, s: QuadScheme, **kw) -> QuadResult:
    """Dirichlet energy 1/2 int |grad u|^2 of a field with a ``jet`` method."""
    res = integrate(lambda z: u.jet(z).grad_sq(), s, **kw)
    return res.scaled(0.5)


def degree(u, s: QuadScheme, **kw) -> QuadResult:
    """(1/4 pi) int u . (u_y x u_x); the caller rounds to an integer."""
    from .sphere_fields import _degree_density_from_jet

    res = integrate(lambda z: _degree_density_from_jet(u.jet(z)), s, **kw)
    return res.scaled(1.0 / (4.0 * math.pi))


def energy_and_degree(u, s: QuadScheme, **kw):
    """Both integrals from one pass over the nodes."""
    from .sphere_fields import _degree_density_from_jet

    def f(z):
        J = u.jet(z)
        return np.stack([J.grad_sq(), _degree_density_from_jet(J)])

    res = integrate(f, s, **kw)
    e = QuadResult(0.5 * res.value[0], 0.5 * res.err_est[0], res.converged, res.scheme, res.n_evals)
    d = QuadResult(res.value[1] / (4 * math.pi), res.err_est[1] / (4 * math.pi), res.converged,
                   res.scheme, res.n_evals)
    return e, d
