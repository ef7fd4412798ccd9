"""Projection of a field onto the degree-2 harmonic family.

Minimizes dist^2(alpha) = int |grad(u - S(Psi[alpha]))|^2 by Gauss-Newton in
the scaled chart of :func:`~harmstab.kernel_basis.apply_step`, where moving
along coordinate i changes S(Psi) by K_i. With

    g_i = int grad(u - Phi_alpha) : grad K_i[alpha],   J = Gram[alpha],

the step is ds = J^{-1} g, halved until dist^2 does not increase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NotConverged, SingularModel
from .jets import Jet
from .kernel_basis import TRIU, FamilyField, ParamVec, apply_step, kernel_jets, scaled_difference
from .quadrature import QuadScheme, integrate
from .sphere_fields import PerturbedField, SphereField, _bogomolny_from_jet, project_tangent

GRAD_TOL = 1e-9
STEP_TOL = 1e-9
MAX_HALVINGS = 20
DIST_ATOL = 1e-18


def _difference_fn(u: SphereField, alpha: ParamVec):
    """z -> jet of u - S(Psi[alpha]), avoiding cancellation for perturbed fields."""
    fam = FamilyField(alpha)
    if isinstance(u, PerturbedField):
        base = u.base

        def diff(z):
            return u.difference_jet(z) + (base.jet(z) - fam.jet(z))
    else:
        def diff(z):
            return u.jet(z) - fam.jet(z)
    return diff


def distance_sq(u: SphereField, alpha: ParamVec, s: QuadScheme, rtol: float = 1e-11,
                jobs: int = 1):
    """Squared Hdot^1 distance int |grad(u - S(Psi[alpha]))|^2.

    The difference is formed pointwise before differentiation, so the
    result keeps full relative accuracy when u is close to the family.
    """
    diff = _difference_fn(u, alpha)
    return integrate(lambda z: diff(z).grad_sq(), s, rtol=rtol, atol=DIST_ATOL, jobs=jobs)


def _model_pass(u, alpha, r, s, rtol, jobs, atol=1e-12):
    diff = _difference_fn(u, alpha)

    def f(z):
        S, Ks = kernel_jets(alpha, z, r)
        Dj = diff(z)
        U = u.jet(z)
        V = np.array([K.val for K in Ks])
        dens = S.grad_sq()
        g = np.array([
            (Dj.dx * K.dx).sum(0) + (Dj.dy * K.dy).sum(0) for K in Ks
        ])
        Jv = dens * np.einsum("pcn,pcn->pn", V[TRIU[0]], V[TRIU[1]])
        return np.concatenate([Dj.grad_sq()[None], U.grad_sq()[None], g, Jv])

    # some Gram integrands vanish pointwise (e.g. K_1 . K_2), and dist^2 near
    # the family is limited by round-off in u - Phi, so every component
    # gets an absolute floor
    tols = np.full(67, atol)
    tols[0] = DIST_ATOL
    res = integrate(f, s, rtol=rtol, atol=tols, jobs=jobs)
    v = res.value
    J = np.zeros((10, 10))
    J[TRIU] = v[12:]
    J.T[TRIU] = v[12:]
    return float(v[0]), float(v[1]), v[2:12].copy(), J, res


@dataclass
class ProjectionResult:
    alpha_star: ParamVec
    dist_sq: float
    grad_norm: float
    iterations: int
    converged: bool
    min_model_eig: float = float("nan")
    history: list = field(default_factory=list)

    def scaled_error(self, ref: ParamVec, r: float) -> float:
        return float(np.max(np.abs(scaled_difference(self.alpha_star, ref, r))))


def project(u: SphereField, alpha0: ParamVec, r: float, s: QuadScheme, max_iter: int = 50,
            grad_tol: float = GRAD_TOL, step_tol: float = STEP_TOL, rtol: float = 1e-11,
            jobs: int = 1, strict: bool = False) -> ProjectionResult:
    """Nearest member S(Psi[alpha]) of the family to ``u``, searched locally.

    Parameters
    ----------
    u : SphereField
        Field of finite energy, close to the family.
    alpha0 : ParamVec
        Starting point.
    r : float
        Scale of the r^{beta_i} normalisation of the kernel fields.
    s : QuadScheme
        Quadrature layout.
    max_iter : int
        Maximal number of Gauss-Newton iterations.
    grad_tol : float
        Stop once ||g|| <= grad_tol * (1 + ||grad u||^2) and the last step
        is below ``step_tol`` in the scaled coordinates.

    Returns
    -------
    ProjectionResult

    Raises
    ------
    SingularModel
        If the Gram matrix at an iterate is not positive definite.
    NotConverged
        With ``strict=True`` when the iteration limit is reached.
    """
    alpha = alpha0
    d2, gu2, g, J, res = _model_pass(u, alpha, r, s, rtol, jobs)
    s = res.scheme
    history = []
    converged = False
    it = 0
    min_eig = float("nan")
    while True:
        gtol = grad_tol * (1.0 + gu2)
        try:
            L = np.linalg.cholesky(J)
        except np.linalg.LinAlgError as exc:
            raise SingularModel(f"Gram matrix not positive definite at iteration {it}") from exc
        min_eig = float(np.linalg.eigvalsh(J)[0])
        ds = np.linalg.solve(L.T, np.linalg.solve(L, g))
        gnorm = float(np.linalg.norm(g))
        history.append({"iteration": it, "dist_sq": d2, "grad_norm": gnorm,
                        "step_norm": float(np.max(np.abs(ds)))})
        if gnorm <= gtol and np.max(np.abs(ds)) <= step_tol:
            converged = True
            break
        if it >= max_iter:
            break
        it += 1
        t = 1.0
        accepted = False
        for _ in range(MAX_HALVINGS + 1):
            trial = apply_step(alpha, t * ds, r)
            d2n, gu2n, gn, Jn, resn = _model_pass(u, trial, r, s, rtol, jobs)
            slack = float(res.err_est[0] + resn.err_est[0]) + 1e-15 * d2
            if d2n <= d2 + slack:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            history.append({"iteration": it, "note": "no decrease after step halving"})
            converged = gnorm <= gtol
            break
        alpha, d2, gu2, g, J, res = trial, d2n, gu2n, gn, Jn, resn
        history[-1]["step_scale"] = t
    out = ProjectionResult(alpha, d2, float(np.linalg.norm(g)), it, converged, min_eig, history)
    if strict and not converged:
        raise NotConverged(out)
    return out


# -- random perturbations ------------------------------------------------------

class BumpField(SphereField):
    """Tangent projection onto Phi of a sum of Gaussian bumps with vector amplitudes."""

    def __init__(self, Phi: SphereField, centers, widths, amps):
        self.Phi = Phi
        self.centers = np.asarray(centers, dtype=complex)
        self.widths = np.asarray(widths, dtype=float)
        self.amps = np.asarray(amps, dtype=float)

    def jet(self, z):
        z = np.asarray(z, dtype=complex)
        val = np.zeros((3,) + z.shape)
        dx = np.zeros_like(val)
        dy = np.zeros_like(val)
        for c, w, a in zip(self.centers, self.widths, self.amps):
            d = z - c
            g = np.exp(-np.abs(d) ** 2 / (2 * w * w))
            val += a[:, None] * g
            dx += a[:, None] * (-d.real / (w * w) * g)
            dy += a[:, None] * (-d.imag / (w * w) * g)
        return project_tangent(self.Phi.jet(z), Jet(val, dx, dy))


def random_tangent_field(Phi: SphereField, r: float, rng: np.random.Generator, n_bumps: int = 5):
    rad = 2.0 * r * np.sqrt(rng.uniform(size=n_bumps))
    ang = rng.uniform(0, 2 * math.pi, size=n_bumps)
    centers = rad * np.exp(1j * ang)
    widths = rng.uniform(r / 10, r, size=n_bumps)
    amps = rng.normal(size=(n_bumps, 3))
    amps /= np.linalg.norm(amps, axis=1, keepdims=True)
    return BumpField(Phi, centers, widths, amps / n_bumps)


def deficit(u: SphereField, s: QuadScheme, rtol: float = 1e-11, jobs: int = 1):
    """1/2 int |u_x - u x u_y|^2 = E(u) - 4 pi deg(u) for positive degree."""
    return integrate(lambda z: 0.5 * _bogomolny_from_jet(u.jet(z), 1), s, rtol=rtol, atol=1e-30,
                     jobs=jobs)


def local_stability_probe(alpha: ParamVec, r: float, s: QuadScheme, n_trials: int = 5,
                          eps: float = 0.01, seed: int = 0, jobs: int = 1, fields=None):
    """Ratios dist^2 / deficit for random tangent perturbations of S(Psi[alpha]).

    Each trial draws five Gaussian bumps (centers uniform in the disk of
    radius 2r, widths in [r/10, r]), projects them tangent to Phi, forms
    u = eps v + sqrt(1 - eps^2 |v|^2) Phi and projects u back onto the
    family starting from ``alpha``. ``fields`` may supply the tangent fields
    directly instead.

    Returns
    -------
    list of dict
        ``deficit``, ``dist_sq``, ``ratio`` and projection diagnostics per trial.
    """
    Phi = FamilyField(alpha)
    rng = np.random.default_rng(seed)
    if fields is None:
        fields = [random_tangent_field(Phi, r, rng) for _ in range(n_trials)]
    out = []
    for v in fields:
        u = PerturbedField(Phi, v, eps)
        de = deficit(u, s, jobs=jobs)
        pr = project(u, alpha, r, s, jobs=jobs)
        out.append({
            "deficit": float(de.value),
            "dist_sq": pr.dist_sq,
            "ratio": pr.dist_sq / float(de.value) if de.value > 0 else math.inf,
            "iterations": pr.iterations,
            "converged": pr.converged,
            "quad_err": float(de.err_est),
        })
    return out
