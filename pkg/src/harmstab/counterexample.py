"""The degree-2 family member with a large stability ratio.

Around Phi = S(psi_r) the perturbation direction is v = f K - c^i K_i where

* f is the odd cutoff Theta(z - r - ir) - Theta(z + r + ir) with
  Theta = 1 inside radius sqrt(r), 2 - 2 ln|w| / ln r up to radius r and 0
  beyond (natural logarithm);
* K = 2 K_2 - K_9, the variation of S(Psi) along dPsi = -psi_r^2 / r^2;
* c solves J c = p with p_j = int |grad Phi|^2 f K . K_j.

Energy deficits are evaluated as 1/2 int |u_x - u x u_y|^2, which equals
E(u) - 4 pi deg(u) for positive degree but has no cancellation for nearly
harmonic u.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import IllConditioned
from .jets import Jet
from .kernel_basis import BLOCKS, GramMatrix, alpha_r, closed_form_velocities, gram_matrix, kernel_jets, psi_r
from .quadrature import QuadScheme, default_scheme, integrate
from .sphere_fields import (FunctionField, PerturbedField, SphereField, _bogomolny_from_jet,
                            stereo_from_pair, variation_from_pair)

RESIDUAL_TOL = 1e-8


class CutoffField:
    """f^r with value and plane gradient."""

    def __init__(self, r: float):
        if r <= 1:
            raise ValueError("cutoff needs r > 1")
        self.r = float(r)
        self.center = complex(r, r)

    def _theta(self, w):
        r = self.r
        s2 = np.abs(w) ** 2
        s = np.sqrt(s2)
        lr = math.log(r)
        ann = (s >= math.sqrt(r)) & (s <= r)
        val = np.where(s < math.sqrt(r), 1.0, 0.0)
        val = np.where(ann, 2.0 - 2.0 * np.log(np.where(ann, s, 1.0)) / lr, val)
        g = np.where(ann, -2.0 / (lr * np.where(ann, s2, 1.0)), 0.0)
        return val, g * w.real, g * w.imag

    def jet(self, z) -> Jet:
        z = np.asarray(z, dtype=complex)
        a = self._theta(z - self.center)
        b = self._theta(z + self.center)
        return Jet(a[0] - b[0], a[1] - b[1], a[2] - b[2])

    def __call__(self, z):
        return self.jet(z).val

    def grad_sq(self, z):
        return self.jet(z).grad_sq()


def _script_k_jet(r: float, z) -> Jet:
    Z = Jet.coordinate_z(np.asarray(z, dtype=complex))
    N = Z * Z - 2j * r * r
    D = Jet.constant(np.ones_like(Z.val))
    return variation_from_pair(N, D, (N * N) * (-1.0 / r**2), None)


def script_k(r: float) -> FunctionField:
    """K^r = 2 K_2 - K_9 at alpha_r as a vector field with jets."""
    return FunctionField(lambda z: _script_k_jet(r, z))


class DirectionField(SphereField):
    """v = f K - sum_i c_i K_i (a tangent field along S(psi_r))."""

    def __init__(self, r: float, c=None, cutoff: bool = True):
        self.r = float(r)
        self.c = np.zeros(10) if c is None else np.asarray(c, dtype=float)
        self.cutoff = CutoffField(r) if cutoff else None

    def jet(self, z):
        z = np.asarray(z, dtype=complex)
        v = _script_k_jet(self.r, z)
        if self.cutoff is not None:
            v = v * self.cutoff.jet(z)
        if np.any(self.c != 0):
            _, Ks = kernel_jets(alpha_r(self.r), z, self.r)
            for ci, K in zip(self.c, Ks):
                if ci != 0:
                    v = v - K * ci
        return v


class PsiField(SphereField):
    """S(psi_r)."""

    def __init__(self, r: float):
        self.r = float(r)

    def jet(self, z):
        Z = Jet.coordinate_z(np.asarray(z, dtype=complex))
        N = Z * Z - 2j * self.r * self.r
        return stereo_from_pair(N, Jet.constant(np.ones_like(Z.val)))


def p_vector(r: float, s: QuadScheme | None = None, rtol: float = 1e-11, jobs: int = 1):
    """p_j = int |grad S(psi_r)|^2 f K . K_j via 128 |z|^2 f Re(w_K conj w_j) / (1 + |psi|^2)^4.

    Returns the quadrature result; ``value`` has shape (10,).
    """
    s = default_scheme(r) if s is None else s
    f = CutoffField(r)

    def integrand(z):
        p = psi_r(r, z)
        q = (1.0 + np.abs(p) ** 2) ** 2
        weight = 128.0 * (np.abs(z) ** 2 / q) / q * f(z)
        wk = -(p * p) / r**2
        w = closed_form_velocities(r, z)
        return weight * np.real(wk[None, :] * np.conj(w))

    return integrate(integrand, s, rtol=rtol, atol=1e-30, jobs=jobs)


@dataclass
class SolveResult:
    c: np.ndarray
    residual: float
    block_conds: list


def solve_c(J, p) -> SolveResult:
    """Solve J c = p block by block, then one refinement step with the full matrix.

    Parameters
    ----------
    J : GramMatrix or (10, 10) array
    p : array of 10 reals

    Returns
    -------
    SolveResult
        ``c``, the relative residual ||J c - p|| / ||p|| and the condition
        number of each diagonal block.

    Raises
    ------
    IllConditioned
        If the relative residual exceeds 1e-8 after refinement.
    """
    A = np.asarray(J.entries if isinstance(J, GramMatrix) else J, dtype=float)
    p = np.asarray(p, dtype=float)
    factors = []
    conds = []
    for blk in BLOCKS:
        idx = np.array(blk) - 1
        B = A[np.ix_(idx, idx)]
        L = np.linalg.cholesky(B)
        factors.append((idx, L))
        conds.append(float(np.linalg.cond(B)))

    def block_solve(rhs):
        out = np.zeros(10)
        for idx, L in factors:
            y = np.linalg.solve(L, rhs[idx])
            out[idx] = np.linalg.solve(L.T, y)
        return out

    c = block_solve(p)
    c = c + block_solve(p - A @ c)
    pn = np.linalg.norm(p)
    res = float(np.linalg.norm(A @ c - p) / pn) if pn > 0 else float(np.linalg.norm(A @ c))
    if res > RESIDUAL_TOL:
        raise IllConditioned(f"relative residual {res:.3e} after refinement")
    return SolveResult(c, res, conds)


def build_u(r: float, eps: float, c=None, cutoff: bool = True) -> PerturbedField:
    """u = eps v + sqrt(1 - eps^2 |v|^2) S(psi_r) with v = f K - c^i K_i."""
    return PerturbedField(PsiField(r), DirectionField(r, c, cutoff), eps)


def norm_pieces(r: float, c, s: QuadScheme | None = None, rtol: float = 1e-11, jobs: int = 1):
    """Integrals behind the split identity and the Hdot^1 norm of v.

    Returns a dict of QuadResult-like (value, err) pairs for
    ``grad_f_K`` = int |grad f|^2 |K|^2, ``weighted_fK`` = int |grad Phi|^2 |f K|^2,
    ``grad_fK`` = int |grad(f K)|^2, ``grad_v`` = int |grad v|^2 and
    ``weighted_v`` = int |grad Phi|^2 |v|^2.
    """
    s = default_scheme(r) if s is None else s
    Phi = PsiField(r)
    fK = DirectionField(r, None)
    v = DirectionField(r, c)
    cut = CutoffField(r)

    def integrand(z):
        P = Phi.jet(z)
        dens = P.grad_sq()
        Kj = _script_k_jet(r, z)
        K2 = (Kj.val * Kj.val).sum(0)
        F = cut.jet(z)
        a = F.grad_sq() * K2
        b = dens * F.val**2 * K2
        W = fK.jet(z)
        V = v.jet(z)
        return np.stack([a, b, W.grad_sq(), V.grad_sq(), dens * (V.val * V.val).sum(0)])

    res = integrate(integrand, s, rtol=rtol, atol=1e-30, jobs=jobs)
    keys = ("grad_f_K", "weighted_fK", "grad_fK", "grad_v", "weighted_v")
    return {k: (float(res.value[i]), float(res.err_est[i])) for i, k in enumerate(keys)}, res


def perturbation_integrals(u: PerturbedField, s: QuadScheme, rtol: float = 1e-11, jobs: int = 1):
    """Deficit-type integrals of u = eps v + g Phi.

    Components: 1/2 int |u_x - u x u_y|^2 (the deficit), 1/2 int |grad u|^2,
    int |grad(u - Phi)|^2 and int |u - Phi|^2 |grad Phi|^2.
    """

    def integrand(z):
        U = u.jet(z)
        P = u.base.jet(z)
        Dj = u.difference_jet(z)
        return np.stack([
            0.5 * _bogomolny_from_jet(U, 1),
            0.5 * U.grad_sq(),
            Dj.grad_sq(),
            (Dj.val * Dj.val).sum(0) * P.grad_sq(),
        ])

    return integrate(integrand, s, rtol=rtol, atol=1e-30, jobs=jobs)


def richardson_eps2(q_eps: float, q_half: float) -> float:
    """Limit of Q(eps) = D(eps)/eps^2 when Q(eps) = a + b eps^2 + ...

    The construction is odd under z -> -z while Phi is even, so u_{-eps}(z)
    = u_eps(-z); deficits and distances are then even functions of eps.
    """
    return (4.0 * q_half - q_eps) / 3.0


@dataclass
class CounterexampleReport:
    r: float
    eps: float
    deficit: float
    deficit_eps2_coeff: float
    dist_sq_formula: float
    dist_sq_projected: float | None
    dist2_eps2_coeff: float
    ratio: float
    log_ratio: float
    conj_ratio: float
    conj_ratio_at_eps: float
    quad_err_bound: float
    converged: bool = True
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def compute_c(r: float, s: QuadScheme | None = None, jobs: int = 1):
    s = default_scheme(r) if s is None else s
    J = gram_matrix(alpha_r(r), r, s, jobs=jobs)
    pres = p_vector(r, s, jobs=jobs)
    sol = solve_c(J, pres.value)
    return J, pres, sol


def report(r: float, eps: float, project: bool = True, jobs: int = 1,
           rtol: float = 1e-11) -> CounterexampleReport:
    """Measure deficit, distance and their ratios for the perturbed map at (r, eps).

    Runs at ``eps`` and ``eps / 2`` and extrapolates the eps^2 coefficients.
    With ``project`` the distance is the projected distance to the whole
    family; otherwise the distance to S(psi_r) is used.
    """
    from .projector import project as run_projection

    s = default_scheme(r)
    J, pres, sol = compute_c(r, s, jobs)
    pieces, pres_norm = norm_pieces(r, sol.c, s, rtol=rtol, jobs=jobs)
    runs = []
    err_bound = float(np.max(J.err)) + float(np.max(pres.err_est)) + float(np.max(pres_norm.err_est))
    converged = bool(J.converged and pres.converged and pres_norm.converged)
    for e in (eps, eps / 2):
        u = build_u(r, e, sol.c)
        ints = perturbation_integrals(u, s, rtol=rtol, jobs=jobs)
        deficit, energy, dist_phi, weighted = (float(x) for x in ints.value)
        err_bound += float(np.max(ints.err_est))
        converged = converged and bool(ints.converged)
        run = {
            "eps": e,
            "deficit": deficit,
            "deficit_err": float(ints.err_est[0]),
            "energy_minus_8pi": energy - 8 * math.pi,
            "dist_sq_to_phi": dist_phi,
            "identity_rhs": dist_phi - weighted,
        }
        if project:
            pr = run_projection(u, alpha_r(r), r, s, jobs=jobs)
            run.update(dist_sq_projected=pr.dist_sq, projection_iterations=pr.iterations,
                       projection_converged=pr.converged, projection_grad_norm=pr.grad_norm)
            converged = converged and pr.converged
        runs.append(run)
    key = "dist_sq_projected" if project else "dist_sq_to_phi"
    q_def = [run["deficit"] / run["eps"] ** 2 for run in runs]
    q_dist = [run[key] / run["eps"] ** 2 for run in runs]
    a_def = richardson_eps2(*q_def)
    a_dist = richardson_eps2(*q_dist)
    ratio = a_dist / a_def
    lnr = math.log(r)
    d0 = runs[0]
    return CounterexampleReport(
        r=float(r), eps=float(eps),
        deficit=d0["deficit"],
        deficit_eps2_coeff=a_def,
        dist_sq_formula=eps**2 * pieces["grad_v"][0],
        dist_sq_projected=d0.get("dist_sq_projected"),
        dist2_eps2_coeff=a_dist,
        ratio=ratio,
        log_ratio=ratio / lnr,
        conj_ratio=a_dist / (a_def * (1.0 + abs(math.log(a_def)))),
        conj_ratio_at_eps=d0[key] / (d0["deficit"] * (1.0 + abs(math.log(d0["deficit"])))),
        quad_err_bound=err_bound,
        converged=converged,
        diagnostics={
            "c": sol.c.tolist(),
            "solve_residual": sol.residual,
            "p": np.asarray(pres.value).tolist(),
            "norm_pieces": pieces,
            "runs": runs,
            "deficit_eps2_raw": q_def,
            "dist2_eps2_raw": q_dist,
            "deficit_ratio_eps_half": runs[0]["deficit"] / runs[1]["deficit"],
            "gram_min_eig": float(J.eigvalsh()[0]),
        },
    )
