"""Command-line front end.

Every artifact embeds the run configuration and the quadrature error
bounds. The worker count is not part of the configuration: results do not
depend on it, and leaving it out keeps outputs byte-identical across
``--jobs`` settings. Floats in text and CSV output carry 17 significant
digits; JSON uses the shortest round-trip representation.

Exit codes: 0 success, 1 usage error, 2 tolerance not met or projection
not converged (partial results are still written and flagged).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .errors import HarmstabError, NotConverged, ToleranceNotMet

EXIT_OK, EXIT_USAGE, EXIT_TOL = 0, 1, 2

SWEEP_COLUMNS = ("r", "eps", "deficit_eps2_coeff", "dist2_eps2_coeff", "ratio", "ratio_over_lnr",
                 "conj_ratio", "quad_err_bound")
ASYM_COLUMNS = ("entry", "quadrature", "prediction", "abs_diff", "allowed", "quad_err", "status")
PROBE_COLUMNS = ("trial", "deficit", "dist_sq", "ratio", "iterations", "converged", "quad_err")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    version: str = __version__

    def to_dict(self):
        return asdict(self)


def fmt(x) -> str:
    return f"{float(x):.17g}"


def _plain(obj):
    """Recursively convert numpy and complex values into JSON-ready objects."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def _dump_json(obj) -> str:
    return json.dumps(_plain(obj), indent=1, sort_keys=True) + "\n"


def _write(path, text, stdout):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)


def _csv_text(config: RunConfig, columns, rows) -> str:
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(_plain(config.to_dict()), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


# -- argument helpers ------------------------------------------------------------

def parse_map(spec: str):
    """``json:{...}``, ``@file.json`` or ``psi:R`` into a RationalMap."""
    from .rational_maps import ComplexPoly, RationalMap

    if spec.startswith("json:"):
        data = json.loads(spec[5:])
    elif spec.startswith("@"):
        with open(spec[1:]) as fh:
            data = json.load(fh)
    elif spec.startswith("psi:"):
        r = float(spec[4:])
        return RationalMap(ComplexPoly([-2j * r * r, 0, 1]), ComplexPoly([1]))
    else:
        raise UsageError(f"unrecognized map spec {spec!r}; use json:{{...}}, @file or psi:R")
    return RationalMap.from_json(data)


def parse_alpha(spec: str, r: float):
    from .kernel_basis import ParamVec, alpha_r

    if spec == "alpha_r":
        return alpha_r(r)
    if spec.startswith("json:"):
        vals = json.loads(spec[5:])
        if len(vals) != 10:
            raise UsageError("alpha needs 10 real components")
        return ParamVec(np.asarray(vals, dtype=float))
    raise UsageError(f"unrecognized alpha spec {spec!r}; use alpha_r or json:[...]")


def _float_list(text: str):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"bad number list {text!r}") from exc


# -- commands ---------------------------------------------------------------------

def cmd_energy(args, out):
    from .quadrature import energy, scheme_for_map
    from .sphere_fields import lift

    m = parse_map(args.map)
    cfg = RunConfig("energy", {"map": m.to_json(), "rtol": args.rtol})
    res = energy(lift(m), scheme_for_map(m), rtol=args.rtol, jobs=args.jobs)
    doc = {"config": cfg.to_dict(), "energy": res.value, "err_est": res.err_est,
           "four_pi_abs_degree": 4 * math.pi * abs(m.degree), "converged": res.converged}
    if args.json:
        _write(args.json, _dump_json(doc), out)
    else:
        out.write(f"energy {fmt(res.value)} +/- {res.err_est:.3g} "
                  f"(4 pi |deg| = {fmt(4 * math.pi * abs(m.degree))}, converged={res.converged})\n")
    return EXIT_OK if res.converged else EXIT_TOL


def cmd_degree(args, out):
    from .quadrature import degree, scheme_for_map
    from .sphere_fields import lift

    m = parse_map(args.map)
    cfg = RunConfig("degree", {"map": m.to_json(), "rtol": args.rtol})
    res = degree(lift(m), scheme_for_map(m), rtol=args.rtol, jobs=args.jobs)
    doc = {"config": cfg.to_dict(), "degree": res.value, "err_est": res.err_est,
           "rounded": int(round(res.value)), "algebraic_degree": m.degree, "converged": res.converged}
    if args.json:
        _write(args.json, _dump_json(doc), out)
    else:
        out.write(f"degree {fmt(res.value)} +/- {res.err_est:.3g} "
                  f"(rounded {int(round(res.value))}, converged={res.converged})\n")
    return EXIT_OK if res.converged else EXIT_TOL


def cmd_gram(args, out):
    from .kernel_basis import gram_matrix, gram_via_gradients
    from .quadrature import default_scheme

    alpha = parse_alpha(args.alpha, args.r)
    cfg = RunConfig("gram", {"r": args.r, "alpha": alpha.to_json(), "method": args.method,
                             "rtol": args.rtol})
    fn = gram_matrix if args.method == "weighted" else gram_via_gradients
    J = fn(alpha, args.r, default_scheme(args.r), rtol=args.rtol, jobs=args.jobs)
    if args.csv:
        text = "# config: " + json.dumps(_plain(cfg.to_dict()), sort_keys=True) + "\n"
        text += f"# max_err_est: {fmt(np.max(J.err))}\n" + J.to_csv()
        _write(args.csv, text, out)
    doc = {"config": cfg.to_dict(), "gram": json.loads(J.to_json()),
           "det": J.det(), "min_eig": J.eigvalsh()[0]}
    if args.json or not args.csv:
        _write(args.json, _dump_json(doc), out)
    return EXIT_OK if J.converged else EXIT_TOL


def cmd_asym_check(args, out):
    from .asymptotics import oracle_check

    cfg = RunConfig("asym-check", {"r": args.r, "ref_r": args.ref_r, "slack": args.slack})
    rows = oracle_check(args.r, args.ref_r, args.slack, jobs=args.jobs)
    table = [(f"J{c.i}_{c.j}", c.quadrature, c.prediction, c.diff, c.allowed, c.quad_err,
              "PASS" if c.passed else "FAIL") for c in rows]
    _write(args.csv, _csv_text(cfg, ASYM_COLUMNS, table), out)
    return EXIT_OK


def cmd_counterexample(args, out):
    from .counterexample import report

    cfg = RunConfig("counterexample", {"r": args.r, "eps": args.eps, "project": not args.no_project,
                                       "rtol": args.rtol})
    rep = report(args.r, args.eps, project=not args.no_project, jobs=args.jobs, rtol=args.rtol)
    doc = {"config": cfg.to_dict(), "report": rep.to_dict()}
    _write(args.json, _dump_json(doc), out)
    return EXIT_OK if rep.converged else EXIT_TOL


def cmd_sweep(args, out):
    from .counterexample import report

    rs = _float_list(args.r_list)
    if not rs:
        raise UsageError("empty --r-list")
    cfg = RunConfig("sweep", {"r_list": rs, "eps": args.eps, "project": not args.no_project,
                              "rtol": args.rtol})
    rows, ok = [], True
    for r in rs:
        rep = report(r, args.eps, project=not args.no_project, jobs=args.jobs, rtol=args.rtol)
        ok = ok and rep.converged
        rows.append((rep.r, rep.eps, rep.deficit_eps2_coeff, rep.dist2_eps2_coeff, rep.ratio,
                     rep.log_ratio, rep.conj_ratio, rep.quad_err_bound))
    _write(args.csv, _csv_text(cfg, SWEEP_COLUMNS, rows), out)
    return EXIT_OK if ok else EXIT_TOL


def _parse_field(spec: str):
    """(field, r, description) for ``build:R,EPS``, ``psi:R`` or a map spec."""
    from .counterexample import build_u, compute_c
    from .sphere_fields import lift

    if spec.startswith("build:"):
        vals = _float_list(spec[6:])
        if len(vals) != 2:
            raise UsageError("build field needs R,EPS")
        r, eps = vals
        _, _, sol = compute_c(r)
        return build_u(r, eps, sol.c), r, {"build": {"r": r, "eps": eps}}
    m = parse_map(spec)
    return lift(m), None, {"map": m.to_json()}


def cmd_project(args, out):
    from .kernel_basis import alpha_r
    from .projector import project
    from .quadrature import default_scheme

    u, r_field, desc = _parse_field(args.field)
    r = args.r if args.r is not None else r_field
    if r is None:
        raise UsageError("--r is required unless the field is build:R,EPS")
    alpha0 = parse_alpha(args.init, r)
    cfg = RunConfig("project", {"field": desc, "init": alpha0.to_json(), "r": r,
                                "max_iter": args.max_iter, "rtol": args.rtol})
    code = EXIT_OK
    try:
        pr = project(u, alpha0, r, default_scheme(r), max_iter=args.max_iter, rtol=args.rtol,
                     jobs=args.jobs, strict=True)
    except NotConverged as exc:
        pr, code = exc.result, EXIT_TOL
    doc = {"config": cfg.to_dict(), "alpha_star": pr.alpha_star.to_json(), "dist_sq": pr.dist_sq,
           "grad_norm": pr.grad_norm, "iterations": pr.iterations, "converged": pr.converged,
           "min_model_eig": pr.min_model_eig,
           "scaled_error_vs_alpha_r": pr.scaled_error(alpha_r(r), r), "history": pr.history}
    _write(args.json, _dump_json(doc), out)
    return code


def cmd_stability_probe(args, out):
    from .kernel_basis import alpha_r
    from .projector import local_stability_probe
    from .quadrature import default_scheme

    cfg = RunConfig("stability-probe", {"r": args.r, "trials": args.trials, "seed": args.seed,
                                        "eps": args.eps})
    rows = local_stability_probe(alpha_r(args.r), args.r, default_scheme(args.r), args.trials,
                                 args.eps, args.seed, jobs=args.jobs)
    table = [(k, t["deficit"], t["dist_sq"], t["ratio"], t["iterations"], t["converged"],
              t["quad_err"]) for k, t in enumerate(rows)]
    _write(args.csv, _csv_text(cfg, PROBE_COLUMNS, table), out)
    return EXIT_OK if all(t["converged"] for t in rows) else EXIT_TOL


def selftest_checks():
    """Fast invariant checks as (name, passed, detail) tuples."""
    from .counterexample import CutoffField, script_k
    from .kernel_basis import ParamVec, alpha_r, inner_product_table, kernel_jets, psi_eval
    from .quadrature import centered_scheme, energy_and_degree
    from .rational_maps import ComplexPoly, RationalMap
    from .sphere_fields import lift

    rng = np.random.default_rng(0)
    r = 10.0
    z = (rng.normal(size=50) + 1j * rng.normal(size=50)) * 2 * r
    out = []

    v = complex(psi_eval(alpha_r(r), np.array([0j])).val[0])
    out.append(("psi(0) = -2i r^2", abs(v + 2j * r * r) < 1e-12, v))

    const = psi_eval(ParamVec(np.eye(10)[4]), z).val
    out.append(("alpha_5 = 1 gives the constant map 1", bool(np.allclose(const, 1)), None))

    S, Ks = kernel_jets(alpha_r(r), z, r)
    tang = max(float(np.max(np.abs((K.val * S.val).sum(0)))) for K in Ks)
    out.append(("kernel fields tangent", tang < 1e-12, tang))
    norm = float(np.max(np.abs((S.val * S.val).sum(0) - 1)))
    out.append(("lift lies on the sphere", norm < 1e-14, norm))

    I = inner_product_table(alpha_r(r), z, r)
    for i, j in ((0, 1), (6, 7)):
        rel = float(np.max(np.abs(I[i, j]) / np.sqrt(I[i, i] * I[j, j])))
        out.append((f"I_{i + 1}{j + 1} = 0", rel < 1e-12, rel))

    f = CutoffField(r)(np.array([r + 1j * r, -r - 1j * r, 0j]))
    out.append(("cutoff values 1, -1, 0", bool(np.allclose(f, [1, -1, 0], atol=1e-15)), f))

    K = script_k(r).jet(z)
    kt = float(np.max(np.abs((K.val * S.val).sum(0))))
    out.append(("direction field tangent", kt < 1e-12, kt))

    e, d = energy_and_degree(lift(RationalMap(ComplexPoly([0, 1]), ComplexPoly([1]))),
                             centered_scheme(), rtol=1e-10)
    out.append(("lift(z): energy 4 pi, degree 1",
                abs(e.value - 4 * math.pi) < 1e-8 and abs(d.value - 1) < 1e-8,
                (float(e.value), float(d.value))))
    return out


def cmd_selftest(args, out):
    checks = selftest_checks()
    for name, ok, detail in checks:
        out.write(f"{'PASS' if ok else 'FAIL'} {name}" + ("" if detail is None else f" [{detail}]")
                  + "\n")
    return EXIT_OK if all(ok for _, ok, _ in checks) else EXIT_TOL


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="harmstab", description="Degree-2 harmonic maps R^2 -> S^2: kernel Gram "
                "matrices, asymptotic oracles and the stability counterexample.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser, required=True)

    def add(name, fn, help_, **kw):
        sp = sub.add_parser(name, help=help_, description=help_, **kw)
        sp.add_argument("--jobs", type=int, default=1, help="worker threads (results do not depend on it)")
        sp.set_defaults(func=fn)
        return sp

    map_help = "json:{\"p\":[[re,im],...],\"q\":[...]} (ascending coefficients), @file.json or psi:R"
    for name, fn in (("energy", cmd_energy), ("degree", cmd_degree)):
        sp = add(name, fn, f"Dirichlet {name} of the lift of a rational map" if name == "energy"
                 else "topological degree of the lift of a rational map")
        sp.add_argument("--map", required=True, help=map_help)
        sp.add_argument("--rtol", type=float, default=1e-11)
        sp.add_argument("--json", help="write a JSON document here")

    sp = add("gram", cmd_gram, "Gram matrix of the ten kernel fields")
    sp.add_argument("--r", type=float, required=True)
    sp.add_argument("--alpha", default="alpha_r", help="alpha_r or json:[10 reals]")
    sp.add_argument("--method", choices=("weighted", "gradients"), default="weighted")
    sp.add_argument("--rtol", type=float, default=1e-11)
    sp.add_argument("--csv", help="10x10 CSV of entries")
    sp.add_argument("--json", help="JSON with entries, error estimates and metadata")

    sp = add("asym-check", cmd_asym_check,
             "compare Gram entries with their large-r expansions; CSV columns: "
             + ", ".join(ASYM_COLUMNS), formatter_class=argparse.RawDescriptionHelpFormatter)
    sp.add_argument("--r", type=float, required=True)
    sp.add_argument("--ref-r", type=float, default=5.0, help="radius at which the remainder constant is fitted")
    sp.add_argument("--slack", type=float, default=4.0)
    sp.add_argument("--csv")

    sp = add("counterexample", cmd_counterexample, "deficit, distance and ratios for the perturbed map")
    sp.add_argument("--r", type=float, required=True)
    sp.add_argument("--eps", type=float, default=0.01)
    sp.add_argument("--no-project", action="store_true", help="use the distance to S(psi_r) only")
    sp.add_argument("--rtol", type=float, default=1e-11)
    sp.add_argument("--json")

    sp = add("sweep", cmd_sweep, "counterexample over several r; CSV columns: " + ", ".join(SWEEP_COLUMNS))
    sp.add_argument("--r-list", default="10,20,40,80")
    sp.add_argument("--eps", type=float, default=0.01)
    sp.add_argument("--no-project", action="store_true")
    sp.add_argument("--rtol", type=float, default=1e-11)
    sp.add_argument("--csv")

    sp = add("project", cmd_project, "nearest member of the degree-2 family")
    sp.add_argument("--field", required=True, help="build:R,EPS or a map spec")
    sp.add_argument("--init", default="alpha_r", help="alpha_r or json:[10 reals]")
    sp.add_argument("--r", type=float, help="kernel scaling radius (default: R of build:)")
    sp.add_argument("--max-iter", type=int, default=50)
    sp.add_argument("--rtol", type=float, default=1e-11)
    sp.add_argument("--json")

    sp = add("stability-probe", cmd_stability_probe,
             "random tangent perturbations of S(psi_r); CSV columns: " + ", ".join(PROBE_COLUMNS))
    sp.add_argument("--r", type=float, required=True)
    sp.add_argument("--trials", type=int, default=5)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--eps", type=float, default=0.01)
    sp.add_argument("--csv")

    add("selftest", cmd_selftest, "fast invariant checks")
    return p


def main(argv=None, stdout=None) -> int:
    out = stdout or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.jobs < 1:
        parser.error("--jobs must be positive")
    try:
        return args.func(args, out)
    except UsageError as exc:
        sys.stderr.write(f"harmstab: error: {exc}\n")
        return EXIT_USAGE
    except (ToleranceNotMet, NotConverged) as exc:
        sys.stderr.write(f"harmstab: {exc}\n")
        return EXIT_TOL
    except (HarmstabError, ValueError) as exc:
        sys.stderr.write(f"harmstab: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
