"""Command-line front end: declarative JSON problem specs in, reports out.

Subcommands:
  check       pointwise condition checks (convexity, growth, derivatives)
  minimize    refining minimization plus sublevel-set radius certificates
  semicont    sequence lab: liminf table, weak-convergence witness, truncation
  lemma-apim  partition-average deviation measures across shrinking partitions

Exit codes: 0 success / verdict match, 1 qualified failure (witness found,
divergence, verdict mismatch), 2 malformed spec, 3 evaluation error.
Reports are byte-stable for a fixed spec and seed once --no-timestamp is set.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .domains import Interval, Rectangle
from .errors import (
    CertificateUnavailableError,
    EvaluationError,
    InvalidDomainError,
    InvalidResolutionError,
    UnknownIntegrandError,
    VarminError,
)
from .functionals import coercivity_certificate
from .integrands import (
    GrowthCertificate,
    ProbeBox,
    check_convexity,
    check_derivatives,
    check_growth,
    get_integrand,
    probe_minimum,
    suggest_growth,
)
from .meshes import interpolate, make_mesh, make_partition, refine
from .minimize import CONVERGED, ProblemSetup, SolverOptions, minimize_refining
from .reportio import write_csv, write_json
from .semicontinuity import (
    Piecewise1D,
    SequenceFamily,
    liminf_check,
    measure_deviation,
    partition_average,
    truncation_measures,
    weak_convergence_witness,
)

_MISSING = object()


class SpecError(Exception):
    """Malformed problem spec; carries the dotted field path."""

    def __init__(self, path, detail):
        self.path = path or "<root>"
        self.detail = detail
        super().__init__(f"spec error at {self.path}: {detail}")


# ---------------------------------------------------------------------------
# field accessors with dotted-path diagnostics

def _join(path, key):
    return f"{path}.{key}" if path else str(key)


def _field(d, key, path, types=None, type_name="", default=_MISSING):
    if not isinstance(d, dict):
        raise SpecError(path, f"expected an object, got {type(d).__name__}")
    full = _join(path, key)
    if key not in d:
        if default is _MISSING:
            raise SpecError(full, "missing required field")
        return default
    v = d[key]
    if types is not None:
        tt = types if isinstance(types, tuple) else (types,)
        if isinstance(v, bool) and bool not in tt:
            raise SpecError(full, f"expected {type_name}, got a boolean")
        if not isinstance(v, tt):
            raise SpecError(full, f"expected {type_name}, got {type(v).__name__}")
    return v


def _num(d, key, path, default=_MISSING):
    v = _field(d, key, path, (int, float), "a number", default)
    if v is None:
        return None
    v = float(v)
    if not np.isfinite(v):
        raise SpecError(_join(path, key), "must be finite")
    return v


def _int(d, key, path, default=_MISSING, minimum=None):
    v = _field(d, key, path, int, "an integer", default)
    if v is None:
        return None
    v = int(v)
    if minimum is not None and v < minimum:
        raise SpecError(_join(path, key), f"must be at least {minimum}, got {v}")
    return v


def _str(d, key, path, allowed=None, default=_MISSING):
    v = _field(d, key, path, str, "a string", default)
    if v is not None and allowed is not None and v not in allowed:
        raise SpecError(_join(path, key),
                        f"must be one of {sorted(allowed)}, got {v!r}")
    return v


# ---------------------------------------------------------------------------
# shared spec pieces

def _parse_domain(spec):
    d = _field(spec, "domain", "", dict, "an object")
    kind = _str(d, "kind", "domain", allowed={"interval", "rectangle"})
    try:
        if kind == "interval":
            return Interval(_num(d, "a", "domain"), _num(d, "b", "domain"))
        return Rectangle(_num(d, "ax", "domain"), _num(d, "bx", "domain"),
                         _num(d, "ay", "domain"), _num(d, "by", "domain"))
    except InvalidDomainError as e:
        raise SpecError("domain", str(e))


def _parse_integrand(spec, dim):
    d = _field(spec, "integrand", "", dict, "an object")
    name = _str(d, "name", "integrand")
    params = _field(d, "params", "integrand", dict, "an object", default={})
    try:
        return get_integrand(name, dim=dim, params=params)
    except UnknownIntegrandError as e:
        raise SpecError("integrand.name", str(e))
    except (TypeError, ValueError) as e:
        raise SpecError("integrand.params", str(e))


def _parse_pq(spec):
    p = _num(spec, "p", "", default=2.0)
    q = _num(spec, "q", "", default=1.0)
    if p <= 1.0:
        raise SpecError("p", f"must exceed 1, got {p}")
    if q < 1.0 or q >= p:
        raise SpecError("q", f"must lie in [1, p) = [1, {p}), got {q}")
    return p, q


def _parse_growth(spec, p, q):
    d = _field(spec, "growth", "", dict, "an object", default=None)
    if d is None:
        return None
    try:
        return GrowthCertificate(
            c0=_num(d, "c0", "growth"), c1=_num(d, "c1", "growth"),
            c2=_num(d, "c2", "growth"), p=p, q=q,
        )
    except ValueError as e:
        raise SpecError("growth", str(e))


def _parse_probe(spec, domain):
    d = _field(spec, "probe", "", dict, "an object", default={})
    u_bound = _num(d, "u_bound", "probe", default=10.0)
    xi_bound = _num(d, "xi_bound", "probe", default=20.0)
    n_samples = _int(d, "n_samples", "probe", default=1000, minimum=1)
    if u_bound <= 0 or xi_bound <= 0:
        raise SpecError("probe", "u_bound and xi_bound must be positive")
    return ProbeBox.for_domain(domain, u_bound=u_bound, xi_bound=xi_bound), n_samples


_BOUNDARY_FORMS = {
    "zero": lambda V: np.zeros(len(V)),
    "linear": lambda V: V[:, 0],
    "product-xy": lambda V: V[:, 0] * V[:, 1],
}


def _parse_boundary(spec, dim):
    d = _field(spec, "boundary", "", dict, "an object", default={"kind": "zero"})
    kind = _str(d, "kind", "boundary", allowed=set(_BOUNDARY_FORMS))
    if kind == "product-xy" and dim != 2:
        raise SpecError("boundary.kind", "product-xy needs a rectangle domain")
    return kind, _BOUNDARY_FORMS[kind]


def _parse_solver(spec):
    d = _field(spec, "solver", "", dict, "an object", default={})
    try:
        opts = SolverOptions(
            method=_str(d, "method", "solver", allowed={"gd", "lbfgs"}, default="gd"),
            gtol=_num(d, "gtol", "solver", default=1e-8),
            max_iters=_int(d, "max_iters", "solver", default=10000, minimum=1),
            memory=_int(d, "memory", "solver", default=10, minimum=1),
        )
    except ValueError as e:
        raise SpecError("solver", str(e))
    init = _str(d, "init", "solver", allowed={"boundary", "perturb"}, default="boundary")
    amplitude = _num(d, "perturb_amplitude", "solver", default=0.1)
    return opts, init, amplitude


def _seed_of(spec, args):
    if args.seed is not None:
        return int(args.seed)
    return _int(spec, "seed", "", default=0)


def _envelope(command, args, seed):
    env = {"command": command, "version": __version__, "seed": seed}
    if not args.no_timestamp:
        env["generated_at"] = datetime.now(timezone.utc).isoformat()
    return env


# ---------------------------------------------------------------------------
# subcommands

_CHECK_NAMES = ("convexity", "growth", "derivatives")


def cmd_check(spec, out, args):
    domain = _parse_domain(spec)
    f = _parse_integrand(spec, domain.dim)
    p, q = _parse_pq(spec)
    probe, n_samples = _parse_probe(spec, domain)
    seed = _seed_of(spec, args)

    checks = _field(spec, "checks", "", list, "a list", default=list(_CHECK_NAMES))
    for i, name in enumerate(checks):
        if name not in _CHECK_NAMES:
            raise SpecError(f"checks[{i}]",
                            f"unknown check {name!r}; known: {list(_CHECK_NAMES)}")

    results = {}
    passed = True
    if "convexity" in checks:
        rep = check_convexity(f, probe, n_samples=n_samples, seed=seed)
        results["convexity"] = rep.to_dict()
        passed = passed and rep.certified
    if "growth" in checks:
        cert = _parse_growth(spec, p, q)
        if cert is not None:
            rep = check_growth(f, cert, probe, n_samples=n_samples, seed=seed)
            results["growth"] = rep.to_dict()
            passed = passed and rep.holds
        else:
            cand = suggest_growth(f, p, q, probe, n_samples=n_samples, seed=seed)
            if cand is None:
                results["growth"] = {"status": "certificate-unavailable",
                                     "certificate": None, "p": p, "q": q}
                passed = False
            else:
                rep = check_growth(f, cand, probe, n_samples=n_samples, seed=seed)
                results["growth"] = {"status": "suggested",
                                     "certificate": cand.to_dict(),
                                     "verification": rep.to_dict()}
                passed = passed and rep.holds
    if "derivatives" in checks:
        err_u, err_xi = check_derivatives(f, probe, n_samples=n_samples, seed=seed)
        ok = err_u <= 1e-4 and err_xi <= 1e-4
        results["derivatives"] = {"max_rel_err_du": err_u, "max_rel_err_dxi": err_xi,
                                  "tol": 1e-4, "passed": ok}
        passed = passed and ok

    report = _envelope("check", args, seed)
    report.update({
        "integrand": f.name, "domain": domain.to_dict(), "p": p, "q": q,
        "checks": results, "passed": passed,
    })
    write_json(out / "report.json", report)
    return 0 if passed else 1


def cmd_minimize(spec, out, args):
    domain = _parse_domain(spec)
    f = _parse_integrand(spec, domain.dim)
    p, q = _parse_pq(spec)
    seed = _seed_of(spec, args)
    resolution = _int(spec, "resolution", "", default=16, minimum=1)
    levels = _int(spec, "levels", "", default=3, minimum=1)
    boundary_kind, boundary_fn = _parse_boundary(spec, domain.dim)
    opts, init, amplitude = _parse_solver(spec)
    opts.trace = bool(args.verbose)

    probe, n_samples = _parse_probe(spec, domain)
    cert = _parse_growth(spec, p, q)
    cert_source = "spec"
    if cert is None:
        cert = suggest_growth(f, p, q, probe, n_samples=n_samples, seed=seed)
        cert_source = "suggested" if cert is not None else "certificate-unavailable"

    # Default infimum estimate: pointwise bound |Omega| * inf f, but only for
    # integrands that fail the convexity check. With convexity certified the
    # direct method guarantees attainment, so the non-attainment flag stays off
    # unless the spec pins an explicit infimum_hint.
    lower_bound = _num(spec, "infimum_hint", "", default=None)
    if lower_bound is None:
        conv = check_convexity(f, probe, n_samples=n_samples, seed=seed)
        if not conv.certified:
            lower_bound = domain.measure * probe_minimum(f, probe, seed=seed)

    setup = ProblemSetup(
        domain=domain, resolution=resolution, boundary=boundary_fn, init=init,
        perturb_amplitude=amplitude, seed=seed, p=p, opts=opts,
    )
    rep = minimize_refining(f, setup, levels, lower_bound=lower_bound,
                            track_radius=cert is not None)

    certificates = []
    radius_violations = 0
    if cert is not None:
        F0 = rep.levels[0].F_initial
        mesh = make_mesh(domain, resolution)
        for lev in range(levels):
            u0 = interpolate(mesh, boundary_fn)
            item = {"level": lev}
            try:
                cc = coercivity_certificate(cert, u0, F0, domain)
                hist = rep.radius_histories[lev]
                bad = sum(1 for r in hist
                          if r > cc.radius_R + 1e-9 * (1.0 + cc.radius_R))
                radius_violations += bad
                item.update({"certificate": cc.to_dict(),
                             "iterates_checked": len(hist),
                             "radius_violations": bad})
            except CertificateUnavailableError as e:
                item.update({"certificate": None,
                             "note": "certificate-unavailable", "reason": str(e)})
            certificates.append(item)
            if lev < levels - 1:
                mesh = refine(mesh)

    report = _envelope("minimize", args, seed)
    report.update(rep.to_dict())
    report.update({
        "domain": domain.to_dict(), "p": p, "q": q,
        "boundary": boundary_kind, "resolution": resolution,
        "solver": {"method": opts.method, "gtol": opts.gtol,
                   "max_iters": opts.max_iters, "init": init},
        "growth": {
            "source": cert_source,
            "certificate": None if cert is None else cert.to_dict(),
        },
        "coercivity": {
            "certificates": certificates,
            "radius_violations": radius_violations,
        } if cert is not None else {"note": "certificate-unavailable"},
    })
    write_json(out / "report.json", report)
    write_json(out / "field.json", rep.final_field.to_dict())
    if args.verbose:
        rows = []
        for lev, trace in enumerate(rep.traces):
            for it, F, gnorm, step in trace:
                rows.append((lev, it, F, gnorm, step))
        write_csv(out / "trace.csv", ["level", "iter", "F", "gnorm", "step"], rows)
    return 0 if rep.status == CONVERGED else 1


_TRUNCATION_JS = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0)


def cmd_semicont(spec, out, args):
    domain = _parse_domain(spec)
    f = _parse_integrand(spec, domain.dim)
    p, q = _parse_pq(spec)
    seed = _seed_of(spec, args)
    d = _field(spec, "sequence", "", dict, "an object")
    kind = _str(d, "kind", "sequence",
                allowed={"sawtooth", "modulated-sawtooth", "strong-perturbation"})
    k_max = _int(d, "k_max", "sequence", default=16, minimum=1)
    resolution = _int(d, "resolution", "sequence", default=None, minimum=1)
    expected = _str(d, "expected_verdict", "sequence",
                    allowed={"lsc-consistent", "lsc-violated"}, default=None)
    tol = _num(spec, "tol", "", default=1e-9)

    try:
        family = SequenceFamily(kind, domain, resolution)
        lab = liminf_check(f, family, k_max, tol=tol)
        witness = weak_convergence_witness(family, k_max, p=p, q=q)
        v_last = family.sample(k_max).field
    except (InvalidResolutionError, InvalidDomainError) as e:
        raise SpecError("sequence", str(e))

    trunc_rows = [(j, *truncation_measures(v_last, j, p)) for j in _TRUNCATION_JS]

    report = _envelope("semicont", args, seed)
    report.update({
        "integrand": f.name, "domain": domain.to_dict(), "p": p, "q": q,
        "sequence": {"kind": kind, "k_max": k_max, "resolution": resolution},
        "liminf": lab.to_dict(),
        "weak_witness": witness.to_dict(),
        "truncation": {"p": p, "k": k_max,
                       "rows": [list(r) for r in trunc_rows]},
        "expected_verdict": expected,
        "verdict": lab.verdict,
        "verdict_match": None if expected is None else (lab.verdict == expected),
    })
    write_json(out / "report.json", report)
    write_csv(out / "table_liminf.csv",
              ["k", "F", "seminorm", "pairing_max", "u_distance"],
              [(k, lab.F_values[i], witness.seminorms[i],
                witness.pairing_max[i], witness.u_distances[i])
               for i, k in enumerate(lab.k_values)])
    write_csv(out / "table_truncation.csv", ["j", "measure", "bound"], trunc_rows)
    if expected is not None and lab.verdict != expected:
        return 1
    return 0


_PROFILES = ("linear", "sign-step", "sine")


def cmd_lemma_apim(spec, out, args):
    domain = _parse_domain(spec)
    if not isinstance(domain, Interval):
        raise SpecError("domain.kind", "lemma-apim profiles are defined on intervals")
    seed = _seed_of(spec, args)
    d = _field(spec, "deviation", "", dict, "an object")
    profile = _str(d, "profile", "deviation", allowed=set(_PROFILES))
    eps = _num(d, "eps", "deviation", default=0.01)
    if eps <= 0:
        raise SpecError("deviation.eps", f"must be positive, got {eps}")
    cells = _field(d, "cells", "deviation", list, "a list", default=None)
    if cells is None:
        dyadic = _int(d, "dyadic_levels", "deviation", default=12, minimum=1)
        cells = [2**j for j in range(1, dyadic + 1)]
    else:
        for i, m in enumerate(cells):
            if isinstance(m, bool) or not isinstance(m, int) or m < 1:
                raise SpecError(f"deviation.cells[{i}]",
                                f"must be a positive integer, got {m!r}")

    if profile == "linear":
        u = Piecewise1D.affine(domain, domain.a, 1.0)
    elif profile == "sign-step":
        u = Piecewise1D.step(domain, 0.5 * (domain.a + domain.b), -1.0, 1.0)
    else:
        res = _int(d, "resolution", "deviation", default=4096, minimum=2)
        mesh = make_mesh(domain, res)
        u = interpolate(
            mesh,
            lambda V: np.sin(2.0 * np.pi * (V[:, 0] - domain.a) / (domain.b - domain.a)),
        )

    rows = []
    for m in cells:
        P = make_partition(domain, m)
        u_P = partition_average(u, P)
        rows.append((m, P.norm, measure_deviation(u, u_P, eps)))
    decayed = rows[-1][2] <= rows[0][2]

    report = _envelope("lemma-apim", args, seed)
    report.update({
        "profile": profile, "eps": eps,
        "rows": [list(r) for r in rows], "decayed": decayed,
    })
    write_json(out / "report.json", report)
    write_csv(out / "table_deviation.csv", ["m", "norm", "measure"], rows)
    return 0 if decayed else 1


# ---------------------------------------------------------------------------
# entry point

_COMMANDS = {
    "check": cmd_check,
    "minimize": cmd_minimize,
    "semicont": cmd_semicont,
    "lemma-apim": cmd_lemma_apim,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="varmin",
        description="Variational minimization toolkit: checks, minimization, "
                    "semicontinuity experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--spec", required=True, help="problem spec (JSON)")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the spec seed")
        sp.add_argument("--no-timestamp", action="store_true",
                        help="omit timestamps for byte-stable reports")
        sp.add_argument("-v", "--verbose", action="store_true",
                        help="also write per-iteration traces where applicable")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.spec).read_text()
    except OSError as e:
        print(f"spec error: cannot read {args.spec}: {e}", file=sys.stderr)
        return 2
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as e:
        print(f"spec error: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}",
              file=sys.stderr)
        return 2
    if not isinstance(spec, dict):
        print("spec error at <root>: expected a JSON object", file=sys.stderr)
        return 2

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return _COMMANDS[args.command](spec, out, args)
    except SpecError as e:
        print(str(e), file=sys.stderr)
        return 2
    except EvaluationError as e:
        print(f"evaluation error: {e}", file=sys.stderr)
        return 3
    except VarminError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


def entry():
    sys.exit(main())
