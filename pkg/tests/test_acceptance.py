"""Acceptance suite: one test per criterion, each pinned to an explicit tolerance.

Each test finishes with a single [PASS] line (run pytest -s to see them).
"""

import json

import numpy as np
import pytest
import scipy.linalg

from varmin import (
    CONVEX_NAMES,
    FemField,
    GrowthCertificate,
    Interval,
    Piecewise1D,
    ProblemSetup,
    SequenceFamily,
    SolverOptions,
    assemble_F,
    assemble_grad,
    check_growth,
    coercivity_certificate,
    friedrichs_constant,
    get_integrand,
    interpolate,
    jensen_cell_check,
    liminf_check,
    make_mesh,
    make_partition,
    measure_deviation,
    minimize_refining,
    partition_average,
    ProbeBox,
    suggest_growth,
    truncation_measures,
)
from varmin.cli import main as cli_main
from varmin.minimize import CONVERGED

DOM = Interval(0.0, 1.0)


def linear(X):
    return X[:, 0]


def run_cli(tmp_path, spec, cmd, tag, *args):
    spec_path = tmp_path / f"{tag}.json"
    spec_path.write_text(json.dumps(spec))
    out = tmp_path / f"out_{tag}"
    code = cli_main([cmd, *args, "--spec", str(spec_path), "--out", str(out),
                     "--no-timestamp"])
    return code, out


def test_dirichlet_exact_minimum():
    f = get_integrand("dirichlet", dim=1)
    setup = ProblemSetup(DOM, 8, linear, opts=SolverOptions())
    rep = minimize_refining(f, setup, 3)
    assert rep.status == CONVERGED
    for rec in rep.levels:
        assert abs(rec.F - 0.5) <= 1e-10
    err = np.max(np.abs(rep.final_field.coeffs - rep.final_field.mesh.vertices[:, 0]))
    assert err <= 1e-10
    print("[PASS] dirichlet 1D: F = 0.5 within 1e-10 at every level; "
          "solution matches the linear interpolant within 1e-10")


def test_minimal_surface_value_and_failed_hypotheses(tmp_path):
    f = get_integrand("minimal-surface", dim=1)
    setup = ProblemSetup(DOM, 8, linear, opts=SolverOptions())
    rep = minimize_refining(f, setup, 3)
    assert rep.status == CONVERGED
    assert abs(rep.levels[-1].F - np.sqrt(2.0)) <= 1e-8

    probe = ProbeBox.for_domain(DOM)
    for p in (1.2, 1.5, 2.0, 3.0, 4.0):
        grep = check_growth(f, GrowthCertificate(0.5, 0.0, 0.0, p, 1.0), probe)
        assert grep.status == "violation"
        assert grep.witness is not None
    assert suggest_growth(f, 2.0, 1.0, probe) is None

    spec = {"domain": {"kind": "interval", "a": 0.0, "b": 1.0},
            "integrand": {"name": "minimal-surface"},
            "boundary": {"kind": "linear"}, "resolution": 8, "levels": 3}
    code, out = run_cli(tmp_path, spec, "minimize", "ms")
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["growth"]["source"] == "certificate-unavailable"
    print("[PASS] minimal-surface 1D: F converges to sqrt(2) within 1e-8; "
          "every p > 1 growth certificate yields a violation witness; "
          "report says certificate-unavailable")


def test_p_laplace_exact_in_p1():
    f = get_integrand("p-laplace", dim=1, params={"p": 3.0})
    setup = ProblemSetup(DOM, 4, linear, p=3.0, opts=SolverOptions())
    rep = minimize_refining(f, setup, 3)
    assert rep.status == CONVERGED
    for rec in rep.levels:
        assert abs(rec.F - 1.0 / 3.0) <= 1e-6
    print("[PASS] p-laplace p=3 1D: F = 1/3 within 1e-6 at all levels")


def test_coercivity_radius_never_violated():
    f = get_integrand("dirichlet-mass", dim=1)
    probe = ProbeBox.for_domain(DOM)
    growth = suggest_growth(f, 2.0, 1.0, probe)
    assert growth is not None
    assert check_growth(f, growth, probe).holds

    setup = ProblemSetup(DOM, 8, linear, init="perturb", perturb_amplitude=0.3,
                         seed=11, opts=SolverOptions(method="lbfgs"))
    rep = minimize_refining(f, setup, 3, track_radius=True)
    assert rep.status == CONVERGED

    mesh = make_mesh(DOM, 8)
    F0 = rep.levels[0].F_initial
    violations = 0
    recorded = 0
    for lev in range(3):
        u0 = interpolate(mesh, linear)
        cert = coercivity_certificate(growth, u0, F0)
        for radius in rep.radius_histories[lev]:
            recorded += 1
            if radius > cert.radius_R + 1e-9 * (1.0 + cert.radius_R):
                violations += 1
        if lev < 2:
            from varmin import refine
            mesh = refine(mesh)
    assert recorded == sum(rec.iterations + 1 for rec in rep.levels)
    assert violations == 0
    print(f"[PASS] coercivity: suggested dirichlet-mass certificate bounds all "
          f"{recorded} recorded iterates across 3 levels; 0 radius violations")


def test_lsc_verdicts_across_catalog():
    for name in CONVEX_NAMES:
        f = get_integrand(name, dim=1)
        for kind in ("sawtooth", "strong-perturbation"):
            rep = liminf_check(f, SequenceFamily(kind, DOM), 64)
            assert rep.verdict == "lsc-consistent", (name, kind)

    dw = get_integrand("double-well", dim=1)
    rep = liminf_check(dw, SequenceFamily("sawtooth", DOM), 64)
    assert rep.verdict == "lsc-violated"
    assert rep.F_limit == 1.0
    for k, F in zip(rep.k_values, rep.F_values):
        assert abs(F - 1.0 / (12.0 * k * k)) <= 1e-12
    print("[PASS] lsc: convex catalog x {sawtooth, strong-perturbation} "
          "k <= 64 all lsc-consistent; double-well x sawtooth matches "
          "1/(12k^2) within 1e-12 and is lsc-violated with F(limit) = 1")


def test_partition_average_deviation_measures():
    ramp = Piecewise1D.affine(DOM, 0.0, 1.0)
    for m in (64, 128, 256, 512, 1024, 2048, 4096):
        P = make_partition(DOM, m)
        assert P.norm <= 0.02
        dev = measure_deviation(ramp, partition_average(ramp, P), 0.01)
        assert dev == 0.0

    step = Piecewise1D.step(DOM, 0.5, -1.0, 1.0)
    for m in (3, 5, 7, 9, 11, 13, 15, 17, 19, 21):
        P = make_partition(DOM, m)
        dev = measure_deviation(step, partition_average(step, P), 0.01)
        assert abs(dev - 1.0 / m) <= 1e-15
    print("[PASS] partition averages: u(x)=x deviation is 0 for all dyadic "
          "partitions with norm <= 0.02; sign-step deviation equals 1/m "
          "(within 1e-15) for odd m")


def test_jensen_cell_inequality():
    mesh = make_mesh(DOM, 16)
    P = make_partition(DOM, 4)
    x0 = np.array([0.5])
    violations = 0
    for name in CONVEX_NAMES:
        f = get_integrand(name, dim=1)
        rng = np.random.default_rng(2027)
        for _ in range(100):
            v = FemField(mesh, rng.standard_normal(mesh.n_vertices))
            if jensen_cell_check(f, x0, 0.0, v, P) > 1e-9:
                violations += 1
    assert violations == 0

    mesh2 = make_mesh(DOM, 2)
    tent = interpolate(mesh2, lambda X: np.minimum(X[:, 0], 1.0 - X[:, 0]))
    gap = jensen_cell_check(get_integrand("double-well", dim=1), x0, 0.0,
                            tent, make_partition(DOM, 1))
    assert gap >= 0.5
    print("[PASS] Jensen per cell: 0 violations above 1e-9 over 100 random "
          "fields x convex catalog; double-well gap on the {-1,1} cell is "
          f"{gap:g} >= 0.5")


def test_chebyshev_inequality_exact():
    mesh = make_mesh(DOM, 24)
    rng = np.random.default_rng(501)
    checked = 0
    for _ in range(50):
        v = FemField(mesh, 2.0 * rng.standard_normal(mesh.n_vertices))
        for j in (0.25, 0.5, 1.0, 2.0, 4.0, 8.0):
            measure, bound = truncation_measures(v, j)
            assert measure <= bound  # exact comparison, no tolerance
            checked += 1
    assert checked == 300
    print("[PASS] Chebyshev: measure <= bound holds exactly for all 300 "
          "random-field x threshold combinations")


def test_friedrichs_constant_against_eigen_oracle():
    n = 64
    h = 1.0 / n
    K = (np.diag(np.full(n - 1, 2.0 / h))
         + np.diag(np.full(n - 2, -1.0 / h), 1)
         + np.diag(np.full(n - 2, -1.0 / h), -1))
    M = (np.diag(np.full(n - 1, 4.0 * h / 6.0))
         + np.diag(np.full(n - 2, h / 6.0), 1)
         + np.diag(np.full(n - 2, h / 6.0), -1))
    lam1 = scipy.linalg.eigh(K, M, eigvals_only=True)[0]
    oracle = 1.0 / np.sqrt(lam1)

    C = friedrichs_constant(DOM, 2.0, resolution=64)
    assert abs(C - oracle) <= 1e-12
    assert abs(C - 1.0 / np.pi) <= 1e-3
    print(f"[PASS] Friedrichs constant on (0,1), p=2: {C:.6f} matches the "
          "64-cell eigenvalue oracle and is within 1e-3 of 1/pi")


def test_gradient_directional_consistency():
    rng = np.random.default_rng(77)
    eps = 1e-5
    for dim in (1, 2):
        if dim == 1:
            mesh = make_mesh(DOM, 12)
        else:
            from varmin import Rectangle
            mesh = make_mesh(Rectangle(0.0, 1.0, 0.0, 1.0), 4)
        for name in ("dirichlet", "dirichlet-mass", "p-laplace",
                     "minimal-surface", "double-well"):
            f = get_integrand(name, dim=dim)
            u = FemField(mesh, 0.5 * rng.standard_normal(mesh.n_vertices))
            g = assemble_grad(f, u)
            for _ in range(20):
                d = rng.standard_normal(mesh.n_vertices)
                d[mesh.boundary_vertices] = 0.0
                up = FemField(mesh, u.coeffs + eps * d)
                dn = FemField(mesh, u.coeffs - eps * d)
                fd = (assemble_F(f, up) - assemble_F(f, dn)) / (2.0 * eps)
                exact = float(g @ d)
                assert abs(fd - exact) <= 1e-6 * max(1.0, abs(exact))
    print("[PASS] gradients: finite differences match assembled directional "
          "derivatives within 1e-6 relative for all catalog integrands, "
          "20 random directions each, in 1D and 2D")


def test_cli_determinism(tmp_path):
    check_spec = {"domain": {"kind": "interval", "a": 0.0, "b": 1.0},
                  "integrand": {"name": "dirichlet"}}
    minimize_spec = {**check_spec, "boundary": {"kind": "linear"},
                     "resolution": 8, "levels": 2,
                     "solver": {"init": "perturb"}}
    semicont_spec = {**check_spec, "integrand": {"name": "double-well"},
                     "p": 4.0, "q": 2.0,
                     "sequence": {"kind": "sawtooth", "k_max": 8}}
    lemma_spec = {"domain": {"kind": "interval", "a": 0.0, "b": 1.0},
                  "deviation": {"profile": "sine", "dyadic_levels": 8}}
    jobs = [
        ("check", check_spec, ["report.json"]),
        ("minimize", minimize_spec, ["report.json", "field.json", "trace.csv"]),
        ("semicont", semicont_spec,
         ["report.json", "table_liminf.csv", "table_truncation.csv"]),
        ("lemma-apim", lemma_spec, ["report.json", "table_deviation.csv"]),
    ]
    for cmd, spec, files in jobs:
        outs = []
        for attempt in ("a", "b"):
            extra = ["-v"] if cmd == "minimize" else []
            code, out = run_cli(tmp_path, spec, cmd, f"{cmd}_{attempt}", *extra)
            assert code == 0, cmd
            outs.append(out)
        for name in files:
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), \
                (cmd, name)
    print("[PASS] determinism: repeated runs of check, minimize, semicont, "
          "and lemma-apim produce byte-identical reports and tables")
