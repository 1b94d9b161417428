"""Descent loop behavior: exact fixed points, Armijo decrease, refinement."""

import numpy as np
import pytest

from varmin import (
    CONVERGED,
    DIVERGED,
    EvaluationError,
    FemField,
    Integrand,
    Interval,
    MAX_ITERS,
    ProblemSetup,
    Rectangle,
    SolverOptions,
    get_integrand,
    interpolate,
    make_mesh,
    minimize_fixed,
    minimize_refining,
    w1p_seminorm,
)
from varmin.semicontinuity import make_sequence

DOM = Interval(0.0, 1.0)


def linear(X):
    return X[:, 0]


def zero(X):
    return np.zeros(len(X))


# ---------------------------------------------------------------------------
# exact discrete minimizers are fixed points

EXACT_CASES = [
    ("dirichlet", None, 0.5),
    ("p-laplace", {"p": 3.0}, 1.0 / 3.0),
    ("minimal-surface", None, np.sqrt(2.0)),
]


@pytest.mark.parametrize("name,params,F_star", EXACT_CASES)
def test_boundary_extension_is_fixed_point(name, params, F_star):
    f = get_integrand(name, dim=1, params=params)
    setup = ProblemSetup(DOM, 8, linear, opts=SolverOptions())
    rep = minimize_refining(f, setup, 3)
    assert rep.status == CONVERGED
    for rec in rep.levels:
        assert rec.iterations == 0  # the interpolated slope field has zero gradient
        assert rec.status == CONVERGED
        assert rec.F == pytest.approx(F_star, abs=1e-12)
    assert rep.monotone_ok
    assert not rep.non_attainment


def test_solution_matches_linear_interpolant():
    setup = ProblemSetup(DOM, 8, linear, init="perturb", perturb_amplitude=0.3,
                         seed=5, opts=SolverOptions(method="lbfgs", gtol=1e-10,
                                                    trace=True))
    rep = minimize_refining(get_integrand("dirichlet", dim=1), setup, 2)
    assert rep.status == CONVERGED
    err = np.max(np.abs(rep.final_field.coeffs - rep.final_field.mesh.vertices[:, 0]))
    assert err <= 1e-10
    assert rep.levels[-1].F == pytest.approx(0.5, abs=1e-12)
    for trace in rep.traces:
        Fs = [row[1] for row in trace]
        assert all(b <= a for a, b in zip(Fs, Fs[1:]))


def test_armijo_strictly_decreases_from_perturbed_init():
    f = get_integrand("dirichlet-mass", dim=1)
    mesh = make_mesh(DOM, 8)
    rng = np.random.default_rng(4)
    coeffs = mesh.vertices[:, 0] + 0.4 * rng.standard_normal(mesh.n_vertices)
    coeffs[mesh.boundary_vertices] = mesh.vertices[mesh.boundary_vertices, 0]
    u, rec = minimize_fixed(f, FemField(mesh, coeffs),
                            opts=SolverOptions(trace=True))
    assert rec.status == CONVERGED
    Fs = [row[1] for row in rec.trace]
    assert all(b <= a for a, b in zip(Fs, Fs[1:]))
    assert Fs[-1] < Fs[0]


# ---------------------------------------------------------------------------
# boundary handling

def test_boundary_bits_never_move():
    boundary = lambda X: np.sin(3.0 * X[:, 0])
    setup = ProblemSetup(DOM, 8, boundary, init="perturb", perturb_amplitude=0.2,
                         seed=9, opts=SolverOptions())
    rep = minimize_refining(get_integrand("dirichlet-mass", dim=1), setup, 2)
    mesh = rep.final_field.mesh
    want = interpolate(mesh, boundary).coeffs[mesh.boundary_vertices]
    got = rep.final_field.coeffs[mesh.boundary_vertices]
    assert np.array_equal(got, want)  # bit identical, not merely close


def test_boundary_bits_never_move_2d():
    boundary = lambda X: X[:, 0] * X[:, 1]
    setup = ProblemSetup(Rectangle(0.0, 1.0, 0.0, 1.0), 4, boundary,
                         init="perturb", perturb_amplitude=0.1, seed=0,
                         opts=SolverOptions(method="lbfgs"))
    rep = minimize_refining(get_integrand("dirichlet", dim=2), setup, 2)
    assert rep.status == CONVERGED
    assert rep.monotone_ok
    mesh = rep.final_field.mesh
    want = interpolate(mesh, boundary).coeffs[mesh.boundary_vertices]
    assert np.array_equal(rep.final_field.coeffs[mesh.boundary_vertices], want)


def test_inconsistent_dirichlet_data_rejected():
    mesh = make_mesh(DOM, 4)
    u = FemField(mesh, np.zeros(mesh.n_vertices))
    f = get_integrand("dirichlet", dim=1)
    with pytest.raises(ValueError):
        minimize_fixed(f, u, dirichlet=np.array([0.0, 1.0]))  # init has 0 at x=1
    with pytest.raises(ValueError):
        minimize_fixed(f, u, dirichlet=np.zeros(3))  # wrong length


# ---------------------------------------------------------------------------
# refinement hierarchy

def test_refining_p_laplace_stays_at_exact_value():
    f = get_integrand("p-laplace", dim=1, params={"p": 3.0})
    setup = ProblemSetup(DOM, 4, linear, init="perturb", perturb_amplitude=0.05,
                         seed=1, p=3.0, opts=SolverOptions())
    rep = minimize_refining(f, setup, 3)
    assert rep.status == CONVERGED
    assert rep.monotone_ok
    for rec in rep.levels:
        assert rec.F == pytest.approx(1.0 / 3.0, abs=1e-6)


def test_report_dict_shape():
    setup = ProblemSetup(DOM, 4, linear, opts=SolverOptions())
    rep = minimize_refining(get_integrand("dirichlet", dim=1), setup, 2)
    d = rep.to_dict()
    assert {"integrand", "status", "final_F", "monotone_ok", "non_attainment",
            "lower_bound", "levels"} <= set(d)
    for lev in d["levels"]:
        assert {"level", "dofs", "cells", "iterations", "F", "gnorm",
                "seminorm", "status", "F_initial"} <= set(lev)


# ---------------------------------------------------------------------------
# the oscillation trap: descent stagnates above a certified lower bound

def test_double_well_flags_non_attainment():
    f = get_integrand("double-well", dim=1)
    setup = ProblemSetup(DOM, 16, zero, init="perturb", perturb_amplitude=0.05,
                         seed=3, p=4.0, opts=SolverOptions(method="lbfgs"))
    rep = minimize_refining(f, setup, 4, lower_bound=0.0)
    assert rep.status == CONVERGED
    assert rep.monotone_ok
    assert rep.non_attainment
    assert rep.lower_bound == 0.0
    # stagnation: refinement barely moves F, which stays well above the bound
    Fs = [rec.F for rec in rep.levels]
    assert Fs[-1] > 1e-3
    assert Fs[0] - Fs[-1] < 1e-4


def test_double_well_sawtooth_minima_track_oscillation_scale():
    # starting from a k-tooth sawtooth, descent settles just below F(sawtooth)
    # = 1/(12 k^2); each doubling of k divides the reachable value by about 4
    f = get_integrand("double-well", dim=1)
    found = []
    for res in (8, 16, 32):
        k = res // 2
        samp = make_sequence("sawtooth", DOM, k, resolution=res)
        u, rec = minimize_fixed(f, samp.field)
        assert rec.status == CONVERGED
        assert rec.F < 1.0 / (12.0 * k * k)
        found.append(rec.F)
    assert found[0] == pytest.approx(0.005126948851726007, rel=1e-9)
    assert found[1] == pytest.approx(0.0012821095351252063, rel=1e-9)
    assert found[2] == pytest.approx(0.00032055077974327436, rel=1e-9)
    for a, b in zip(found, found[1:]):
        assert a / b == pytest.approx(4.0, abs=0.5)


# ---------------------------------------------------------------------------
# status edge cases

def test_line_search_failure_reports_diverged():
    # value jumps as soon as any interior coefficient moves, so no backtracked
    # step can realize the decrease promised by the (inconsistent) derivative
    cliff = Integrand(
        name="cliff", dim=1,
        eval=lambda x, u, xi: 0.5 * xi[..., 0] ** 2
        + np.where(np.abs(u) > 0.0, 1000.0, 0.0),
        d_u=lambda x, u, xi: np.ones(np.shape(u)),
        d_xi=lambda x, u, xi: xi,
        params={},
    )
    mesh = make_mesh(DOM, 8)
    u, rec = minimize_fixed(cliff, FemField(mesh, np.zeros(mesh.n_vertices)))
    assert rec.status == DIVERGED
    assert rec.iterations == 0


def test_max_iters_status():
    mesh = make_mesh(DOM, 8)
    rng = np.random.default_rng(2)
    coeffs = rng.standard_normal(mesh.n_vertices)
    coeffs[mesh.boundary_vertices] = 0.0
    u, rec = minimize_fixed(get_integrand("dirichlet", dim=1),
                            FemField(mesh, coeffs),
                            opts=SolverOptions(max_iters=1))
    assert rec.status == MAX_ITERS
    assert rec.iterations == 1


def test_non_finite_evaluation_raises():
    spiky = Integrand(
        name="spiky", dim=1,
        eval=lambda x, u, xi: np.where(np.abs(u) > 0.05, np.nan, 0.5 * u * u),
        d_u=lambda x, u, xi: u,
        d_xi=lambda x, u, xi: np.zeros(np.shape(xi)),
        params={},
    )
    mesh = make_mesh(DOM, 8)
    coeffs = np.zeros(mesh.n_vertices)
    coeffs[4] = 1.0  # already inside the non-finite region
    with pytest.raises(EvaluationError):
        minimize_fixed(spiky, FemField(mesh, coeffs))


# ---------------------------------------------------------------------------
# solver variants and radius tracking

def test_lbfgs_and_gd_agree_on_strictly_convex_problem():
    f = get_integrand("dirichlet-mass", dim=1)
    mesh = make_mesh(DOM, 16)
    rng = np.random.default_rng(2)
    coeffs = mesh.vertices[:, 0] + 0.2 * rng.standard_normal(mesh.n_vertices)
    coeffs[mesh.boundary_vertices] = mesh.vertices[mesh.boundary_vertices, 0]
    u_gd, r_gd = minimize_fixed(f, FemField(mesh, coeffs.copy()))
    u_lb, r_lb = minimize_fixed(f, FemField(mesh, coeffs.copy()),
                                opts=SolverOptions(method="lbfgs"))
    assert r_gd.status == CONVERGED
    assert r_lb.status == CONVERGED
    assert r_gd.F == pytest.approx(r_lb.F, abs=1e-12)
    assert np.max(np.abs(u_gd.coeffs - u_lb.coeffs)) < 1e-6
    assert r_lb.iterations < r_gd.iterations


def test_radius_history_matches_seminorm_of_shift():
    f = get_integrand("dirichlet", dim=1)
    mesh = make_mesh(DOM, 8)
    u0 = interpolate(mesh, linear)
    rng = np.random.default_rng(13)
    bump = 0.3 * rng.standard_normal(mesh.n_vertices)
    bump[mesh.boundary_vertices] = 0.0
    u_init = FemField(mesh, u0.coeffs + bump)
    u, rec = minimize_fixed(f, u_init, radius_ref=u0, radius_p=2.0)
    assert len(rec.radius_history) == rec.iterations + 1
    first = w1p_seminorm(FemField(mesh, u_init.coeffs - u0.coeffs), 2.0)
    last = w1p_seminorm(FemField(mesh, u.coeffs - u0.coeffs), 2.0)
    assert rec.radius_history[0] == pytest.approx(first, rel=1e-14)
    assert rec.radius_history[-1] == pytest.approx(last, rel=1e-14)
    assert max(rec.radius_history) == rec.radius_history[0]  # shrinks toward u0
