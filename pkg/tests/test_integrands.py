"""Condition checks on the integrand catalog: convexity, growth, derivatives."""

import numpy as np
import pytest
from scipy.optimize import brentq

from varmin import (
    CATALOG_NAMES,
    CONVEX_NAMES,
    EvaluationError,
    GrowthCertificate,
    Integrand,
    Interval,
    ProbeBox,
    Rectangle,
    UnknownIntegrandError,
    check_convexity,
    check_derivatives,
    check_growth,
    get_integrand,
    probe_minimum,
    suggest_growth,
)
from varmin.integrands import eval_checked


def probe1d(**kw):
    return ProbeBox.for_domain(Interval(0.0, 1.0), **kw)


def probe2d(**kw):
    return ProbeBox.for_domain(Rectangle(0.0, 1.0, 0.0, 1.0), **kw)


# ---------------------------------------------------------------------------
# catalog basics

def test_unknown_integrand():
    with pytest.raises(UnknownIntegrandError):
        get_integrand("poisson")


def test_p_laplace_needs_p_above_one():
    with pytest.raises(ValueError):
        get_integrand("p-laplace", params={"p": 1.0})


@pytest.mark.parametrize("dim", [1, 2])
def test_catalog_point_values(dim):
    xi1 = np.zeros(dim)
    xi1[0] = 1.0
    x = np.full(dim, 0.3)
    assert eval_checked(get_integrand("dirichlet", dim=dim), x, 0.0, xi1) == 0.5
    assert eval_checked(get_integrand("dirichlet-mass", dim=dim), x, 2.0, xi1) == 2.5
    assert eval_checked(get_integrand("double-well", dim=dim), x, 0.0, np.zeros(dim)) == 1.0
    ms = eval_checked(get_integrand("minimal-surface", dim=dim), x, 0.0, xi1)
    assert ms == pytest.approx(np.sqrt(2.0), abs=1e-15)
    pl = eval_checked(get_integrand("p-laplace", dim=dim, params={"p": 3.0}), x, 0.0, xi1)
    assert pl == pytest.approx(1.0 / 3.0, abs=1e-15)


def test_eval_checked_reports_bad_point():
    bad = Integrand(
        name="holey", dim=1,
        eval=lambda x, u, xi: np.where(np.abs(xi[..., 0]) < 0.5, np.nan, xi[..., 0]),
        d_u=lambda x, u, xi: np.zeros(np.shape(u)),
        d_xi=lambda x, u, xi: np.ones_like(xi),
        params={},
    )
    with pytest.raises(EvaluationError) as exc:
        eval_checked(bad, np.array([[0.5], [0.5]]), np.zeros(2),
                     np.array([[1.0], [0.0]]))
    assert exc.value.point is not None


# ---------------------------------------------------------------------------
# convexity

@pytest.mark.parametrize("name", CONVEX_NAMES)
@pytest.mark.parametrize("dim", [1, 2])
def test_convex_catalog_certified(name, dim):
    probe = probe1d() if dim == 1 else probe2d()
    rep = check_convexity(get_integrand(name, dim=dim), probe)
    assert rep.certified
    assert rep.witness is None


@pytest.mark.parametrize("dim", [1, 2])
def test_double_well_counterexample(dim):
    probe = probe1d() if dim == 1 else probe2d()
    f = get_integrand("double-well", dim=dim)
    rep = check_convexity(f, probe)
    assert rep.status == "counterexample"
    w = rep.witness
    # recompute the gap from the witness and confirm it is a real violation
    xm = w.lam * np.asarray(w.xi1) + (1 - w.lam) * np.asarray(w.xi2)
    f1 = eval_checked(f, np.asarray(w.x), w.u, np.asarray(w.xi1))
    f2 = eval_checked(f, np.asarray(w.x), w.u, np.asarray(w.xi2))
    fm = eval_checked(f, np.asarray(w.x), w.u, xm)
    assert fm - (w.lam * f1 + (1 - w.lam) * f2) == pytest.approx(w.violation, rel=1e-12)
    assert w.violation > 1e-3


def test_double_well_witness_found_in_tight_box():
    rep = check_convexity(get_integrand("double-well", dim=1),
                          probe1d(u_bound=2.0, xi_bound=2.0))
    assert rep.status == "counterexample"


# ---------------------------------------------------------------------------
# growth certificates

def test_certificate_validation():
    with pytest.raises(ValueError):
        GrowthCertificate(0.0, 0.0, 0.0, 2.0, 1.0)   # c0 must be positive
    with pytest.raises(ValueError):
        GrowthCertificate(1.0, 0.0, 0.0, 1.0, 1.0)   # p must exceed 1
    with pytest.raises(ValueError):
        GrowthCertificate(1.0, 0.0, 0.0, 2.0, 2.0)   # q < p required


def test_dirichlet_growth_tight_equality_holds():
    f = get_integrand("dirichlet", dim=1)
    rep = check_growth(f, GrowthCertificate(0.5, 0.0, 0.0, 2.0, 1.0), probe1d())
    assert rep.holds


def test_p_laplace_growth_tight_equality_holds():
    f = get_integrand("p-laplace", dim=1, params={"p": 3.0})
    rep = check_growth(f, GrowthCertificate(1.0 / 3.0, 0.0, 0.0, 3.0, 1.0), probe1d())
    assert rep.holds


def test_double_well_growth_certificate():
    # brute-force oracle: min over xi of (xi^2-1)^2 - 0.5 xi^4 is exactly -1
    # (attained at xi^2 = 2), so c2 = -1 is tight and c2 = -0.99 is violated.
    xs = np.linspace(-30.0, 30.0, 2000001)
    resid = (xs**2 - 1.0) ** 2 - 0.5 * xs**4
    assert resid.min() == pytest.approx(-1.0, abs=1e-8)
    assert xs[np.argmin(resid)] ** 2 == pytest.approx(2.0, abs=1e-4)

    f = get_integrand("double-well", dim=1)
    assert check_growth(f, GrowthCertificate(0.5, 1.0, -1.0, 4.0, 2.0), probe1d()).holds
    rep = check_growth(f, GrowthCertificate(0.5, 1.0, -0.99, 4.0, 2.0),
                       probe1d(u_bound=2.0, xi_bound=2.0))
    assert rep.status == "violation"
    assert abs(rep.witness.xi[0]) == pytest.approx(np.sqrt(2.0), abs=0.1)


def test_minimal_surface_growth_crossover():
    # sqrt(1+y^2) < c0 y^2 exactly above the positive root of c0 y^2 = sqrt(1+y^2)
    c0 = 1e-2
    crossover = brentq(lambda y: c0 * y * y - np.sqrt(1.0 + y * y), 1.0, 1e4)
    assert crossover == pytest.approx(100.005, abs=1e-2)

    f = get_integrand("minimal-surface", dim=1)
    cert = GrowthCertificate(c0, 0.0, 0.0, 2.0, 1.0)
    inside = check_growth(f, cert, probe1d(xi_bound=120.0), ladder_rungs=0)
    assert inside.status == "violation"
    assert abs(inside.witness.xi[0]) > crossover
    below = check_growth(f, cert, probe1d(xi_bound=80.0), ladder_rungs=0)
    assert below.holds  # box stops short of the crossover
    ladder = check_growth(f, cert, probe1d(xi_bound=80.0))
    assert ladder.status == "violation"  # the ladder reaches past it


@pytest.mark.parametrize("p", [1.5, 2.0, 4.0])
def test_minimal_surface_violates_any_p_growth(p):
    f = get_integrand("minimal-surface", dim=1)
    cert = GrowthCertificate(0.05, 0.0, 0.0, p, 1.0)
    rep = check_growth(f, cert, probe1d())
    assert rep.status == "violation"
    w = rep.witness
    assert w.f_value < w.bound_value


# ---------------------------------------------------------------------------
# growth suggestion

def test_suggest_growth_dirichlet_mass():
    f = get_integrand("dirichlet-mass", dim=1)
    cert = suggest_growth(f, 2.0, 1.0, probe1d())
    assert cert is not None
    assert cert.c0 == pytest.approx(0.25, abs=1e-12)
    assert cert.c1 == pytest.approx(2.5, abs=1e-12)
    assert cert.c2 == pytest.approx(-3.125, abs=1e-6)
    # global validity: 0.25 xi^2 + 0.5 u^2 - 2.5|u| + 3.125 = 0.25 xi^2 + 0.5(|u| - 2.5)^2
    assert check_growth(f, cert, probe1d()).holds


def test_suggest_growth_dirichlet():
    cert = suggest_growth(get_integrand("dirichlet", dim=1), 2.0, 1.0, probe1d())
    assert cert is not None
    assert cert.c0 == pytest.approx(0.25, abs=1e-12)
    assert cert.c1 == 0.0
    assert abs(cert.c2) <= 1e-8


def test_suggest_growth_double_well():
    f = get_integrand("double-well", dim=1)
    cert = suggest_growth(f, 4.0, 2.0, probe1d())
    assert cert is not None
    assert 0.49 < cert.c0 <= 0.5
    assert cert.c2 == pytest.approx(-1.0, abs=0.03)
    assert check_growth(f, cert, probe1d()).holds


def test_suggest_growth_minimal_surface_declines():
    assert suggest_growth(get_integrand("minimal-surface", dim=1),
                          2.0, 1.0, probe1d()) is None
    assert suggest_growth(get_integrand("minimal-surface", dim=2),
                          2.0, 1.0, probe2d()) is None


# ---------------------------------------------------------------------------
# derivatives and pointwise minimum

@pytest.mark.parametrize("name", CATALOG_NAMES)
@pytest.mark.parametrize("dim", [1, 2])
def test_derivative_consistency(name, dim):
    f = get_integrand(name, dim=dim)
    probe = probe1d() if dim == 1 else probe2d()
    err_u, err_xi = check_derivatives(f, probe, n_samples=1000)
    assert err_u <= 1e-6
    assert err_xi <= 1e-6


def test_probe_minimum_values():
    assert probe_minimum(get_integrand("dirichlet", dim=1), probe1d()) == 0.0
    assert probe_minimum(get_integrand("minimal-surface", dim=1), probe1d()) \
        == pytest.approx(1.0, abs=1e-9)
    # the double-well floor at (u, xi) = (0, +-1) is found by the polish
    assert probe_minimum(get_integrand("double-well", dim=1), probe1d()) \
        == pytest.approx(0.0, abs=1e-9)


def test_probe_box_matches_domain():
    probe = ProbeBox.for_domain(Interval(-1.0, 3.0))
    assert probe.x_bounds == ((-1.0, 3.0),)
    probe2 = ProbeBox.for_domain(Rectangle(0.0, 2.0, -1.0, 1.0))
    assert probe2.x_bounds == ((0.0, 2.0), (-1.0, 1.0))
