"""Integrand catalog and sampling-based hypothesis certificates.

An integrand is a density f(x, u, xi) together with its partial derivatives in
the u and xi slots. All callables broadcast over leading axes: x and xi carry a
trailing axis of length dim, u is scalar-shaped.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from .errors import EvaluationError, UnknownIntegrandError

DEFAULT_SEED = 1729

CERTIFIED = "certified-on-samples"
COUNTEREXAMPLE = "counterexample"
HOLDS = "holds-on-samples"
VIOLATION = "violation"


@dataclass(frozen=True)
class Integrand:
    name: str
    dim: int
    eval: Callable
    d_u: Callable
    d_xi: Callable
    quartic: bool = False  # request order-3 quadrature during assembly
    params: dict = field(default_factory=dict)

    @property
    def quadrature_order(self) -> int:
        return 3 if self.quartic else 2


@dataclass(frozen=True)
class ProbeBox:
    """Sampling box: x over the closed domain, |u| and |xi| componentwise bounded."""

    x_bounds: tuple
    u_bound: float = 10.0
    xi_bound: float = 20.0

    @classmethod
    def for_domain(cls, domain, u_bound: float = 10.0, xi_bound: float = 20.0):
        return cls(tuple(domain.bounds), float(u_bound), float(xi_bound))

    @property
    def dim(self) -> int:
        return len(self.x_bounds)

    def x_grid(self, n: int = 3):
        axes = [np.linspace(lo, hi, n) for lo, hi in self.x_bounds]
        return _cartesian(axes)

    def u_grid(self, n: int = 3):
        return np.linspace(-self.u_bound, self.u_bound, n)

    def xi_grid(self, n: int = 5):
        axes = [np.linspace(-self.xi_bound, self.xi_bound, n)] * self.dim
        return _cartesian(axes)

    def sample_x(self, rng, n):
        lo = np.array([b[0] for b in self.x_bounds])
        hi = np.array([b[1] for b in self.x_bounds])
        return lo + (hi - lo) * rng.random((n, self.dim))

    def sample_u(self, rng, n):
        return self.u_bound * (2.0 * rng.random(n) - 1.0)

    def sample_xi(self, rng, n):
        return self.xi_bound * (2.0 * rng.random((n, self.dim)) - 1.0)


@dataclass(frozen=True)
class GrowthCertificate:
    """Constants (c0, c1, c2, p, q) for f >= c0|xi|^p + c1|u|^q + c2."""

    c0: float
    c1: float
    c2: float
    p: float
    q: float

    def __post_init__(self):
        if not self.c0 > 0:
            raise ValueError(f"c0 must be positive, got {self.c0}")
        if not 1.0 < self.p < np.inf:
            raise ValueError(f"p must lie in (1, inf), got {self.p}")
        if not 1.0 <= self.q < self.p:
            raise ValueError(f"q must lie in [1, p), got q={self.q}, p={self.p}")

    def bound(self, u, xi):
        xi = np.asarray(xi, dtype=float)
        mag = np.sqrt((xi * xi).sum(axis=-1))
        return self.c0 * mag**self.p + self.c1 * np.abs(u) ** self.q + self.c2

    def to_dict(self):
        return {"c0": self.c0, "c1": self.c1, "c2": self.c2, "p": self.p, "q": self.q}


@dataclass(frozen=True)
class ConvexityWitness:
    x: tuple
    u: float
    xi1: tuple
    xi2: tuple
    lam: float
    violation: float

    def to_dict(self):
        return {
            "x": list(self.x),
            "u": self.u,
            "xi1": list(self.xi1),
            "xi2": list(self.xi2),
            "lambda": self.lam,
            "violation": self.violation,
        }


@dataclass(frozen=True)
class ConvexityReport:
    status: str
    witness: Optional[ConvexityWitness]
    samples_checked: int
    tol: float
    seed: int

    @property
    def certified(self) -> bool:
        return self.status == CERTIFIED

    def to_dict(self):
        return {
            "status": self.status,
            "witness": None if self.witness is None else self.witness.to_dict(),
            "samples_checked": self.samples_checked,
            "tol": self.tol,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class GrowthWitness:
    x: tuple
    u: float
    xi: tuple
    f_value: float
    bound_value: float

    def to_dict(self):
        return {
            "x": list(self.x),
            "u": self.u,
            "xi": list(self.xi),
            "f_value": self.f_value,
            "bound_value": self.bound_value,
        }


@dataclass(frozen=True)
class GrowthReport:
    status: str
    certificate: GrowthCertificate
    witness: Optional[GrowthWitness]
    samples_checked: int
    seed: int

    @property
    def holds(self) -> bool:
        return self.status == HOLDS

    def to_dict(self):
        return {
            "status": self.status,
            "certificate": self.certificate.to_dict(),
            "witness": None if self.witness is None else self.witness.to_dict(),
            "samples_checked": self.samples_checked,
            "seed": self.seed,
        }


def _cartesian(axes):
    grids = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([g.ravel() for g in grids])


def eval_checked(f: Integrand, x, u, xi):
    """Evaluate f and raise EvaluationError at the first non-finite value."""
    vals = np.asarray(f.eval(np.asarray(x, float), np.asarray(u, float), np.asarray(xi, float)), dtype=float)
    bad = ~np.isfinite(vals)
    if bad.any():
        idx = np.unravel_index(np.argmax(bad), vals.shape) if vals.shape else ()
        point = (
            np.asarray(x, float)[idx].tolist() if vals.shape else np.asarray(x, float).tolist(),
            float(np.asarray(u, float)[idx]) if vals.shape else float(u),
            np.asarray(xi, float)[idx].tolist() if vals.shape else np.asarray(xi, float).tolist(),
        )
        raise EvaluationError(f"{f.name} evaluated to a non-finite value", point=point)
    return vals


def check_convexity(f: Integrand, probe: ProbeBox, n_samples: int = 1000,
                    tol: float = 1e-9, seed: int = DEFAULT_SEED) -> ConvexityReport:
    """Midpoint/segment convexity test in the gradient slot over sampled triples.

    Deterministic grid pairs (lambda = 1/2) are checked first, at the probe
    scale and at geometrically shrunken copies of the grid so that non-convex
    features much smaller than the box (the double-well hump at |xi| ~ 1
    inside a +-20 box) are still hit deterministically. Seeded random triples
    with lambda = 1/2 and a uniform lambda follow. The first violation beyond
    tol (relative to the local value scale) is returned as a witness.
    """
    checked = 0

    def test_batch(X, U, XI1, XI2, lams):
        nonlocal checked
        f1 = eval_checked(f, X, U, XI1)
        f2 = eval_checked(f, X, U, XI2)
        for lam in lams:
            XM = lam * XI1 + (1.0 - lam) * XI2
            fm = eval_checked(f, X, U, XM)
            scale = 1.0 + np.maximum(np.maximum(np.abs(f1), np.abs(f2)), np.abs(fm))
            gap = fm - (lam * f1 + (1.0 - lam) * f2)
            checked += gap.size
            mask = gap > tol * scale
            if mask.any():
                i = int(np.argmax(mask))
                return ConvexityWitness(
                    tuple(X[i].tolist()), float(U[i]),
                    tuple(XI1[i].tolist()), tuple(XI2[i].tolist()),
                    float(lam), float(gap[i]),
                )
        return None

    xi_pts = probe.xi_grid(5)
    pairs = list(itertools.combinations(range(len(xi_pts)), 2))
    I = np.array([p[0] for p in pairs])
    J = np.array([p[1] for p in pairs])
    for scale in (1.0, 0.25, 0.0625, 0.015625):
        for x in probe.x_grid(3):
            for u in probe.u_grid(3):
                X = np.broadcast_to(x, (len(pairs), probe.dim))
                U = np.full(len(pairs), u)
                w = test_batch(X, U, scale * xi_pts[I], scale * xi_pts[J], [0.5])
                if w is not None:
                    return ConvexityReport(COUNTEREXAMPLE, w, checked, tol, seed)

    rng = np.random.default_rng(seed)
    X = probe.sample_x(rng, n_samples)
    U = probe.sample_u(rng, n_samples)
    XI1 = probe.sample_xi(rng, n_samples)
    XI2 = probe.sample_xi(rng, n_samples)
    lam_draws = rng.random(n_samples)
    w = test_batch(X, U, XI1, XI2, [0.5])
    if w is None:
        # uniform lambdas, one per triple
        f1 = eval_checked(f, X, U, XI1)
        f2 = eval_checked(f, X, U, XI2)
        lam = lam_draws
        XM = lam[:, None] * XI1 + (1.0 - lam[:, None]) * XI2
        fm = eval_checked(f, X, U, XM)
        scale = 1.0 + np.maximum(np.maximum(np.abs(f1), np.abs(f2)), np.abs(fm))
        gap = fm - (lam * f1 + (1.0 - lam) * f2)
        checked += gap.size
        mask = gap > tol * scale
        if mask.any():
            i = int(np.argmax(mask))
            w = ConvexityWitness(
                tuple(X[i].tolist()), float(U[i]),
                tuple(XI1[i].tolist()), tuple(XI2[i].tolist()),
                float(lam[i]), float(gap[i]),
            )
    if w is not None:
        return ConvexityReport(COUNTEREXAMPLE, w, checked, tol, seed)
    return ConvexityReport(CERTIFIED, None, checked, tol, seed)


def check_growth(f: Integrand, cert: GrowthCertificate, probe: ProbeBox,
                 n_samples: int = 1000, seed: int = DEFAULT_SEED,
                 tol: float = 1e-12, ladder_rungs: int = 14) -> GrowthReport:
    """Verify f >= c0|xi|^p + c1|u|^q + c2 on grid plus seeded random samples.

    The growth condition is asymptotic in |xi|, so after the probe box a
    geometric |xi| ladder (xi_bound * 2^1 .. 2^ladder_rungs along the compass
    directions) is swept as well; a sublinear-in-|xi|^p integrand is caught
    there even when the box itself is too small to expose it. tol guards
    against spurious witnesses where the certificate is tight (equality
    points); it is relative to the local value scale.
    """
    checked = 0

    def test(X, U, XI):
        nonlocal checked
        vals = eval_checked(f, X, U, XI)
        rhs = cert.bound(U, XI)
        scale = 1.0 + np.abs(vals) + np.abs(rhs)
        checked += vals.size
        mask = vals < rhs - tol * scale
        if mask.any():
            i = int(np.argmax(mask))
            return GrowthWitness(
                tuple(X[i].tolist()), float(U[i]), tuple(XI[i].tolist()),
                float(vals[i]), float(rhs[i]),
            )
        return None

    xs = probe.x_grid(3)
    us = probe.u_grid(5)
    xis = probe.xi_grid(7)
    X = np.repeat(xs, len(us) * len(xis), axis=0)
    U = np.tile(np.repeat(us, len(xis)), len(xs))
    XI = np.tile(xis, (len(xs) * len(us), 1))
    w = test(X, U, XI)
    if w is None:
        rng = np.random.default_rng(seed)
        w = test(probe.sample_x(rng, n_samples), probe.sample_u(rng, n_samples),
                 probe.sample_xi(rng, n_samples))
    if w is None:
        dirs = _directions(probe.dim)
        us3 = probe.u_grid(3)
        Xl = np.repeat(xs, len(us3) * len(dirs), axis=0)
        Ul = np.tile(np.repeat(us3, len(dirs)), len(xs))
        base = np.tile(dirs, (len(xs) * len(us3), 1))
        for m in range(1, ladder_rungs + 1):
            w = test(Xl, Ul, probe.xi_bound * 2.0**m * base)
            if w is not None:
                break
    status = HOLDS if w is None else VIOLATION
    return GrowthReport(status, cert, w, checked, seed)


def _directions(dim):
    if dim == 1:
        return np.array([[-1.0], [1.0]])
    angles = np.arange(8) * (np.pi / 4.0)
    return np.column_stack([np.cos(angles), np.sin(angles)])


def suggest_growth(f: Integrand, p: float, q: float, probe: ProbeBox,
                   n_samples: int = 1000, seed: int = DEFAULT_SEED,
                   ladder_rungs: int = 14) -> Optional[GrowthCertificate]:
    """Propose growth constants, or None when no p-growth is detectable.

    c0 comes from the asymptotic ratio inf f / |xi|^p sampled on a geometric
    |xi| ladder extending beyond the probe box; a ratio still decaying at the
    top rungs means the integrand is sublinear in |xi|^p and no certificate is
    proposed. c2 is the polished residual minimum over the probe box, minus a
    slack, and the candidate is re-verified with check_growth before returning.
    """
    dirs = _directions(probe.dim)
    xs = probe.x_grid(3)
    us = probe.u_grid(3)
    mags = probe.xi_bound * (2.0 ** np.arange(ladder_rungs))
    ratios = np.empty(ladder_rungs)
    for m, mag in enumerate(mags):
        XI = mag * dirs
        best = np.inf
        for x in xs:
            for u in us:
                X = np.broadcast_to(x, (len(XI), probe.dim))
                U = np.full(len(XI), u)
                vals = eval_checked(f, X, U, XI)
                best = min(best, float(vals.min()) / mag**p)
        ratios[m] = best
    if ratios.min() <= 1e-12:
        return None
    if ratios[-1] < 0.95 * ratios[-2] or ratios[-2] < 0.95 * ratios[-3]:
        return None  # ratio still decaying: f is sublinear against |xi|^p
    c0 = 0.5 * float(ratios.min())

    # q-slot constant from the residual's |u| ladder (clamped at zero)
    xi_small = probe.xi_grid(5)
    u_mags = probe.u_bound * (2.0 ** np.arange(4))
    u_ratios = []
    xi_mag_p = np.sqrt((xi_small * xi_small).sum(axis=-1)) ** p
    for umag in u_mags:
        best = np.inf
        for sign in (-1.0, 1.0):
            for x in xs:
                X = np.broadcast_to(x, (len(xi_small), probe.dim))
                U = np.full(len(xi_small), sign * umag)
                vals = eval_checked(f, X, U, xi_small)
                resid = vals - c0 * xi_mag_p
                best = min(best, float(resid.min()) / umag**q)
        u_ratios.append(best)
    u_ratios = np.array(u_ratios)
    c1 = 0.0
    if u_ratios.min() > 0 and u_ratios[-1] >= 0.95 * u_ratios[-2]:
        c1 = 0.5 * float(u_ratios.min())

    def residual(z):
        x = z[: probe.dim]
        u = z[probe.dim]
        xi = z[probe.dim + 1 :]
        val = eval_checked(f, x, u, xi)
        mag = float(np.sqrt((xi * xi).sum()))
        return float(val) - c0 * mag**p - c1 * abs(u) ** q

    # coarse grid minimum, then a bounded local polish
    Xg = probe.x_grid(3)
    Ug = probe.u_grid(9)
    XIg = probe.xi_grid(9)
    best_val = np.inf
    best_z = None
    for x in Xg:
        for u in Ug:
            X = np.broadcast_to(x, (len(XIg), probe.dim))
            U = np.full(len(XIg), u)
            vals = eval_checked(f, X, U, XIg)
            resid = vals - c0 * np.sqrt((XIg * XIg).sum(axis=-1)) ** p - c1 * abs(u) ** q
            i = int(np.argmin(resid))
            if resid[i] < best_val:
                best_val = float(resid[i])
                best_z = np.concatenate([x, [u], XIg[i]])
    bounds = list(probe.x_bounds) + [(-probe.u_bound, probe.u_bound)] + [
        (-probe.xi_bound, probe.xi_bound)
    ] * probe.dim
    res = optimize.minimize(residual, best_z, method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 2000})
    z = np.clip(res.x, [b[0] for b in bounds], [b[1] for b in bounds])
    best_val = min(best_val, residual(z))

    slack = 1e-9 * (1.0 + abs(best_val))
    c2 = best_val - slack
    for _ in range(5):
        try:
            cert = GrowthCertificate(c0, c1, c2, p, q)
        except ValueError:
            return None
        report = check_growth(f, cert, probe, n_samples=n_samples, seed=seed)
        if report.holds:
            return cert
        w = report.witness
        c2 = c2 + (w.f_value - w.bound_value) - slack
    return None


def check_derivatives(f: Integrand, probe: ProbeBox, n_samples: int = 1000,
                      step: float = 1e-5, seed: int = DEFAULT_SEED):
    """Max relative gap between d_u/d_xi and central differences of eval."""
    rng = np.random.default_rng(seed)
    X = probe.sample_x(rng, n_samples)
    U = probe.sample_u(rng, n_samples)
    XI = probe.sample_xi(rng, n_samples)

    du = np.asarray(f.d_u(X, U, XI), dtype=float)
    fd = (eval_checked(f, X, U + step, XI) - eval_checked(f, X, U - step, XI)) / (2 * step)
    err_u = float(np.max(np.abs(fd - du) / (1.0 + np.abs(du))))

    dxi = np.asarray(f.d_xi(X, U, XI), dtype=float)
    err_xi = 0.0
    for d in range(probe.dim):
        e = np.zeros(probe.dim)
        e[d] = step
        fd = (eval_checked(f, X, U, XI + e) - eval_checked(f, X, U, XI - e)) / (2 * step)
        err_xi = max(err_xi, float(np.max(np.abs(fd - dxi[:, d]) / (1.0 + np.abs(dxi[:, d])))))
    return err_u, err_xi


def probe_minimum(f: Integrand, probe: ProbeBox, n_samples: int = 2000,
                  seed: int = DEFAULT_SEED) -> float:
    """Pointwise minimum of f over the probe box: grid + random samples,
    then a local polish from the best point (clipped back to the box)."""
    xs = probe.x_grid(3)
    us = probe.u_grid(9)
    xis = probe.xi_grid(9)
    best = np.inf
    best_z = None
    for x in xs:
        for u in us:
            X = np.broadcast_to(x, (len(xis), probe.dim))
            vals = eval_checked(f, X, np.full(len(xis), u), xis)
            i = int(np.argmin(vals))
            if vals[i] < best:
                best = float(vals[i])
                best_z = np.concatenate([x, [u], xis[i]])
    rng = np.random.default_rng(seed)
    X = probe.sample_x(rng, n_samples)
    U = probe.sample_u(rng, n_samples)
    XI = probe.sample_xi(rng, n_samples)
    vals = eval_checked(f, X, U, XI)
    i = int(np.argmin(vals))
    if vals[i] < best:
        best = float(vals[i])
        best_z = np.concatenate([X[i], [U[i]], XI[i]])

    bounds = list(probe.x_bounds) + [(-probe.u_bound, probe.u_bound)] + [
        (-probe.xi_bound, probe.xi_bound)
    ] * probe.dim
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])

    def value(z):
        z = np.clip(z, lo, hi)
        return float(eval_checked(f, z[: probe.dim], z[probe.dim],
                                  z[probe.dim + 1 :]))

    res = optimize.minimize(value, best_z, method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 2000})
    return min(best, value(res.x))


# ---------------------------------------------------------------------------
# catalog

def _sq(xi):
    xi = np.asarray(xi, dtype=float)
    return (xi * xi).sum(axis=-1)


def _dirichlet(dim):
    return Integrand(
        name="dirichlet",
        dim=dim,
        eval=lambda x, u, xi: 0.5 * _sq(xi),
        d_u=lambda x, u, xi: np.zeros(np.shape(u)),
        d_xi=lambda x, u, xi: np.asarray(xi, dtype=float).copy(),
    )


def _dirichlet_mass(dim):
    return Integrand(
        name="dirichlet-mass",
        dim=dim,
        eval=lambda x, u, xi: 0.5 * _sq(xi) + 0.5 * np.asarray(u, float) ** 2,
        d_u=lambda x, u, xi: np.asarray(u, dtype=float).copy(),
        d_xi=lambda x, u, xi: np.asarray(xi, dtype=float).copy(),
    )


def _p_laplace(dim, p):
    p = float(p)
    if not p > 1.0:
        raise ValueError(f"p-laplace exponent must exceed 1, got {p}")

    def d_xi(x, u, xi):
        xi = np.asarray(xi, dtype=float)
        s = np.sqrt(_sq(xi))
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(s > 0.0, s ** (p - 2.0), 0.0)
        return scale[..., None] * xi

    return Integrand(
        name="p-laplace",
        dim=dim,
        eval=lambda x, u, xi: np.sqrt(_sq(xi)) ** p / p,
        d_u=lambda x, u, xi: np.zeros(np.shape(u)),
        d_xi=d_xi,
        params={"p": p},
    )


def _minimal_surface(dim):
    return Integrand(
        name="minimal-surface",
        dim=dim,
        eval=lambda x, u, xi: np.sqrt(1.0 + _sq(xi)),
        d_u=lambda x, u, xi: np.zeros(np.shape(u)),
        d_xi=lambda x, u, xi: np.asarray(xi, float) / np.sqrt(1.0 + _sq(xi))[..., None],
    )


def _double_well(dim):
    return Integrand(
        name="double-well",
        dim=dim,
        eval=lambda x, u, xi: (_sq(xi) - 1.0) ** 2 + np.asarray(u, float) ** 2,
        d_u=lambda x, u, xi: 2.0 * np.asarray(u, dtype=float),
        d_xi=lambda x, u, xi: 4.0 * (_sq(xi) - 1.0)[..., None] * np.asarray(xi, float),
        quartic=True,
    )


CONVEX_NAMES = ("dirichlet", "dirichlet-mass", "p-laplace", "minimal-surface")
CATALOG_NAMES = CONVEX_NAMES + ("double-well",)


def get_integrand(name: str, dim: int = 1, params: Optional[dict] = None) -> Integrand:
    params = dict(params or {})
    if name == "dirichlet":
        return _dirichlet(dim)
    if name == "dirichlet-mass":
        return _dirichlet_mass(dim)
    if name == "p-laplace":
        return _p_laplace(dim, params.get("p", 3.0))
    if name == "minimal-surface":
        return _minimal_surface(dim)
    if name == "double-well":
        return _double_well(dim)
    raise UnknownIntegrandError(f"no integrand named {name!r}; known: {CATALOG_NAMES}")


def catalog(dim: int = 1):
    """The five named integrands with default parameters."""
    return [get_integrand(name, dim) for name in CATALOG_NAMES]
