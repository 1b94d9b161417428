"""Assembly of integral functionals over P1 fields, norms, and the coercivity
estimate chain (growth bound, triangle inequality, Friedrichs, Hoelder)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg, optimize

from .domains import Interval
from .errors import CertificateUnavailableError, EvaluationError
from .integrands import GrowthCertificate, Integrand
from .meshes import FemField, Mesh, cell_gradients, make_mesh


def assemble_F(f: Integrand, u: FemField, order: Optional[int] = None) -> float:
    """Quadrature value of integral f(x, u, grad u) dx over the field's mesh.

    Cells are summed in index order; the per-cell reduction has fixed shape, so
    repeated runs give bit-identical values.
    """
    mesh = u.mesh
    order = f.quadrature_order if order is None else order
    pts, w = mesh.quadrature_points(order)
    U = u.values_at_quadrature(order)
    G = cell_gradients(u)
    XI = np.broadcast_to(G[:, None, :], pts.shape)
    vals = np.asarray(f.eval(pts, U, XI), dtype=float)
    bad = ~np.isfinite(vals)
    if bad.any():
        c = int(np.argmax(bad.any(axis=1)))
        raise EvaluationError(
            f"{f.name} evaluated to a non-finite value during assembly", cell=c
        )
    return float((w * vals).sum(axis=1).sum())


def assemble_grad(f: Integrand, u: FemField, order: Optional[int] = None) -> np.ndarray:
    """Gradient of assemble_F in the vertex coefficients.

    Rows of Dirichlet (boundary) vertices are zeroed: this is the gradient on
    the affine subspace with fixed boundary values.
    """
    mesh = u.mesh
    order = f.quadrature_order if order is None else order
    pts, w = mesh.quadrature_points(order)
    bary, _ = mesh.reference_rule(order)
    U = u.values_at_quadrature(order)
    G = cell_gradients(u)
    XI = np.broadcast_to(G[:, None, :], pts.shape)
    du = np.asarray(f.d_u(pts, U, XI), dtype=float)
    dxi = np.asarray(f.d_xi(pts, U, XI), dtype=float)
    if not (np.isfinite(du).all() and np.isfinite(dxi).all()):
        raise EvaluationError(f"{f.name} derivative is non-finite during assembly")
    contrib = np.einsum("cq,qj->cj", w * du, bary)
    contrib += np.einsum("cq,cqd,cjd->cj", w, dxi, mesh.shape_gradients)
    grad = np.zeros(mesh.n_vertices)
    np.add.at(grad, mesh.cells, contrib)
    grad[mesh.boundary_vertices] = 0.0
    return grad


def lp_norm(u: FemField, p: float, order: int = 3) -> float:
    """Quadrature-evaluated L^p norm of the field."""
    mesh = u.mesh
    _, w = mesh.quadrature_points(order)
    U = u.values_at_quadrature(order)
    return float((w * np.abs(U) ** p).sum() ** (1.0 / p))


def w1p_seminorm(u: FemField, p: float) -> float:
    """||grad u||_p; exact for P1 fields (gradients are cellwise constant)."""
    G = cell_gradients(u)
    mags = np.sqrt((G * G).sum(axis=1))
    return float((u.mesh.cell_measures * mags**p).sum() ** (1.0 / p))


def _stiffness_mass_interior(mesh: Mesh):
    """Dense P1 stiffness and mass matrices on interior vertices (1D)."""
    n = mesh.n_vertices
    K = np.zeros((n, n))
    M = np.zeros((n, n))
    for (i, j), h in zip(mesh.cells, mesh.cell_measures):
        K[i, i] += 1.0 / h
        K[j, j] += 1.0 / h
        K[i, j] -= 1.0 / h
        K[j, i] -= 1.0 / h
        M[i, i] += h / 3.0
        M[j, j] += h / 3.0
        M[i, j] += h / 6.0
        M[j, i] += h / 6.0
    idx = mesh.interior_vertices
    return K[np.ix_(idx, idx)], M[np.ix_(idx, idx)]


def friedrichs_constant(domain, p: float, resolution: int = 64) -> float:
    """Constant C with ||u||_p <= C ||grad u||_p for zero-trace u.

    For p = 2 on an interval this refines (b-a)/pi through inverse power
    iteration on the discrete stiffness/mass eigenproblem; otherwise the
    elementary (non-sharp) upper bound diam(domain) is returned.
    """
    if p == 2 and isinstance(domain, Interval):
        mesh = make_mesh(domain, resolution)
        K, M = _stiffness_mass_interior(mesh)
        cho = linalg.cho_factor(K)
        x = np.ones(K.shape[0])
        lam_prev = 0.0
        for _ in range(500):
            y = linalg.cho_solve(cho, M @ x)
            y /= np.sqrt(y @ (M @ y))
            lam = (y @ (K @ y)) / (y @ (M @ y))
            x = y
            if abs(lam - lam_prev) <= 1e-14 * abs(lam):
                break
            lam_prev = lam
        return float(1.0 / np.sqrt(lam))
    return float(domain.diameter)


@dataclass(frozen=True)
class CoercivityCertificate:
    """Radius bound for the shifted seminorm on a sublevel set of F.

    phi(R) = c0 * max(R - D, 0)^p - A * R^q - B is a lower bound for F over
    fields u0 + v with ||grad v||_p = R; radius_R is the largest root of
    phi(R) = F0. Constants:
      D = ||grad u0||_p                      (triangle inequality, exact)
      A = |c1| * 2^(q-1) * C_q^q * H^q       (Friedrichs then Hoelder)
      B = |c1| * 2^(q-1) * ||u0||_q^q - c2 * |Omega|
      H = |Omega|^(1/q - 1/p)
    """

    radius_R: float
    F0: float
    c0: float
    p: float
    A: float
    q: float
    B: float
    shift_D: float
    friedrichs_C: float
    holder_H: float
    u0_q_norm: float
    omega_measure: float
    growth: GrowthCertificate

    def phi(self, R):
        R = np.asarray(R, dtype=float)
        return (
            self.c0 * np.maximum(R - self.shift_D, 0.0) ** self.p
            - self.A * R**self.q
            - self.B
        )

    def to_dict(self):
        return {
            "radius_R": self.radius_R,
            "F0": self.F0,
            "constants": {"c0": self.c0, "A": self.A, "B": self.B},
            "p": self.p,
            "q": self.q,
            "shift_D": self.shift_D,
            "friedrichs_C": self.friedrichs_C,
            "holder_H": self.holder_H,
            "u0_q_norm": self.u0_q_norm,
            "omega_measure": self.omega_measure,
            "growth": self.growth.to_dict(),
        }


def coercivity_certificate(growth: GrowthCertificate, u0: FemField, F0: float,
                           domain=None) -> CoercivityCertificate:
    """Build the radius certificate for the sublevel set {F <= F0} in u0 + W0.

    Follows the estimate chain: integrate the growth bound, lower the gradient
    term by the (exact) triangle inequality, and control the |u|^q term with
    Friedrichs on the zero-trace part followed by Hoelder against |Omega|.
    The largest root of phi = F0 is isolated by a bounded scalar minimization
    and then bisected to absolute tolerance 1e-10.
    """
    domain = u0.mesh.domain if domain is None else domain
    p, q = growth.p, growth.q
    omega = domain.measure
    D = w1p_seminorm(u0, p)
    u0q = lp_norm(u0, q)
    Cq = friedrichs_constant(domain, q)
    H = omega ** (1.0 / q - 1.0 / p)
    A = abs(growth.c1) * 2.0 ** (q - 1.0) * Cq**q * H**q
    B = abs(growth.c1) * 2.0 ** (q - 1.0) * u0q**q - growth.c2 * omega

    def phi(R):
        return growth.c0 * max(R - D, 0.0) ** p - A * R**q - B

    # phi is decreasing then increasing; find an upper bracket first
    R_hi = max(1.0, 2.0 * D)
    while phi(R_hi) <= F0 + 1.0:
        R_hi *= 2.0
        if R_hi > 1e12:
            raise CertificateUnavailableError(
                "no radius bracket below 1e12; inputs are inconsistent"
            )
    rmin = optimize.minimize_scalar(phi, bounds=(0.0, R_hi), method="bounded",
                                    options={"xatol": 1e-12})
    lo = float(rmin.x)
    if min(phi(lo), phi(0.0)) > F0:
        raise CertificateUnavailableError(
            "phi exceeds F0 everywhere: the sublevel set is empty"
        )
    if phi(lo) > F0:
        lo = 0.0
    hi = R_hi
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if phi(mid) <= F0:
            lo = mid
        else:
            hi = mid
    radius = 0.5 * (lo + hi)
    return CoercivityCertificate(
        radius_R=float(radius), F0=float(F0), c0=growth.c0, p=p, A=float(A), q=q,
        B=float(B), shift_D=float(D), friedrichs_C=float(Cq), holder_H=float(H),
        u0_q_norm=float(u0q), omega_measure=float(omega), growth=growth,
    )
