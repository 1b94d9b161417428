"""Partition averaging, oscillating sequences, and lower-semicontinuity probes.

Everything here that claims exactness is computed in closed form: partition
means and deviation measures decompose piecewise-affine fields over the
partition cells (interval splitting in 1D, polygon clipping in 2D), and
superlevel measures of cellwise-constant gradients are finite sums.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .domains import Interval
from .errors import InvalidDomainError, InvalidResolutionError
from .functionals import assemble_F, lp_norm, w1p_seminorm
from .integrands import Integrand, eval_checked
from .meshes import FemField, Mesh, Partition, cell_gradients, interpolate, make_mesh

SEQUENCE_KINDS = ("sawtooth", "modulated-sawtooth", "strong-perturbation")
LSC_CONSISTENT = "lsc-consistent"
LSC_VIOLATED = "lsc-violated"


# ---------------------------------------------------------------------------
# piecewise-affine representations

@dataclass(frozen=True)
class Piecewise1D:
    """Piecewise-affine function on an interval; jumps between pieces allowed.

    pieces: array of rows (x0, x1, value_at_x0, slope), sorted by x0.
    """

    domain: Interval
    pieces: np.ndarray

    @classmethod
    def from_femfield(cls, u: FemField) -> "Piecewise1D":
        if u.mesh.dim != 1:
            raise ValueError("from_femfield needs a 1D field")
        cv = u.mesh.cell_vertices[:, :, 0]
        c = u.coeffs[u.mesh.cells]
        rows = np.column_stack([
            cv[:, 0], cv[:, 1], c[:, 0],
            (c[:, 1] - c[:, 0]) / (cv[:, 1] - cv[:, 0]),
        ])
        rows = rows[np.argsort(rows[:, 0], kind="stable")]
        return cls(u.mesh.domain, rows)

    @classmethod
    def step(cls, domain: Interval, where: float, left: float, right: float) -> "Piecewise1D":
        rows = np.array([
            [domain.a, where, left, 0.0],
            [where, domain.b, right, 0.0],
        ])
        return cls(domain, rows)

    @classmethod
    def affine(cls, domain: Interval, value_at_a: float, slope: float) -> "Piecewise1D":
        return cls(domain, np.array([[domain.a, domain.b, value_at_a, slope]]))

    def __call__(self, x: float) -> float:
        for x0, x1, v0, s in self.pieces:
            if x0 <= x <= x1:
                return float(v0 + s * (x - x0))
        raise ValueError(f"{x} outside the domain")


def _pieces_of(u):
    if isinstance(u, Piecewise1D):
        return u.pieces, u.domain
    if isinstance(u, FemField) and u.mesh.dim == 1:
        pw = Piecewise1D.from_femfield(u)
        return pw.pieces, pw.domain
    raise TypeError(f"need a 1D FemField or Piecewise1D, got {type(u).__name__}")


@dataclass(frozen=True)
class StepFunction:
    """Cellwise-constant function over a partition (the partition average)."""

    partition: Partition
    values: np.ndarray

    def __call__(self, x) -> float:
        p = np.atleast_1d(np.asarray(x, dtype=float))
        for i, cell in enumerate(self.partition.cells):
            if all(lo - 1e-12 <= p[d] <= hi + 1e-12 for d, (lo, hi) in enumerate(cell)):
                return float(self.values[i])
        raise ValueError(f"{p.tolist()} outside the partition")


# ---------------------------------------------------------------------------
# 2D polygon helpers (exact integrals of affine functions over clipped cells)

def _clip(pts: np.ndarray, fn) -> np.ndarray:
    """Sutherland-Hodgman clip of a convex polygon to {fn >= 0}."""
    if len(pts) == 0:
        return pts
    vals = fn(pts)
    out = []
    n = len(pts)
    for i in range(n):
        j = (i + 1) % n
        pi, pj = pts[i], pts[j]
        vi, vj = vals[i], vals[j]
        if vi >= 0.0:
            out.append(pi)
        if (vi > 0.0 and vj < 0.0) or (vi < 0.0 and vj > 0.0):
            t = vi / (vi - vj)
            out.append(pi + t * (pj - pi))
    return np.asarray(out).reshape(-1, 2)


def _clip_to_box(pts: np.ndarray, box) -> np.ndarray:
    (lx, hx), (ly, hy) = box
    for fn in (
        lambda P: P[:, 0] - lx,
        lambda P: hx - P[:, 0],
        lambda P: P[:, 1] - ly,
        lambda P: hy - P[:, 1],
    ):
        pts = _clip(pts, fn)
        if len(pts) < 3:
            return pts[:0]
    return pts


def _poly_area(pts: np.ndarray) -> float:
    if len(pts) < 3:
        return 0.0
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)))


def _poly_centroid(pts: np.ndarray) -> np.ndarray:
    # fan decomposition into triangles around vertex 0
    acc = np.zeros(2)
    area = 0.0
    for i in range(1, len(pts) - 1):
        e1 = pts[i] - pts[0]
        e2 = pts[i + 1] - pts[0]
        a = 0.5 * abs(float(e1[0] * e2[1] - e1[1] * e2[0]))
        acc += a * (pts[0] + pts[i] + pts[i + 1]) / 3.0
        area += a
    if area == 0.0:
        return pts.mean(axis=0)
    return acc / area


def _femfield_2d_cell_data(u: FemField):
    """Per-cell (vertex triples, base value, gradient) for affine evaluation."""
    cv = u.mesh.cell_vertices
    grads = cell_gradients(u)
    base = u.coeffs[u.mesh.cells[:, 0]]
    return cv, base, grads


# ---------------------------------------------------------------------------
# partition average and deviation measure

def partition_average(u, P: Partition):
    """Cellwise mean of u over the partition (exact for piecewise-affine u).

    Arbitrary callables are averaged with a fixed Gauss rule per cell and are
    not exact; interpolate them onto a mesh first if exactness matters.
    """
    if isinstance(u, FemField) and u.mesh.dim == 2:
        return _partition_average_2d(u, P)
    if isinstance(u, (Piecewise1D, FemField)):
        pieces, _ = _pieces_of(u)
        x0, x1, v0, s = pieces.T
        means = np.empty(P.n_cells)
        for i, ((l, r),) in enumerate(P.cells):
            t0 = np.maximum(x0, l)
            t1 = np.minimum(x1, r)
            w = t1 - t0
            mask = w > 0.0
            if not mask.any():
                warnings.warn(f"partition cell {i} has no overlap with u; mean set to 0")
                means[i] = 0.0
                continue
            tm = 0.5 * (t0 + t1)
            total = float(((v0 + s * (tm - x0)) * w)[mask].sum())
            means[i] = total / float(w[mask].sum())
        return StepFunction(P, means)
    if callable(u):
        return _partition_average_callable(u, P)
    raise TypeError(f"cannot average objects of type {type(u).__name__}")


def _partition_average_callable(u: Callable, P: Partition):
    nodes, wts = np.polynomial.legendre.leggauss(10)
    means = np.empty(P.n_cells)
    for i, cell in enumerate(P.cells):
        if len(cell) == 1:
            (l, r), = cell
            xs = 0.5 * (r - l) * nodes + 0.5 * (l + r)
            means[i] = float(np.dot(wts, [u(x) for x in xs])) / 2.0
        else:
            (lx, hx), (ly, hy) = cell
            xs = 0.5 * (hx - lx) * nodes + 0.5 * (lx + hx)
            ys = 0.5 * (hy - ly) * nodes + 0.5 * (ly + hy)
            vals = np.array([[u(np.array([x, y])) for x in xs] for y in ys])
            means[i] = float(wts @ vals @ wts) / 4.0
    return StepFunction(P, means)


def _partition_average_2d(u: FemField, P: Partition):
    cv, base, grads = _femfield_2d_cell_data(u)
    means = np.empty(P.n_cells)
    for i, box in enumerate(P.cells):
        total = 0.0
        area = 0.0
        for c in range(u.mesh.n_cells):
            poly = _clip_to_box(cv[c], box)
            a = _poly_area(poly)
            if a == 0.0:
                continue
            ctr = _poly_centroid(poly)
            val = base[c] + grads[c] @ (ctr - cv[c, 0])
            total += a * val
            area += a
        if area == 0.0:
            warnings.warn(f"partition cell {i} has no overlap with u; mean set to 0")
            means[i] = 0.0
        else:
            means[i] = total / area
    return StepFunction(P, means)


def _interval_excess(t0, t1, d0, s, thr):
    """measure{x in [t0,t1] : d0 + s*(x-t0) > thr}, elementwise over arrays."""
    t0 = np.asarray(t0, dtype=float)
    length = t1 - t0
    with np.errstate(divide="ignore", invalid="ignore"):
        x = t0 + (thr - d0) / s
    pos = np.clip(t1 - np.maximum(x, t0), 0.0, None)
    neg = np.clip(np.minimum(x, t1) - t0, 0.0, None)
    flat = np.where(d0 > thr, length, 0.0)
    return np.where(s == 0.0, flat, np.where(s > 0.0, pos, neg))


def measure_deviation(u, u_P: StepFunction, eps: float) -> float:
    """Lebesgue measure of {|u - u_P| > eps}, exact per partition cell.

    Cells whose every affine piece deviates entirely contribute their full
    length/area with no intermediate rounding.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    P = u_P.partition
    if isinstance(u, FemField) and u.mesh.dim == 2:
        return _measure_deviation_2d(u, u_P, eps)
    pieces, _ = _pieces_of(u)
    px0, px1, pv0, ps = pieces.T
    total = 0.0
    for i, ((l, r),) in enumerate(P.cells):
        m = u_P.values[i]
        t0 = np.maximum(px0, l)
        t1 = np.minimum(px1, r)
        w = t1 - t0
        mask = w > 0.0
        if not mask.any():
            continue
        t0, t1, w, s = t0[mask], t1[mask], w[mask], ps[mask]
        d0 = pv0[mask] + s * (t0 - px0[mask]) - m
        covered = _interval_excess(t0, t1, d0, s, eps) + _interval_excess(t0, t1, -d0, -s, eps)
        cell_sum = float(covered.sum())
        if cell_sum > 0.0 and bool(np.all(covered >= w)):
            total += r - l
        else:
            total += cell_sum
    return total


def _measure_deviation_2d(u: FemField, u_P: StepFunction, eps: float) -> float:
    cv, base, grads = _femfield_2d_cell_data(u)
    P = u_P.partition
    total = 0.0
    for i, box in enumerate(P.cells):
        m = u_P.values[i]
        for c in range(u.mesh.n_cells):
            poly = _clip_to_box(cv[c], box)
            if len(poly) < 3:
                continue

            def dev(Q, c=c, m=m):
                return base[c] + (Q - cv[c, 0]) @ grads[c] - m

            total += _poly_area(_clip(poly, lambda Q: dev(Q) - eps))
            total += _poly_area(_clip(poly, lambda Q: -dev(Q) - eps))
    return total


# ---------------------------------------------------------------------------
# oscillating sequences

@dataclass(frozen=True)
class SequenceSample:
    kind: str
    k: int
    field: FemField
    limit: FemField


@dataclass(frozen=True)
class SequenceFamily:
    """Generator of the named minimizing/oscillating sequence laws.

    sawtooth: k teeth with slopes +-1 and amplitude (b-a)/(2k); weak limit 0.
    modulated-sawtooth: tooth slopes scaled by sin(pi*(center-a)/(b-a)).
    strong-perturbation: normalized parabola plus (center tent)/k; converges
    strongly to the parabola interpolant.
    """

    kind: str
    domain: Interval
    resolution: Optional[int] = None

    def __post_init__(self):
        if self.kind not in SEQUENCE_KINDS:
            raise ValueError(f"unknown sequence kind {self.kind!r}; known: {SEQUENCE_KINDS}")
        if not isinstance(self.domain, Interval):
            raise InvalidDomainError("sequence families live on intervals")

    def sample(self, k: int) -> SequenceSample:
        return make_sequence(self.kind, self.domain, k, resolution=self.resolution)


def make_sequence(kind: str, domain: Interval, k: int,
                  resolution: Optional[int] = None) -> SequenceSample:
    """Build the k-th member of a sequence family together with its limit."""
    if kind not in SEQUENCE_KINDS:
        raise ValueError(f"unknown sequence kind {kind!r}; known: {SEQUENCE_KINDS}")
    if not isinstance(domain, Interval):
        raise InvalidDomainError("sequence families live on intervals")
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")

    a, b = domain.a, domain.b
    if kind in ("sawtooth", "modulated-sawtooth"):
        res = 2 * k if resolution is None else int(resolution)
        if res < 2 * k or res % (2 * k) != 0:
            raise InvalidResolutionError(
                f"resolution {res} cannot represent {k} teeth exactly "
                f"(needs a positive multiple of {2 * k})"
            )
        mesh = make_mesh(domain, res)
        m = res // (2 * k)
        h = (b - a) / res
        idx = np.arange(res + 1)
        tooth_pos = idx % (2 * m)
        height = np.minimum(tooth_pos, 2 * m - tooth_pos)
        coeffs = height * h
        if kind == "modulated-sawtooth":
            centers = a + (idx // (2 * m) + 0.5) * (b - a) / k
            centers = np.minimum(centers, b)
            coeffs = coeffs * np.sin(np.pi * (centers - a) / (b - a))
        coeffs[0] = 0.0
        coeffs[-1] = 0.0
        field = FemField(mesh, coeffs)
        limit = FemField(mesh, np.zeros(res + 1))
        return SequenceSample(kind, int(k), field, limit)

    # strong-perturbation
    res = 64 if resolution is None else int(resolution)
    if res < 2 or res % 2 != 0:
        raise InvalidResolutionError(
            f"resolution {res} cannot center the tent (needs an even value >= 2)"
        )
    mesh = make_mesh(domain, res)
    xs = mesh.vertices[:, 0]
    base = 4.0 * (xs - a) * (b - xs) / (b - a) ** 2
    tent = 1.0 - np.abs(2.0 * (xs - a) / (b - a) - 1.0)
    field = FemField(mesh, base + tent / k)
    limit = FemField(mesh, base.copy())
    return SequenceSample(kind, int(k), field, limit)


# ---------------------------------------------------------------------------
# weak convergence witness

def default_dictionary(domain: Interval, depth: int = 6, max_degree: int = 3):
    """Monomials up to max_degree plus dyadic cell indicators up to depth."""
    elements: List[tuple] = [("monomial", d) for d in range(max_degree + 1)]
    a, b = domain.a, domain.b
    for d in range(1, depth + 1):
        n = 2**d
        for i in range(n):
            lo = a + (b - a) * i / n
            hi = a + (b - a) * (i + 1) / n
            elements.append(("indicator", lo, hi))
    return elements


def dictionary_pairings(sample: SequenceSample, elements) -> np.ndarray:
    """Exact integrals of (grad u_k - grad limit) against each dictionary element."""
    mesh = sample.field.mesh
    gdiff = (cell_gradients(sample.field) - cell_gradients(sample.limit))[:, 0]
    x0 = mesh.cell_vertices[:, 0, 0]
    x1 = mesh.cell_vertices[:, 1, 0]
    out = np.empty(len(elements))
    for i, el in enumerate(elements):
        if el[0] == "monomial":
            d = el[1]
            out[i] = float(np.dot(gdiff, (x1 ** (d + 1) - x0 ** (d + 1)) / (d + 1)))
        else:
            _, lo, hi = el
            overlap = np.clip(np.minimum(x1, hi) - np.maximum(x0, lo), 0.0, None)
            out[i] = float(np.dot(gdiff, overlap))
    return out


@dataclass(frozen=True)
class WeakConvergenceReport:
    kind: str
    k_values: list
    seminorms: list        # ||grad u_k||_p
    pairing_max: list      # max over the dictionary of |<grad u_k - grad u, phi>|
    u_distances: list      # ||u_k - u||_q
    p: float
    q: float
    dictionary_size: int

    @property
    def sup_seminorm(self) -> float:
        return max(self.seminorms)

    def to_dict(self):
        return {
            "kind": self.kind,
            "k_values": list(self.k_values),
            "seminorms": list(self.seminorms),
            "pairing_max": list(self.pairing_max),
            "u_distances": list(self.u_distances),
            "p": self.p,
            "q": self.q,
            "dictionary_size": self.dictionary_size,
            "sup_seminorm": self.sup_seminorm,
        }


def weak_convergence_witness(family: SequenceFamily, k_max: int, p: float = 2.0,
                             q: float = 2.0, dictionary=None) -> WeakConvergenceReport:
    """Tabulate the three weak-convergence indicators for k = 1..k_max:
    bounded gradients, decaying dictionary pairings, and L^q distance to the
    limit. Report-only; no verdict is attached."""
    elements = default_dictionary(family.domain) if dictionary is None else dictionary
    ks, semis, pairs, dists = [], [], [], []
    for k in range(1, k_max + 1):
        s = family.sample(k)
        ks.append(k)
        semis.append(w1p_seminorm(s.field, p))
        pairs.append(float(np.max(np.abs(dictionary_pairings(s, elements)))))
        diff = FemField(s.field.mesh, s.field.coeffs - s.limit.coeffs)
        dists.append(lp_norm(diff, q))
    return WeakConvergenceReport(family.kind, ks, semis, pairs, dists, p, q, len(elements))


# ---------------------------------------------------------------------------
# liminf check

@dataclass(frozen=True)
class SemicontinuityReport:
    integrand: str
    kind: str
    k_values: list
    F_values: list
    F_limit: float
    liminf_estimate: float
    verdict: str
    tol: float

    def to_dict(self):
        return {
            "integrand": self.integrand,
            "kind": self.kind,
            "k_values": list(self.k_values),
            "F_values": list(self.F_values),
            "F_limit": self.F_limit,
            "liminf_estimate": self.liminf_estimate,
            "verdict": self.verdict,
            "tol": self.tol,
        }


def liminf_check(f: Integrand, family: SequenceFamily, k_max: int,
                 tol: float = 1e-9) -> SemicontinuityReport:
    """Compare liminf_k F(u_k) (last-quartile minimum) against F(limit).

    The verdict is lsc-violated only when the estimate undercuts F(limit) by
    more than ten times the quadrature error allowance tol.
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    ks = list(range(1, k_max + 1))
    Fs = []
    last = None
    for k in ks:
        s = family.sample(k)
        Fs.append(assemble_F(f, s.field))
        last = s
    F_limit = assemble_F(f, last.limit)
    tail = max(1, math.ceil(k_max / 4))
    liminf_estimate = float(min(Fs[-tail:]))
    verdict = LSC_VIOLATED if liminf_estimate < F_limit - 10.0 * tol else LSC_CONSISTENT
    return SemicontinuityReport(
        integrand=f.name, kind=family.kind, k_values=ks, F_values=Fs,
        F_limit=float(F_limit), liminf_estimate=liminf_estimate,
        verdict=verdict, tol=tol,
    )


# ---------------------------------------------------------------------------
# truncation measures and the cellwise Jensen step

def truncation_measures(v: FemField, j: float, p: float = 2.0) -> Tuple[float, float]:
    """(measure of {|grad v| > j}, Chebyshev bound ||grad v||_p^p / j^p).

    Both sides are exact finite sums over cells; the inequality is asserted.
    """
    if j <= 0:
        raise ValueError(f"threshold j must be positive, got {j}")
    G = cell_gradients(v)
    mags = np.sqrt((G * G).sum(axis=1))
    meas = v.mesh.cell_measures
    measure = float(meas[mags > j].sum())
    bound = float((meas * mags**p).sum() / j**p)
    if measure > bound:
        raise AssertionError(
            f"superlevel measure {measure} exceeded its Chebyshev bound {bound}"
        )
    return measure, bound


def _cell_overlap_measures(mesh: Mesh, P: Partition):
    """overlaps[i] = (mesh cell indices, intersection measures) for partition cell i."""
    out = []
    if mesh.dim == 1:
        x0 = mesh.cell_vertices[:, 0, 0]
        x1 = mesh.cell_vertices[:, 1, 0]
        for ((l, r),) in P.cells:
            ov = np.clip(np.minimum(x1, r) - np.maximum(x0, l), 0.0, None)
            idx = np.flatnonzero(ov > 0.0)
            out.append((idx, ov[idx]))
        return out
    cv = mesh.cell_vertices
    for box in P.cells:
        idx, areas = [], []
        for c in range(mesh.n_cells):
            a = _poly_area(_clip_to_box(cv[c], box))
            if a > 0.0:
                idx.append(c)
                areas.append(a)
        out.append((np.asarray(idx, dtype=int), np.asarray(areas)))
    return out


def jensen_cell_check(f: Integrand, x0, u0: float, v: FemField, P: Partition) -> float:
    """max over partition cells of f(x0, u0, mean grad v) - mean of f(x0, u0, grad v).

    Nonpositive (up to rounding) whenever f is convex in the gradient slot;
    a macroscopic positive value exhibits the Jensen step failing.
    """
    G = cell_gradients(v)
    x0 = np.asarray(x0, dtype=float).reshape(v.mesh.dim)
    worst = -np.inf
    for idx, meas in _cell_overlap_measures(v.mesh, P):
        total = float(meas.sum())
        mean_xi = (meas[:, None] * G[idx]).sum(axis=0) / total
        X = np.broadcast_to(x0, (len(idx), v.mesh.dim))
        U = np.full(len(idx), float(u0))
        mean_f = float(np.dot(meas, eval_checked(f, X, U, G[idx]))) / total
        f_at_mean = float(eval_checked(f, x0, float(u0), mean_xi))
        worst = max(worst, f_at_mean - mean_f)
    return float(worst)
