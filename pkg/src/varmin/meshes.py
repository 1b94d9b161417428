"""Simplicial P1 meshes on intervals and rectangles, with nested refinement.

Meshes are treated as immutable after construction. Refinement adds edge
midpoints after the parent vertices, so the parent's P1 space embeds exactly
into the child's (see ``prolongate``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .domains import Interval, Rectangle, domain_from_dict
from .errors import (
    InvalidDomainError,
    InvalidOrderError,
    InvalidResolutionError,
    OutOfDomainError,
)

QUADRATURE_ORDERS = (1, 2, 3)

# reference rules on [0,1] in barycentric coordinates (1-t, t)
_GAUSS_T = 0.5 / math.sqrt(3.0)
_REF_1D = {
    1: (np.array([[0.5, 0.5]]), np.array([1.0])),
    2: (
        np.array([[0.5 + _GAUSS_T, 0.5 - _GAUSS_T], [0.5 - _GAUSS_T, 0.5 + _GAUSS_T]]),
        np.array([0.5, 0.5]),
    ),
}
_REF_1D[3] = _REF_1D[2]  # 2-point Gauss integrates cubics exactly

# reference rules on the triangle, barycentric coordinates, weights sum to 1
_A4 = 0.445948490915965
_B4 = 0.091576213509771
_WA4 = 0.223381589678011
_WB4 = 0.109951743655322
_REF_TRI = {
    1: (np.array([[1.0, 1.0, 1.0]]) / 3.0, np.array([1.0])),
    2: (
        np.array(
            [
                [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
                [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
                [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
            ]
        ),
        np.array([1.0, 1.0, 1.0]) / 3.0,
    ),
    3: (
        np.array(
            [
                [1.0 - 2.0 * _A4, _A4, _A4],
                [_A4, 1.0 - 2.0 * _A4, _A4],
                [_A4, _A4, 1.0 - 2.0 * _A4],
                [1.0 - 2.0 * _B4, _B4, _B4],
                [_B4, 1.0 - 2.0 * _B4, _B4],
                [_B4, _B4, 1.0 - 2.0 * _B4],
            ]
        ),
        np.array([_WA4, _WA4, _WA4, _WB4, _WB4, _WB4]),
    ),
}


class Mesh:
    """Conforming simplicial mesh (intervals in 1D, triangles in 2D)."""

    def __init__(self, dim, vertices, cells, boundary_vertices, level, domain,
                 parent=None, new_vertex_edges=None):
        self.dim = int(dim)
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.cells = np.ascontiguousarray(cells, dtype=np.int64)
        self.boundary_vertices = np.ascontiguousarray(
            np.sort(np.asarray(boundary_vertices, dtype=np.int64))
        )
        self.level = int(level)
        self.domain = domain
        self.parent = parent
        # for refined meshes: row k gives the parent-edge endpoints of vertex
        # parent.n_vertices + k
        self.new_vertex_edges = (
            None if new_vertex_edges is None
            else np.ascontiguousarray(new_vertex_edges, dtype=np.int64)
        )
        self._quad_cache = {}

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_cells(self) -> int:
        return self.cells.shape[0]

    @cached_property
    def cell_vertices(self):
        """(nc, dim+1, dim) coordinates of each cell's vertices."""
        return self.vertices[self.cells]

    @cached_property
    def cell_measures(self):
        cv = self.cell_vertices
        if self.dim == 1:
            return np.abs(cv[:, 1, 0] - cv[:, 0, 0])
        d1 = cv[:, 1] - cv[:, 0]
        d2 = cv[:, 2] - cv[:, 0]
        return 0.5 * np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def shape_gradients(self):
        """(nc, dim+1, dim) gradients of the P1 hat functions on each cell."""
        cv = self.cell_vertices
        nc = self.n_cells
        out = np.empty((nc, self.dim + 1, self.dim))
        if self.dim == 1:
            h = cv[:, 1, 0] - cv[:, 0, 0]
            out[:, 0, 0] = -1.0 / h
            out[:, 1, 0] = 1.0 / h
            return out
        # rows of the inverse affine map give the barycentric gradients
        d1 = cv[:, 1] - cv[:, 0]
        d2 = cv[:, 2] - cv[:, 0]
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        out[:, 1, 0] = d2[:, 1] / det
        out[:, 1, 1] = -d2[:, 0] / det
        out[:, 2, 0] = -d1[:, 1] / det
        out[:, 2, 1] = d1[:, 0] / det
        out[:, 0] = -(out[:, 1] + out[:, 2])
        return out

    @cached_property
    def interior_vertices(self):
        mask = np.ones(self.n_vertices, dtype=bool)
        mask[self.boundary_vertices] = False
        return np.flatnonzero(mask)

    def reference_rule(self, order):
        if order not in QUADRATURE_ORDERS:
            raise InvalidOrderError(f"quadrature order must be one of {QUADRATURE_ORDERS}, got {order!r}")
        table = _REF_1D if self.dim == 1 else _REF_TRI
        return table[order]

    def quadrature_points(self, order):
        """All-cell quadrature: points (nc, nq, dim) and weights (nc, nq).

        Weights include the cell measure, so summing weight * value over both
        axes integrates over the whole mesh.
        """
        if order not in self._quad_cache:
            bary, ref_w = self.reference_rule(order)
            pts = np.einsum("qj,cjd->cqd", bary, self.cell_vertices)
            w = ref_w[None, :] * self.cell_measures[:, None]
            self._quad_cache[order] = (pts, w)
        return self._quad_cache[order]

    @cached_property
    def _buckets(self):
        # coarse spatial hash over the bounding box for point location
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        n = max(1, int(self.n_cells ** (1.0 / self.dim)))
        width = np.where(hi > lo, hi - lo, 1.0)
        table = {}
        cv = self.cell_vertices
        cmin = cv.min(axis=1)
        cmax = cv.max(axis=1)
        imin = np.clip(((cmin - lo) / width * n).astype(int), 0, n - 1)
        imax = np.clip(((cmax - lo) / width * n).astype(int), 0, n - 1)
        for c in range(self.n_cells):
            if self.dim == 1:
                for i in range(imin[c, 0], imax[c, 0] + 1):
                    table.setdefault((i,), []).append(c)
            else:
                for i in range(imin[c, 0], imax[c, 0] + 1):
                    for j in range(imin[c, 1], imax[c, 1] + 1):
                        table.setdefault((i, j), []).append(c)
        return lo, width, n, table

    def locate(self, x, tol=1e-10):
        """Return (cell index, barycentric coords) of the cell containing x."""
        p = np.asarray(x, dtype=float).reshape(self.dim)
        lo, width, n, table = self._buckets
        key = tuple(np.clip(((p - lo) / width * n).astype(int), 0, n - 1))
        best = None
        for c in table.get(key, ()):
            lam = self._barycentric(c, p)
            worst = lam.min()
            if worst >= -tol:
                return c, lam
            if best is None or worst > best[1]:
                best = (c, worst, lam)
        # fall back to an exhaustive scan (bucket may miss points on edges)
        for c in range(self.n_cells):
            lam = self._barycentric(c, p)
            if lam.min() >= -tol:
                return c, lam
        raise OutOfDomainError(f"point {p.tolist()} lies in no cell")

    def _barycentric(self, c, p):
        cv = self.cell_vertices[c]
        if self.dim == 1:
            h = cv[1, 0] - cv[0, 0]
            t = (p[0] - cv[0, 0]) / h
            return np.array([1.0 - t, t])
        d1 = cv[1] - cv[0]
        d2 = cv[2] - cv[0]
        det = d1[0] * d2[1] - d1[1] * d2[0]
        r = p - cv[0]
        l1 = (r[0] * d2[1] - r[1] * d2[0]) / det
        l2 = (d1[0] * r[1] - d1[1] * r[0]) / det
        return np.array([1.0 - l1 - l2, l1, l2])

    def to_dict(self):
        return {
            "dim": self.dim,
            "level": self.level,
            "domain": self.domain.to_dict(),
            "vertices": self.vertices.tolist(),
            "cells": self.cells.tolist(),
            "boundary_vertices": self.boundary_vertices.tolist(),
        }


@dataclass
class FemField:
    """P1 finite element function: one coefficient per mesh vertex."""

    mesh: Mesh
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.mesh.n_vertices,):
            raise ValueError(
                f"coefficient vector has shape {self.coeffs.shape}, "
                f"expected ({self.mesh.n_vertices},)"
            )

    def copy(self) -> "FemField":
        return FemField(self.mesh, self.coeffs.copy())

    def values_at_quadrature(self, order):
        bary, _ = self.mesh.reference_rule(order)
        return np.einsum("cj,qj->cq", self.coeffs[self.mesh.cells], bary)

    def to_dict(self):
        d = self.mesh.to_dict()
        d["coeffs"] = self.coeffs.tolist()
        return d


def field_from_dict(d: dict) -> FemField:
    mesh = Mesh(
        dim=d["dim"],
        vertices=np.asarray(d["vertices"], dtype=float),
        cells=np.asarray(d["cells"], dtype=np.int64),
        boundary_vertices=np.asarray(d["boundary_vertices"], dtype=np.int64),
        level=d.get("level", 0),
        domain=domain_from_dict(d["domain"]),
    )
    return FemField(mesh, np.asarray(d["coeffs"], dtype=float))


def make_mesh(domain, resolution: int) -> Mesh:
    """Uniform mesh: `resolution` subintervals in 1D, or a resolution x resolution
    grid of squares each split into two triangles in 2D."""
    if not isinstance(resolution, (int, np.integer)) or resolution < 1:
        raise InvalidResolutionError(
            f"resolution must be a positive integer, got {resolution!r}"
        )
    if isinstance(domain, Interval):
        xs = np.linspace(domain.a, domain.b, resolution + 1)
        vertices = xs[:, None]
        cells = np.column_stack([np.arange(resolution), np.arange(1, resolution + 1)])
        boundary = np.array([0, resolution])
        return Mesh(1, vertices, cells, boundary, 0, domain)
    if isinstance(domain, Rectangle):
        r = resolution
        xs = np.linspace(domain.ax, domain.bx, r + 1)
        ys = np.linspace(domain.ay, domain.by, r + 1)
        X, Y = np.meshgrid(xs, ys, indexing="xy")
        vertices = np.column_stack([X.ravel(), Y.ravel()])

        def vid(i, j):
            return j * (r + 1) + i

        cells = []
        for j in range(r):
            for i in range(r):
                v00, v10 = vid(i, j), vid(i + 1, j)
                v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
                cells.append((v00, v10, v11))
                cells.append((v00, v11, v01))
        boundary = [
            vid(i, j)
            for j in range(r + 1)
            for i in range(r + 1)
            if i == 0 or i == r or j == 0 or j == r
        ]
        return Mesh(2, vertices, np.asarray(cells), boundary, 0, domain)
    raise InvalidDomainError(f"unsupported domain {domain!r}")


def refine(mesh: Mesh) -> Mesh:
    """Uniform refinement: bisection in 1D, red refinement in 2D.

    Parent vertices keep their indices; the parent P1 space is a subspace of
    the child's.
    """
    nv = mesh.n_vertices
    midpoint_of = {}
    new_coords = []
    new_edges = []

    def midpoint(i, j):
        key = (min(i, j), max(i, j))
        idx = midpoint_of.get(key)
        if idx is None:
            idx = nv + len(new_coords)
            midpoint_of[key] = idx
            new_coords.append(0.5 * (mesh.vertices[i] + mesh.vertices[j]))
            new_edges.append(key)
        return idx

    children = []
    if mesh.dim == 1:
        for a, b in mesh.cells:
            m = midpoint(a, b)
            children.append((a, m))
            children.append((m, b))
    else:
        for a, b, c in mesh.cells:
            mab = midpoint(a, b)
            mbc = midpoint(b, c)
            mca = midpoint(c, a)
            children.append((a, mab, mca))
            children.append((mab, b, mbc))
            children.append((mca, mbc, c))
            children.append((mab, mbc, mca))

    vertices = np.vstack([mesh.vertices, np.asarray(new_coords).reshape(-1, mesh.dim)])
    boundary = list(mesh.boundary_vertices)
    for k, xy in enumerate(new_coords):
        if mesh.domain.on_boundary(xy):
            boundary.append(nv + k)
    return Mesh(
        mesh.dim,
        vertices,
        np.asarray(children),
        boundary,
        mesh.level + 1,
        mesh.domain,
        parent=mesh,
        new_vertex_edges=np.asarray(new_edges),
    )


def prolongate(field: FemField, fine: Mesh) -> FemField:
    """Inject a parent-mesh field into a refined mesh (exact for P1)."""
    if fine.parent is not field.mesh:
        raise ValueError("fine mesh was not produced by refining the field's mesh")
    nv = field.mesh.n_vertices
    coeffs = np.empty(fine.n_vertices)
    coeffs[:nv] = field.coeffs
    edges = fine.new_vertex_edges
    coeffs[nv:] = 0.5 * (field.coeffs[edges[:, 0]] + field.coeffs[edges[:, 1]])
    return FemField(fine, coeffs)


def interpolate(mesh: Mesh, fn) -> FemField:
    """Vertex interpolant of a closed-form function of the coordinates."""
    vals = np.asarray(fn(mesh.vertices), dtype=float)
    return FemField(mesh, np.broadcast_to(vals, (mesh.n_vertices,)).copy())


def eval_field(u: FemField, x) -> float:
    """Point evaluation by barycentric interpolation."""
    p = np.asarray(x, dtype=float).reshape(u.mesh.dim)
    if not u.mesh.domain.contains(p):
        raise OutOfDomainError(f"point {p.tolist()} outside the domain")
    c, lam = u.mesh.locate(p)
    return float(lam @ u.coeffs[u.mesh.cells[c]])


def grad_field(u: FemField, cell: int):
    """Gradient of the field on one cell (P1 gradients are cellwise constant)."""
    return cell_gradients(u)[cell].copy()


def cell_gradients(u: FemField):
    """(nc, dim) array of per-cell gradients."""
    return np.einsum("cj,cjd->cd", u.coeffs[u.mesh.cells], u.mesh.shape_gradients)


def quadrature(mesh: Mesh, cell: int, order: int):
    """Quadrature nodes and weights on one cell; weights sum to its measure."""
    pts, w = mesh.quadrature_points(order)
    if not 0 <= cell < mesh.n_cells:
        raise IndexError(f"cell {cell} out of range")
    return pts[cell].copy(), w[cell].copy()


@dataclass(frozen=True)
class Partition:
    """Finite partition of the domain into axis-aligned boxes."""

    domain: object
    cells: tuple  # each cell: tuple of (lo, hi) per axis
    norm: float   # max cell diameter

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def cell_measure(self, i: int) -> float:
        out = 1.0
        for lo, hi in self.cells[i]:
            out *= hi - lo
        return out

    def cell_center(self, i: int):
        return np.array([0.5 * (lo + hi) for lo, hi in self.cells[i]])


def make_partition(domain, cells_per_axis: int) -> Partition:
    """Uniform box partition with cells_per_axis cells along each axis."""
    m = cells_per_axis
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise InvalidResolutionError(
            f"cells_per_axis must be a positive integer, got {m!r}"
        )
    if isinstance(domain, Interval):
        xs = np.linspace(domain.a, domain.b, m + 1)
        cells = tuple(((xs[i], xs[i + 1]),) for i in range(m))
        norm = max(hi - lo for ((lo, hi),) in cells)
        return Partition(domain, cells, norm)
    if isinstance(domain, Rectangle):
        xs = np.linspace(domain.ax, domain.bx, m + 1)
        ys = np.linspace(domain.ay, domain.by, m + 1)
        cells = []
        for j in range(m):
            for i in range(m):
                cells.append(((xs[i], xs[i + 1]), (ys[j], ys[j + 1])))
        norm = max(math.hypot(cx[1] - cx[0], cy[1] - cy[0]) for cx, cy in cells)
        return Partition(domain, tuple(cells), norm)
    raise InvalidDomainError(f"unsupported domain {domain!r}")
