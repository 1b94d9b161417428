"""Computational domains: open intervals and axis-aligned rectangles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidDomainError


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    dim = 1

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.b > self.a):
            raise InvalidDomainError(f"degenerate interval ({self.a}, {self.b})")

    @property
    def measure(self) -> float:
        return self.b - self.a

    @property
    def diameter(self) -> float:
        return self.b - self.a

    @property
    def bounds(self):
        return ((self.a, self.b),)

    def contains(self, x, tol=1e-12) -> bool:
        x0 = float(np.asarray(x).reshape(-1)[0])
        return self.a - tol <= x0 <= self.b + tol

    def on_boundary(self, x, tol=1e-12) -> bool:
        x0 = float(np.asarray(x).reshape(-1)[0])
        return abs(x0 - self.a) <= tol or abs(x0 - self.b) <= tol

    def to_dict(self):
        return {"kind": "interval", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class Rectangle:
    ax: float
    bx: float
    ay: float
    by: float

    dim = 2

    def __post_init__(self):
        ok = all(map(math.isfinite, (self.ax, self.bx, self.ay, self.by)))
        if not (ok and self.bx > self.ax and self.by > self.ay):
            raise InvalidDomainError(
                f"degenerate rectangle ({self.ax}, {self.bx}) x ({self.ay}, {self.by})"
            )

    @property
    def measure(self) -> float:
        return (self.bx - self.ax) * (self.by - self.ay)

    @property
    def diameter(self) -> float:
        return math.hypot(self.bx - self.ax, self.by - self.ay)

    @property
    def bounds(self):
        return ((self.ax, self.bx), (self.ay, self.by))

    def contains(self, x, tol=1e-12) -> bool:
        p = np.asarray(x).reshape(-1)
        return (self.ax - tol <= p[0] <= self.bx + tol) and (
            self.ay - tol <= p[1] <= self.by + tol
        )

    def on_boundary(self, x, tol=1e-12) -> bool:
        p = np.asarray(x).reshape(-1)
        if not self.contains(p, tol):
            return False
        return (
            abs(p[0] - self.ax) <= tol
            or abs(p[0] - self.bx) <= tol
            or abs(p[1] - self.ay) <= tol
            or abs(p[1] - self.by) <= tol
        )

    def to_dict(self):
        return {
            "kind": "rectangle",
            "ax": self.ax,
            "bx": self.bx,
            "ay": self.ay,
            "by": self.by,
        }


def domain_from_dict(d: dict):
    """Rebuild a domain from its serialized form."""
    kind = d.get("kind")
    if kind == "interval":
        return Interval(float(d["a"]), float(d["b"]))
    if kind == "rectangle":
        return Rectangle(float(d["ax"]), float(d["bx"]), float(d["ay"]), float(d["by"]))
    raise InvalidDomainError(f"unknown domain kind {kind!r}")
