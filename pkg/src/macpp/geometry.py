"""Observation windows and planar convex hulls.

Two window shapes are supported: axis-aligned rectangles and convex
polygons. Both are closed sets, so points on the boundary are contained.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, InvalidWindow


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


@dataclass(frozen=True)
class Rectangle:
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        vals = (self.xmin, self.xmax, self.ymin, self.ymax)
        if not all(np.isfinite(v) for v in vals):
            raise InvalidWindow("rectangle bounds must be finite")
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise InvalidWindow(f"degenerate rectangle {vals}")
        for name, v in zip(("xmin", "xmax", "ymin", "ymax"), vals):
            object.__setattr__(self, name, float(v))

    @property
    def area(self) -> float:
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        return self.xmin, self.xmax, self.ymin, self.ymax

    @property
    def vertices(self) -> np.ndarray:
        return np.array([
            [self.xmin, self.ymin], [self.xmax, self.ymin],
            [self.xmax, self.ymax], [self.xmin, self.ymax],
        ])

    def contains(self, points):
        """Closed containment test. Accepts a single point or an (n, 2) array."""
        p = np.asarray(points, dtype=float)
        x, y = p[..., 0], p[..., 1]
        return (x >= self.xmin) & (x <= self.xmax) & (y >= self.ymin) & (y <= self.ymax)

    def boundary_distance(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return np.minimum.reduce([
            p[:, 0] - self.xmin, self.xmax - p[:, 0],
            p[:, 1] - self.ymin, self.ymax - p[:, 1],
        ])

    def shifted(self, dx: float, dy: float) -> "Rectangle":
        return Rectangle(self.xmin + dx, self.xmax + dx, self.ymin + dy, self.ymax + dy)

    def to_dict(self) -> dict:
        return {"type": "rect", "xmin": self.xmin, "xmax": self.xmax,
                "ymin": self.ymin, "ymax": self.ymax}


@dataclass(frozen=True, eq=False)
class ConvexPolygon:
    """Strictly convex polygon, stored counterclockwise from its lexicographic minimum."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2:
            raise InvalidWindow("polygon vertices must be an (n, 2) array")
        if not np.all(np.isfinite(v)):
            raise InvalidWindow("polygon vertices must be finite")
        # drop consecutive duplicates, including the closing vertex
        keep = [tuple(v[0])]
        for row in v[1:]:
            if tuple(row) != keep[-1]:
                keep.append(tuple(row))
        if len(keep) > 1 and keep[-1] == keep[0]:
            keep.pop()
        if len(keep) < 3:
            raise InvalidWindow("polygon needs at least 3 distinct vertices")
        v = np.array(keep)
        if _signed_area(v) < 0:
            v = v[::-1]
        start = min(range(len(v)), key=lambda i: (v[i, 0], v[i, 1]))
        v = np.roll(v, -start, axis=0)
        n = len(v)
        for i in range(n):
            if _cross(v[i - 1], v[i], v[(i + 1) % n]) <= 0:
                raise InvalidWindow("polygon is not strictly convex")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    def __eq__(self, other):
        return isinstance(other, ConvexPolygon) and np.array_equal(self.vertices, other.vertices)

    def __hash__(self):
        return hash(self.vertices.tobytes())

    @property
    def area(self) -> float:
        return _signed_area(self.vertices)

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        v = self.vertices
        return float(v[:, 0].min()), float(v[:, 0].max()), float(v[:, 1].min()), float(v[:, 1].max())

    def _edges(self):
        a = self.vertices
        b = np.roll(a, -1, axis=0)
        return a, b - a

    def contains(self, points):
        p = np.asarray(points, dtype=float)
        single = p.ndim == 1
        p = np.atleast_2d(p)
        start, edge = self._edges()
        xmin, xmax, ymin, ymax = self.bbox
        # slack for points that lie on an edge up to rounding
        tol = 1e-12 * ((xmax - xmin) ** 2 + (ymax - ymin) ** 2)
        inside = np.ones(len(p), dtype=bool)
        for (sx, sy), (ex, ey) in zip(start, edge):
            inside &= ex * (p[:, 1] - sy) - ey * (p[:, 0] - sx) >= -tol
        return bool(inside[0]) if single else inside

    def boundary_distance(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        start, edge = self._edges()
        lengths = np.hypot(edge[:, 0], edge[:, 1])
        # signed distance to each supporting line; positive inside
        d = (edge[:, 0] * (p[:, 1:2] - start[:, 1]) - edge[:, 1] * (p[:, 0:1] - start[:, 0])) / lengths
        return d.min(axis=1)

    def shifted(self, dx: float, dy: float) -> "ConvexPolygon":
        return ConvexPolygon(self.vertices + np.array([dx, dy]))

    def to_dict(self) -> dict:
        return {"type": "polygon", "vertices": self.vertices.tolist()}


Window = Rectangle | ConvexPolygon


def _signed_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def area(w: Window) -> float:
    return w.area


def contains(w: Window, p) -> bool:
    return w.contains(p)


def unit_square() -> Rectangle:
    return Rectangle(0.0, 1.0, 0.0, 1.0)


def convex_hull(points) -> ConvexPolygon:
    """Convex hull by Andrew's monotone chain; collinear boundary points are dropped."""
    pts = sorted(set(map(tuple, np.asarray(points, dtype=float).reshape(-1, 2))))
    if len(pts) < 3:
        raise DegenerateInput("need at least 3 distinct points")
    def half(seq):
        chain = []
        for p in seq:
            while len(chain) >= 2 and _cross(chain[-2], chain[-1], p) <= 0:
                chain.pop()
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(reversed(pts))
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise DegenerateInput("all points are collinear")
    span = np.ptp(np.array(hull), axis=0)
    # turns this small are collinear up to rounding and would not survive a shift
    tol = 1e-14 * float(span @ span)
    pruned = True
    while pruned and len(hull) > 3:
        pruned = False
        for i in range(len(hull)):
            if _cross(hull[i - 1], hull[i], hull[(i + 1) % len(hull)]) <= tol:
                del hull[i]
                pruned = True
                break
    v = np.array(hull)
    if _signed_area(v) <= 1e-12 * float(span @ span):
        raise DegenerateInput("points are collinear up to rounding")
    try:
        return ConvexPolygon(v)
    except InvalidWindow:
        raise DegenerateInput("points are collinear up to rounding") from None


def window_from_dict(d: dict) -> Window:
    kind = d.get("type")
    if kind == "rect":
        return Rectangle(d["xmin"], d["xmax"], d["ymin"], d["ymax"])
    if kind == "polygon":
        return ConvexPolygon(np.asarray(d["vertices"], dtype=float))
    raise InvalidWindow(f"unknown window type {kind!r}")


def sample_uniform(w: Window, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n points uniformly in w; polygons use rejection from the bounding box."""
    xmin, xmax, ymin, ymax = w.bbox
    if isinstance(w, Rectangle):
        return np.column_stack([rng.uniform(xmin, xmax, n), rng.uniform(ymin, ymax, n)])
    out = np.empty((0, 2))
    while len(out) < n:
        need = n - len(out)
        batch = max(16, int(1.2 * need * (xmax - xmin) * (ymax - ymin) / w.area) + 8)
        cand = np.column_stack([rng.uniform(xmin, xmax, batch), rng.uniform(ymin, ymax, batch)])
        out = np.vstack([out, cand[w.contains(cand)]])
    return out[:n]
