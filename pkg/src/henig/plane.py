"""Exact planar geometry: every closed cone in the plane used here is an
angular sector, and its trace on the unit sphere is an arc (a circular arc
for l2, a polygonal path for l1 / linf).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .space import Space, line_min

TWO_PI = 2 * math.pi

# unit-ball corners of the polyhedral norms, by angle
CORNERS = {
    "l1": [0.0, math.pi / 2, math.pi, 3 * math.pi / 2],
    "linf": [math.pi / 4, 3 * math.pi / 4, 5 * math.pi / 4, 7 * math.pi / 4],
}


def angle_of(X) -> np.ndarray:
    X = np.atleast_2d(X)
    return np.arctan2(X[:, 1], X[:, 0])


def direction(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return np.stack([np.cos(t), np.sin(t)], axis=-1)


def unit(s: Space, t) -> np.ndarray:
    """Point of the unit sphere of ``s`` at angle ``t``."""
    u = direction(t)
    return u / np.expand_dims(np.linalg.norm(u, ord={"l1": 1, "l2": 2, "linf": np.inf}[s.norm], axis=-1), -1)


def _cross(u, X):
    return u[0] * X[:, 1] - u[1] * X[:, 0]


@dataclass(frozen=True)
class Sector:
    """The closed cone of directions with angle in ``[lo, lo + width]``."""

    lo: float
    width: float

    def __post_init__(self):
        if self.width < 0:
            raise ValueError("negative sector width")

    @property
    def hi(self) -> float:
        return self.lo + self.width

    @property
    def full(self) -> bool:
        return self.width >= TWO_PI - 1e-15

    def margin(self, s: Space, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.full:
            return np.full(len(X), np.inf)
        ul, uh = direction(self.lo), direction(self.hi)
        a = _cross(ul, X)
        b = -_cross(uh, X)
        if self.width < math.pi:
            mid = direction(self.lo + self.width / 2)
            return np.minimum(np.minimum(a, b), X @ mid)
        if self.width == math.pi:
            return np.minimum(a, b)
        return np.maximum(a, b)

    def axis(self, s: Space) -> np.ndarray:
        return direction(self.lo + self.width / 2)

    def sector(self, s: Space) -> "Sector":
        return self

    def negate(self) -> "Sector":
        return Sector(self.lo + math.pi, self.width)

    def complement_arc(self) -> "Sector":
        """Closure of the complement (as an arc of directions)."""
        return Sector(self.hi, TWO_PI - self.width)

    def boundary_angles(self) -> list[float]:
        if self.full:
            return []
        if self.width == 0:
            return [self.lo]
        return [self.lo, self.hi]

    def contains_angle(self, t) -> np.ndarray:
        rel = np.mod(np.asarray(t) - self.lo, TWO_PI)
        return rel <= self.width + 1e-15


def arc_candidates(s: Space, arc: Sector, f=None) -> np.ndarray:
    """Finite point set whose hull equals conv of the arc for polyhedral
    norms; for l2 the endpoints plus the minimizer of ``f`` on the arc."""
    if arc.full:
        ts = [0.0, math.pi / 2, math.pi, 3 * math.pi / 2] if s.norm == "l2" else list(CORNERS[s.norm])
    else:
        ts = [arc.lo, arc.hi]
        if s.norm != "l2":
            ts += [c for c in CORNERS[s.norm] + [c + TWO_PI for c in CORNERS[s.norm]]
                   if arc.lo < c < arc.hi]
    pts = [unit(s, t) for t in ts]
    if s.norm == "l2" and f is not None:
        f = np.asarray(f, dtype=float)
        if np.any(f):
            t = math.atan2(-f[1], -f[0])
            if arc.contains_angle(t):
                pts.append(direction(t))
    return np.array(pts)


def arc_min_linear(s: Space, arc: Sector, f) -> tuple[float, np.ndarray]:
    """Exact minimum of the linear functional ``f`` over the arc."""
    f = np.asarray(f, dtype=float)
    P = arc_candidates(s, arc, f)
    v = P @ f
    i = int(np.argmin(v))
    return float(v[i]), P[i]


def arc_polyline(s: Space, arc: Sector) -> np.ndarray:
    """Ordered corner points of the arc (polyhedral norms only)."""
    ts = [arc.lo] + [c for c in sorted(CORNERS[s.norm] + [c + TWO_PI for c in CORNERS[s.norm]]
                                       + [c + 2 * TWO_PI for c in CORNERS[s.norm]])
                     if arc.lo < c < arc.hi] + [arc.hi]
    return np.array([unit(s, t) for t in ts])


def arc_ray_distance(s: Space, arc: Sector, X) -> np.ndarray:
    """``d(ray(x), arc)`` for each row of ``X`` (ray without its apex)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.empty(len(X))
    zero = ~np.any(X, axis=1)
    out[zero] = np.nan
    X = X[~zero]
    if s.norm == "l2":
        t = angle_of(X)
        rel = np.mod(t - arc.lo, TWO_PI)
        inside = rel <= arc.width
        gap = np.minimum(rel - arc.width, TWO_PI - rel)
        d = np.where(gap < math.pi / 2, np.sin(np.clip(gap, 0, None)), 1.0)
        out[~zero] = np.where(inside, 0.0, d)
        return out
    corners = arc_polyline(s, arc)
    best = np.full(len(X), np.inf)
    for p, q in zip(corners[:-1], corners[1:]):
        best = np.minimum(best, _segment_ray_distance(s, p, q, X))
    if len(corners) == 1:
        best = line_min(s, np.broadcast_to(corners[0], X.shape), X, 0.0, np.inf)[0]
    out[~zero] = best
    return out


def _segment_ray_distance(s: Space, p, q, X, iters: int = 100) -> np.ndarray:
    # the point-to-ray distance is convex along the segment: ternary search
    def h(t):
        Y = p + t[:, None] * (q - p)
        return line_min(s, Y, X, 0.0, np.inf)[0]

    a = np.zeros(len(X))
    b = np.ones(len(X))
    for _ in range(iters):
        c = a + (b - a) / 3
        d = b - (b - a) / 3
        left = h(c) <= h(d)
        b = np.where(left, d, b)
        a = np.where(left, a, c)
    return np.minimum(h((a + b) / 2), np.minimum(h(np.zeros(len(X))), h(np.ones(len(X)))))


def angular_extent(s: Space, margin, axis_angle: float, steps: int = 4096, iters: int = 64) -> Sector:
    """Sector of a planar cone that is star-shaped about ``axis_angle``.

    ``margin(X)`` is nonnegative exactly on members.  The boundary angles
    are located by a coarse outward scan followed by bisection.
    """
    dt = math.pi / steps
    if margin(direction([axis_angle]))[0] < 0:
        raise ValueError("axis is not inside the cone")
    ts = axis_angle + dt * np.arange(1, steps + 1)
    inside_up = margin(direction(ts)) >= 0
    ts_dn = axis_angle - dt * np.arange(1, steps + 1)
    inside_dn = margin(direction(ts_dn)) >= 0
    if inside_up.all() and inside_dn.all():
        return Sector(axis_angle - math.pi, TWO_PI)

    def edge(sign, inside):
        k = int(np.argmin(inside))  # first outside step
        lo, hi = k * dt, (k + 1) * dt
        for _ in range(iters):
            mid = (lo + hi) / 2
            if margin(direction([axis_angle + sign * mid]))[0] >= 0:
                lo = mid
            else:
                hi = mid
        return lo

    up = edge(1.0, inside_up) if not inside_up.all() else math.pi
    dn = edge(-1.0, inside_dn) if not inside_dn.all() else math.pi
    return Sector(axis_angle - dn, min(up + dn, TWO_PI))
