"""Closed cones, their bases and the augmented dual cones.

Every cone object exposes a vectorized ``margin(s, X)`` that is nonnegative
exactly on members, an interior ``axis(s)`` direction, and (in the plane)
``sector(s)`` giving its exact angular extent.  The dilated cones of
:mod:`henig.dilation` follow the same protocol, so the sampling helpers at
the bottom of this module accept them too.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import linprog, lsq_linear

from . import plane
from .plane import Sector
from .space import (
    Space,
    SphereSample,
    dist_to_polytope,
    dual_norm,
    estimate_covering,
    norm,
    normalize,
    norming_point,
    sample_unit_sphere,
)

MEMBERSHIP_TOL = 1e-9
MARGIN_ZERO_TOL = 1e-12
CLASSES = ("a_sharp_plus", "a_star_plus", "a_sharp", "a_star", "none")


def _vec(v) -> tuple[float, ...]:
    return tuple(float(t) for t in np.asarray(v, dtype=float).ravel())


# ---------------------------------------------------------------------------
# cone representations


def _cone_residual(G: np.ndarray, x: np.ndarray) -> float:
    """Euclidean distance from ``x`` to the cone generated by the columns of ``G``."""
    w = lsq_linear(G, x, bounds=(0, np.inf), method="bvls", tol=1e-14).x
    return float(np.linalg.norm(G @ w - x))


@dataclass(frozen=True)
class Polyhedral:
    """``cone(co(generators))``."""

    generators: tuple[tuple[float, ...], ...]
    convexity_hint: bool = field(default=True, compare=False)

    def __post_init__(self):
        G = np.asarray(self.generators, dtype=float)
        if G.ndim != 2 or len(G) == 0:
            raise ValueError("a polyhedral cone needs at least one generator")
        if np.any(np.all(G == 0, axis=1)):
            raise ValueError("generators must be nonzero")
        object.__setattr__(self, "generators", tuple(_vec(g) for g in G))

    @property
    def G(self) -> np.ndarray:
        return np.asarray(self.generators, dtype=float)

    @property
    def dim(self) -> int:
        return len(self.generators[0])

    @cached_property
    def halfspaces(self) -> np.ndarray | None:
        """Unit inner facet normals, or ``None`` if the cone is not solid.

        An empty array means the cone is the whole space.
        """
        G = self.G / np.linalg.norm(self.G, axis=1, keepdims=True)
        d = self.dim
        if np.linalg.matrix_rank(G, tol=1e-10) < d:
            return None
        if d == 1:
            signs = np.unique(np.sign(G[:, 0]))
            return np.zeros((0, 1)) if len(signs) == 2 else np.array([[signs[0]]])
        normals = []
        for S in itertools.combinations(range(len(G)), d - 1):
            sub = G[list(S)]
            if np.linalg.matrix_rank(sub, tol=1e-10) < d - 1:
                continue
            n = np.linalg.svd(sub)[2][-1]
            vals = G @ n
            if np.all(vals >= -1e-10):
                normals.append(n)
            elif np.all(vals <= 1e-10):
                normals.append(-n)
        if not normals:
            return np.zeros((0, d))
        N = np.unique(np.round(np.array(normals), 12), axis=0)
        return N

    def margin(self, s: Space, X) -> np.ndarray:
        X = np.atleast_2d(s.check(X))
        H = self.halfspaces
        if H is not None:
            if len(H) == 0:
                return np.full(len(X), np.inf)
            return (X @ H.T).min(axis=1)
        # lower-dimensional cone: minus the distance of x to the cone
        G = self.G.T
        out = np.empty(len(X))
        for i, x in enumerate(X):
            out[i] = -_cone_residual(G, x)
        return out

    def axis(self, s: Space) -> np.ndarray:
        G = self.G / np.linalg.norm(self.G, axis=1, keepdims=True)
        a = G.sum(axis=0)
        H = self.halfspaces
        if H is not None and len(H) and np.linalg.norm(a) > 1e-12 and np.min(H @ a) > 1e-9:
            return a / np.linalg.norm(a)
        if H is not None and len(H):
            # Chebyshev-style interior direction
            d = self.dim
            res = linprog(np.r_[np.zeros(d), -1.0], A_ub=np.c_[-H, np.ones(len(H))], b_ub=np.zeros(len(H)),
                          bounds=[(-1, 1)] * d + [(None, 1)], method="highs")
            a = res.x[:d]
        if np.linalg.norm(a) < 1e-12:
            a = G[0]
        return a / np.linalg.norm(a)

    def sector(self, s: Space) -> Sector:
        if self.dim != 2:
            raise ValueError("sectors exist only in the plane")
        t = np.sort(np.mod(plane.angle_of(self.G), plane.TWO_PI))
        t = np.unique(np.round(t, 15))
        if len(t) == 1:
            return Sector(float(t[0]), 0.0)
        gaps = np.diff(np.r_[t, t[0] + plane.TWO_PI])
        k = int(np.argmax(gaps))
        g = gaps[k]
        if g < math.pi - 1e-12:
            return Sector(0.0, plane.TWO_PI)
        if abs(g - math.pi) <= 1e-12 and len(t) == 2:
            raise ValueError("a line is not a sector")
        lo = t[(k + 1) % len(t)]
        return Sector(float(lo), float(plane.TWO_PI - g))


@dataclass(frozen=True)
class BishopPhelps:
    """``C(f, alpha) = {x : f(x) - alpha ||x|| >= 0}``."""

    f: tuple[float, ...]
    alpha: float
    convexity_hint: bool = field(default=True, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "f", _vec(self.f))
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    def validate(self, s: Space) -> None:
        if not self.alpha < dual_norm(s, np.asarray(self.f)):
            raise ValueError("Bishop-Phelps cones need 0 < alpha < ||f||_*")

    def margin(self, s: Space, X) -> np.ndarray:
        X = np.atleast_2d(s.check(X))
        return X @ np.asarray(self.f) - self.alpha * norm(s, X)

    def axis(self, s: Space) -> np.ndarray:
        return norming_point(s, np.asarray(self.f))

    def sector(self, s: Space) -> Sector:
        f = np.asarray(self.f)
        if s.norm == "l2":
            phi = math.atan2(f[1], f[0])
            w = math.acos(min(1.0, self.alpha / np.linalg.norm(f)))
            return Sector(phi - w, 2 * w)
        a = self.axis(s)
        return plane.angular_extent(s, lambda X: self.margin(s, X), math.atan2(a[1], a[0]))


@dataclass(frozen=True)
class Sublevel:
    """``S(f, alpha) = {x : f(x) + alpha ||x|| <= 0}``."""

    f: tuple[float, ...]
    alpha: float
    convexity_hint: bool = field(default=True, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "f", _vec(self.f))
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")

    def margin(self, s: Space, X) -> np.ndarray:
        X = np.atleast_2d(s.check(X))
        return -(X @ np.asarray(self.f) + self.alpha * norm(s, X))

    def axis(self, s: Space) -> np.ndarray:
        return -norming_point(s, np.asarray(self.f))

    def sector(self, s: Space) -> Sector:
        f = np.asarray(self.f)
        if s.norm == "l2":
            phi = math.atan2(-f[1], -f[0])
            w = math.acos(min(1.0, self.alpha / np.linalg.norm(f)))
            return Sector(phi - w, 2 * w)
        a = self.axis(s)
        return plane.angular_extent(s, lambda X: self.margin(s, X), math.atan2(a[1], a[0]))


@dataclass(frozen=True)
class Negated:
    """``-inner``."""

    inner: object

    @property
    def convexity_hint(self) -> bool:
        return getattr(self.inner, "convexity_hint", False)

    def margin(self, s: Space, X) -> np.ndarray:
        return self.inner.margin(s, -np.atleast_2d(s.check(X)))

    def axis(self, s: Space) -> np.ndarray:
        return -self.inner.axis(s)

    def sector(self, s: Space) -> Sector:
        return self.inner.sector(s).negate()


def negate(c):
    """``-c``, unwrapping double negations."""
    if isinstance(c, Negated):
        return c.inner
    if isinstance(c, Sector):
        return c.negate()
    return Negated(c)


# ---------------------------------------------------------------------------
# membership


def membership(s: Space, c, x, tol: float = MEMBERSHIP_TOL) -> bool:
    """Whether ``x`` lies in the closed cone ``c``.

    The margin is evaluated at ``x / ||x||`` so the test is exactly
    homogeneous; the origin always belongs.
    """
    x = s.check(x)
    if x.ndim != 1:
        raise ValueError("membership takes a single point")
    if validate := getattr(c, "validate", None):
        validate(s)
    n = norm(s, x)
    if n == 0:
        return True
    return bool(c.margin(s, x / n)[0] >= -tol)


def membership_batch(s: Space, c, X, tol: float = MEMBERSHIP_TOL) -> np.ndarray:
    X = np.atleast_2d(s.check(X))
    n = norm(s, X)
    out = np.ones(len(X), dtype=bool)
    nz = n > 0
    if nz.any():
        out[nz] = c.margin(s, X[nz] / n[nz, None]) >= -tol
    return out


def interior_membership(s: Space, c: Sublevel, x) -> bool:
    """``f(x) + alpha ||x|| < 0`` for a sublevel cone with ``0 < alpha < ||f||_*``."""
    if not isinstance(c, Sublevel):
        raise TypeError("interior_membership expects a Sublevel cone")
    f = np.asarray(c.f)
    if not 0 < c.alpha < dual_norm(s, f):
        raise ValueError("need 0 < alpha < ||f||_*")
    x = s.check(x)
    return bool(x @ f + c.alpha * norm(s, x) < 0)


# ---------------------------------------------------------------------------
# bases


@dataclass(frozen=True)
class BasePolytope:
    vertices: np.ndarray
    delta_B: float
    M: float
    functional: np.ndarray

    def __post_init__(self):
        if not self.delta_B > 0:
            raise ValueError("the origin lies in the hull of the base vertices")


@dataclass(frozen=True)
class SublevelBase:
    """``{x in S(f, alpha) : -f(x) = 1}`` with its norm bound ``1/alpha``."""

    f: np.ndarray
    alpha: float
    bound: float
    points: np.ndarray


def polyhedral_base(s: Space, c: Polyhedral, f) -> BasePolytope:
    f = s.check(f)
    G = s.check(c.G)
    vals = G @ f
    if np.any(vals <= 0):
        raise ValueError("f is not strictly positive on the generators")
    V = G / vals[:, None]
    delta = dist_to_polytope(s, np.zeros(s.dim), V)
    return BasePolytope(V, delta, float(np.max(norm(s, V))), f)


def _positive_functional(G: np.ndarray) -> np.ndarray | None:
    Gn = G / np.linalg.norm(G, axis=1, keepdims=True)
    f = Gn.sum(axis=0)
    if np.all(Gn @ f > 1e-9):
        return f
    d = G.shape[1]
    # maximize t subject to <g_i, f> >= t, -1 <= f <= 1
    res = linprog(np.r_[np.zeros(d), -1.0], A_ub=np.c_[-Gn, np.ones(len(Gn))], b_ub=np.zeros(len(Gn)),
                  bounds=[(-1, 1)] * d + [(None, 1)], method="highs")
    if res.status != 0 or -res.fun <= 1e-9:
        return None
    return res.x[:d]


def bounded_base(s: Space, c: Polyhedral) -> BasePolytope | None:
    """A bounded base of a polyhedral cone, or ``None`` when it is not pointed."""
    f = _positive_functional(s.check(c.G))
    if f is None:
        return None
    return polyhedral_base(s, c, f / dual_norm(s, f))


def sublevel_base(s: Space, f, alpha: float, mesh: float = 0.05, seed: int = 0) -> SublevelBase:
    """Sampled base of ``S(f, alpha)`` cut by ``-f = 1``."""
    f = s.check(f)
    fn = dual_norm(s, f)
    if alpha > fn * (1 + 1e-12):
        raise ValueError("alpha exceeds ||f||_*")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    bound = 1.0 / alpha
    x0 = -norming_point(s, f) / fn
    pts = [x0]
    if s.dim > 1 and alpha < fn * (1 - 1e-12):  # at alpha = ||f||_* the base is {x0}
        basis = np.linalg.svd(f[None, :])[2][1:]  # orthonormal basis of ker f
        sub = Space(s.dim - 1, "l2")
        dirs = sample_unit_sphere(sub, mesh, seed).points if s.dim > 2 else np.array([[1.0], [-1.0]])
        V = dirs @ basis
        lo = np.zeros(len(V))
        hi = np.full(len(V), 2 * bound + 1)
        for _ in range(80):
            mid = (lo + hi) / 2
            ok = norm(s, x0 + mid[:, None] * V) <= bound
            lo = np.where(ok, mid, lo)
            hi = np.where(ok, hi, mid)
        for frac in (0.25, 0.5, 0.75, 1.0):
            pts.extend(x0 + (frac * lo)[:, None] * V)
    return SublevelBase(f, float(alpha), bound, np.array(pts))


# ---------------------------------------------------------------------------
# sampling a cone's trace on the unit sphere


def _bisect_boundary(s: Space, c, a: np.ndarray, U: np.ndarray, iters: int = 60) -> np.ndarray:
    """For interior direction ``a`` and outside points ``U``, the unit
    boundary point on each segment ``a -> u``."""
    lo = np.zeros(len(U))
    hi = np.ones(len(U))
    for _ in range(iters):
        mid = (lo + hi) / 2
        Y = (1 - mid)[:, None] * a + mid[:, None] * U
        inside = c.margin(s, Y) >= 0
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    Y = (1 - lo)[:, None] * a + lo[:, None] * U
    return normalize(s, Y)


def _arc_sample(s: Space, arc: Sector, mesh: float) -> SphereSample:
    if arc.width == 0:
        return SphereSample(plane.unit(s, np.array([arc.lo])), 0.0)
    n = max(1, math.ceil(2.0 * arc.width / mesh))  # sup-norm Lipschitz bound of the arc map is <= 2
    t = arc.lo + arc.width * np.arange(n + 1) / n
    P = plane.unit(s, t)
    step = float(np.max(norm(s, np.diff(P, axis=0)))) if n else 0.0
    return SphereSample(P, step)


def _round_cone(s: Space, c):
    """``(axis, half_angle)`` when ``c`` is a Euclidean circular cone."""
    if s.norm != "l2" or not isinstance(c, (BishopPhelps, Sublevel)):
        return None
    f = np.asarray(c.f)
    nf = np.linalg.norm(f)
    if c.alpha > nf:
        return None
    a = f / nf if isinstance(c, BishopPhelps) else -f / nf
    return a, math.acos(c.alpha / nf)


def _round_trace(s: Space, a: np.ndarray, t0: float, mesh: float, seed: int, boundary: bool) -> SphereSample:
    # x = cos(t) a + sin(t) v with v a unit vector orthogonal to a
    basis = np.linalg.svd(a[None, :])[2][1:]
    if s.dim == 2:
        V, rv = np.array([[1.0], [-1.0]]) @ basis, 0.0
    else:
        sub = sample_unit_sphere(Space(s.dim - 1, "l2"), 0.7 * mesh, seed)
        V, rv = sub.points @ basis, sub.covering_radius
    if boundary:
        return SphereSample(math.cos(t0) * a + math.sin(t0) * V, math.sin(t0) * rv)
    n = max(1, math.ceil(t0 / (0.6 * mesh)))
    ts = t0 * np.arange(1, n + 1) / n
    P = (np.cos(ts)[:, None, None] * a + np.sin(ts)[:, None, None] * V[None, :, :]).reshape(-1, s.dim)
    return SphereSample(np.vstack([a[None, :], P]), t0 / (2 * n) + rv)


def cone_sphere_sample(s: Space, c, mesh: float, seed: int = 42) -> SphereSample:
    """Points of ``C ∩ S_X`` with (an estimate of) their covering radius.

    In the plane the trace is sampled along its exact arc, and Euclidean
    Bishop-Phelps cones are parametrized directly; otherwise the sphere grid
    is filtered by the margin and enriched with boundary points.
    """
    if s.dim == 2:
        return _arc_sample(s, c.sector(s), mesh)
    if isinstance(c, Negated):
        inner = cone_sphere_sample(s, c.inner, mesh, seed)
        return SphereSample(-inner.points, inner.covering_radius)
    if (rc := _round_cone(s, c)) is not None:
        return _round_trace(s, rc[0], rc[1], mesh, seed, boundary=False)
    sph = sample_unit_sphere(s, mesh, seed)
    P = sph.points
    m = c.margin(s, P)
    inside = P[m >= 0]
    a = normalize(s, c.axis(s))
    rng = np.random.default_rng(seed)
    probes = _cone_probes(s, c, a, rng)
    outside = P[m < 0]
    if len(inside) and len(outside):
        from scipy.spatial import cKDTree

        near = cKDTree(inside).query(outside, k=1, distance_upper_bound=3 * sph.covering_radius)[0]
        outside = outside[np.isfinite(near)]
    if len(outside):
        outside = outside[outside @ a > -0.999]
        bd = _bisect_boundary(s, c, a, outside)
        sample = np.vstack([inside, bd, a[None, :]])
    else:
        sample = np.vstack([inside, a[None, :]]) if len(inside) else a[None, :]
    r = max(sph.covering_radius, estimate_covering(s, sample, probes))
    return SphereSample(sample, r)


def _cone_probes(s: Space, c, a: np.ndarray, rng, count: int = 4000) -> np.ndarray:
    U = normalize(s, rng.standard_normal((count, s.dim)))
    m = c.margin(s, U)
    ins = U[m >= 0]
    out = U[(m < 0) & (U @ a > -0.999)]
    parts = [ins]
    if len(out):
        parts.append(_bisect_boundary(s, c, a, out))
    return np.vstack(parts)


def cone_boundary_sample(s: Space, c, mesh: float, seed: int = 42) -> SphereSample:
    """Points of ``bd C ∩ S_X`` with (an estimate of) their covering radius."""
    if s.dim == 2:
        arc = c.sector(s)
        if arc.full:
            return SphereSample(np.zeros((0, 2)), 0.0)
        return SphereSample(plane.unit(s, np.array(arc.boundary_angles())), 0.0)
    if isinstance(c, Negated):
        inner = cone_boundary_sample(s, c.inner, mesh, seed)
        return SphereSample(-inner.points, inner.covering_radius)
    if (rc := _round_cone(s, c)) is not None:
        return _round_trace(s, rc[0], rc[1], mesh, seed, boundary=True)
    sph = sample_unit_sphere(s, mesh, seed)
    a = normalize(s, c.axis(s))
    P = sph.points
    m = c.margin(s, P)
    out = P[(m < 0) & (P @ a > -0.999)]
    if len(out) == 0:
        return SphereSample(np.zeros((0, s.dim)), 0.0)
    bd = np.unique(np.round(_bisect_boundary(s, c, a, out), 13), axis=0)
    rng = np.random.default_rng(seed + 1)
    U = normalize(s, rng.standard_normal((4000, s.dim)))
    U = U[(c.margin(s, U) < 0) & (U @ a > -0.999)]
    probes = _bisect_boundary(s, c, a, U) if len(U) else np.zeros((0, s.dim))
    return SphereSample(bd, max(sph.covering_radius, estimate_covering(s, bd, probes)))


def min_linear_on_trace(s: Space, c, f, mesh: float = 1e-3, seed: int = 42, method: str = "auto"):
    """``inf`` of ``f`` over ``C ∩ S_X``: returns ``(certified_lower, sampled, exact)``."""
    f = s.check(f)
    if method not in ("auto", "exact", "sample"):
        raise ValueError("method must be auto, exact or sample")
    if s.dim == 2 and method != "sample":
        v, _ = plane.arc_min_linear(s, c.sector(s), f)
        return v, v, True
    if method == "exact":
        raise ValueError("exact evaluation is available only in the plane")
    smp = cone_sphere_sample(s, c, mesh, seed)
    v = float(np.min(smp.points @ f))
    return v - dual_norm(s, f) * smp.covering_radius, v, False


# ---------------------------------------------------------------------------
# augmented dual cones


@dataclass(frozen=True)
class AugPair:
    f: np.ndarray
    alpha: float
    cls: str
    margin: float  # certified lower bound of inf_{C ∩ S} f - alpha
    margin_sampled: float
    exact: bool = False


def _class_of(alpha: float, lower: float, sampled: float, f_lower: float, f_sampled: float) -> str:
    if f_sampled <= MARGIN_ZERO_TOL or sampled < -MARGIN_ZERO_TOL:
        return "none"
    plus = alpha > 0
    if lower > MARGIN_ZERO_TOL and f_lower > 0:
        return "a_sharp_plus" if plus else "a_sharp"
    return "a_star_plus" if plus else "a_star"


def classify_aug_pair(s: Space, c, f, alpha: float, mesh: float = 1e-3, method: str = "auto",
                      seed: int = 42) -> AugPair:
    """Place ``(f, alpha)`` in the most specific augmented dual class of ``c``."""
    f = s.check(f)
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    lower, sampled, exact = min_linear_on_trace(s, c, f, mesh, seed, method)
    cls = _class_of(alpha, lower - alpha, sampled - alpha, lower, sampled)
    return AugPair(f, float(alpha), cls, lower - alpha, sampled - alpha, exact)


def augmented_witness_search(s: Space, c: Polyhedral, mesh: float = 1e-3, seed: int = 42) -> AugPair | None:
    """A pair in the strict augmented dual class built from a bounded base."""
    bb = bounded_base(s, c)
    if bb is None:
        return None
    f = bb.functional
    delta, _, _ = min_linear_on_trace(s, c, f, mesh, seed)
    if delta <= 0:
        return None
    return classify_aug_pair(s, c, f, delta / 2, mesh=mesh, seed=seed)
