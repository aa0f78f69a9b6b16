"""Dilating cones: eps-conic neighbourhoods and Henig dilations of a base.

``x`` belongs to the eps-conic neighbourhood of ``C`` when some positive
multiple of ``x`` lies within ``eps`` of ``C ∩ S_X``; that is, when the open
ray through ``x`` comes within ``eps`` of ``C ∩ S_X``.  The Henig dilation of
a base ``B`` is ``cone(conv B + eps B_X)``; ``x`` belongs to it when the ray
through ``x`` comes within ``eps`` of ``conv B``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.spatial import cKDTree

from . import plane
from .cones import BasePolytope, Polyhedral, bounded_base, cone_sphere_sample, membership_batch
from .plane import Sector
from .space import Space, hull_distance, line_min, min_norm_batch, norm, normalize

DEFAULT_MESH = 1e-2


@lru_cache(maxsize=64)
def _trace(s: Space, c, mesh: float, seed: int):
    smp = cone_sphere_sample(s, c, mesh, seed)
    tree = cKDTree(smp.points) if s.norm == "l2" else None
    return smp, tree


def ray_distance_to_cone_sphere(s: Space, c, X, mesh: float = DEFAULT_MESH, seed: int = 42):
    """``d(ray(x), C ∩ S_X)`` for each row of ``X``, plus the sampling slack.

    Exact (slack 0) in the plane; otherwise evaluated against a mesh sample
    of ``C ∩ S_X`` and accurate up to the returned covering radius.
    """
    X = np.atleast_2d(s.check(X))
    if s.dim == 2:
        return plane.arc_ray_distance(s, c.sector(s), X), 0.0
    smp, tree = _trace(s, c, mesh, seed)
    U = normalize(s, X)
    if tree is not None:
        # for unit vectors the distance from c to the ray through u is
        # sqrt(1 - <c,u>^2) when <c,u> >= 0, and 1 otherwise
        chord, _ = tree.query(U)
        dot = 1 - chord ** 2 / 2
        d = np.where(dot >= 0, np.sqrt(np.clip(1 - dot ** 2, 0, None)), 1.0)
        return d, smp.covering_radius
    out = np.full(len(U), np.inf)
    P = smp.points
    for i in range(0, len(P), 256):
        blk = P[i:i + 256]
        Y = np.repeat(blk[None, :, :], len(U), axis=0).reshape(-1, s.dim)
        D = np.repeat(U, len(blk), axis=0)
        vals = line_min(s, Y, D, 0.0, np.inf)[0].reshape(len(U), len(blk))
        out = np.minimum(out, vals.min(axis=1))
    return out, smp.covering_radius


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EpsNeighborhood:
    """The eps-conic neighbourhood ``C_eps`` of ``base_cone``."""

    base_cone: object
    eps: float
    mesh: float = DEFAULT_MESH
    seed: int = 42
    convexity_hint: bool = field(default=False, compare=False)

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")

    def sphere_sample(self, s: Space):
        return _trace(s, self.base_cone, self.mesh, self.seed)[0]

    def margin(self, s: Space, X) -> np.ndarray:
        if s.dim == 2:
            return self.sector(s).margin(s, X)
        d, r = ray_distance_to_cone_sphere(s, self.base_cone, X, self.mesh, self.seed)
        return self.eps + r - d

    def axis(self, s: Space) -> np.ndarray:
        return self.base_cone.axis(s)

    def sector(self, s: Space) -> Sector:
        return _eps_sector(s, self.base_cone, self.eps)


@lru_cache(maxsize=256)
def _eps_sector(s: Space, c, eps: float) -> Sector:
    arc = c.sector(s)
    if s.norm == "l2":
        w = arc.width + 2 * math.asin(eps)
        if w >= plane.TWO_PI:
            return Sector(arc.lo - math.asin(eps), plane.TWO_PI)
        return Sector(arc.lo - math.asin(eps), w)
    # polyhedral unit ball: the thickened trace is a union of convex polygons
    # (segment + eps ball), each seen from the origin under a sector
    corners = plane.unit(s, np.array(plane.CORNERS[s.norm]))
    P = plane.arc_polyline(s, arc)
    segs = [P[i:i + 2] for i in range(len(P) - 1)] or [P[:1]]
    mid = arc.lo + arc.width / 2
    lo, hi = math.inf, -math.inf
    for seg in segs:
        gens = (seg[:, None, :] + eps * corners[None, :, :]).reshape(-1, 2)
        sec = Polyhedral(tuple(map(tuple, gens))).sector(s)
        a = (sec.lo - mid + math.pi) % plane.TWO_PI - math.pi
        lo, hi = min(lo, a), max(hi, a + sec.width)
    if hi - lo >= plane.TWO_PI:
        return Sector(mid - math.pi, plane.TWO_PI)
    return Sector(mid + lo, hi - lo)


@dataclass(frozen=True, eq=False)
class HenigDilation:
    """``C_(B, eps) = cone(conv B + eps B_X)`` for a base polytope ``B``."""

    base: BasePolytope
    eps: float
    convexity_hint: bool = field(default=True, compare=False)

    def __post_init__(self):
        if not 0 < self.eps < min(1.0, self.base.delta_B):
            raise ValueError("eps must lie in (0, min(1, delta_B))")

    def _key(self):
        return (self.base.vertices.tobytes(), self.base.vertices.shape, self.eps)

    def __hash__(self):
        return hash(self._key())

    def __eq__(self, other):
        return isinstance(other, HenigDilation) and self._key() == other._key()

    def as_polyhedral(self, s: Space) -> Polyhedral:
        """Exact generators of the dilation for the polyhedral norms."""
        return _henig_polyhedral(s, self)

    def _as_polyhedral(self, s: Space) -> Polyhedral:
        if s.norm == "l2":
            raise ValueError("the l2 dilation is not polyhedral")
        d = s.dim
        if s.norm == "l1":
            corners = np.vstack([np.eye(d), -np.eye(d)])
        else:
            corners = np.array(list(itertools.product((-1.0, 1.0), repeat=d)))
        V = self.base.vertices
        gens = (V[:, None, :] + self.eps * corners[None, :, :]).reshape(-1, d)
        return _polyhedral_hull(gens)

    def ray_distance(self, s: Space, X) -> np.ndarray:
        """``min_{mu > 0} d(mu x, conv B)`` for each row of ``X``.

        Under l2, values above ``eps`` may be replaced by a lower bound that
        still exceeds ``eps``, which leaves membership decisions unchanged.
        """
        X = np.atleast_2d(s.check(X))
        U = normalize(s, X)
        V = self.base.vertices
        out = np.empty(len(U))
        if s.norm == "l2":
            # projecting conv B orthogonally to u gives a lower bound that is
            # exact when every vertex sits in front of the origin along u
            U2 = U / np.linalg.norm(U, axis=1, keepdims=True)
            dots = U2 @ V.T
            proj = V[None, :, :] - dots[:, :, None] * U2[:, None, :]
            out[:] = min_norm_batch(proj)
            exact = np.all(dots >= 0, axis=1) | (out > self.eps + 1e-6)
            rest = np.flatnonzero(~exact)
        else:
            rest = np.arange(len(U))
        # the optimal multiplier never exceeds 2 M, so the ray may be cut there
        T = 2 * self.base.M + 2 * self.eps
        if s.norm == "l2" and len(rest):
            # distance between conv B and the segment [0, T u]
            for i in range(0, len(rest), 2048):
                idx = rest[i:i + 2048]
                Y = np.concatenate([np.broadcast_to(V, (len(idx),) + V.shape),
                                    V[None, :, :] - T * U2[idx][:, None, :]], axis=1)
                out[idx] = min_norm_batch(Y)
            return out
        for i in rest:
            out[i] = hull_distance(s, V, np.vstack([np.zeros(s.dim), T * U[i]])).distance
        return out

    def margin(self, s: Space, X) -> np.ndarray:
        if s.dim == 2:
            return self.sector(s).margin(s, X)
        if s.norm != "l2":
            return self.as_polyhedral(s).margin(s, X)
        return self.eps - self.ray_distance(s, X)

    def axis(self, s: Space) -> np.ndarray:
        a = self.base.vertices.mean(axis=0)
        return a / np.linalg.norm(a)

    def sector(self, s: Space) -> Sector:
        return _henig_sector(s, self)


@lru_cache(maxsize=256)
def _henig_polyhedral(s: Space, h: HenigDilation) -> Polyhedral:
    return h._as_polyhedral(s)


@lru_cache(maxsize=256)
def _henig_sector(s: Space, h: HenigDilation) -> Sector:
    if s.norm != "l2":
        return h.as_polyhedral(s).sector(s)
    V = h.base.vertices
    arc = Polyhedral(tuple(map(tuple, V))).sector(s)
    t = np.mod(plane.angle_of(V) - arc.lo, plane.TWO_PI)
    t = np.where(t > arc.width + 1e-9, t - plane.TWO_PI, t)  # unwrap relative to arc.lo
    widen = np.arcsin(h.eps / np.linalg.norm(V, axis=1))
    lo = float(np.min(t - widen)) + arc.lo
    hi = float(np.max(t + widen)) + arc.lo
    return Sector(lo, min(hi - lo, plane.TWO_PI))


def _polyhedral_hull(gens: np.ndarray) -> Polyhedral:
    return Polyhedral(tuple(map(tuple, np.unique(np.round(gens, 14), axis=0))))


# ---------------------------------------------------------------------------
# membership


def _member(s: Space, c, x, tol: float) -> bool:
    x = s.check(x)
    n = norm(s, x)
    if n == 0:
        return True
    return bool(c.margin(s, (x / n)[None, :])[0] >= -tol)


def eps_membership(s: Space, n: EpsNeighborhood, x, tol: float = 1e-9) -> bool:
    """Membership in ``C_eps`` (sampling slack is included in the margin)."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return _member(s, n, x, tol)


def henig_membership(s: Space, h: HenigDilation, x, tol: float = 1e-9) -> bool:
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return _member(s, h, x, tol)


# ---------------------------------------------------------------------------


def normalize_base(s: Space, c: Polyhedral) -> BasePolytope:
    """A bounded base of ``c`` rescaled to distance one from the origin."""
    bb = bounded_base(s, c)
    if bb is None:
        raise ValueError("the cone has no bounded base")
    k = bb.delta_B
    V = bb.vertices / k
    return BasePolytope(V, 1.0, float(np.max(norm(s, V))), bb.functional * k)


@dataclass(frozen=True)
class InclusionReport:
    eps: float
    eps_prime: float
    alpha: float
    checked_outer: int
    checked_inner: int
    counterexamples: list
    min_slack_outer: float  # min eps-neighbourhood margin over members of C_(B,eps)
    min_slack_inner: float  # min Henig margin over members of C_alpha

    @property
    def ok(self) -> bool:
        return not self.counterexamples


def inclusion_check(s: Space, c: Polyhedral, eps: float, mesh: float = DEFAULT_MESH, seed: int = 42,
                    tol: float = 1e-9) -> InclusionReport:
    """Check ``C_(B,eps) ⊂ C_eps`` and ``C_alpha ∖ {0} ⊂ int C_(B,eps)`` on samples.

    ``B`` is the normalized base and ``alpha = eps / (4 M)``.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    B = normalize_base(s, c)
    h = HenigDilation(B, eps)
    ce = EpsNeighborhood(c, eps, mesh, seed)
    eps_prime = eps / (2 * B.M)
    alpha = eps_prime / 2
    ca = EpsNeighborhood(c, alpha, mesh, seed)
    from .space import sample_unit_sphere

    U = sample_unit_sphere(s, mesh, seed).points
    rng = np.random.default_rng(seed)
    U = np.vstack([U, normalize(s, rng.standard_normal((500, s.dim)))])
    hm = h.margin(s, U)
    outer = U[hm >= -tol]
    bad = []
    em = ce.margin(s, outer) if len(outer) else np.zeros(0)
    bad += [("outer", p) for p in outer[em < -tol]]
    # the sampled margin over-states membership by up to the covering radius;
    # only certain members of C_alpha can refute the inner inclusion
    _, r = ray_distance_to_cone_sphere(s, c, U[:1], mesh, seed)
    am = ca.margin(s, U) - r
    inner = U[am >= -tol]
    hi = hm[am >= -tol]
    bad += [("inner", p) for p in inner[hi <= 0]]
    return InclusionReport(eps, eps_prime, alpha, len(outer), len(inner), bad,
                           float(em.min()) if len(em) else math.inf,
                           float(hi.min()) if len(hi) else math.inf)


def dilation_members(s: Space, c, X, tol: float = 1e-9) -> np.ndarray:
    """Vectorized membership for any cone-like object."""
    return membership_batch(s, c, X, tol)
