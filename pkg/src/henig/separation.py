"""Strict separation of a cone from the boundary of a larger cone, and the
Bishop-Phelps witnesses that certify it.

The pair ``(C, K)`` separates strictly when ``conv(C ∩ S_X)`` keeps a
positive distance from ``conv((bd K ∩ S_X) ∪ {0})``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import plane
from .cones import (
    BishopPhelps,
    classify_aug_pair,
    cone_boundary_sample,
    cone_sphere_sample,
    membership_batch,
    negate,
)
from .space import (
    Space,
    dual_norm,
    hull_distance,
    norm,
    normalize_functional,
    sample_unit_sphere,
    wolfe_min_norm,
)

FAIL_TOL = 1e-7
DEFAULT_MESH = 1e-2


@dataclass(frozen=True)
class SspReport:
    gap_sampled: float
    covering_radius: float
    gap_lower_bound: float
    verdict: str  # holds_certified | fails_certified | inconclusive
    nearest_pair: tuple
    separating_functional: np.ndarray  # dual-norm one, points from the C side towards the K side
    min_p: float  # min over conv(C ∩ S_X) of -separating_functional
    max_q: float  # max over conv((bd K ∩ S_X) ∪ {0}) of -separating_functional
    exact: bool = False

    @property
    def holds(self) -> bool:
        return self.verdict == "holds_certified"


def _verdict(gap: float, lower: float, fail_tol: float) -> str:
    if lower > 0:
        return "holds_certified"
    if gap <= fail_tol:
        return "fails_certified"
    return "inconclusive"


def _boundary_points(s: Space, K, mesh: float, seed: int):
    bd = cone_boundary_sample(s, K, mesh, seed)
    return np.vstack([bd.points, np.zeros((1, s.dim))]), bd.covering_radius


def _arc_hull_distance(s: Space, arc, Q: np.ndarray, tol: float = 1e-26):
    """Euclidean distance between conv(arc) and conv(Q) (Wolfe with exact oracle)."""
    def lmo(x):
        _, p = plane.arc_min_linear(s, arc, x)
        j = int(np.argmax(Q @ x))
        return p - Q[j], (round(float(p[0]), 15), round(float(p[1]), 15), j)

    _, p0 = plane.arc_min_linear(s, arc, -Q[0] + plane.direction(arc.lo + arc.width / 2))
    x, keys, lam = wolfe_min_norm(lmo, (p0 - Q[0], (None, None, 0)), tol=tol, max_iter=5000)
    dist = float(np.linalg.norm(x))
    q = sum(w * Q[k[2]] for w, k in zip(lam, keys))
    p = x + q
    g = x / dist if dist > 0 else np.zeros(2)
    return dist, p, np.asarray(q, dtype=float), g


def ssp_gap(s: Space, C, K, mesh: float = DEFAULT_MESH, seed: int = 42, fail_tol: float = FAIL_TOL) -> SspReport:
    """Distance between ``conv(C ∩ S_X)`` and ``conv((bd K ∩ S_X) ∪ {0})``.

    In the plane both sets have exact finite descriptions (an arc and at
    most three points) and the verdict is exact; otherwise mesh samples are
    used and the gap is certified down by twice the covering radius.
    """
    if s.dim == 2:
        arc = C.sector(s)
        Q, _ = _boundary_points(s, K, mesh, seed)
        if s.norm == "l2":
            dist, p, q, g = _arc_hull_distance(s, arc, Q)
        else:
            hd = hull_distance(s, plane.arc_candidates(s, arc), Q, tol=1e-12)
            dist, p, q, g = hd.distance, hd.p, hd.q, hd.functional
        if dist <= fail_tol:
            g = np.zeros(2)
        min_p = plane.arc_min_linear(s, arc, g)[0] if np.any(g) else 0.0
        max_q = float(np.max(Q @ g))
        return SspReport(dist, 0.0, dist, _verdict(dist, dist, fail_tol), (p, q), -g, min_p, max_q, True)
    P = cone_sphere_sample(s, C, mesh, seed)
    if len(P.points) == 0:
        raise ValueError("C ∩ S_X is empty")
    Q, rq = _boundary_points(s, K, mesh, seed)
    hd = hull_distance(s, P.points, Q)
    r = max(P.covering_radius, rq)
    g = hd.functional if hd.distance > fail_tol else np.zeros(s.dim)
    min_p = float(np.min(P.points @ g))
    max_q = float(np.max(Q @ g))
    lower = hd.distance - 2 * r
    return SspReport(hd.distance, r, lower, _verdict(hd.distance, lower, fail_tol), (hd.p, hd.q), -g,
                     min_p, max_q, False)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BpBoundsReport:
    min_on_cone: float
    max_on_boundary: float
    violations: int
    n_cone: int
    n_boundary: int

    @property
    def ok(self) -> bool:
        return self.violations == 0


def bp_hull_bounds_check(s: Space, f, alpha: float, mesh: float = 5e-2, seed: int = 42,
                         tol: float = 1e-9) -> BpBoundsReport:
    """Check ``f >= alpha`` on ``C(f,alpha) ∩ S_X`` and ``f <= alpha`` on its
    boundary trace plus the origin.  Both bound sets are convex, so the
    pointwise checks cover the hulls."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    f = normalize_functional(s, f)
    c = BishopPhelps(f, alpha)
    P = cone_sphere_sample(s, c, mesh, seed).points
    Q, _ = _boundary_points(s, c, mesh, seed)
    fp = P @ f
    fq = Q @ f
    bad = int(np.sum(fp < alpha - tol) + np.sum(fq > alpha + tol))
    return BpBoundsReport(float(fp.min()), float(fq.max()), bad, len(P), len(Q))


# ---------------------------------------------------------------------------
# witnesses


@dataclass(frozen=True)
class WitnessChecks:
    aug: float  # certified margin of (f, alpha) in the strict augmented dual class
    inner: float  # min over -C ∩ S_X of -(f(x) + alpha ||x||)
    outer: float  # min over unit x outside int(-K) of f(x) + alpha ||x||
    aug_class: str

    @property
    def valid(self) -> bool:
        return self.aug_class == "a_sharp_plus" and min(self.aug, self.inner, self.outer) > 0


@dataclass(frozen=True)
class Witness:
    f: np.ndarray
    alpha: float
    delta1: float
    delta2: float
    checks: WitnessChecks


def _complement_extremes(s: Space, K, f, mesh: float, seed: int) -> tuple[float, float]:
    """Certified lower bound of ``min f`` over the unit vectors outside
    ``int(-K)``, and its sampled value."""
    if s.dim == 2:
        arc = negate(K).sector(s) if not hasattr(K, "negate") else K.negate().sector(s)
        if arc.full:
            return math.inf, math.inf
        v = plane.arc_min_linear(s, arc.complement_arc(), f)[0]
        return v, v
    nK = negate(K)
    sph = sample_unit_sphere(s, mesh, seed)
    outside = sph.points[nK.margin(s, sph.points) <= 0]
    bd = cone_boundary_sample(s, nK, mesh, seed)
    pts = np.vstack([outside, bd.points])
    if len(pts) == 0:
        return math.inf, math.inf
    v = float(np.min(pts @ f))
    r = max(sph.covering_radius, bd.covering_radius)
    return v - dual_norm(s, f) * r, v


def _cone_extremes(s: Space, C, f, mesh: float, seed: int) -> tuple[float, float]:
    """Certified lower bound of ``min f`` over ``C ∩ S_X`` and its sampled value."""
    if s.dim == 2:
        v = plane.arc_min_linear(s, C.sector(s), f)[0]
        return v, v
    smp = cone_sphere_sample(s, C, mesh, seed)
    v = float(np.min(smp.points @ f))
    return v - dual_norm(s, f) * smp.covering_radius, v


def verify_witness(s: Space, C, K, w, mesh: float = DEFAULT_MESH, seed: int = 42) -> WitnessChecks:
    """The three witness conditions, each as a certified margin.

    (1) ``(f, alpha)`` is in the strict augmented dual class of ``C``;
    (2) ``f(x) + alpha ||x|| < 0`` on ``-C ∖ {0}``;
    (3) ``f(x) + alpha ||x|| > 0`` for ``x ≠ 0`` outside ``int(-K)``.
    All three are positively homogeneous, so unit vectors suffice.
    """
    f = s.check(w.f)
    alpha = float(w.alpha)
    if not np.any(f) or alpha <= 0:
        return WitnessChecks(-math.inf, -math.inf, -math.inf, "none")
    aug = classify_aug_pair(s, C, f, alpha, mesh=mesh, seed=seed)
    lo_c, _ = _cone_extremes(s, C, f, mesh, seed)
    lo_k, _ = _complement_extremes(s, K, f, mesh, seed)
    # on -C ∩ S_X, f(x) + alpha = -(f(-x)) + alpha with -x in C ∩ S_X
    inner = lo_c - alpha
    outer = lo_k + alpha
    return WitnessChecks(aug.margin, inner, outer, aug.cls)


def find_witness(s: Space, C, K, report: SspReport, alpha_grid_size: int = 1000,
                 mesh: float = DEFAULT_MESH, seed: int = 42) -> Witness | None:
    """Scan ``alpha`` for the functional read off the separation report.

    ``f`` is minus the report's separating functional (so ``f`` is positive
    on ``C``); the grid spans the open interval between the report's
    ``max_q`` and ``min_p``.  All three witness margins are affine in
    ``alpha``, so the passing set is an interval that the grid brackets.
    """
    if not report.holds:
        raise ValueError("find_witness needs a report with verdict holds_certified")
    f = normalize_functional(s, -report.separating_functional)
    scale = dual_norm(s, -report.separating_functional)
    lo, hi = max(report.max_q / scale, 0.0), report.min_p / scale
    if not hi > lo:
        return None
    grid = lo + (hi - lo) * np.arange(1, alpha_grid_size + 1) / (alpha_grid_size + 1)
    lo_c, _ = _cone_extremes(s, C, f, mesh, seed)
    lo_k, _ = _complement_extremes(s, K, f, mesh, seed)
    ok = (lo_c - grid > 0) & (lo_k + grid > 0) & (grid < dual_norm(s, f))
    idx = np.flatnonzero(ok)
    if len(idx) == 0:
        return None
    first = idx[0]
    last = first
    while last + 1 < len(grid) and ok[last + 1]:
        last += 1
    d1 = grid[first - 1] if first > 0 else lo
    d2 = grid[last + 1] if last + 1 < len(grid) else hi
    w = Witness(f, float(grid[first]), float(d1), float(d2), None)
    checks = verify_witness(s, C, K, w, mesh, seed)
    if not checks.valid:
        return None
    return Witness(f, float(grid[first]), float(d1), float(d2), checks)


def witness_interval(s: Space, C, K, f, mesh: float = DEFAULT_MESH, seed: int = 42) -> tuple[float, float]:
    """Certified open interval of ``alpha`` for which ``f`` is a witness."""
    f = s.check(f)
    lo_c, _ = _cone_extremes(s, C, f, mesh, seed)
    lo_k, _ = _complement_extremes(s, K, f, mesh, seed)
    return max(-lo_k, 0.0), min(lo_c, dual_norm(s, f))


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MonotoneReport:
    first: SspReport
    second: SspReport

    @property
    def consistent(self) -> bool:
        return not (self.first.holds and self.second.verdict == "fails_certified")


def ssp_monotone_check(s: Space, C, K1, K2, mesh: float = DEFAULT_MESH, seed: int = 42,
                       tol: float = 1e-9) -> MonotoneReport:
    """Compare the gaps of ``(C, K1)`` and ``(C, K2)`` for ``K1 ⊂ K2``."""
    U = sample_unit_sphere(s, mesh, seed).points
    U = U[membership_batch(s, K1, U, 0.0)]
    if len(U) and not membership_batch(s, K2, U, tol).all():
        raise ValueError("K1 is not contained in K2 on the sample")
    return MonotoneReport(ssp_gap(s, C, K1, mesh, seed), ssp_gap(s, C, K2, mesh, seed))


def unit_norms(s: Space, X) -> np.ndarray:
    return norm(s, X)
