"""Minimal and Henig global proper efficient points of finite clouds.

A point ``x0`` of ``A`` is minimal for ``C`` when no other point ``a`` of
``A`` satisfies ``x0 - a ∈ C``.  Henig global proper efficiency is certified
(never refuted) by exhibiting a convex cone ``K`` with ``C ∖ {0} ⊂ int K``
for which ``x0`` is still minimal.  Two families of such cones are used:
Henig dilations ``C_(B, eps)`` and the open Bishop-Phelps cones
``{x : f(x) - alpha ||x|| > 0} ∪ {0}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .cones import BasePolytope, BishopPhelps, Polyhedral, bounded_base, min_linear_on_trace
from .dilation import HenigDilation, normalize_base
from .separation import Witness, find_witness, ssp_gap, verify_witness
from .space import Space, dual_norm, norm

DEFAULT_TOL = 1e-9
DEFAULT_LADDER = tuple(0.2 * 2.0 ** -k for k in range(11))


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray
    label: str = ""

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.points, dtype=float))
        if P.size == 0:
            raise ValueError("a point cloud must be nonempty")
        object.__setattr__(self, "points", P)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def translate(self, v) -> "PointCloud":
        return PointCloud(self.points + np.asarray(v, dtype=float), self.label)

    def index_of(self, x, tol: float = 0.0) -> int:
        d = np.abs(self.points - np.asarray(x, dtype=float)).max(axis=1)
        i = int(np.argmin(d))
        if d[i] > tol:
            raise ValueError("point is not in the cloud")
        return i


def _as_cloud(A) -> PointCloud:
    return A if isinstance(A, PointCloud) else PointCloud(A)


@dataclass(frozen=True)
class GheCertificate:
    kind: str  # "dilating_cone" or "bishop_phelps"
    slack: float
    eps: float | None = None
    base: BasePolytope | None = None
    f: np.ndarray | None = None
    alpha: float | None = None
    aug_margin: float | None = None  # bishop_phelps: certified min_{C∩S} f - alpha

    def describe(self) -> str:
        if self.kind == "dilating_cone":
            return f"dilating_cone(eps={self.eps:.6g})"
        return f"bishop_phelps(alpha={self.alpha:.6g})"


# ---------------------------------------------------------------------------
# the Min test


def _cone_margins(s: Space, C, D: np.ndarray) -> np.ndarray:
    """Margins of the normalized rows of ``D``; zero rows get ``-inf``."""
    n = norm(s, D)
    out = np.full(len(D), -np.inf)
    nz = n > 0
    if nz.any():
        out[nz] = C.margin(s, D[nz] / n[nz, None])
    return out


def positive_functional(s: Space, C) -> np.ndarray | None:
    """A functional strictly positive on ``C ∖ {0}`` (certified), if found."""
    if isinstance(C, Polyhedral):
        bb = bounded_base(s, C)
        return None if bb is None else bb.functional
    if isinstance(C, BishopPhelps):
        return np.asarray(C.f)
    if isinstance(C, HenigDilation):
        f = C.base.functional
    else:
        try:
            f = np.asarray(C.axis(s), dtype=float)
        except (AttributeError, ValueError):
            return None
    try:
        lower, _, _ = min_linear_on_trace(s, C, f, mesh=1e-2)
    except ValueError:
        return None
    return f if lower > 0 else None


@dataclass(frozen=True)
class MinResult:
    is_min: np.ndarray
    dominator: np.ndarray  # index of one dominating point, -1 for minimal points

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.is_min)


def min_set_bruteforce(s: Space, A, C, tol: float = DEFAULT_TOL) -> MinResult:
    """Pairwise test of every point against every other point."""
    P = _as_cloud(A).points
    n = len(P)
    is_min = np.ones(n, dtype=bool)
    dom = np.full(n, -1)
    for i in range(n):
        m = _cone_margins(s, C, P[i] - P)
        hit = np.flatnonzero(m >= -tol)
        if len(hit):
            is_min[i] = False
            dom[i] = hit[0]
    return MinResult(is_min, dom)


def _pair_screen(s: Space, C, P: np.ndarray, tol: float):
    """``hits(I, J)[a, b]`` tells whether ``P[I[a]] - P[J[b]]`` is a nonzero
    member of ``C``.

    For a solid polyhedral cone the facet values ``H p`` are computed once
    and differenced; only pairs within ``tol * max ||d||`` of a facet are
    re-evaluated with the normalized margin.
    """
    H = C.halfspaces if isinstance(C, Polyhedral) else None
    if H is None or len(H) == 0:
        def hits(I, J):
            D = (P[I][:, None, :] - P[J][None, :, :]).reshape(-1, s.dim)
            return (_cone_margins(s, C, D) >= -tol).reshape(len(I), len(J))
        return hits
    HP = P @ H.T
    band = tol * 2 * float(norm(s, P).max()) if len(P) else 0.0

    def hits(I, J):
        G = (HP[I][:, None, :] - HP[J][None, :, :]).min(axis=2)
        out = G >= band
        a, b = np.nonzero((G >= -band) & ~out)
        if len(a):
            out[a, b] = _cone_margins(s, C, P[I[a]] - P[J[b]]) >= -tol
        return out
    return hits


def min_set(s: Space, A, C, tol: float = DEFAULT_TOL, block: int = 512) -> MinResult:
    """Label every point of ``A`` as minimal or dominated.

    Points are swept in increasing order of a strictly positive functional
    ``f`` (a dominator always has a smaller ``f`` value), each block is
    screened against the minimal points found so far, and every survivor is
    finally checked against the whole cloud, so the labels coincide with the
    pairwise definition.  Without such an ``f`` the pairwise test is used.
    """
    P = _as_cloud(A).points
    s.check(P)
    f = positive_functional(s, C)
    if f is None:
        return min_set_bruteforce(s, P, C, tol)
    n = len(P)
    vals = P @ f
    order = np.argsort(vals, kind="stable")
    is_min = np.zeros(n, dtype=bool)
    dom = np.full(n, -1)
    mins: list[int] = []
    hits = _pair_screen(s, C, P, tol)
    for start in range(0, n, block):
        idx = order[start:start + block]
        alive = np.ones(len(idx), dtype=bool)
        if mins:
            M = np.array(mins)
            for k in range(0, len(M), 256):
                Mk = M[k:k + 256]
                hit = hits(idx, Mk)
                newly = alive & hit.any(axis=1)
                dom[idx[newly]] = Mk[np.argmax(hit[newly], axis=1)]
                alive &= ~newly
        for j, i in enumerate(idx):
            if not alive[j]:
                continue
            # earlier survivors of the same block
            prev = idx[:j][alive[:j]]
            if len(prev):
                m = _cone_margins(s, C, P[i] - P[prev])
                hit = np.flatnonzero(m >= -tol)
                if len(hit):
                    alive[j] = False
                    dom[i] = prev[hit[0]]
                    continue
            mins.append(int(i))
    # verification of the survivors against the full cloud
    scale = 1e-9 * (1 + np.abs(vals).max())
    for i in mins:
        cand = np.flatnonzero(vals <= vals[i] + scale)
        m = _cone_margins(s, C, P[i] - P[cand])
        hit = cand[m >= -tol]
        if len(hit):
            dom[i] = hit[0]
        else:
            is_min[i] = True
    return MinResult(is_min, dom)


# ---------------------------------------------------------------------------
# certificates


def _others(P: np.ndarray, i: int) -> np.ndarray:
    D = P - P[i]
    keep = np.any(D != 0, axis=1)
    return D[keep]


def bp_required_alpha(s: Space, A, x0, f) -> float:
    """Smallest ``alpha`` with ``f(d) + alpha ||d|| >= 0`` for all ``d = a - x0``."""
    P = _as_cloud(A).points
    D = P - np.asarray(x0, dtype=float)
    n = norm(s, D)
    nz = n > 0
    if not nz.any():
        return -math.inf
    return float(np.max(-(D[nz] @ np.asarray(f)) / n[nz]))


def check_certificate(s: Space, A, x0, C, cert: GheCertificate, tol: float = DEFAULT_TOL) -> float:
    """Re-verify a certificate against every point of ``A``; returns its slack
    (positive means valid)."""
    P = _as_cloud(A).points
    x0 = np.asarray(x0, dtype=float)
    D = P - x0
    n = norm(s, D)
    D = D[n > 0]
    if cert.kind == "dilating_cone":
        h = HenigDilation(cert.base, cert.eps)
        if len(D) == 0:
            return math.inf
        # x0 is minimal for the dilation: no x0 - a in C_(B,eps)
        return float(np.min(-_cone_margins(s, h, -D)))
    f = np.asarray(cert.f, dtype=float)
    lower, _, _ = min_linear_on_trace(s, C, f)
    aug = lower - cert.alpha
    if len(D) == 0:
        return aug
    n = n[n > 0]
    g = D @ f / n + cert.alpha
    return float(min(aug, np.min(g)))


@lru_cache(maxsize=256)
def _alpha_grid_top(s: Space, C, eps: float, grid: int, mesh: float):
    """Witness functional for ``(C, C_(B, eps))`` and its largest verified grid ``alpha``."""
    h = HenigDilation(normalize_base(s, C), eps)
    rep = ssp_gap(s, C, h, mesh)
    if not rep.holds:
        return None
    w = find_witness(s, C, h, rep, alpha_grid_size=grid, mesh=mesh)
    if w is None:
        return None
    scale = dual_norm(s, -rep.separating_functional)
    lo, hi = max(rep.max_q / scale, 0.0), rep.min_p / scale
    alphas = lo + (hi - lo) * np.arange(1, grid + 1) / (grid + 1)
    for a in alphas[(alphas > w.delta1) & (alphas < w.delta2)][::-1]:
        if verify_witness(s, C, h, Witness(w.f, float(a), w.delta1, w.delta2, None), mesh).valid:
            return w.f, float(a)
    return w.f, w.alpha


def ghe_certify(s: Space, A, x0, C: Polyhedral, eps_ladder=DEFAULT_LADDER, tol: float = DEFAULT_TOL,
                alpha_grid: int = 1000, mesh: float = 1e-2) -> GheCertificate | None:
    """Try to certify ``x0`` as Henig global proper efficient.

    For each ``eps`` of the ladder (largest first) the dilating-cone test is
    tried, then a Bishop-Phelps certificate whose ``(f, alpha)`` is a
    verified witness for ``(C, C_(B, eps))``; ``alpha`` is the largest
    passing grid value, which gives the narrowest excluded cone.
    """
    A = _as_cloud(A)
    i = A.index_of(x0, tol=1e-12)
    x0 = A.points[i]
    B = normalize_base(s, C)
    D = _others(A.points, i)
    for eps in sorted(eps_ladder, reverse=True):
        if not 0 < eps < min(1.0, B.delta_B):
            continue
        h = HenigDilation(B, eps)
        if len(D) == 0:
            return GheCertificate("dilating_cone", math.inf, eps=eps, base=B)
        slack = float(np.min(-_cone_margins(s, h, -D)))
        if slack > tol:
            return GheCertificate("dilating_cone", slack, eps=eps, base=B)
        top = _alpha_grid_top(s, C, float(eps), alpha_grid, mesh)
        if top is None:
            continue
        f, alpha = top
        need = bp_required_alpha(s, A, x0, f)
        if alpha - need > tol:
            cert = GheCertificate("bishop_phelps", alpha - need, eps=eps, f=f, alpha=alpha,
                                  aug_margin=min_linear_on_trace(s, C, f)[0] - alpha)
            return cert
    return None


# ---------------------------------------------------------------------------
# sections and scalarization


def section(s: Space, A, x0, K, tol: float = DEFAULT_TOL) -> PointCloud:
    """Points ``a`` of ``A`` with ``x0 - a ∈ K``; ``K=None`` stands for the cone ``{0}``."""
    A = _as_cloud(A)
    D = np.asarray(x0, dtype=float) - A.points
    keep = ~np.any(D != 0, axis=1)
    if K is not None:
        keep |= _cone_margins(s, K, D) >= -tol
    return PointCloud(A.points[keep], A.label) if keep.any() else _empty(s)


def _empty(s: Space):
    return _EmptyCloud(np.zeros((0, s.dim)))


@dataclass(frozen=True, eq=False)
class _EmptyCloud:
    points: np.ndarray
    label: str = "empty"

    def __len__(self):
        return 0


def _lex_argmin(vals: np.ndarray, P: np.ndarray, tol: float = 1e-12) -> int:
    best = vals.min()
    ties = np.flatnonzero(vals <= best + tol * (1 + abs(best)))
    keys = P[ties]
    j = np.lexsort(keys.T[::-1])[0]
    return int(ties[j])


def scalarize_section(s: Space, A, x0, C: Polyhedral, delta: float, w: Witness | None = None,
                      tol: float = DEFAULT_TOL, mesh: float = 1e-2):
    """Minimize ``f(x) + alpha ||x||`` over the Henig section below ``x0``.

    Returns ``(x1, certificate)``; the certificate is re-verified against
    all of ``A`` before returning.
    """
    A = _as_cloud(A)
    B = normalize_base(s, C)
    h = HenigDilation(B, delta)
    if w is None:
        rep = ssp_gap(s, C, h, mesh)
        if not rep.holds:
            raise ValueError("the separation of C from its dilation is not certified")
        w = find_witness(s, C, h, rep, mesh=mesh)
        if w is None:
            raise ValueError("no witness found")
    checks = w.checks if w.checks is not None else verify_witness(s, C, h, w, mesh)
    if not checks.valid:
        raise ValueError("witness margins are not positive")
    sec = section(s, A, x0, h, tol)
    if len(sec) == 0:
        raise ValueError("empty section")
    P = sec.points
    g = P @ w.f + w.alpha * norm(s, P)
    x1 = P[_lex_argmin(g, P)]
    cert = GheCertificate("bishop_phelps", 0.0, eps=delta, f=np.asarray(w.f), alpha=w.alpha,
                          aug_margin=checks.aug)
    slack = check_certificate(s, A, x1, C, cert, tol)
    if not slack > -tol:
        raise AssertionError("scalarization certificate failed re-verification")
    return x1, GheCertificate("bishop_phelps", slack, eps=delta, f=np.asarray(w.f), alpha=w.alpha,
                              aug_margin=checks.aug)


def ghe_exists(s: Space, A, C: Polyhedral, eps: float, tol: float = DEFAULT_TOL, mesh: float = 1e-2):
    """A certified Henig global proper efficient point of a finite cloud."""
    from .dilation import EpsNeighborhood

    A = _as_cloud(A)
    if not ssp_gap(s, C, EpsNeighborhood(C, eps), mesh).holds:
        raise ValueError("separation of C from C_eps is not certified")
    x0 = A.points[np.lexsort(A.points.T[::-1])[-1]]
    return scalarize_section(s, A, x0, C, eps, tol=tol, mesh=mesh)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Label:
    kind: str  # min_and_ghe | min_only_at_resolution | dominated
    certificate: GheCertificate | None = None
    dominator: int = -1


def classify(s: Space, A, C: Polyhedral, eps_ladder=DEFAULT_LADDER, tol: float = DEFAULT_TOL,
             certify: bool = True) -> list[Label]:
    A = _as_cloud(A)
    res = min_set(s, A, C, tol)
    out = []
    for i in range(len(A)):
        if not res.is_min[i]:
            out.append(Label("dominated", None, int(res.dominator[i])))
            continue
        cert = ghe_certify(s, A, A.points[i], C, eps_ladder, tol) if certify else None
        out.append(Label("min_and_ghe" if cert else "min_only_at_resolution", cert))
    return out
