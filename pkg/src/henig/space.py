"""Finite-dimensional normed spaces with l1, l2 or l-infinity norms.

All geometry in the package is parameterized by a :class:`Space`.  Points
and functionals are plain numpy arrays; batched routines take arrays of
shape ``(n_points, dim)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import cKDTree

NORMS = ("l1", "l2", "linf")
_DUAL = {"l1": "linf", "l2": "l2", "linf": "l1"}
_ORD = {"l1": 1, "l2": 2, "linf": np.inf}

TOL_QP = 1e-9


class DimensionError(ValueError):
    """Raised when an array does not match the dimension of its space."""


@dataclass(frozen=True)
class Space:
    dim: int
    norm: str = "l2"

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ValueError("dim must be >= 1")
        if self.norm not in NORMS:
            raise ValueError(f"norm must be one of {NORMS}, got {self.norm!r}")

    @property
    def dual(self) -> str:
        return _DUAL[self.norm]

    @property
    def polyhedral(self) -> bool:
        return self.norm != "l2"

    def check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dim,):
            raise DimensionError(f"expected trailing dimension {self.dim}, got shape {x.shape}")
        return x


def _pnorm(x: np.ndarray, which: str) -> np.ndarray:
    if x.ndim < 2:
        return np.linalg.norm(x, ord=_ORD[which], axis=-1)
    # column-wise accumulation is much faster than a reduction along a short last axis
    cols = np.moveaxis(x, -1, 0)
    if which == "l2":
        acc = cols[0] * cols[0]
        for c in cols[1:]:
            acc = acc + c * c
        return np.sqrt(acc)
    acc = np.abs(cols[0])
    op = np.add if which == "l1" else np.maximum
    for c in cols[1:]:
        acc = op(acc, np.abs(c))
    return acc


def norm(s: Space, x) -> np.ndarray | float:
    """Norm of ``x`` (or of each row of ``x``)."""
    out = _pnorm(s.check(x), s.norm)
    return float(out) if np.ndim(out) == 0 else out


def dual_norm(s: Space, f) -> np.ndarray | float:
    """Dual norm of a functional given by its coefficient vector."""
    out = _pnorm(s.check(f), s.dual)
    return float(out) if np.ndim(out) == 0 else out


def normalize(s: Space, x) -> np.ndarray:
    x = s.check(x)
    n = _pnorm(x, s.norm)
    return x / np.expand_dims(n, -1)


def normalize_functional(s: Space, f) -> np.ndarray:
    f = s.check(f)
    return f / dual_norm(s, f)


def norming_functional(s: Space, v) -> np.ndarray:
    """A functional ``g`` with dual norm one and ``g(v) = ||v||``."""
    v = s.check(v)
    if s.norm == "l2":
        return v / np.linalg.norm(v)
    if s.norm == "l1":
        g = np.sign(v)
        g[g == 0] = 1.0
        return g
    g = np.zeros_like(v)
    i = int(np.argmax(np.abs(v)))
    g[i] = 1.0 if v[i] >= 0 else -1.0
    return g


def dist_to_cloud(s: Space, x, A) -> float:
    A = s.check(A).reshape(-1, s.dim)
    if len(A) == 0:
        raise ValueError("empty point set")
    return float(np.min(_pnorm(A - s.check(x), s.norm)))


def thickened_set_membership(s: Space, x, A, eps: float) -> bool:
    """Membership in the closed eps-thickening of a finite set."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return dist_to_cloud(s, x, A) <= eps


# ---------------------------------------------------------------------------
# one-dimensional minimization of t -> ||y - t d|| over an interval


def line_min(s: Space, Y, D, lo: float = 0.0, hi: float = np.inf) -> tuple[np.ndarray, np.ndarray]:
    """Exact ``min_{lo <= t <= hi} ||y - t d||`` for each row of ``Y``.

    ``D`` is one direction (shape ``(dim,)``) or one per row.  Returns the
    minimal values and the minimizing ``t``.
    """
    Y = np.atleast_2d(s.check(Y))
    D = np.broadcast_to(s.check(D), Y.shape)
    if s.norm == "l2":
        dd = np.einsum("ij,ij->i", D, D)
        with np.errstate(invalid="ignore", divide="ignore"):
            t = np.where(dd > 0, np.einsum("ij,ij->i", Y, D) / dd, 0.0)
        t = np.clip(t, lo, hi)
        return np.linalg.norm(Y - t[:, None] * D, axis=1), t
    # piecewise linear and convex: the minimum sits at a breakpoint
    cands = [np.full(len(Y), lo)]
    if np.isfinite(hi):
        cands.append(np.full(len(Y), hi))
    with np.errstate(invalid="ignore", divide="ignore"):
        for i in range(s.dim):
            cands.append(Y[:, i] / D[:, i])
        if s.norm == "linf":
            for i, j in itertools.combinations(range(s.dim), 2):
                cands.append((Y[:, i] - Y[:, j]) / (D[:, i] - D[:, j]))
                cands.append((Y[:, i] + Y[:, j]) / (D[:, i] + D[:, j]))
    T = np.stack(cands, axis=1)
    T = np.where(np.isfinite(T), T, lo)
    T = np.clip(T, lo, hi)
    R = Y[:, None, :] - T[:, :, None] * D[:, None, :]
    vals = _pnorm(R, s.norm)
    k = np.argmin(vals, axis=1)
    rows = np.arange(len(Y))
    return vals[rows, k], T[rows, k]


def dist_to_ray(s: Space, Y, direction) -> np.ndarray:
    """Distance from each row of ``Y`` to the ray ``{t d : t >= 0}``."""
    return line_min(s, Y, direction, 0.0, np.inf)[0]


def dist_to_segment(s: Space, Y, p, q) -> np.ndarray:
    Y = np.atleast_2d(s.check(Y))
    p = s.check(p)
    return line_min(s, Y - p, s.check(q) - p, 0.0, 1.0)[0]


# ---------------------------------------------------------------------------
# Euclidean minimum-norm point (Wolfe) over a polytope given implicitly


def _affine_min(S: np.ndarray) -> np.ndarray:
    """Barycentric weights of the minimum-norm point of aff(rows of S)."""
    k = len(S)
    if k == 1:
        return np.ones(1)
    G = S @ S.T
    K = np.zeros((k + 1, k + 1))
    K[:k, :k] = G
    K[:k, k] = 1.0
    K[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    return sol[:k]


def wolfe_min_norm(lmo, first, tol: float = TOL_QP, max_iter: int = 10_000):
    """Wolfe's minimum-norm-point algorithm.

    ``lmo(x)`` returns ``(atom, key)`` minimizing ``<x, atom>`` over the atom
    set; ``first`` is any ``(atom, key)``.  Stops on the duality gap
    ``||x||^2 - <x, atom> <= tol * max(1, ||x||)``.  Returns
    ``(x, keys, weights)``.
    """
    atoms = [np.asarray(first[0], dtype=float)]
    keys = [first[1]]
    lam = np.ones(1)
    x = atoms[0].copy()
    for _ in range(max_iter):
        a, key = lmo(x)
        xx = float(x @ x)
        if xx - float(x @ a) <= tol * max(1.0, math.sqrt(xx)) or key in keys:
            break
        atoms.append(np.asarray(a, dtype=float))
        keys.append(key)
        lam = np.append(lam, 0.0)
        while True:
            S = np.array(atoms)
            alpha = _affine_min(S)
            if np.all(alpha > 1e-14):
                lam = alpha
                x = alpha @ S
                break
            neg = alpha <= 1e-14
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(neg, lam / (lam - alpha), np.inf)
            theta = float(np.clip(np.min(ratios), 0.0, 1.0))
            lam = theta * alpha + (1 - theta) * lam
            keep = lam > 1e-14
            keep[np.argmax(lam)] = True
            atoms = [a_ for a_, k_ in zip(atoms, keep) if k_]
            keys = [k for k, k_ in zip(keys, keep) if k_]
            lam = lam[keep] / lam[keep].sum()
            x = lam @ np.array(atoms)
            if len(atoms) == 1:
                break
    return x, keys, lam


# ---------------------------------------------------------------------------
# LP formulations for the polyhedral norms


def _lp_hull_primal(s: Space, P: np.ndarray, Q: np.ndarray):
    """min ||P^T a - Q^T b|| over simplex weights a, b (l1 or linf)."""
    n, m, d = len(P), len(Q), s.dim
    if s.norm == "l1":
        nt = d
        c = np.r_[np.zeros(n + m), np.ones(d)]
    else:
        nt = 1
        c = np.r_[np.zeros(n + m), 1.0]
    # residual r = P^T a - Q^T b ; -t <= r <= t
    R = np.hstack([P.T, -Q.T])
    T = np.eye(d) if nt == d else np.ones((d, 1))
    A_ub = np.vstack([np.hstack([R, -T]), np.hstack([-R, -T])])
    b_ub = np.zeros(2 * d)
    A_eq = np.zeros((2, n + m + nt))
    A_eq[0, :n] = 1.0
    A_eq[1, n:n + m] = 1.0
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0, 1.0],
                  bounds=[(0, None)] * (n + m + nt), method="highs")
    if res.status != 0:
        raise RuntimeError(f"hull-distance LP failed: {res.message}")
    a, b = res.x[:n], res.x[n:n + m]
    return float(res.fun), a @ P, b @ Q


def _lp_separator(s: Space, P: np.ndarray, Q: np.ndarray):
    """max_{||f||_* <= 1} min_P f - max_Q f, returning (value, f)."""
    d = s.dim
    # variables: f+ (d), f- (d), a, b ; maximize a - b
    c = np.r_[np.zeros(2 * d), -1.0, 1.0]
    rows = [np.hstack([-P, P, np.ones((len(P), 1)), np.zeros((len(P), 1))]),
            np.hstack([Q, -Q, np.zeros((len(Q), 1)), -np.ones((len(Q), 1))])]
    b_ub = [np.zeros(len(P)), np.zeros(len(Q))]
    if s.dual == "l1":
        rows.append(np.r_[np.ones(2 * d), 0.0, 0.0][None, :])
        b_ub.append([1.0])
        bounds = [(0, None)] * (2 * d) + [(None, None)] * 2
    else:
        bounds = [(0, 1)] * (2 * d) + [(None, None)] * 2
    res = linprog(c, A_ub=np.vstack(rows), b_ub=np.concatenate(b_ub), bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"separator LP failed: {res.message}")
    f = res.x[:d] - res.x[d:2 * d]
    return float(-res.fun), f


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HullDistance:
    distance: float
    p: np.ndarray
    q: np.ndarray
    functional: np.ndarray  # dual-norm one, min over P minus max over Q == distance when positive


def hull_distance(s: Space, P, Q, tol: float = TOL_QP) -> HullDistance:
    """Distance between conv(P) and conv(Q) with a nearest pair.

    The returned functional ``g`` satisfies ``min_P g - max_Q g = distance``
    (up to ``tol``) when the hulls are disjoint.
    """
    P = np.atleast_2d(s.check(P))
    Q = np.atleast_2d(s.check(Q))
    if len(P) == 0 or len(Q) == 0:
        raise ValueError("empty point set")
    if s.norm == "l2":
        def lmo(x):
            i = int(np.argmin(P @ x))
            j = int(np.argmax(Q @ x))
            return P[i] - Q[j], (i, j)

        x, keys, lam = wolfe_min_norm(lmo, (P[0] - Q[0], (0, 0)), tol=tol * 1e-6)
        p = sum(w * P[i] for w, (i, _) in zip(lam, keys))
        q = sum(w * Q[j] for w, (_, j) in zip(lam, keys))
        dist = float(np.linalg.norm(x))
        g = x / dist if dist > 0 else np.zeros(s.dim)
        return HullDistance(dist, np.asarray(p), np.asarray(q), g)
    dist, p, q = _lp_hull_primal(s, P, Q)
    if dist > tol:
        _, g = _lp_separator(s, P, Q)
    else:
        g = np.zeros(s.dim)
    return HullDistance(dist, p, q, g)


def dist_to_polytope(s: Space, x, V, tol: float = TOL_QP) -> float:
    """Distance from ``x`` to conv(V)."""
    V = np.atleast_2d(s.check(V))
    if len(V) == 0:
        raise ValueError("empty vertex set")
    return hull_distance(s, V, np.atleast_2d(s.check(x)), tol=tol).distance


def min_norm_batch(Y: np.ndarray) -> np.ndarray:
    """Euclidean distance from the origin to conv(Y[i]) for a stack of small polytopes.

    ``Y`` has shape ``(n, k, d)``.  Every affinely independent face with at
    most ``d + 1`` vertices is tried (the minimizer lies in the relative
    interior of one of them), so the cost grows like ``2**k``.
    """
    n, k, d = Y.shape
    best = np.linalg.norm(Y, axis=2).min(axis=1)
    for size in range(2, min(k, d + 1) + 1):
        for S in itertools.combinations(range(k), size):
            z0 = Y[:, S[0], :]
            E = Y[:, S[1:], :] - z0[:, None, :]
            G = E @ E.transpose(0, 2, 1)
            scale = np.einsum("nii->n", G)
            ok = np.linalg.det(G) > 1e-12 * np.maximum(scale, 1e-300) ** (size - 1)
            if not ok.any():
                continue
            rhs = -np.einsum("nmd,nd->nm", E[ok], z0[ok])
            tt = np.linalg.solve(G[ok], rhs[..., None])[..., 0]
            inside = (tt.min(axis=1) >= -1e-12) & (tt.sum(axis=1) <= 1 + 1e-12)
            pt = z0[ok] + np.einsum("nm,nmd->nd", tt, E[ok])
            val = np.where(inside, np.linalg.norm(pt, axis=1), np.inf)
            idx = np.flatnonzero(ok)
            best[idx] = np.minimum(best[idx], val)
    return best


# ---------------------------------------------------------------------------
# unit sphere sampling


@dataclass(frozen=True)
class SphereSample:
    points: np.ndarray
    covering_radius: float


_GRID_LIMIT = 1_500_000


def sample_unit_sphere(s: Space, mesh: float, seed: int = 42) -> SphereSample:
    """Unit-norm points whose covering radius of the unit sphere is <= mesh.

    Deterministic in dimension 2 (angular / perimeter lattice) and on the
    cube-face grid for higher dimensions; the grid bound is rigorous.  When
    the grid would be too large, seeded random directions are used and the
    covering radius is estimated from probes.
    """
    if not 0 < mesh < 1:
        raise ValueError("mesh must lie in (0, 1)")
    d = s.dim
    if d == 1:
        return SphereSample(np.array([[1.0], [-1.0]]), 0.0)
    if d == 2:
        if s.norm == "l2":
            n = math.ceil(2 * math.pi / mesh)
            t = 2 * math.pi * np.arange(n) / n
            return SphereSample(np.c_[np.cos(t), np.sin(t)], 2 * math.sin(math.pi / (2 * n)))
        k = math.ceil(2 / mesh)
        u = np.arange(k) / k
        if s.norm == "linf":
            sides = [np.c_[1 - 2 * u, np.ones(k)], np.c_[-np.ones(k), 1 - 2 * u],
                     np.c_[-1 + 2 * u, -np.ones(k)], np.c_[np.ones(k), -1 + 2 * u]]
        else:
            sides = [np.c_[1 - u, u], np.c_[-u, 1 - u], np.c_[-1 + u, -u], np.c_[u, -1 + u]]
        return SphereSample(np.vstack(sides), 1.0 / k)
    if s.norm == "l2":
        h = 2 * mesh / math.sqrt(d - 1)
    elif s.norm == "linf":
        h = 2 * mesh
    else:
        h = mesh / (d - 1)
    k = math.ceil(2 / h)
    count = 2 * d * (k + 1) ** (d - 1)
    if count <= _GRID_LIMIT:
        axis = np.linspace(-1.0, 1.0, k + 1)
        face = np.stack(np.meshgrid(*([axis] * (d - 1)), indexing="ij"), -1).reshape(-1, d - 1)
        pts = []
        for i in range(d):
            for sign in (-1.0, 1.0):
                P = np.insert(face, i, sign, axis=1)
                pts.append(P)
        P = np.unique(np.round(np.vstack(pts), 12), axis=0)
        step = 2.0 / k
        cover = {"l2": step * math.sqrt(d - 1) / 2, "linf": step / 2, "l1": (d - 1) * step}[s.norm]
        return SphereSample(normalize(s, P), cover)
    rng = np.random.default_rng(seed)
    P = normalize(s, rng.standard_normal((_GRID_LIMIT, d)))
    probes = normalize(s, rng.standard_normal((20_000, d)))
    r = estimate_covering(s, P, probes)
    return SphereSample(P, r)


def estimate_covering(s: Space, sample: np.ndarray, probes: np.ndarray) -> float:
    """Largest distance from a probe to its nearest sample point."""
    if len(probes) == 0:
        return 0.0
    if len(sample) == 0:
        return float("inf")
    tree = cKDTree(sample)
    dist, _ = tree.query(probes, p=_ORD[s.norm])
    return float(np.max(dist))


def norming_point(s: Space, f) -> np.ndarray:
    """A unit vector ``x`` with ``f(x) = ||f||_*``."""
    f = s.check(f)
    if s.norm == "l2":
        return f / np.linalg.norm(f)
    if s.norm == "linf":
        x = np.sign(f)
        x[x == 0] = 1.0
        return x
    x = np.zeros_like(f)
    i = int(np.argmax(np.abs(f)))
    x[i] = 1.0 if f[i] >= 0 else -1.0
    return x
