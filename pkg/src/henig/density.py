"""Section shrinking and the density of proper efficient points.

Near a minimal point ``xbar`` the sections ``A ∩ (xbar - C_{1/n})`` shrink to
``{xbar}`` as ``n`` grows.  Scalarizing over a small enough section yields a
certified Henig global proper efficient point close to ``xbar``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .cones import Polyhedral
from .dilation import EpsNeighborhood, HenigDilation, normalize_base, ray_distance_to_cone_sphere
from .efficiency import (
    DEFAULT_TOL,
    GheCertificate,
    check_certificate,
    PointCloud,
    _as_cloud,
    min_set,
    scalarize_section,
)
from .separation import find_witness, ssp_gap
from .space import Space, norm

DEFAULT_N_MAX = 100_000


@dataclass(frozen=True)
class ShrinkReport:
    eps: float
    n_eps: int | None
    max_norm_in_section: np.ndarray  # entry k is the max norm over A ∩ (-C_{1/(k+1)})

    @property
    def tested(self) -> int:
        return len(self.max_norm_in_section)


def _neg_ray_distance(s: Space, C, P: np.ndarray, mesh: float, seed: int) -> np.ndarray:
    """``d(ray(-a), C ∩ S_X)`` for each row; ``0`` at the origin."""
    out = np.zeros(len(P))
    nz = np.any(P != 0, axis=1)
    if nz.any():
        d, r = ray_distance_to_cone_sphere(s, C, -P[nz], mesh, seed)
        out[nz] = np.maximum(d - r, 0.0)
    return out


def _n_for(d: np.ndarray, r: np.ndarray, eps: float, n_max: int) -> int | None:
    """Smallest ``n`` with ``d(a) > 1/n`` for every ``a`` with ``||a|| > eps``."""
    far = r > eps
    dmin = float(d[far].min()) if far.any() else math.inf
    if dmin == 0:
        return None
    if math.isinf(dmin):
        return 1
    n = math.floor(1.0 / dmin) + 1
    # the test is d > 1/n; guard the floating-point edge
    while n > 1 and dmin > 1.0 / (n - 1):
        n -= 1
    while not dmin > 1.0 / n:
        n += 1
    return n if n <= n_max else None


def _origin_index(P: np.ndarray) -> int:
    zero = np.flatnonzero(~np.any(P != 0, axis=1))
    if not len(zero):
        raise ValueError("the origin must belong to A")
    return int(zero[0])


def section_shrink(s: Space, A, C: Polyhedral, eps: float, n_max: int = DEFAULT_N_MAX,
                   tol: float = DEFAULT_TOL, mesh: float = 1e-2, seed: int = 42,
                   check_min: bool = True) -> ShrinkReport:
    """Smallest ``n`` with ``A ∩ (-C_{1/n}) ⊂ eps B_X``.

    The ray distance of every ``-a`` to ``C ∩ S_X`` is computed once; ``a``
    lies in ``-C_{1/n}`` exactly when that distance is at most ``1/n``, so
    the whole nested family of sections is read off a single sort.  The
    returned trace lists the largest norm in each section for
    ``n = 1, ..., n_eps`` (or up to ``n_max`` when no ``n`` works).
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    P = _as_cloud(A).points
    i0 = _origin_index(P)
    if check_min and not min_set(s, P, C, tol).is_min[i0]:
        raise ValueError("the origin is not a minimal point of A")
    d = _neg_ray_distance(s, C, P, mesh, seed)
    r = norm(s, P)
    n_eps = _n_for(d, r, eps, n_max)
    upto = n_eps if n_eps is not None else n_max
    order = np.argsort(d)
    run_max = np.maximum.accumulate(r[order])
    k = np.searchsorted(d[order], 1.0 / np.arange(1, upto + 1), side="right")
    trace = np.where(k > 0, run_max[np.maximum(k - 1, 0)], 0.0)
    return ShrinkReport(float(eps), n_eps, trace)


@dataclass(frozen=True)
class Approximation:
    xbar: np.ndarray
    eps: float
    point: np.ndarray | None
    certificate: GheCertificate | None
    distance: float
    stage: str  # "ok" or the failing stage: ssp, shrink, witness, scalarize
    n_eps: int | None = None


@lru_cache(maxsize=1024)
def _dilation_witness(s: Space, C: Polyhedral, delta: float, mesh: float, seed: int):
    B = normalize_base(s, C)
    h = HenigDilation(B, delta)
    rep = ssp_gap(s, C, h, mesh, seed)
    if not rep.holds:
        return None
    return find_witness(s, C, h, rep, mesh=mesh, seed=seed)


@lru_cache(maxsize=256)
def _ssp_holds(s: Space, C: Polyhedral, eps: float, mesh: float, seed: int) -> bool:
    return ssp_gap(s, C, EpsNeighborhood(C, eps), mesh, seed).holds


def _approximate(s: Space, A0: PointCloud, C: Polyhedral, xbar: np.ndarray, eps_list,
                 delta, tol, n_max, mesh, seed, check_min) -> list[Approximation]:
    P = A0.points
    out = []

    def fail(eps, stage, n=None):
        out.append(Approximation(xbar, eps, None, None, math.inf, stage, n))

    try:
        _origin_index(P)
        if check_min and not min_set(s, P, C, tol).is_min[_origin_index(P)]:
            raise ValueError
    except ValueError:
        for eps in eps_list:
            fail(eps, "shrink")
        return out
    d = _neg_ray_distance(s, C, P, mesh, seed)
    r = norm(s, P)
    delta_B = normalize_base(s, C).delta_B
    for eps in eps_list:
        if not _ssp_holds(s, C, min(delta if delta is not None else min(eps, 0.5), 0.999), mesh, seed):
            fail(eps, "ssp")
            continue
        n = _n_for(d, r, min(eps / 2, 0.5), n_max)
        if n is None:
            fail(eps, "shrink")
            continue
        # with delta_B = 1, C_(B,t) lies in C_{t/(1-t)}, so t = 1/(n+1) keeps
        # the Henig section inside A ∩ (-C_{1/n})
        dlt = 1.0 / (n + 1)
        if delta is not None:
            dlt = min(dlt, delta)
        dlt = min(dlt, 0.999 * delta_B)
        w = _dilation_witness(s, C, dlt, mesh, seed)
        if w is None:
            fail(eps, "witness", n)
            continue
        # the Henig section lies in {d <= 1/n}; scalarize over a superset of it
        # and re-verify the certificate against the whole cloud
        near = PointCloud(P[d <= 2.0 / n])
        try:
            x1, cert = scalarize_section(s, near, np.zeros(s.dim), C, dlt, w, tol, mesh)
            slack = check_certificate(s, A0, x1, C, cert, tol)
        except (ValueError, AssertionError):
            fail(eps, "scalarize", n)
            continue
        if not slack > -tol:
            fail(eps, "scalarize", n)
            continue
        cert = replace(cert, slack=slack)
        dist = float(norm(s, x1))
        if not dist < eps:
            fail(eps, "scalarize", n)
            continue
        out.append(Approximation(xbar, eps, x1 + xbar, cert, dist, "ok", n))
    return out


def local_approximation(s: Space, A, C: Polyhedral, xbar, eps: float, delta: float | None = None,
                        tol: float = DEFAULT_TOL, n_max: int = DEFAULT_N_MAX, mesh: float = 1e-2,
                        seed: int = 42, check_min: bool = True) -> Approximation:
    """A certified proper efficient point within ``eps`` of the minimal point ``xbar``.

    ``A`` is translated so that ``xbar`` sits at the origin, the section
    ``A ∩ (-C_{1/n})`` is shrunk into the ball of radius ``eps / 2``, and
    the Henig section for ``delta = 1/(n+1)`` is scalarized with a verified
    witness.  ``delta`` (when given) caps the dilation parameter and is used
    for the preliminary separation check.  The ``stage`` field of the result
    names the first step that failed, or is ``"ok"``.
    """
    xbar = np.asarray(xbar, dtype=float)
    A0 = _as_cloud(A).translate(-xbar)
    return _approximate(s, A0, C, xbar, [eps], delta, tol, n_max, mesh, seed, check_min)[0]


@dataclass(frozen=True)
class DensityTable:
    rows: list = field(default_factory=list)

    @property
    def successes(self) -> int:
        return sum(r.stage == "ok" for r in self.rows)

    @property
    def failures(self) -> int:
        return len(self.rows) - self.successes

    def as_records(self) -> list[dict]:
        out = []
        for r in self.rows:
            rec = {f"xbar_{i}": float(v) for i, v in enumerate(r.xbar)}
            rec["eps"] = r.eps
            for i in range(len(r.xbar)):
                rec[f"x_eps_{i}"] = float(r.point[i]) if r.point is not None else math.nan
            rec["distance"] = r.distance
            rec["certificate"] = r.certificate.kind if r.certificate else ""
            rec["stage"] = r.stage
            rec["n_eps"] = r.n_eps if r.n_eps is not None else -1
            out.append(rec)
        return out


def abb_experiment(s: Space, A, C: Polyhedral, eps_list, tol: float = DEFAULT_TOL,
                   n_max: int = DEFAULT_N_MAX, mesh: float = 1e-2, seed: int = 42) -> DensityTable:
    """Run the local approximation at every minimal point and every ``eps``."""
    A = _as_cloud(A)
    eps_list = list(eps_list)
    if not eps_list:
        return DensityTable([])
    mins = min_set(s, A, C, tol).indices
    rows = []
    for i in mins:
        xbar = A.points[i]
        rows.extend(_approximate(s, A.translate(-xbar), C, xbar, eps_list, None, tol, n_max,
                                 mesh, seed, False))
    return DensityTable(rows)
