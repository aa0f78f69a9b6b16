"""Acceptance criteria 1 to 13, each checked against an oracle that does not
reuse the library's own decision procedure."""
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from henig.cli import main
from henig.cones import (
    BishopPhelps,
    Polyhedral,
    augmented_witness_search,
    classify_aug_pair,
    membership_batch,
    negate,
    sublevel_base,
)
from henig.density import local_approximation, section_shrink
from henig.dilation import EpsNeighborhood, HenigDilation, inclusion_check, normalize_base
from henig.efficiency import GheCertificate, check_certificate, classify, min_set
from henig.fixtures import UPPER_QUARTER, sine_cloud
from henig.separation import bp_hull_bounds_check, ssp_gap
from henig.space import Space

DATA = Path(__file__).parent / "data"
UPPER = Polyhedral(UPPER_QUARTER)
S2 = Space(2)
NORMS = ("l1", "l2", "linf")


# ---------------------------------------------------------------------------
# independent oracles


def _norm(which, X):
    X = np.asarray(X, float)
    if which == "l1":
        return np.abs(X).sum(axis=-1)
    if which == "linf":
        return np.abs(X).max(axis=-1)
    return np.sqrt((X * X).sum(axis=-1))


def _dual(which, f):
    return _norm({"l1": "linf", "linf": "l1", "l2": "l2"}[which], f)


def _analytic_curve(P, h=0.01):
    """Points of the grid curve y = sin(-|x|), |x| <= pi/2."""
    x, y = P[:, 0], P[:, 1]
    k = np.round(x / h)
    on_grid = (np.abs(x - k * h) <= 1e-12) | (np.abs(np.abs(x) - math.pi / 2) <= 1e-12)
    return on_grid & (np.abs(x) <= math.pi / 2 + 1e-12) & (np.abs(y - np.sin(-np.abs(x))) <= 1e-12)


def _section_distance(P):
    """L2 ray distance of -p to the unit arc of {y >= |x|}: sin of the angle
    by which -p/|p| lies outside the cone, capped at 1."""
    r = np.sqrt((P * P).sum(axis=1))
    with np.errstate(invalid="ignore", divide="ignore"):
        off = np.arccos(np.clip(-P[:, 1] / r, -1, 1))
    gap = np.maximum(0.0, off - math.pi / 4)
    d = np.where(gap >= math.pi / 2, 1.0, np.sin(gap))
    return np.where(r == 0, 0.0, d), r


def _bp_oracle(A, x1, f, alpha, tol=1e-9):
    """No a in A with x1 - a in the open cone {f > alpha |.|_2}."""
    D = x1 - A
    n = np.sqrt((D * D).sum(axis=1))
    D, n = D[n > 0], n[n > 0]
    return bool(np.all(D @ np.asarray(f) <= (alpha + tol) * n))


def _random_simplicial(rng, dim):
    """Generators of a random pointed simplicial cone and the inverse used to test membership."""
    axis = rng.normal(size=dim)
    axis /= np.linalg.norm(axis)
    while True:
        G = axis + 0.9 * rng.normal(size=(dim, dim))
        if np.all(G @ axis > 0.1) and abs(np.linalg.det(G)) > 1e-2:
            return G


def _dominance_oracle(A, G, tol=1e-9):
    """a_i is dominated iff a_i - a_j = G^T w with w >= 0 for some a_j != a_i."""
    Ginv = np.linalg.inv(G.T)
    n = len(A)
    dominated = np.zeros(n, bool)
    for i in range(n):
        D = A[i] - A
        W = D @ Ginv.T
        nz = np.any(D != 0, axis=1)
        dominated[i] = np.any(nz & np.all(W >= -tol, axis=1))
    return ~dominated


def _random_clouds(count, seed=2024):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        dim = int(rng.integers(2, 5))
        n = int(rng.integers(1, 51))
        A = np.round(rng.normal(size=(n, dim)), int(rng.integers(0, 3)))
        out.append((A, _random_simplicial(rng, dim)))
    return out


CLOUDS = _random_clouds(200)


def _plane_cone(a, w):
    return Polyhedral([[math.cos(a), math.sin(a)], [math.cos(a + w), math.sin(a + w)]])


def _cli_json(capsys, *argv):
    t0 = time.perf_counter()
    code = main(list(argv) + ["--format", "json"])
    elapsed = time.perf_counter() - t0
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out else None), elapsed


# ---------------------------------------------------------------------------
# 1


@pytest.mark.criterion(1)
def test_ssp_norm_dependence(capsys):
    exact = (math.sqrt(3) - math.sqrt(2)) / 2
    code, rep, elapsed = _cli_json(capsys, "ssp", "--fixture", "example-3-ssp", "--norm", "l2")
    assert code == 0 and rep["result"]["verdict"] == "holds_certified"
    assert abs(rep["result"]["gap_lower_bound"] - exact) <= 1e-9
    assert elapsed < 1.0
    code, rep, elapsed = _cli_json(capsys, "ssp", "--fixture", "example-3-ssp", "--norm", "linf")
    assert code == 1 and rep["result"]["verdict"] == "fails_certified"
    assert elapsed < 1.0


# ---------------------------------------------------------------------------
# 2


@pytest.mark.criterion(2)
def test_bishop_phelps_hull_bounds():
    rng = np.random.default_rng(11)
    t0 = time.perf_counter()
    for k in range(50):
        dim = 2 + k % 3
        s = Space(dim)
        f = rng.normal(size=dim)
        alpha = float(rng.uniform(0.05, 0.95))
        rep = bp_hull_bounds_check(s, f, alpha, mesh=5e-2, seed=k)
        assert rep.violations == 0 and rep.n_cone > 0 and rep.n_boundary > 0
        # the bounds are tight: a cone axis point attains 1 and boundary points attain alpha
        assert rep.min_on_cone == pytest.approx(alpha, abs=5e-2)
        assert rep.max_on_boundary == pytest.approx(alpha, abs=1e-9)
    assert time.perf_counter() - t0 < 10.0


# ---------------------------------------------------------------------------
# 3


@pytest.mark.criterion(3)
def test_nested_bishop_phelps_have_ssp():
    rng = np.random.default_rng(12)
    for k in range(25):
        dim = 2 + k % 2
        s = Space(dim)
        f = rng.normal(size=dim)
        f /= np.linalg.norm(f)
        a1 = float(rng.uniform(0.05, 0.6))
        a2 = a1 + float(rng.uniform(0.15, 0.35))
        rep = ssp_gap(s, BishopPhelps(f, a2), BishopPhelps(f, a1), mesh=5e-2, seed=k)
        assert rep.verdict == "holds_certified"
        # round cones about f: the hulls are separated by exactly a2 - a1 along f
        assert rep.gap_lower_bound <= a2 - a1 + 1e-9
        if dim == 2:
            assert rep.gap_lower_bound == pytest.approx(a2 - a1, abs=1e-9)


# ---------------------------------------------------------------------------
# 4


@pytest.mark.criterion(4)
def test_sublevel_base_norm_bound():
    rng = np.random.default_rng(13)
    for k in range(50):
        dim = 2 + k % 3
        which = NORMS[k % 3]
        s = Space(dim, which)
        f = rng.normal(size=dim)
        alpha = float(rng.uniform(0.05, 0.95) * _dual(which, f))
        base = sublevel_base(s, f, alpha, mesh=5e-2, seed=k)
        X = base.points
        assert len(X) > 0
        n = _norm(which, X)
        assert np.all(n <= 1 / alpha + 1e-9)
        assert np.allclose(X @ f, -1.0, atol=1e-9)
        assert np.all(X @ f + alpha * n <= 1e-9)


# ---------------------------------------------------------------------------
# 5


def _arc_min(which, G, f, m=20001):
    """min of f over unit vectors of the planar cone spanned by G (brute-force sweep)."""
    ang = np.arctan2(G[:, 1], G[:, 0])
    ref = ang[0]
    rel = np.mod(ang - ref, 2 * np.pi)
    rel = np.where(rel > np.pi, rel - 2 * np.pi, rel)
    t = np.linspace(ref + rel.min(), ref + rel.max(), m)
    U = np.c_[np.cos(t), np.sin(t)]
    U /= _norm(which, U)[:, None]
    return float((U @ f).min())


@pytest.mark.criterion(5)
def test_augmented_dual_pairs_iff_pointed():
    rng = np.random.default_rng(14)
    for k in range(50):
        which = NORMS[k % 3]
        s = Space(2, which)
        a = rng.uniform(0, 2 * np.pi)
        w = rng.uniform(0.1, np.pi - 0.1)
        t = np.sort(np.r_[a, a + w, a + w * rng.uniform(0, 1, size=int(rng.integers(0, 3)))])
        G = np.c_[np.cos(t), np.sin(t)] * rng.uniform(0.5, 2, size=(len(t), 1))
        c = Polyhedral(G.tolist())
        pair = augmented_witness_search(s, c)
        assert pair is not None and pair.cls == "a_sharp_plus" and pair.margin > 0
        again = classify_aug_pair(s, c, pair.f, pair.alpha)
        assert again.cls == "a_sharp_plus" and again.margin > 0
        assert _arc_min(which, G, pair.f) - pair.alpha > 0
    for k in range(10):
        s = Space(2, NORMS[k % 3])
        a = rng.uniform(0, 2 * np.pi)
        if k % 2:
            t = [a, a + np.pi, a + rng.uniform(0.2, np.pi - 0.2)]  # contains a line
        else:
            t = [a, a + 2.1, a + 4.2]  # the whole plane
        G = np.c_[np.cos(t), np.sin(t)]
        assert augmented_witness_search(s, Polyhedral(G.tolist())) is None


# ---------------------------------------------------------------------------
# 6


@pytest.mark.criterion(6)
@pytest.mark.parametrize("eps", [0.05, 0.2])
def test_inclusion_chain(eps):
    rng = np.random.default_rng(15)
    for k in range(20):
        s = Space(2, NORMS[k % 3])
        c = _plane_cone(rng.uniform(0, 2 * np.pi), rng.uniform(0.1, 2.8))
        rep = inclusion_check(s, c, eps, mesh=1e-2, seed=k)
        assert rep.checked_outer > 0 and rep.checked_inner > 0
        assert rep.counterexamples == []
    for k in range(5):
        G = _random_simplicial(rng, 3)
        if k % 2:
            G = np.vstack([G, G.mean(axis=0) + 0.3 * np.cross(G[0], G[1])])
        rep = inclusion_check(Space(3), Polyhedral(G.tolist()), eps, mesh=1e-2, seed=k)
        assert rep.checked_outer > 0 and rep.checked_inner > 0
        assert rep.counterexamples == []


# ---------------------------------------------------------------------------
# 7


@pytest.mark.criterion(7)
def test_existence_via_scalarization(capsys):
    code, rep, elapsed = _cli_json(capsys, "scalarize", "--fixture", "example-4-curve")
    assert code == 0 and elapsed < 5.0
    res = rep["result"]
    assert res["delta"] == pytest.approx(math.sqrt(2) / 2) and res["x0"] == [0.0, 0.0]
    A = sine_cloud(0.01, 2.0)
    x1 = np.array(res["point"])
    assert np.any(np.all(A == x1, axis=1))
    # x0 - C_delta with delta = sqrt(2)/2 is the closed lower half plane
    assert x1[1] <= 0
    assert res["certificate"] == "bishop_phelps" and res["slack"] > 0
    f = np.array(res["witness"]["f"])
    assert _bp_oracle(A, x1, f, res["cert_alpha"])
    cert = GheCertificate("bishop_phelps", res["slack"], f=f, alpha=res["cert_alpha"])
    assert check_certificate(S2, A, x1, UPPER, cert) > 0


# ---------------------------------------------------------------------------
# 8 and 9 share one classification run


@pytest.fixture(scope="module")
def curve_labels(tmp_path_factory):
    out = tmp_path_factory.mktemp("classify") / "labels.json"
    code = main(["classify", "--fixture", "example-4-curve", "--eps", "0.05", "--format", "json", "--out", str(out)])
    assert code == 0
    rep = json.loads(out.read_text())
    P = np.array([[r["x0"], r["x1"]] for r in rep["table"]])
    kinds = np.array([r["label"] for r in rep["table"]])
    return P, kinds


@pytest.mark.criterion(8)
def test_efficient_set_reproduction(curve_labels):
    P, kinds = curve_labels
    assert len(P) == len(sine_cloud(0.01, 2.0))
    is_min = kinds != "dominated"
    curve = _analytic_curve(P)
    assert curve.sum() == 317
    assert np.sum(is_min & ~curve) == 0  # false positives
    assert np.sum(~is_min & curve) == 0  # false negatives


@pytest.mark.criterion(9)
def test_proper_efficiency_matches_frozen_chord_oracle(curve_labels):
    P, kinds = curve_labels
    frozen = json.loads((DATA / "chord_oracle_h0.01_eps0.05.json").read_text())
    assert frozen["eps"] == 0.05 and frozen["h"] == 0.01
    Q = np.array([[p["x"], p["y"]] for p in frozen["points"]])
    expected = np.array([p["certified"] for p in frozen["points"]])
    mins = kinds != "dominated"
    assert sorted(map(tuple, P[mins])) == sorted(map(tuple, Q))
    got = {tuple(p): k == "min_and_ghe" for p, k in zip(P[mins], kinds[mins])}
    assert [got[tuple(q)] for q in Q] == expected.tolist()
    far = np.abs(Q[:, 0]) >= 0.1
    assert all(got[tuple(q)] for q in Q[far])
    assert not got[(0.0, 0.0)]


# ---------------------------------------------------------------------------
# 10


@pytest.mark.criterion(10)
@pytest.mark.parametrize("eps", [0.5, 0.2, 0.1])
def test_section_shrinking(eps):
    A = sine_cloud(0.01, 2.0)
    rep = section_shrink(S2, A, UPPER, eps)
    assert rep.n_eps is not None
    trace = np.asarray(rep.max_norm_in_section)
    assert np.all(np.diff(trace) <= 0)
    d, r = _section_distance(A)
    assert r[d <= 1 / rep.n_eps].max() <= eps
    if rep.n_eps > 1:
        assert r[d <= 1 / (rep.n_eps - 1)].max() > eps


# ---------------------------------------------------------------------------
# 11


@pytest.mark.criterion(11)
def test_density(capsys):
    code, rep, elapsed = _cli_json(capsys, "density", "--fixture", "example-4-clipped", "--eps", "0.2,0.1,0.05")
    assert code == 0
    assert elapsed < 30.0
    A = sine_cloud(0.01, 1.0)
    n_min = int(_analytic_curve(A).sum())
    rows = rep["table"]
    assert len(rows) == 3 * n_min
    for e in (0.2, 0.1, 0.05):
        sub = [r for r in rows if r["eps"] == e]
        assert len(sub) == n_min
        assert all(r["stage"] == "ok" and r["distance"] < e for r in sub)
    origin = [r for r in rows if r["xbar_0"] == 0 and r["xbar_1"] == 0 and r["eps"] == 0.05]
    assert len(origin) == 1 and origin[0]["distance"] < 0.05
    point = np.array([origin[0]["x_eps_0"], origin[0]["x_eps_1"]])
    assert _analytic_curve(point[None])[0]
    approx = local_approximation(S2, A, UPPER, np.zeros(2), 0.05)
    assert np.array_equal(approx.point, point)
    cert = approx.certificate
    assert check_certificate(S2, A, point, UPPER, cert) > 0
    if cert.kind == "bishop_phelps":
        assert _bp_oracle(A, point, cert.f, cert.alpha)


# ---------------------------------------------------------------------------
# 12


@pytest.mark.criterion(12)
def test_min_set_matches_dominance_oracle():
    for A, G in CLOUDS:
        s = Space(A.shape[1])
        assert np.array_equal(min_set(s, A, Polyhedral(G.tolist())).is_min, _dominance_oracle(A, G))


# ---------------------------------------------------------------------------
# 13


@pytest.mark.criterion(13)
def test_ghe_points_are_minimal():
    for k, (A, G) in enumerate(CLOUDS[:120]):
        if A.shape[1] != 2:
            continue
        s = Space(2, NORMS[k % 3])
        C = Polyhedral(G.tolist())
        labels = classify(s, A, C, [0.2, 0.05])
        oracle = _dominance_oracle(A, G)
        for x, lab, m in zip(A, labels, oracle):
            assert (lab.kind != "dominated") == m
            if lab.kind == "min_and_ghe":
                assert check_certificate(s, A, x, C, lab.certificate) > 0


@pytest.mark.criterion(13)
def test_translation_and_scale_equivariance():
    rng = np.random.default_rng(16)
    for A, G in CLOUDS:
        s = Space(A.shape[1])
        C = Polyhedral(G.tolist())
        base = min_set(s, A, C).is_min
        v = np.round(rng.normal(size=A.shape[1]) * 4) / 4  # dyadic, so the shift is exact
        assert np.array_equal(min_set(s, A + v, C).is_min, base)
        assert np.array_equal(min_set(s, 8.0 * A, C).is_min, base)
        assert np.array_equal(min_set(s, A, Polyhedral((3.0 * G).tolist())).is_min, base)
    for A, G in [c for c in CLOUDS if c[0].shape[1] == 2][:15]:
        C = Polyhedral(G.tolist())
        k1 = [lab.kind for lab in classify(S2, A, C, [0.1])]
        k2 = [lab.kind for lab in classify(S2, 4.0 * A + np.array([0.5, -2.0]), C, [0.1])]
        assert k1 == k2


@pytest.mark.criterion(13)
def test_ssp_negation_symmetry():
    rng = np.random.default_rng(17)
    for k in range(30):
        s = Space(2, NORMS[k % 3])
        a = rng.uniform(0, 2 * np.pi)
        w = rng.uniform(0.2, 2.0)
        extra = rng.uniform(0.02, 0.5)
        C = _plane_cone(a, w)
        K = _plane_cone(a - extra, w + 2 * extra)
        r1, r2 = ssp_gap(s, C, K), ssp_gap(s, negate(C), negate(K))
        assert r1.verdict == r2.verdict
        assert r1.gap_lower_bound == pytest.approx(r2.gap_lower_bound, abs=1e-9)
    s = Space(3)
    f = np.array([0.0, 0.6, 0.8])
    r1 = ssp_gap(s, BishopPhelps(f, 0.7), BishopPhelps(f, 0.4), mesh=5e-2)
    r2 = ssp_gap(s, negate(BishopPhelps(f, 0.7)), negate(BishopPhelps(f, 0.4)), mesh=5e-2)
    assert r1.verdict == r2.verdict == "holds_certified"


@pytest.mark.criterion(13)
def test_dilation_monotonicity():
    rng = np.random.default_rng(18)
    ladder = [0.02, 0.05, 0.1, 0.2, 0.4, 0.8]
    for k in range(30):
        s = Space(2, NORMS[k % 3])
        c = _plane_cone(rng.uniform(0, 2 * np.pi), rng.uniform(0.1, 2.8))
        B = normalize_base(s, c)
        X = rng.normal(size=(400, 2))
        prev_n = prev_h = membership_batch(s, c, X)
        for e in ladder:
            n = membership_batch(s, EpsNeighborhood(c, e), X)
            h = membership_batch(s, HenigDilation(B, e), X)
            assert np.all(~prev_n | n) and np.all(~prev_h | h)
            assert np.all(~h | n)  # the Henig dilation sits inside the eps-neighbourhood
            prev_n, prev_h = n, h
