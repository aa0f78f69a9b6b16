import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from henig.cones import Polyhedral, membership_batch, polyhedral_base
from henig.dilation import (
    EpsNeighborhood,
    HenigDilation,
    eps_membership,
    henig_membership,
    inclusion_check,
    normalize_base,
)
from henig.space import Space, dist_to_polytope, dist_to_segment, min_norm_batch, norm

UPPER = Polyhedral([[1, 1], [-1, 1]])
TS = np.concatenate([np.linspace(0.01, 3, 600), np.linspace(3, 40, 200)])


def test_eps_membership_examples():
    s = Space(2)
    n = EpsNeighborhood(UPPER, math.sqrt(2) / 2)
    assert eps_membership(s, n, np.array([5.0, 0.1]))
    assert not eps_membership(s, n, np.array([0.0, -1.0]))
    assert eps_membership(s, n, np.zeros(2))


def test_henig_membership_examples():
    s = Space(2)
    h = HenigDilation(polyhedral_base(s, UPPER, (0.0, 1.0)), 0.05)
    assert henig_membership(s, h, np.array([0.0, 1.0]))
    assert not henig_membership(s, h, np.array([1.0, -1.0]))
    assert henig_membership(s, h, np.array([1.05, 1.0]))


def test_normalize_base_examples():
    s = Space(2)
    b = normalize_base(s, UPPER)
    assert b.delta_B == pytest.approx(1.0)
    assert np.allclose(sorted(map(tuple, b.vertices)), [(-1, 1), (1, 1)])
    b = normalize_base(s, Polyhedral([[0.5, 0.5], [-0.5, 0.5]]))
    assert np.allclose(sorted(map(tuple, b.vertices)), [(-1, 1), (1, 1)])
    b = normalize_base(s, Polyhedral([[1, 0]]))
    assert np.allclose(b.vertices, [[1, 0]]) and b.delta_B == pytest.approx(1.0)


def test_dilation_parameter_range():
    s = Space(2)
    with pytest.raises(ValueError):
        EpsNeighborhood(UPPER, 1.0)
    with pytest.raises(ValueError):
        inclusion_check(s, UPPER, 1.0)
    with pytest.raises(ValueError):
        HenigDilation(normalize_base(s, UPPER), 1.0)


def test_inclusion_check_examples():
    s = Space(2)
    assert inclusion_check(s, UPPER, 0.2, mesh=0.01).ok
    assert inclusion_check(s, Polyhedral([[1, 0]]), 0.1, mesh=0.01).ok


def _henig_oracle(s, V, eps, x):
    """Brute force: some t x within eps of conv V (a segment in the plane)."""
    V = np.asarray(V)
    if s.dim == 2 and len(V) == 2:
        return dist_to_segment(s, TS[:, None] * x, V[0], V[1]).min() <= eps
    if s.norm == "l2":
        return min_norm_batch(V[None, :, :] - TS[:, None, None] * x).min() <= eps
    return min(dist_to_polytope(s, t * x, V) for t in TS) <= eps


def _eps_oracle(s, arc_pts, eps, x):
    """Brute force: some t x within eps of a fine sample of C ∩ S."""
    P = (TS[:, None, None] * x[None, None, :] - arc_pts[None, :, :]).reshape(-1, s.dim)
    return norm(s, P).min() <= eps


def _random_cone(rng):
    a = rng.uniform(0, 2 * np.pi)
    w = rng.uniform(0.2, 2.5)
    return Polyhedral([[math.cos(a), math.sin(a)], [math.cos(a + w), math.sin(a + w)]])


@pytest.mark.parametrize("which", ["l1", "l2", "linf"])
def test_henig_membership_matches_brute_force(which):
    s = Space(2, which)
    rng = np.random.default_rng(7)
    for _ in range(4):
        c = _random_cone(rng)
        B = normalize_base(s, c)
        eps = float(rng.uniform(0.05, 0.5))
        h = HenigDilation(B, eps)
        X = rng.normal(size=(40, 2))
        X /= norm(s, X)[:, None]
        m = h.margin(s, X)
        for x, mi in zip(X, m):
            if abs(mi) < 2e-2:
                continue  # too close to the boundary for the grid oracle
            assert (mi >= 0) == _henig_oracle(s, B.vertices, eps, x)


@pytest.mark.parametrize("which", ["l1", "l2", "linf"])
def test_eps_neighborhood_matches_brute_force(which):
    s = Space(2, which)
    rng = np.random.default_rng(8)
    U = np.c_[np.cos(np.linspace(0, 2 * np.pi, 4000)), np.sin(np.linspace(0, 2 * np.pi, 4000))]
    for _ in range(4):
        c = _random_cone(rng)
        U_s = U / norm(s, U)[:, None]
        arc = U_s[membership_batch(s, c, U_s)]
        eps = float(rng.uniform(0.05, 0.5))
        n = EpsNeighborhood(c, eps)
        X = rng.normal(size=(40, 2))
        X /= norm(s, X)[:, None]
        m = n.margin(s, X)
        for x, mi in zip(X, m):
            if abs(mi) < 2e-2:
                continue
            assert (mi >= 0) == _eps_oracle(s, arc, eps, x)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["l1", "l2", "linf"]), st.integers(0, 10_000), st.floats(0.02, 0.4), st.floats(0.02, 0.4))
def test_dilations_are_monotone_in_eps(which, seed, e1, e2):
    s = Space(2, which)
    rng = np.random.default_rng(seed)
    c = _random_cone(rng)
    lo, hi = sorted((e1, e2))
    X = rng.normal(size=(200, 2))
    base = membership_batch(s, c, X)
    n_lo = membership_batch(s, EpsNeighborhood(c, lo), X)
    n_hi = membership_batch(s, EpsNeighborhood(c, hi), X)
    assert np.all(~base | n_lo) and np.all(~n_lo | n_hi)
    B = normalize_base(s, c)
    h_lo = membership_batch(s, HenigDilation(B, lo), X)
    h_hi = membership_batch(s, HenigDilation(B, hi), X)
    assert np.all(~base | h_lo) and np.all(~h_lo | h_hi)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["l1", "l2", "linf"]), st.integers(0, 10_000), st.floats(0.02, 0.9))
def test_henig_dilation_is_convex(which, seed, eps):
    s = Space(2, which)
    rng = np.random.default_rng(seed)
    h = HenigDilation(normalize_base(s, _random_cone(rng)), eps)
    X = rng.normal(size=(300, 2))
    M = X[membership_batch(s, h, X)]
    if len(M) < 2:
        return
    i, j = rng.integers(0, len(M), size=(2, 50))
    w = rng.uniform(size=(50, 1))
    assert membership_batch(s, h, w * M[i] + (1 - w) * M[j], tol=1e-9).all()


def test_three_dimensional_henig_margin_sign():
    s = Space(3)
    c = Polyhedral([[1, 0, 1], [-1, 0, 1], [0, 1, 1], [0, -1, 1]])
    B = normalize_base(s, c)
    h = HenigDilation(B, 0.2)
    rng = np.random.default_rng(2)
    X = rng.normal(size=(30, 3))
    X /= norm(s, X)[:, None]
    m = h.margin(s, X)
    for x, mi in zip(X, m):
        if abs(mi) < 2e-2:
            continue
        assert (mi >= 0) == _henig_oracle(s, B.vertices, 0.2, x)
