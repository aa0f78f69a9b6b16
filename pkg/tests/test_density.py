import math

import numpy as np
import pytest

from henig.cones import Polyhedral
from henig.density import abb_experiment, local_approximation, section_shrink
from henig.efficiency import check_certificate
from henig.fixtures import UPPER_QUARTER, is_curve_point, sine_cloud
from henig.space import Space

UPPER = Polyhedral(UPPER_QUARTER)
S2 = Space(2)


@pytest.fixture(scope="module")
def cloud():
    return sine_cloud(0.01, 2.0)


@pytest.fixture(scope="module")
def coarse():
    return sine_cloud(0.05, 1.0)


def _section_oracle(A, n):
    """Brute force: largest norm over a in A with -a within ray distance 1/n of C ∩ S (L2)."""
    r = np.linalg.norm(A, axis=1)
    out = 0.0
    for a, ra in zip(A, r):
        if ra == 0:
            continue
        u = -a / ra
        off = math.acos(max(-1.0, min(1.0, u[1])))  # angle from the y-axis
        gap = max(0.0, off - math.pi / 4)
        d = 1.0 if gap >= math.pi / 2 else math.sin(gap)
        if d <= 1.0 / n:
            out = max(out, ra)
    return out


def test_section_shrink_examples(cloud):
    rep = section_shrink(S2, cloud, UPPER, 0.5)
    assert rep.n_eps is not None
    assert rep.max_norm_in_section[-1] <= 0.5
    assert section_shrink(S2, np.zeros((1, 2)), UPPER, 0.5).n_eps == 1
    with pytest.raises(ValueError):
        section_shrink(S2, np.array([[0.0, 0.0], [0.0, -1.0]]), UPPER, 0.5)


def test_section_shrink_trace_matches_brute_force(coarse):
    rep = section_shrink(S2, coarse, UPPER, 0.3)
    for n in (1, 2, 5, 20, rep.n_eps):
        assert rep.max_norm_in_section[n - 1] == pytest.approx(_section_oracle(coarse, n), abs=1e-12)
    assert _section_oracle(coarse, rep.n_eps) <= 0.3
    if rep.n_eps > 1:
        assert _section_oracle(coarse, rep.n_eps - 1) > 0.3


@pytest.mark.parametrize("eps", [0.5, 0.2, 0.1])
def test_section_shrink_trace_is_nested(cloud, eps):
    trace = section_shrink(S2, cloud, UPPER, eps).max_norm_in_section
    assert np.all(np.diff(trace) <= 0)


def test_local_approximation_example(cloud):
    r = local_approximation(S2, cloud, UPPER, np.zeros(2), 0.2, delta=math.sqrt(2) / 2)
    assert r.stage == "ok"
    assert is_curve_point(r.point[None])[0]
    assert np.linalg.norm(r.point) < 0.2
    assert check_certificate(S2, cloud, r.point, UPPER, r.certificate) > 0


def test_local_approximation_large_eps():
    A = np.array([[0.0, 0.0], [0.05, -0.02], [-0.03, 0.04]])
    r = local_approximation(S2, A, UPPER, np.zeros(2), 0.9)
    assert r.stage == "ok" and r.distance < 0.9


def test_local_approximation_returns_certified_xbar():
    t = np.linspace(1.1 * math.pi, 1.4 * math.pi, 12)
    A = np.c_[np.cos(t), np.sin(t)]
    r = local_approximation(S2, A, Polyhedral([[1, 0], [0, 1]]), A[5], 0.1)
    assert r.stage == "ok" and r.distance == 0.0


def test_local_approximation_reports_failing_stage():
    A = np.array([[0.0, 0.0], [0.0, -1.0]])
    r = local_approximation(S2, A, UPPER, np.zeros(2), 0.2)
    assert r.stage == "shrink" and r.point is None


def test_abb_experiment_convex_frontier_distances_are_zero():
    t = np.linspace(1.1 * math.pi, 1.4 * math.pi, 15)
    A = np.c_[np.cos(t), np.sin(t)]
    table = abb_experiment(S2, A, Polyhedral([[1, 0], [0, 1]]), [0.2, 0.05])
    assert table.failures == 0
    assert all(r.distance == 0.0 for r in table.rows)


def test_abb_experiment_empty_eps_list(coarse):
    assert abb_experiment(S2, coarse, UPPER, []).rows == []


def test_abb_experiment_rows_reverify(coarse):
    table = abb_experiment(S2, coarse, UPPER, [0.2, 0.1])
    assert table.failures == 0
    for r in table.rows:
        assert r.distance < r.eps
        assert check_certificate(S2, coarse, r.point, UPPER, r.certificate) > 0


def test_approximation_improves_as_eps_decreases(coarse):
    eps_list = [0.4, 0.2, 0.1, 0.05]
    table = abb_experiment(S2, coarse, UPPER, eps_list)
    at_origin = {r.eps: r.distance for r in table.rows if not np.any(r.xbar)}
    d = [at_origin[e] for e in eps_list]
    assert all(b <= a for a, b in zip(d, d[1:]))


def test_abb_experiment_translation_invariance(coarse):
    v = np.array([0.5, -0.25])
    t1 = abb_experiment(S2, coarse, UPPER, [0.2])
    t2 = abb_experiment(S2, coarse + v, UPPER, [0.2])
    assert len(t1.rows) == len(t2.rows)
    for a, b in zip(t1.rows, t2.rows):
        assert a.stage == b.stage
        assert np.allclose(a.xbar + v, b.xbar, atol=1e-12)
        assert np.allclose(a.point + v, b.point, atol=1e-12)
