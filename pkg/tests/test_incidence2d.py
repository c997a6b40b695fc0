import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from approxinc.baselines import brute_force_pairs
from approxinc.errors import ParameterError
from approxinc.geom import Circles2D, Line2, Lines2D, Spheres
from approxinc.incidence2d import (plan_deltas, report_congruent_pairs_2d_dual, report_congruent_pairs_2d_sector,
                                   report_point_circle_2d, report_point_line_2d, sector_rectangle)
from approxinc.instances import gen_random_instance

SQRT2 = math.sqrt(2)


def offset_points(lines: Lines2D, dist: float, rng):
    t = rng.uniform(-0.2, 0.2, len(lines))
    d = lines.directions
    nrm = np.column_stack([-d[:, 1], d[:, 0]])
    side = rng.choice([-1.0, 1.0], len(lines))[:, None]
    return lines.origins + t[:, None] * d + side * dist * nrm


def pairs_at_distance(k, dist, rng):
    """k points and k partners at exact distance ``dist``, all inside the unit disk."""
    P = rng.uniform(-0.3, 0.3, (k, 2))
    th = rng.uniform(0, 2 * math.pi, k)
    return P, P + dist * np.column_stack([np.cos(th), np.sin(th)])


def truth(inst, eps):
    return brute_force_pairs(inst.points, inst.objects, eps).as_set()


# --- planning ---------------------------------------------------------------


def test_plan_balanced():
    p = plan_deltas(1000, 1000, 0.01)
    assert p.strategy == "primal-dual"
    assert p.delta1 == pytest.approx(0.1) and p.delta2 == pytest.approx(0.1)


def test_plan_fallbacks():
    assert plan_deltas(10**6, 100, 0.01).strategy == "primal-only"
    assert plan_deltas(10**6, 100, 0.01).delta1 == pytest.approx(SQRT2 * 0.01)
    assert plan_deltas(100, 10**6, 0.01).strategy == "dual-only"
    assert plan_deltas(0, 10, 0.01).strategy == "empty"
    for prof in ("point-plane-3d", "point-line-3d"):
        assert plan_deltas(1000, 1000, 0.01, prof).strategy == "primal-dual"
    assert plan_deltas(1000, 1000, 0.01, "point-plane-3d").delta1 == pytest.approx(0.1)
    with pytest.raises(ParameterError):
        plan_deltas(10, 10, 0.01, "nope")


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 10**6), st.integers(1, 10**6), st.floats(1e-4, 0.5))
def test_plan_deltas_product(m, n, eps):
    p = plan_deltas(m, n, eps)
    if p.strategy == "primal-dual":
        assert p.delta1 * p.delta2 == pytest.approx(eps)
        assert SQRT2 * eps <= p.delta1 <= 1
    assert p.delta1 >= SQRT2 * eps or p.strategy == "dual-only"


# --- points vs lines --------------------------------------------------------


def test_point_line_empty_and_incident():
    L = Lines2D.from_lines([Line2(0.5, 0.1)])
    assert len(report_point_line_2d(np.zeros((0, 2)), L, 0.01)) == 0
    P = [[0.2, 0.2]]
    for mode in ("filtered", "candidates"):
        assert (0, 0) in report_point_line_2d(P, L, 0.01, mode).as_set()
    assert report_point_line_2d(P, L, 0.01, "count") == 1
    cover = report_point_line_2d(P, L, 0.01, "bipartite")
    assert [0, 0] in cover.expand().tolist()


@pytest.mark.parametrize("mn", [(2000, 2000), (20000, 200), (200, 20000)])
def test_point_line_far_pairs_not_candidates(mn):
    rng = np.random.default_rng(0)
    eps = 0.01
    m, n = mn
    L = Lines2D(rng.uniform(-0.4, 0.4, (n, 2)), rng.normal(size=(n, 2)))
    far = offset_points(L, 6 * eps, rng)
    filler = rng.uniform(-0.5, 0.5, (max(m - n, 0), 2))
    P = np.concatenate([far[:m], filler])
    res = report_point_line_2d(P, L, eps, "candidates")
    k = min(m, n)
    assert not (res.as_set() & set(zip(range(k), range(k))))
    assert res.metrics.max_distortion <= 5


@pytest.mark.parametrize("seed", [0, 1])
def test_point_line_matches_oracle(seed):
    inst = gen_random_instance("line2d", 500, 500, seed)
    res = report_point_line_2d(inst.points, inst.objects, 0.01)
    assert res.as_set() == truth(inst, 0.01)
    assert np.allclose(res.distances, inst.objects.distances(inst.points, res.pairs[:, 0], res.pairs[:, 1]))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 300), st.integers(1, 300), st.floats(0.002, 0.1))
def test_point_line_complete_and_sound(seed, m, n, eps):
    inst = gen_random_instance("line2d", m, n, seed)
    res = report_point_line_2d(inst.points, inst.objects, eps, "candidates")
    assert {tuple(p) for p, d in zip(res.pairs.tolist(), res.distances) if d <= eps} == truth(inst, eps)
    assert res.metrics.max_distortion <= 5
    assert report_point_line_2d(inst.points, inst.objects, eps, "count") == len(truth(inst, eps))


def test_point_line_vertical_and_horizontal_lines():
    L = Lines2D.from_lines([Line2.vertical(0.1), Line2(0.0, -0.2), Line2(1.0, 0.0), Line2(-1.0, 0.0)])
    P = np.random.default_rng(2).uniform(-0.7, 0.7, (3000, 2))
    assert report_point_line_2d(P, L, 0.01).as_set() == brute_force_pairs(P, L, 0.01).as_set()


@pytest.mark.parametrize("eps", [0.01, 0.02])
def test_bipartite_cover(eps):
    inst = gen_random_instance("line2d", 800, 800, 4)
    cover = report_point_line_2d(inst.points, inst.objects, eps, "bipartite")
    cand = report_point_line_2d(inst.points, inst.objects, eps, "candidates")
    assert len(cover) <= 16 / eps**2
    E = cover.expand()
    assert len(E) == cand.metrics.candidates
    _, cnt = np.unique(E, axis=0, return_counts=True)
    assert set(map(tuple, E.tolist())) == cand.as_set()
    assert cnt.max() == cand.metrics.max_multiplicity


def test_point_line_rejects_bad_eps_and_mode():
    L = Lines2D.from_slopes([0.1], [0.0])
    with pytest.raises(ParameterError):
        report_point_line_2d([[0, 0]], L, 0.0)
    with pytest.raises(ParameterError):
        report_point_line_2d([[0, 0]], L, 0.7)
    with pytest.raises(ParameterError):
        report_point_line_2d([[0, 0]], L, 0.01, "everything")


def test_point_line_accepts_slope_pairs():
    res = report_point_line_2d([[0.0, 0.1]], [(0.0, 0.1), (1.0, 0.5)], 0.01)
    assert res.as_set() == {(0, 0)}


# --- congruent pairs --------------------------------------------------------


def test_sector_rectangle_dimensions():
    for r in (0.05, 0.2, 0.5):
        for eps in (0.001, 0.004, 0.01):
            K = math.ceil(2 * math.pi / math.sqrt(eps))
            xlo, xhi, hh = sector_rectangle(r, eps, 2 * math.pi / K)
            assert xhi - xlo <= 3 * eps
            assert 2 * hh <= (r + eps) * math.sqrt(eps) <= math.sqrt(eps)


@pytest.mark.parametrize("method", [report_congruent_pairs_2d_sector, report_congruent_pairs_2d_dual])
def test_congruent_exact_and_far(method):
    rng = np.random.default_rng(3)
    r, eps = 0.3, 0.005
    P, Q = pairs_at_distance(300, r, rng)
    res = method(P, Q, r, eps, "candidates")
    own = set(zip(range(300), range(300)))
    assert own <= res.as_set()
    P, Q = pairs_at_distance(300, r + 6 * eps, rng)
    if method is report_congruent_pairs_2d_sector:
        assert not (method(P, Q, r, eps, "candidates").as_set() & own)
    assert not (method(P, Q, r, eps).as_set() & own)


def test_sector_matches_oracle_and_bound():
    inst = gen_random_instance("congruent2", 400, 400, 0, {"r": 0.3})
    res = report_congruent_pairs_2d_sector(inst.points, inst.objects.centers, 0.3, 0.005, "candidates")
    assert res.metrics.max_distortion <= 5
    assert {tuple(p) for p, d in zip(res.pairs.tolist(), res.distances) if d <= 0.005} == truth(inst, 0.005)


def test_dual_cell_extent():
    eps, r = 0.005, 0.3
    p = plan_deltas(400, 400, eps, "congruent-2d", r=r)
    assert p.strategy == "primal-dual"
    assert SQRT2 * p.delta1 * p.delta2 == pytest.approx(2 * eps)


@pytest.mark.parametrize("seed", range(50))
def test_dual_agrees_with_sector(seed):
    rng = np.random.default_rng(seed)
    m, n = int(rng.integers(50, 250)), int(rng.integers(50, 250))
    eps = float(rng.choice([0.003, 0.005, 0.01]))
    r = float(rng.choice([0.2, 0.3, 0.5]))
    inst = gen_random_instance("congruent2", m, n, seed, {"r": r})
    a = report_congruent_pairs_2d_sector(inst.points, inst.objects.centers, r, eps).as_set()
    b = report_congruent_pairs_2d_dual(inst.points, inst.objects.centers, r, eps).as_set()
    assert a == b == truth(inst, eps)


def test_congruent_parameter_errors():
    with pytest.raises(ParameterError):
        report_congruent_pairs_2d_sector([[0, 0]], [[0.1, 0]], 0.7, 0.01)
    with pytest.raises(ParameterError):
        report_congruent_pairs_2d_dual([[0, 0]], [[0.1, 0]], 0.0, 0.01)
    with pytest.raises(ParameterError):
        report_congruent_pairs_2d_sector([[0, 0]], [[0.1, 0]], 0.01, 0.02)


# --- points vs circles ------------------------------------------------------


def test_point_on_circle_reported():
    C = Circles2D([[0.1, 0.1], [-0.2, 0.3]], [0.25, 0.55])
    P = [[0.35, 0.1], [-0.2, 0.85]]
    assert {(0, 0), (1, 1)} <= report_point_circle_2d(P, C, 0.005).as_set()


def test_lifting_identity():
    rng = np.random.default_rng(5)
    p = rng.uniform(-1, 1, (1000, 2))
    q = rng.uniform(-1, 1, (1000, 2))
    r = rng.uniform(0.2, 0.6, 1000)
    power = ((p - q) ** 2).sum(axis=1) - r**2
    # lifted point above the plane z = 2 q.x + r^2 - |q|^2
    lifted = (p**2).sum(axis=1) - (2 * (q * p).sum(axis=1) + r**2 - (q**2).sum(axis=1))
    assert np.allclose(lifted, power, atol=1e-12, rtol=0)
    # same quantity after dualizing: point (2q, |q|^2 - r^2) above the plane Z = p.X - |p|^2
    dual = ((q**2).sum(axis=1) - r**2) - ((p * 2 * q).sum(axis=1) - (p**2).sum(axis=1))
    assert np.allclose(dual, power, atol=1e-12, rtol=0)


@pytest.mark.parametrize("seed", [0, 1])
def test_point_circle_matches_oracle(seed):
    inst = gen_random_instance("circle2", 400, 400, seed, {"r1": 0.2, "r2": 0.6})
    res = report_point_circle_2d(inst.points, inst.objects, 0.005, 0.2, 0.6)
    assert res.as_set() == truth(inst, 0.005)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 200), st.integers(1, 200), st.floats(0.002, 0.05))
def test_point_circle_complete(seed, m, n, eps):
    inst = gen_random_instance("circle2", m, n, seed, {"r1": 0.2, "r2": 0.6})
    assert report_point_circle_2d(inst.points, inst.objects, eps, 0.2, 0.6).as_set() == truth(inst, eps)


def test_point_circle_parameter_errors():
    C = Circles2D([[0, 0]], [0.3])
    with pytest.raises(ParameterError):
        report_point_circle_2d([[0, 0]], C, 0.01, r1=0.4, r2=0.6)
    with pytest.raises(ParameterError):
        report_point_circle_2d([[0, 0]], C, 0.35)


def test_spheres_container_matches_centers_api():
    inst = gen_random_instance("congruent2", 100, 100, 9)
    assert isinstance(inst.objects, Spheres)
    a = report_congruent_pairs_2d_sector(inst.points, inst.objects.centers, inst.objects.radius, 0.01).as_set()
    assert a == truth(inst, 0.01)
