import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from approxinc.baselines import brute_force_pairs, brute_force_triples
from approxinc.errors import ParameterError
from approxinc.geom import Spheres, Triangle
from approxinc.instances import gen_random_instance, planted_triangles, random_rotation
from approxinc.triangles import (TriangleQuery, report_congruent_triangles, side_deviations, torus_for_pair,
                                 triangle_geometry, tube_constant)
from approxinc.incidence3d import report_congruent_pairs_3d

TRI = Triangle(0.5, 0.4, 0.3)


def random_triangles(rng, k):
    """Valid side triples (u longest) by rejection."""
    S = rng.uniform(0.05, 0.5, (4 * k, 3))
    S = -np.sort(-S, axis=1)
    S = S[S[:, 0] < S[:, 1] + S[:, 2] - 1e-3]
    return S[:k]


def place(u, v, w, rng):
    """Vertices a, b, c of a triangle with the given sides, rigidly moved at random."""
    z = (u * u + v * v - w * w) / (2 * u)
    h = math.sqrt(max(v * v - z * z, 0.0))
    X = np.array([[0, 0, 0], [u, 0, 0], [z, h, 0.0]])
    return X @ random_rotation(rng).T + rng.uniform(-0.2, 0.2, 3)


def test_geometry_examples():
    z, h = triangle_geometry(0.4, 0.4, 0.4)
    assert z == pytest.approx(0.2, abs=1e-15) and h == pytest.approx(0.2 * math.sqrt(3), abs=1e-15)
    z, _ = triangle_geometry(0.3, 0.25, 0.25)
    assert z == pytest.approx(0.15, abs=1e-15)
    assert triangle_geometry(0.5, 0.4, 0.3) == pytest.approx((0.32, 0.24), abs=1e-15)


def test_geometry_identities_random():
    S = random_triangles(np.random.default_rng(0), 10_000)
    assert len(S) == 10_000
    for u, v, w in S:
        z, h = triangle_geometry(u, v, w)
        assert abs(z * z + h * h - v * v) <= 1e-12
        assert abs((u - z) ** 2 + h * h - w * w) <= 1e-12


def test_tube_constant_bounds_first_order_change():
    # finite differences of (z, h) stay within half the tube constant
    rng = np.random.default_rng(1)
    u, v, w = 0.5, 0.4, 0.3
    delta = tube_constant(u, v, w)
    z0, h0 = triangle_geometry(u, v, w)
    t = 1e-6
    for _ in range(200):
        du = rng.uniform(-t, t, 3)
        z, h = triangle_geometry(u + du[0], v + du[1], w + du[2])
        assert math.hypot(z - z0, h - h0) <= 0.5 * delta * t * (1 + 1e-3)


def test_torus_exact_copy_distance_zero():
    q = TriangleQuery(TRI, 0.005)
    rng = np.random.default_rng(2)
    for _ in range(50):
        a, b, c = place(TRI.u, TRI.v, TRI.w, rng)
        tor = torus_for_pair(a, b, q)
        assert tor.circle.distances(c[None], [0], [0])[0] <= 1e-9
    with pytest.raises(ParameterError):
        torus_for_pair([0.1, 0.1, 0.1], [0.1, 0.1, 0.1], q)


def test_perturbed_copies_inside_tube():
    eps = 1e-3
    q = TriangleQuery(TRI, eps)
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(10_000):
        u, v, w = np.array([TRI.u, TRI.v, TRI.w]) + rng.uniform(-eps, eps, 3)
        a, b, c = place(u, v, w, rng)
        tor = torus_for_pair(a, b, q)
        worst = max(worst, tor.circle.distances(c[None], [0], [0])[0])
    assert worst <= q.tube_radius


def test_query_rejects_bad_parameters():
    with pytest.raises(ParameterError):
        TriangleQuery(Triangle(0.3, 0.5, 0.4), 0.001)  # u not longest
    with pytest.raises(ParameterError):
        TriangleQuery(Triangle(0.8, 0.5, 0.4), 0.001)  # u > 1/2
    with pytest.raises(ParameterError):
        TriangleQuery(TRI, 0.05)  # eps above min(beta, s)/20
    with pytest.raises(ParameterError):
        TriangleQuery(TRI, 0.001, s=0.3)  # thinner than required


def test_planted_exact_copy_found():
    rng = np.random.default_rng(4)
    eps = 0.002
    B = np.concatenate([rng.uniform(-0.5, 0.5, (200, 3)), planted_triangles(rng, TRI, 1)])
    res = report_congruent_triangles(B, TriangleQuery(TRI, eps))
    assert res.as_set() == brute_force_triples(B, TRI, eps).as_set()
    assert (200, 201, 202) in res.as_set()


def test_collinear_points_give_nothing():
    B = np.array([[0.0, 0, 0], [0.5, 0, 0], [0.32, 0, 0]])
    assert len(report_congruent_triangles(B, TriangleQuery(TRI, 0.005))) == 0
    assert report_congruent_triangles(B[:2], TriangleQuery(TRI, 0.005), "count") == 0


@pytest.mark.parametrize("seed", [0, 1])
def test_perturbed_planted_copies_match_brute_force(seed):
    eps = 0.005
    inst = gen_random_instance("triangle", 150, 20, seed, {"jitter": eps / 4})
    B = inst.points
    res = report_congruent_triangles(B, TriangleQuery(TRI, eps))
    found = res.as_set()
    planted = {(150 + 3 * i, 151 + 3 * i, 152 + 3 * i) for i in range(20)}
    assert planted <= found
    assert found == brute_force_triples(B, TRI, eps).as_set()
    assert np.all(res.deviations <= eps)
    assert np.allclose(res.deviations, side_deviations(B, res.triples, TRI))


def test_candidates_carry_deviations_and_count_agrees():
    eps = 0.005
    inst = gen_random_instance("triangle", 100, 10, 5, {"jitter": eps / 2})
    q = TriangleQuery(TRI, eps)
    cand = report_congruent_triangles(inst.points, q, "candidates")
    filt = report_congruent_triangles(inst.points, q)
    assert filt.as_set() <= cand.as_set()
    assert report_congruent_triangles(inst.points, q, "count") == len(filt)
    assert cand.metrics.max_multiplicity <= 16


def test_stage_one_pairs_equal_brute_force():
    eps = 0.005
    inst = gen_random_instance("triangle", 150, 20, 6, {"jitter": eps / 4})
    B = inst.points
    got = report_congruent_pairs_3d(B, B, TRI.u, eps).as_set()
    truth = brute_force_pairs(B, Spheres(B, TRI.u), eps).as_set()
    assert got == truth


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.002, 0.01))
def test_triangles_complete(seed, eps):
    inst = gen_random_instance("triangle", 80, 8, seed, {"jitter": eps})
    res = report_congruent_triangles(inst.points, TriangleQuery(TRI, eps))
    assert res.as_set() == brute_force_triples(inst.points, TRI, eps).as_set()
