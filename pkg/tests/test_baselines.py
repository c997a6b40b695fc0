import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from approxinc.baselines import (brute_force_pairs, brute_force_triples, naive_duality_report, naive_grid_report,
                                 oracle_distance_matrix)
from approxinc.errors import OracleBudgetError, ParameterError
from approxinc.geom import Circles3D, Lines2D, Lines3D, Planes3D, Spheres, Triangle
from approxinc.instances import gen_random_instance

KINDS = ["line2d", "plane3", "line3", "circle2", "congruent2", "congruent3", "circle3"]


def container_matrix(P, objects):
    """All-pairs distances through the containers' own distance routines."""
    m, n = len(P), len(objects)
    pi, oi = np.repeat(np.arange(m), n), np.tile(np.arange(n), m)
    return objects.distances(P, pi, oi).reshape(m, n)


def offset_points(lines: Lines2D, dist: float, rng):
    """One point per line at exact distance ``dist`` from it."""
    t = rng.uniform(-0.3, 0.3, len(lines))
    d = lines.directions
    nrm = np.column_stack([-d[:, 1], d[:, 0]])
    side = rng.choice([-1.0, 1.0], len(lines))[:, None]
    return lines.origins + t[:, None] * d + side * dist * nrm


# --- oracles ----------------------------------------------------------------


def test_oracle_empty_and_single():
    L = Lines2D.from_slopes([0.5], [0.1])
    assert brute_force_pairs(np.zeros((0, 2)), L, 0.01).count == 0
    res = brute_force_pairs([[0.2, 0.2]], L, 0.01)
    assert res.as_set() == {(0, 0)} and res.distances[0] == pytest.approx(0.0, abs=1e-15)


def test_oracle_budget_refuses():
    inst = gen_random_instance("line2d", 4000, 3000, 0)
    with pytest.raises(OracleBudgetError):
        brute_force_pairs(inst.points, inst.objects, 0.01)
    with pytest.raises(OracleBudgetError):
        brute_force_triples(np.zeros((400, 3)), Triangle(0.5, 0.4, 0.3), 0.01)


@pytest.mark.parametrize("kind", KINDS)
def test_oracle_distances_cross_validated(kind):
    # 100 instances across the kinds: the oracle's routines against the containers' ones
    for seed in range(100 // len(KINDS) + 1):
        inst = gen_random_instance(kind, 30, 20, seed)
        A = oracle_distance_matrix(inst.points, inst.objects)
        B = container_matrix(inst.points, inst.objects)
        assert np.allclose(A, B, atol=1e-12)


def test_oracle_triples_match_loop():
    rng = np.random.default_rng(0)
    tri = Triangle(0.5, 0.4, 0.3)
    B = np.concatenate([rng.uniform(-0.5, 0.5, (25, 3)),
                        np.array([[0, 0, 0], [0.5, 0, 0], [tri.z, tri.h, 0]])])
    eps = 0.03
    D = np.linalg.norm(B[:, None] - B[None], axis=2)
    expect = {(p, q, o) for p in range(len(B)) for q in range(len(B)) for o in range(len(B))
              if len({p, q, o}) == 3 and abs(D[p, q] - tri.u) <= eps and abs(D[p, o] - tri.v) <= eps
              and abs(D[q, o] - tri.w) <= eps}
    res = brute_force_triples(B, tri, eps)
    assert res.as_set() == expect
    assert (25, 26, 27) in expect


# --- naive grid -------------------------------------------------------------


def test_naive_incident_pair():
    L = Lines2D.from_slopes([0.3], [0.0])
    res = naive_grid_report([[0.1, 0.03]], L, 0.01)
    assert res.as_set() == {(0, 0)}
    H = Planes3D.from_coeffs([0.2], [0.1], [0.0])
    assert naive_grid_report([[0.1, 0.1, 0.03]], H, 0.01).as_set() == {(0, 0)}


def test_naive_lines_soundness_bound():
    rng = np.random.default_rng(1)
    eps = 0.01
    L = Lines2D(rng.uniform(-0.5, 0.5, (2000, 2)), rng.normal(size=(2000, 2)))
    far = offset_points(L, 3 * eps, rng)
    res = naive_grid_report(far, L, eps, "candidates")
    own = set(zip(range(2000), range(2000)))
    assert not (res.as_set() & own)
    inst = gen_random_instance("line2d", 1000, 1000, 3)
    res = naive_grid_report(inst.points, inst.objects, eps, "candidates")
    assert res.metrics.max_distortion <= 2 * math.sqrt(2)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("eps", [0.008, 0.02])
def test_naive_equals_oracle(kind, eps):
    inst = gen_random_instance(kind, 300, 250, 11)
    truth = brute_force_pairs(inst.points, inst.objects, eps).as_set()
    assert naive_grid_report(inst.points, inst.objects, eps).as_set() == truth
    assert naive_grid_report(inst.points, inst.objects, eps, "count") == len(truth)


@pytest.mark.parametrize("kind", ["line2d", "plane3", "congruent2", "congruent3"])
@pytest.mark.parametrize("mn", [(300, 60), (60, 300)])
def test_naive_duality_equals_oracle(kind, mn):
    inst = gen_random_instance(kind, *mn, seed=5)
    eps = 0.01
    truth = brute_force_pairs(inst.points, inst.objects, eps).as_set()
    res = naive_duality_report(inst.points, inst.objects, eps)
    assert res.as_set() == truth
    assert res.metrics.strategy == ("naive-primal" if mn[0] >= mn[1] else
                                    "naive-swapped" if kind.startswith("congruent") else "naive-dual")


def test_naive_duality_rejects_unsupported():
    inst = gen_random_instance("line3", 10, 20, 0)
    with pytest.raises(ParameterError):
        naive_duality_report(inst.points, inst.objects, 0.01)


def test_naive_probe_counter_linear_in_n_over_eps():
    counts = []
    for n in (500, 1000, 2000):
        inst = gen_random_instance("line2d", 1000, n, 2)
        counts.append(naive_grid_report(inst.points, inst.objects, 0.005, "candidates").metrics.cells_visited)
    for a, b in zip(counts, counts[1:]):
        assert 1.7 <= b / a <= 2.3
    inst = gen_random_instance("line2d", 1000, 1000, 2)
    c1 = naive_grid_report(inst.points, inst.objects, 0.01, "candidates").metrics.cells_visited
    c2 = naive_grid_report(inst.points, inst.objects, 0.005, "candidates").metrics.cells_visited
    assert 1.7 <= c2 / c1 <= 2.3


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["line2d", "plane3", "line3", "circle3"]),
       st.floats(0.003, 0.05))
def test_naive_complete_on_random_instances(seed, kind, eps):
    inst = gen_random_instance(kind, 60, 40, seed)
    truth = brute_force_pairs(inst.points, inst.objects, eps).as_set()
    assert naive_grid_report(inst.points, inst.objects, eps).as_set() == truth


def test_naive_handles_objects_far_outside():
    P = np.random.default_rng(0).uniform(-0.5, 0.5, (200, 3))
    S = Spheres([[5.0, 5.0, 5.0]], 0.3)
    assert len(naive_grid_report(P, S, 0.01)) == 0
    C = Circles3D([[0.0, 0.0, 0.0]], 0.3, [[0, 0, 1.0]])
    L = Lines3D([[0.0, 0.0, 0.0]], [[1.0, 1.0, 1.0]])
    for obj in (C, L):
        assert naive_grid_report(P, obj, 0.02).as_set() == brute_force_pairs(P, obj, 0.02).as_set()
