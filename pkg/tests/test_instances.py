import io
import math

import numpy as np
import pytest
from scipy import stats

from approxinc.baselines import oracle_distance_matrix
from approxinc.errors import InstanceFormatError, ParameterError
from approxinc.instances import (KINDS, gen_random_instance, load_objects, load_points, normalizing_map,
                                 read_points, save_instance, save_objects, uniform_points)
from approxinc.geom import Lines2D


def test_generation_deterministic():
    a = gen_random_instance("line2d", 4, 2, 7)
    b = gen_random_instance("line2d", 4, 2, 7)
    assert a.points.tobytes() == b.points.tobytes()
    assert a.objects.origins.tobytes() == b.objects.origins.tobytes()
    assert a.objects.directions.tobytes() == b.objects.directions.tobytes()
    c = gen_random_instance("line2d", 4, 2, 8)
    assert c.points.tobytes() != a.points.tobytes()


@pytest.mark.parametrize("kind", KINDS)
def test_every_kind_generates_in_unit_ball(kind):
    inst = gen_random_instance(kind, 50, 10, 0)
    assert np.all(np.linalg.norm(inst.points, axis=1) <= 1 + 1e-12)
    assert inst.m == len(inst.points)
    assert inst.n == 10


def test_lines_cross_the_square():
    inst = gen_random_instance("line2d", 0, 5000, 3)
    L: Lines2D = inst.objects
    s = 1 / math.sqrt(2)
    corners = np.array([[-s, -s], [-s, s], [s, -s], [s, s]])
    d, o = L.directions, L.origins
    side = (corners[None, :, 0] - o[:, None, 0]) * d[:, None, 1] - (corners[None, :, 1] - o[:, None, 1]) * d[:, None, 0]
    assert np.all((side.min(axis=1) <= 0) & (side.max(axis=1) >= 0))


def test_pair_sampling_lines_through_input_points():
    inst = gen_random_instance("line2d", 30, 20, 1, pair_sampling=True)
    D = oracle_distance_matrix(inst.points, inst.objects)
    assert np.all((D <= 1e-12).sum(axis=0) >= 2)
    with pytest.raises(ParameterError):
        gen_random_instance("line2d", 1, 3, 0, pair_sampling=True)


def test_generation_errors():
    with pytest.raises(ParameterError):
        gen_random_instance("hexagon", 1, 1, 0)
    with pytest.raises(ParameterError):
        gen_random_instance("line2d", 1, 1, None)


def test_points_uniform_chi_square():
    P = uniform_points(np.random.default_rng(11), 100_000, 2)
    s = 1 / math.sqrt(2)
    H, _, _ = np.histogram2d(P[:, 0], P[:, 1], bins=10, range=[[-s, s], [-s, s]])
    assert H.sum() == 100_000
    assert stats.chisquare(H.ravel()).pvalue > 0.001


def test_read_two_points(tmp_path):
    f = tmp_path / "p.txt"
    f.write_text("0.1,0.2\n0.3,0.4\n")
    P, amap = load_points(f)
    assert P.shape == (2, 2) and amap.is_identity
    assert P.tolist() == [[0.1, 0.2], [0.3, 0.4]]


def test_comments_and_blank_lines(tmp_path):
    f = tmp_path / "p.txt"
    f.write_text("# header\n\n0.1,0.2,0.3\n  # another\n0.0,0.0,0.0\n")
    assert read_points(f).shape == (2, 3)


def test_out_of_range_normalized_and_reported(tmp_path):
    f = tmp_path / "p.txt"
    f.write_text("10,10\n30,10\n20,40\n")
    err = io.StringIO()
    P, amap = load_points(f, stream=err)
    assert "normalized" in err.getvalue()
    assert not amap.is_identity
    assert np.max(np.linalg.norm(P, axis=1)) <= 1 + 1e-12
    assert np.allclose(amap.apply([[10, 10], [30, 10], [20, 40]]), P)


def test_normalization_prints_to_stderr(tmp_path, capsys):
    f = tmp_path / "p.txt"
    f.write_text("5,0\n")
    load_points(f)
    assert "normalized" in capsys.readouterr().err


def test_normalized_objects_follow_points(tmp_path):
    # a point on a circle stays on it after the shared map
    pts, obj = tmp_path / "p.txt", tmp_path / "o.txt"
    pts.write_text("13,4\n-5,4\n")
    obj.write_text("circle2\n4,4,9\n")
    P, amap = load_points(pts, stream=io.StringIO())
    _, C = load_objects(obj, "circle2", amap)
    assert np.allclose(oracle_distance_matrix(P, C), 0, atol=1e-12)


@pytest.mark.parametrize("kind", ["line2d", "plane3", "line3", "circle2", "congruent2", "congruent3", "circle3"])
def test_round_trip(tmp_path, kind):
    inst = gen_random_instance(kind, 20, 7, 2)
    paths = save_instance(tmp_path / "inst", inst)
    P = read_points(paths[0])
    found, obj = load_objects(paths[1], kind)
    assert found == kind
    assert np.array_equal(P, inst.points)
    D0 = oracle_distance_matrix(inst.points, inst.objects)
    D1 = oracle_distance_matrix(P, obj)
    assert np.allclose(D0, D1, rtol=0, atol=1e-15)


def test_vertical_line_round_trip(tmp_path):
    L = Lines2D([[0.25, 0.0], [0.0, 0.1]], [[0.0, 1.0], [1.0, 0.5]])
    save_objects(tmp_path / "o", "line2d", L)
    text = (tmp_path / "o").read_text()
    assert "V,0.25" in text
    _, back = load_objects(tmp_path / "o")
    P = np.array([[0.25, 0.7], [0.2, 0.2]])
    assert np.allclose(oracle_distance_matrix(P, back), oracle_distance_matrix(P, L), atol=1e-15)


@pytest.mark.parametrize("text,lineno", [("0.1,0.2\n0.3,x\n", 2), ("0.1,0.2\n\n0.3\n", 3),
                                         ("0.1,0.2\n0.1,0.2,0.3\n", 2), ("nan,0\n", 1)])
def test_malformed_points_report_line(tmp_path, text, lineno):
    f = tmp_path / "p.txt"
    f.write_text(text)
    with pytest.raises(InstanceFormatError) as exc:
        load_points(f)
    assert exc.value.lineno == lineno
    assert f"line {lineno}" in str(exc.value)


@pytest.mark.parametrize("text,lineno", [("plane3\n1,2\n", 2), ("sphere3\n0,0,0\n", 1), ("blob\n", 1),
                                         ("line2d\n0.1,0.2\nV\n", 3), ("line2d k\n", 1)])
def test_malformed_objects_report_line(tmp_path, text, lineno):
    f = tmp_path / "o.txt"
    f.write_text(text)
    with pytest.raises(InstanceFormatError) as exc:
        load_objects(f)
    assert exc.value.lineno == lineno


def test_objects_kind_mismatch(tmp_path):
    f = tmp_path / "o.txt"
    f.write_text("circle2\n0,0,0.3\n")
    with pytest.raises(InstanceFormatError):
        load_objects(f, "line2d")


def test_empty_files(tmp_path):
    f = tmp_path / "p.txt"
    f.write_text("")
    P, amap = load_points(f)
    assert P.shape[0] == 0 and amap.is_identity
    g = tmp_path / "o.txt"
    g.write_text("plane3\n")
    _, H = load_objects(g)
    assert len(H) == 0
    with pytest.raises(InstanceFormatError):
        load_objects(f)


def test_normalizing_map_identity_inside_ball():
    assert normalizing_map(np.array([[0.5, 0.5], [-0.7, 0.0]])).is_identity
    assert normalizing_map(np.zeros((0, 3))).is_identity
