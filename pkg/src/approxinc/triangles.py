"""Point triples spanning triangles nearly congruent to a reference triangle."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .geom import Circles3D, Triangle, check_eps
from .incidence3d import _as_points3, _point_circle_3d_raw, report_congruent_pairs_3d
from .metrics import RunMetrics, check_mode


def triangle_geometry(u: float, v: float, w: float) -> tuple[float, float]:
    """Foot offset z (from a along ab) and height h of the triangle with |ab|=u, |ac|=v, |bc|=w."""
    t = Triangle(u, v, w)
    return t.z, t.h


def geometry_gradients(u: float, v: float, w: float) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of z and h with respect to (u, v, w)."""
    z, h = triangle_geometry(u, v, w)
    gz = np.array([0.5 - (v * v - w * w) / (2 * u * u), v / u, -w / u])
    # h^2 = v^2 - z^2
    gh = (np.array([0.0, v, 0.0]) - z * gz) / h
    return gz, gh


def tube_constant(u: float, v: float, w: float) -> float:
    """Factor delta with dist(o, circle) <= delta * eps for all three sides off by at most eps.

    First-order bound sqrt(|grad z|_1^2 + |grad h|_1^2), doubled as slack for
    the second-order terms.
    """
    gz, gh = geometry_gradients(u, v, w)
    return 2.0 * math.hypot(np.abs(gz).sum(), np.abs(gh).sum())


@dataclass(frozen=True)
class TriangleQuery:
    """Reference triangle (u = |ab| longest side), tolerance and fatness parameters."""

    triangle: Triangle
    eps: float
    beta: float | None = None
    s: float | None = None

    def __post_init__(self):
        t = self.triangle
        beta = t.u if self.beta is None else self.beta
        s = t.h if self.s is None else self.s
        check_eps(self.eps)
        if t.u < max(t.v, t.w) - 1e-15:
            raise ParameterError("u must be the longest side")
        if not (0 < beta <= t.u <= 0.5):
            raise ParameterError("need beta <= u <= 1/2")
        if t.h < s:
            raise ParameterError("triangle height below the fatness bound s")
        if self.eps > min(beta, s) / 20:
            raise ParameterError("eps must be at most min(beta, s) / 20")

    @property
    def z(self) -> float:
        return self.triangle.z

    @property
    def h(self) -> float:
        return self.triangle.h

    @property
    def tube_radius(self) -> float:
        t = self.triangle
        return tube_constant(t.u, t.v, t.w) * self.eps


@dataclass(frozen=True)
class PairTorus:
    """Circle of possible third vertices for the pair (p, q), thickened by ``tube_radius``."""

    p: int
    q: int
    circle: Circles3D
    tube_radius: float


def torus_for_pair(p, q, query: TriangleQuery, indices: tuple[int, int] = (-1, -1)) -> PairTorus:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    d = q - p
    L = float(np.linalg.norm(d))
    if L == 0:
        raise ParameterError("p and q coincide")
    axis = d / L
    c = Circles3D(p + query.z * axis, query.h, axis)
    return PairTorus(indices[0], indices[1], c, query.tube_radius)


def pair_circles(B: np.ndarray, pairs: np.ndarray, query: TriangleQuery) -> Circles3D:
    """Vectorized :func:`torus_for_pair` over index pairs."""
    d = B[pairs[:, 1]] - B[pairs[:, 0]]
    axis = d / np.linalg.norm(d, axis=1, keepdims=True)
    return Circles3D(B[pairs[:, 0]] + query.z * axis, query.h, axis)


@dataclass
class TriangleMatchResult:
    """Ordered triples (p, q, o) matched to (a, b, c) with their side deviations."""

    triples: np.ndarray
    deviations: np.ndarray
    metrics: RunMetrics
    pair_count: int = 0
    extra: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.triples)

    def as_set(self) -> set[tuple[int, int, int]]:
        return set(map(tuple, self.triples.tolist()))

    @property
    def max_deviation(self) -> np.ndarray:
        return self.deviations.max(axis=1) if len(self.deviations) else np.zeros(0)


def side_deviations(B: np.ndarray, T: np.ndarray, tri: Triangle) -> np.ndarray:
    """| |pq| - u |, | |po| - v |, | |qo| - w | per ordered triple."""
    p, q, o = B[T[:, 0]], B[T[:, 1]], B[T[:, 2]]
    return np.column_stack([np.abs(np.linalg.norm(p - q, axis=1) - tri.u),
                            np.abs(np.linalg.norm(p - o, axis=1) - tri.v),
                            np.abs(np.linalg.norm(q - o, axis=1) - tri.w)])


def report_congruent_triangles(B, query: TriangleQuery, mode: str = "filtered"):
    """Ordered triples (p, q, o) of B with every side within eps of the reference.

    Stage 1 finds the pairs (p, q) with | |pq| - u | <= eps. For each such pair
    the third vertex must lie near a circle of radius h about the axis pq, so
    stage 2 is a single point vs congruent circles query with tube radius
    delta * eps. Stage 3 measures the three side deviations; ``filtered`` keeps
    the triples within eps, ``candidates`` keeps all, ``count`` counts the
    filtered ones.
    """
    t0 = time.perf_counter()
    check_mode(mode)
    B = _as_points3(B)
    tri, eps = query.triangle, query.eps
    metrics = RunMetrics(strategy="pairs+circles")
    empty = TriangleMatchResult(np.zeros((0, 3), dtype=np.int64), np.zeros((0, 3)), metrics)
    if len(B) < 3:
        return 0 if mode == "count" else empty
    stage1 = report_congruent_pairs_3d(B, B, tri.u, eps, mode="filtered")
    pairs = stage1.pairs
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    metrics.cells_visited += stage1.metrics.cells_visited
    metrics.extra["stage1_pairs"] = len(pairs)
    if not len(pairs):
        metrics.elapsed_ms = 1e3 * (time.perf_counter() - t0)
        return 0 if mode == "count" else empty
    circles = pair_circles(B, pairs, query)
    m2 = RunMetrics()
    o_idx, c_idx, _ = _point_circle_3d_raw(B, circles, query.h, query.tube_radius, m2)
    metrics.cells_visited += m2.cells_visited
    metrics.extra.update(tube_radius=query.tube_radius, stage2_strategy=m2.strategy)
    T = np.column_stack([pairs[c_idx, 0], pairs[c_idx, 1], o_idx]).astype(np.int64)
    T = T[(T[:, 2] != T[:, 0]) & (T[:, 2] != T[:, 1])]
    metrics.candidates = len(T)
    T, cnt = np.unique(T, axis=0, return_counts=True) if len(T) else (T, np.zeros(0, dtype=np.int64))
    metrics.distinct = len(T)
    metrics.max_multiplicity = int(cnt.max()) if len(cnt) else 0
    dev = side_deviations(B, T, tri) if len(T) else np.zeros((0, 3))
    worst = dev.max(axis=1) if len(T) else np.zeros(0)
    metrics.max_distortion = float(max(1.0, worst.max() / eps)) if len(T) else 1.0
    keep = worst <= eps
    metrics.k_filtered = int(keep.sum())
    metrics.elapsed_ms = 1e3 * (time.perf_counter() - t0)
    if mode == "count":
        return metrics.k_filtered
    if mode == "filtered":
        T, dev = T[keep], dev[keep]
    return TriangleMatchResult(T, dev, metrics, pair_count=len(pairs))
