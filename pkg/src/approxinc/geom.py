"""Geometric primitives, exact distances and the coordinate normalizations.

Scalar types (``Line2``, ``Plane3``, ...) mirror the textbook representations
and are convenient for single queries and tests. The algorithms work on the
vectorized containers (``Lines2D``, ``Planes3D``, ...), which store objects in
a representation that never degenerates (origin + unit direction for lines,
unit normal + offset for planes).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ParameterError

Point2 = tuple[float, float]
Point3 = tuple[float, float, float]

_TINY = 1e-300


# ---------------------------------------------------------------------------
# scalar object types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Line2:
    """Planar line ``y = a x + b``; vertical lines use ``x0`` (``x = x0``)."""

    a: float = 0.0
    b: float = 0.0
    x0: float | None = None

    @classmethod
    def vertical(cls, x0: float) -> "Line2":
        return cls(0.0, 0.0, float(x0))

    @property
    def is_vertical(self) -> bool:
        return self.x0 is not None


@dataclass(frozen=True)
class Plane3:
    """Plane ``z = a x + b y + c``."""

    a: float
    b: float
    c: float


@dataclass(frozen=True)
class Line3:
    """Spatial line ``y = a x + b, z = c x + d``."""

    a: float
    b: float
    c: float
    d: float


@dataclass(frozen=True)
class Circle2:
    center: Point2
    radius: float


@dataclass(frozen=True)
class Circle3:
    """Circle in space; ``axis`` is the unit normal of its supporting plane."""

    center: Point3
    radius: float
    axis: Point3 = (0.0, 0.0, 1.0)


@dataclass(frozen=True)
class Sphere3:
    center: Point3
    radius: float


@dataclass(frozen=True)
class Triangle:
    """Reference triangle given by side lengths u=|ab|, v=|ac|, w=|bc|."""

    u: float
    v: float
    w: float

    def __post_init__(self):
        u, v, w = self.u, self.v, self.w
        if min(u, v, w) <= 0 or u >= v + w or v >= u + w or w >= u + v:
            raise ParameterError(f"degenerate triangle ({u}, {v}, {w})")

    @property
    def z(self) -> float:
        """Offset of the foot of the height from ``a`` along ``ab``."""
        return (self.u**2 + self.v**2 - self.w**2) / (2.0 * self.u)

    @property
    def h(self) -> float:
        """Height over the side ``ab`` (Heron)."""
        u, v, w = self.u, self.v, self.w
        t = 0.5 * (u + v + w)
        return 2.0 * math.sqrt(max(t * (t - u) * (t - v) * (t - w), 0.0)) / u


# ---------------------------------------------------------------------------
# scalar distances
# ---------------------------------------------------------------------------


def dist_point_line_2d(p: Sequence[float], l: Line2) -> float:
    x, y = float(p[0]), float(p[1])
    if l.is_vertical:
        return abs(x - l.x0)
    return abs(l.a * x - y + l.b) / math.hypot(l.a, 1.0)


def dist_point_circle_2d(p: Sequence[float], c: Circle2) -> float:
    return abs(math.hypot(p[0] - c.center[0], p[1] - c.center[1]) - c.radius)


def power_of_point(p: Sequence[float], c: Circle2) -> float:
    """Power of ``p`` w.r.t. ``c``: squared center distance minus r^2."""
    dx, dy = p[0] - c.center[0], p[1] - c.center[1]
    return dx * dx + dy * dy - c.radius * c.radius


def dist_point_plane_3d(p: Sequence[float], pl: Plane3) -> float:
    x, y, z = map(float, p)
    return abs(pl.a * x + pl.b * y + pl.c - z) / math.sqrt(pl.a**2 + pl.b**2 + 1.0)


def dist_point_line_3d(p: Sequence[float], l: Line3) -> float:
    o = np.array([0.0, l.b, l.d])
    d = np.array([1.0, l.a, l.c])
    v = np.asarray(p, dtype=float) - o
    return float(np.linalg.norm(np.cross(v, d)) / np.linalg.norm(d))


def dist_point_circle_3d(p: Sequence[float], c: Circle3) -> float:
    n = np.asarray(c.axis, dtype=float)
    n = n / np.linalg.norm(n)
    v = np.asarray(p, dtype=float) - np.asarray(c.center, dtype=float)
    h = float(v @ n)
    rho = float(np.linalg.norm(v - h * n))
    return math.hypot(rho - c.radius, h)


def dist_point_sphere_3d(p: Sequence[float], s: Sphere3) -> float:
    v = np.asarray(p, dtype=float) - np.asarray(s.center, dtype=float)
    return abs(float(np.linalg.norm(v)) - s.radius)


# ---------------------------------------------------------------------------
# vectorized containers
# ---------------------------------------------------------------------------


def _as_points(P, dim: int) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.size == 0:
        return np.zeros((0, dim))
    P = P.reshape(-1, dim)
    if not np.all(np.isfinite(P)):
        raise ParameterError("non-finite coordinates")
    return P


def _unit_rows(V: np.ndarray) -> np.ndarray:
    nrm = np.linalg.norm(V, axis=1, keepdims=True)
    if np.any(nrm <= _TINY):
        raise ParameterError("zero-length direction")
    return V / nrm


class Lines2D:
    """Planar lines stored as origin + unit direction (direction has dx >= 0)."""

    kind = "line2d"

    def __init__(self, origins, directions):
        self.origins = _as_points(origins, 2)
        D = _unit_rows(_as_points(directions, 2)) if len(self.origins) else np.zeros((0, 2))
        flip = (D[:, 0] < 0) | ((D[:, 0] == 0) & (D[:, 1] < 0))
        D[flip] *= -1.0
        self.directions = D

    @classmethod
    def from_slopes(cls, a, b) -> "Lines2D":
        a = np.atleast_1d(np.asarray(a, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        o = np.column_stack([np.zeros_like(a), b])
        return cls(o, np.column_stack([np.ones_like(a), a]))

    @classmethod
    def from_lines(cls, lines: Sequence[Line2]) -> "Lines2D":
        o, d = [], []
        for l in lines:
            if l.is_vertical:
                o.append((l.x0, 0.0))
                d.append((0.0, 1.0))
            else:
                o.append((0.0, l.b))
                d.append((1.0, l.a))
        return cls(np.array(o).reshape(-1, 2), np.array(d).reshape(-1, 2))

    @classmethod
    def through_points(cls, p, q) -> "Lines2D":
        p = _as_points(p, 2)
        return cls(p, _as_points(q, 2) - p)

    def __len__(self):
        return len(self.origins)

    def subset(self, idx) -> "Lines2D":
        return Lines2D(self.origins[idx], self.directions[idx])

    def to_lines(self) -> list[Line2]:
        out = []
        for o, d in zip(self.origins, self.directions):
            if d[0] == 0.0:
                out.append(Line2.vertical(o[0]))
            else:
                a = d[1] / d[0]
                out.append(Line2(float(a), float(o[1] - a * o[0])))
        return out

    def transformed(self, R: np.ndarray, t=None, scale: float = 1.0) -> "Lines2D":
        """Image under x -> scale * (R x) + t."""
        o = scale * (self.origins @ R.T)
        if t is not None:
            o = o + t
        return Lines2D(o, self.directions @ R.T)

    def slope_intercept(self) -> tuple[np.ndarray, np.ndarray]:
        """(c, d) with y = c x + d; requires non-vertical lines."""
        dx, dy = self.directions[:, 0], self.directions[:, 1]
        if np.any(dx <= 0):
            raise ParameterError("vertical line has no slope form")
        c = dy / dx
        return c, self.origins[:, 1] - c * self.origins[:, 0]

    def distances(self, P, pi, oi) -> np.ndarray:
        v = P[pi] - self.origins[oi]
        d = self.directions[oi]
        return np.abs(v[:, 0] * d[:, 1] - v[:, 1] * d[:, 0])


class Planes3D:
    """Planes ``n . x = h`` with unit normal (n_z >= 0 convention)."""

    kind = "plane3"

    def __init__(self, normals, offsets):
        N = _as_points(normals, 3)
        h = np.asarray(offsets, dtype=float).reshape(-1)
        if len(N):
            nrm = np.linalg.norm(N, axis=1)
            if np.any(nrm <= _TINY):
                raise ParameterError("zero-length normal")
            N = N / nrm[:, None]
            h = h / nrm
            flip = N[:, 2] < 0
            N[flip] *= -1.0
            h = np.where(flip, -h, h)
        self.normals = N
        self.offsets = h

    @classmethod
    def from_coeffs(cls, a, b, c) -> "Planes3D":
        a = np.atleast_1d(np.asarray(a, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        c = np.atleast_1d(np.asarray(c, dtype=float))
        return cls(np.column_stack([-a, -b, np.ones_like(a)]), c)

    @classmethod
    def from_planes(cls, planes: Sequence[Plane3]) -> "Planes3D":
        return cls.from_coeffs([p.a for p in planes], [p.b for p in planes], [p.c for p in planes])

    def __len__(self):
        return len(self.normals)

    def subset(self, idx) -> "Planes3D":
        return Planes3D(self.normals[idx], self.offsets[idx])

    def transformed(self, R: np.ndarray, t=None, scale: float = 1.0) -> "Planes3D":
        N = self.normals @ R.T
        h = scale * self.offsets
        if t is not None:
            h = h + N @ np.asarray(t, dtype=float)
        return Planes3D(N, h)

    def coefficients(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(a, b, c) with z = a x + b y + c; requires n_z > 0."""
        nz = self.normals[:, 2]
        if np.any(nz <= 0):
            raise ParameterError("vertical plane has no graph form")
        return -self.normals[:, 0] / nz, -self.normals[:, 1] / nz, self.offsets / nz

    def distances(self, P, pi, oi) -> np.ndarray:
        return np.abs(np.einsum("ij,ij->i", P[pi], self.normals[oi]) - self.offsets[oi])


class Lines3D:
    """Spatial lines stored as origin + unit direction."""

    kind = "line3"

    def __init__(self, origins, directions):
        self.origins = _as_points(origins, 3)
        self.directions = _unit_rows(_as_points(directions, 3)) if len(self.origins) else np.zeros((0, 3))

    @classmethod
    def from_slopes(cls, a, b, c, d) -> "Lines3D":
        a, b, c, d = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (a, b, c, d))
        o = np.column_stack([np.zeros_like(a), b, d])
        return cls(o, np.column_stack([np.ones_like(a), a, c]))

    @classmethod
    def through_points(cls, p, q) -> "Lines3D":
        p = _as_points(p, 3)
        return cls(p, _as_points(q, 3) - p)

    def __len__(self):
        return len(self.origins)

    def subset(self, idx) -> "Lines3D":
        return Lines3D(self.origins[idx], self.directions[idx])

    def transformed(self, R: np.ndarray, t=None, scale: float = 1.0) -> "Lines3D":
        o = scale * (self.origins @ R.T)
        if t is not None:
            o = o + t
        return Lines3D(o, self.directions @ R.T)

    def slopes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(a, b, c, d) with y = a x + b, z = c x + d; requires d_x != 0."""
        dx = self.directions[:, 0]
        if np.any(np.abs(dx) <= _TINY):
            raise ParameterError("line orthogonal to the x-axis has no slope form")
        a = self.directions[:, 1] / dx
        c = self.directions[:, 2] / dx
        o = self.origins
        return a, o[:, 1] - a * o[:, 0], c, o[:, 2] - c * o[:, 0]

    def distances(self, P, pi, oi) -> np.ndarray:
        v = P[pi] - self.origins[oi]
        return np.linalg.norm(np.cross(v, self.directions[oi]), axis=1)


class Circles2D:
    kind = "circle2"

    def __init__(self, centers, radii):
        self.centers = _as_points(centers, 2)
        self.radii = np.broadcast_to(np.asarray(radii, dtype=float), (len(self.centers),)).copy()
        if np.any(self.radii <= 0):
            raise ParameterError("circle radius must be positive")

    def __len__(self):
        return len(self.centers)

    def subset(self, idx) -> "Circles2D":
        return Circles2D(self.centers[idx], self.radii[idx])

    def distances(self, P, pi, oi) -> np.ndarray:
        return np.abs(np.linalg.norm(P[pi] - self.centers[oi], axis=1) - self.radii[oi])

    def powers(self, P, pi, oi) -> np.ndarray:
        v = P[pi] - self.centers[oi]
        return np.einsum("ij,ij->i", v, v) - self.radii[oi] ** 2


class Circles3D:
    kind = "circle3"

    def __init__(self, centers, radii, axes):
        self.centers = _as_points(centers, 3)
        n = len(self.centers)
        self.radii = np.broadcast_to(np.asarray(radii, dtype=float), (n,)).copy()
        self.axes = _unit_rows(_as_points(axes, 3)) if n else np.zeros((0, 3))
        if np.any(self.radii <= 0):
            raise ParameterError("circle radius must be positive")

    def __len__(self):
        return len(self.centers)

    def subset(self, idx) -> "Circles3D":
        return Circles3D(self.centers[idx], self.radii[idx], self.axes[idx])

    def distances(self, P, pi, oi) -> np.ndarray:
        v = P[pi] - self.centers[oi]
        n = self.axes[oi]
        h = np.einsum("ij,ij->i", v, n)
        rho = np.linalg.norm(v - h[:, None] * n, axis=1)
        return np.hypot(rho - self.radii[oi], h)


class Spheres:
    """Congruent spheres (or circles in the plane) of radius ``r`` about ``centers``."""

    kind = "sphere"

    def __init__(self, centers, radius: float):
        C = np.asarray(centers, dtype=float)
        dim = C.shape[1] if C.ndim == 2 else 3
        self.centers = _as_points(C, dim)
        self.radius = float(radius)
        if self.radius <= 0:
            raise ParameterError("radius must be positive")

    def __len__(self):
        return len(self.centers)

    def subset(self, idx) -> "Spheres":
        return Spheres(self.centers[idx], self.radius)

    def distances(self, P, pi, oi) -> np.ndarray:
        return np.abs(np.linalg.norm(P[pi] - self.centers[oi], axis=1) - self.radius)


# ---------------------------------------------------------------------------
# rotations and normalizations
# ---------------------------------------------------------------------------


def rotation_2d(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def rotation_to(u, target=(0.0, 0.0, 1.0)) -> np.ndarray:
    """Minimal rotation matrix R with R @ u == target (both normalized)."""
    u = np.asarray(u, dtype=float)
    u = u / np.linalg.norm(u)
    t = np.asarray(target, dtype=float)
    t = t / np.linalg.norm(t)
    v = np.cross(u, t)
    s = np.linalg.norm(v)
    c = float(u @ t)
    if s < 1e-12:
        if c > 0:
            return np.eye(3)
        # half turn about any axis orthogonal to u
        a = np.array([1.0, 0.0, 0.0]) if abs(u[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        k = np.cross(u, a)
        k /= np.linalg.norm(k)
        return 2.0 * np.outer(k, k) - np.eye(3)
    K = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return np.eye(3) + K + K @ K * ((1.0 - c) / (s * s))


def rotations_from_z(n: np.ndarray) -> np.ndarray:
    """Stack of minimal rotations taking +z to each row of ``n`` (n_z > -1)."""
    n = np.asarray(n, dtype=float).reshape(-1, 3)
    x, y, z = n[:, 0], n[:, 1], n[:, 2]
    k = 1.0 / (1.0 + z)
    R = np.empty((len(n), 3, 3))
    R[:, 0, 0] = 1.0 - k * x * x
    R[:, 0, 1] = -k * x * y
    R[:, 0, 2] = x
    R[:, 1, 0] = -k * x * y
    R[:, 1, 1] = 1.0 - k * y * y
    R[:, 1, 2] = y
    R[:, 2, 0] = -x
    R[:, 2, 1] = -y
    R[:, 2, 2] = z
    return R


def frames_to_z(U: np.ndarray) -> np.ndarray:
    """Stack of rotations R_k (rows e1, e2, u_k) so that R_k @ u_k = +z."""
    U = np.asarray(U, dtype=float).reshape(-1, 3)
    ref = np.where(np.abs(U[:, :1]) < 0.9, [[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]])
    e1 = np.cross(U, ref)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(U, e1)
    return np.stack([e1, e2, U], axis=1)


@dataclass
class SlopeClass:
    """One rotated subproblem of the planar point-line problem."""

    name: str
    angle: float
    rotation: np.ndarray
    indices: np.ndarray
    slopes: np.ndarray
    intercepts: np.ndarray

    def rotate(self, P) -> np.ndarray:
        return np.asarray(P, dtype=float) @ self.rotation.T

    def unrotate(self, P) -> np.ndarray:
        return np.asarray(P, dtype=float) @ self.rotation


def normalize_slope_classes_2d(lines: Lines2D) -> list[SlopeClass]:
    """Split lines into two classes and rotate each so every slope is in [-1, 1].

    Lines with nonnegative slope (and vertical lines) are rotated by -45 degrees,
    lines with negative slope by +45 degrees. A slope ``a`` becomes
    ``(a-1)/(a+1)`` or ``(a+1)/(1-a)`` respectively.
    """
    D = lines.directions
    positive = D[:, 1] >= 0  # dx >= 0 by convention, so this is slope >= 0 or vertical
    out = []
    for name, mask, angle in (("positive", positive, -math.pi / 4), ("negative", ~positive, math.pi / 4)):
        idx = np.flatnonzero(mask)
        R = rotation_2d(angle)
        sub = lines.subset(idx).transformed(R)
        c, d = sub.slope_intercept() if len(idx) else (np.zeros(0), np.zeros(0))
        out.append(SlopeClass(name, angle, R, idx, np.clip(c, -1.0, 1.0), d))
    return out


def axis_direction_net() -> np.ndarray:
    """13 directions: axes, face diagonals and cube diagonals, one per antipodal pair."""
    dirs = [(1, 0, 0), (0, 1, 0), (0, 0, 1),
            (1, 1, 0), (1, -1, 0), (1, 0, 1), (1, 0, -1), (0, 1, 1), (0, 1, -1),
            (1, 1, 1), (1, 1, -1), (1, -1, 1), (1, -1, -1)]
    U = np.array(dirs, dtype=float)
    return U / np.linalg.norm(U, axis=1, keepdims=True)


def assign_direction_classes(V, net: np.ndarray, antipodal: bool = True) -> np.ndarray:
    """Index of the net direction closest in angle to each row of ``V``."""
    V = np.asarray(V, dtype=float).reshape(-1, 3)
    dots = V @ net.T
    if antipodal:
        dots = np.abs(dots)
    return np.argmax(dots, axis=1) if len(V) else np.zeros(0, dtype=np.int64)


@dataclass
class DirectionClass:
    direction: np.ndarray
    rotation: np.ndarray
    indices: np.ndarray


def normalize_direction_classes_3d(V, net: np.ndarray | None = None,
                                   target=(0.0, 0.0, 1.0)) -> list[DirectionClass]:
    """Group unoriented directions by nearest net direction.

    Each class carries the minimal rotation taking its net direction to
    ``target``; after rotation every member is within the net covering radius
    of ``target`` (up to sign).
    """
    net = axis_direction_net() if net is None else net
    lab = assign_direction_classes(V, net)
    out = []
    for k in range(len(net)):
        idx = np.flatnonzero(lab == k)
        if len(idx):
            out.append(DirectionClass(net[k], rotation_to(net[k], target), idx))
    return out


def net_covering_radius(net: np.ndarray, samples: np.ndarray, antipodal: bool = True) -> float:
    """Largest angle from a sample direction to its nearest net direction."""
    dots = samples @ net.T
    if antipodal:
        dots = np.abs(dots)
    return float(np.arccos(np.clip(dots.max(axis=1), -1.0, 1.0)).max())


@dataclass
class BandNet:
    """Latitude-band direction net with a guaranteed covering radius."""

    directions: np.ndarray
    covering_radius: float
    band_edges: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)


def _band_azimuth_count(t0: float, t1: float, psi: float) -> int:
    """Smallest azimuth count K whose cells have every corner within ``psi``."""
    tm = 0.5 * (t0 + t1)
    cpsi = math.cos(psi)

    def ok(K):
        half = math.pi / K
        return all(math.cos(tm) * math.cos(tc) + math.sin(tm) * math.sin(tc) * math.cos(half) >= cpsi
                   for tc in (t0, t1))

    lo, hi = 1, 2
    while not ok(hi):
        lo, hi = hi, hi * 2
        if hi > 1 << 26:
            raise ParameterError("band too tall for the requested covering radius")
    if ok(lo):
        return lo
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def band_direction_net(psi: float, hemisphere: bool = False) -> BandNet:
    """Directions such that every unit vector is within ``psi`` of one of them.

    Polar caps of angular radius ``psi`` get one direction each. The rest of the
    sphere is cut into latitude bands of angular height just under
    ``sqrt(2) psi``; each band gets the smallest number of equally spaced
    azimuths for which every lat-long cell has its corners within ``psi`` of the
    cell centre (spherical law of cosines), which bounds the whole cell.

    With ``hemisphere`` the net is meant for unoriented directions: azimuth
    counts are made even and one direction of each antipodal pair is kept.
    """
    if not (0 < psi < math.pi / 4):
        raise ParameterError("psi must be in (0, pi/4)")
    Bi = max(1, math.ceil((math.pi - 2 * psi) / (math.sqrt(2.0) * psi * 0.999)))
    edges = np.concatenate([[0.0], np.linspace(psi, math.pi - psi, Bi + 1), [math.pi]])
    dirs, counts = [(0.0, 0.0, 1.0)], [1]
    for b in range(1, len(edges) - 2):
        t0, t1 = edges[b], edges[b + 1]
        K = _band_azimuth_count(t0, t1, psi)
        if hemisphere and K % 2:
            K += 1
        tm = 0.5 * (t0 + t1)
        ph = (np.arange(K) + 0.5) * (2 * math.pi / K)
        dirs.extend(zip(math.sin(tm) * np.cos(ph), math.sin(tm) * np.sin(ph), np.full(K, math.cos(tm))))
        counts.append(K)
    dirs.append((0.0, 0.0, -1.0))
    counts.append(1)
    D = np.array(dirs, dtype=float)
    if hemisphere:
        up = D[:, 2] > 1e-12
        eq = np.abs(D[:, 2]) <= 1e-12
        half = (D[:, 1] > 1e-12) | ((np.abs(D[:, 1]) <= 1e-12) & (D[:, 0] > 0))
        D = D[up | (eq & half)]
    return BandNet(D, psi, edges, np.array(counts))


# ---------------------------------------------------------------------------
# working frame
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WorkingFrame:
    """Affine map x -> scale * x + shift (isotropic). ε scales by ``scale``."""

    scale: float = 0.5
    shift: float = 0.5

    def forward(self, X) -> np.ndarray:
        return self.scale * np.asarray(X, dtype=float) + self.shift

    def backward(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.shift) / self.scale

    def eps(self, eps: float) -> float:
        return self.scale * eps


UNIT_TO_SQUARE = WorkingFrame(0.5, 0.5)


def check_eps(eps: float, upper: float = 0.5) -> float:
    eps = float(eps)
    if not (0.0 < eps <= upper) or not math.isfinite(eps):
        raise ParameterError(f"eps must lie in (0, {upper}], got {eps}")
    return eps
