"""Random instance generation and the plain-text instance formats.

Points are drawn uniformly from the axis-parallel square (cube) inscribed in
the unit disk (ball), so every algorithm's unit-domain precondition holds.

Objects file: a header line ``<kind> [key=value ...]`` followed by one object
per line:

==========  ===============================  =====================
kind        row                              header keys
==========  ===============================  =====================
line2d      ``a,b`` (y = a x + b) or ``V,x0``
plane3      ``a,b,c`` (z = a x + b y + c)
line3       ``a,b,c,d`` (y = a x + b, z = c x + d)
circle2     ``cx,cy,r``
circle3     ``cx,cy,cz,r,ax,ay,az``
sphere2     ``cx,cy``                        ``r``
sphere3     ``cx,cy,cz``                     ``r``
==========  ===============================  =====================
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InstanceFormatError, ParameterError
from .geom import Circles2D, Circles3D, Lines2D, Lines3D, Planes3D, Spheres, Triangle

KINDS = ("line2d", "plane3", "line3", "circle2", "congruent2", "congruent3", "circle3", "triangle")
DIM = {"line2d": 2, "circle2": 2, "congruent2": 2, "plane3": 3, "line3": 3, "congruent3": 3,
       "circle3": 3, "triangle": 3}
OBJECT_TAGS = {"line2d": "line2d", "plane3": "plane3", "line3": "line3", "circle2": "circle2",
               "circle3": "circle3", "congruent2": "sphere2", "congruent3": "sphere3"}
DEFAULTS = {"r": {"congruent2": 0.3, "congruent3": 0.3, "circle3": 0.25},
            "r1": 0.2, "r2": 0.6, "tri": (0.5, 0.4, 0.3)}


@dataclass
class Instance:
    """Points plus objects of one problem kind. Triangle instances have no objects."""

    kind: str
    points: np.ndarray
    objects: object = None
    params: dict = field(default_factory=dict)
    seed: int | None = None

    @property
    def m(self) -> int:
        return len(self.points)

    @property
    def n(self) -> int:
        """Number of objects (planted copies for triangle instances)."""
        if self.objects is None:
            return int(self.params.get("planted", 0))
        return len(self.objects)


def _check_kind(kind: str):
    if kind not in KINDS:
        raise ParameterError(f"unknown kind {kind!r}; choose from {', '.join(KINDS)}")


def uniform_points(rng: np.random.Generator, k: int, dim: int) -> np.ndarray:
    """Uniform points in the cube of half side 1/sqrt(dim) (inscribed in the unit ball)."""
    s = 1.0 / math.sqrt(dim)
    return rng.uniform(-s, s, size=(k, dim))


def random_unit_vectors(rng: np.random.Generator, k: int, dim: int = 3) -> np.ndarray:
    V = rng.normal(size=(k, dim))
    return V / np.linalg.norm(V, axis=1, keepdims=True)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    Q, R = np.linalg.qr(rng.normal(size=(3, 3)))
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] *= -1
    return Q


def planted_triangles(rng: np.random.Generator, tri: Triangle, k: int, jitter: float = 0.0) -> np.ndarray:
    """``k`` rigid copies of ``tri`` as consecutive (a, b, c) rows, vertices jittered.

    Each copy is centred within 0.2 of the origin (per axis) so it stays in the
    unit ball. Each vertex moves by at most ``jitter``, so every side changes by
    at most 2 * jitter.
    """
    ref = np.array([[0.0, 0.0, 0.0], [tri.u, 0.0, 0.0], [tri.z, tri.h, 0.0]])
    out = []
    for _ in range(k):
        X = ref @ random_rotation(rng).T
        X = X - X.mean(axis=0) + rng.uniform(-0.2, 0.2, 3)
        if jitter > 0:
            X = X + random_unit_vectors(rng, 3) * rng.uniform(0, jitter, (3, 1))
        out.append(X)
    return np.concatenate(out) if out else np.zeros((0, 3))


def gen_random_instance(kind: str, m: int, n: int, seed: int, params: dict | None = None,
                        pair_sampling: bool = False) -> Instance:
    """Deterministic random instance for ``(kind, m, n, seed, params)``.

    Lines pass through two uniform points (planes through three), so they
    cross the sampling square. With ``pair_sampling`` the defining points are
    drawn from the point set itself. Circles get uniform centres; planar
    circle radii are uniform in [r1, r2]; spatial circles get uniform axes.
    For ``triangle``, ``m`` random points are followed by ``n`` planted
    copies of the reference triangle (3 n points), jittered by ``jitter``.
    """
    _check_kind(kind)
    if seed is None:
        raise ParameterError("random instances need a seed")
    if m < 0 or n < 0:
        raise ParameterError("sizes must be nonnegative")
    params = dict(params or {})
    rng = np.random.default_rng(seed)
    d = DIM[kind]
    P = uniform_points(rng, m, d)

    def anchors(k):
        if pair_sampling:
            if m < 2:
                raise ParameterError("pair sampling needs at least two points")
            return P[rng.integers(0, m, size=k)]
        return uniform_points(rng, k, d)

    def distinct_anchor_pairs(k):
        A = anchors(k)
        B = anchors(k)
        same = np.all(A == B, axis=1)
        while np.any(same):
            B[same] = anchors(int(same.sum()))
            same = np.all(A == B, axis=1)
        return A, B

    if kind == "line2d":
        obj = Lines2D.through_points(*distinct_anchor_pairs(n))
    elif kind == "line3":
        obj = Lines3D.through_points(*distinct_anchor_pairs(n))
    elif kind == "plane3":
        A, B = distinct_anchor_pairs(n)
        C = anchors(n)
        N = np.cross(B - A, C - A)
        bad = np.linalg.norm(N, axis=1) < 1e-12
        N[bad] = random_unit_vectors(rng, int(bad.sum()))
        obj = Planes3D(N, np.einsum("ij,ij->i", N, A))
    elif kind == "circle2":
        r1 = float(params.setdefault("r1", DEFAULTS["r1"]))
        r2 = float(params.setdefault("r2", DEFAULTS["r2"]))
        obj = Circles2D(uniform_points(rng, n, 2), rng.uniform(r1, r2, n))
    elif kind in ("congruent2", "congruent3"):
        r = float(params.setdefault("r", DEFAULTS["r"][kind]))
        obj = Spheres(uniform_points(rng, n, d), r)
    elif kind == "circle3":
        r = float(params.setdefault("r", DEFAULTS["r"][kind]))
        obj = Circles3D(uniform_points(rng, n, 3), r, random_unit_vectors(rng, n))
    else:
        tri = Triangle(*params.setdefault("tri", DEFAULTS["tri"]))
        jitter = float(params.setdefault("jitter", 0.0))
        params["planted"] = n
        P = np.concatenate([P, planted_triangles(rng, tri, n, jitter)])
        obj = None
    return Instance(kind, P, obj, params, seed)


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AffineMap:
    """x -> scale * (x - centre). Identity when scale is 1 and centre 0."""

    scale: float = 1.0
    centre: tuple = ()

    @property
    def is_identity(self) -> bool:
        return self.scale == 1.0 and not any(self.centre)

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if not self.centre:
            return self.scale * X
        return self.scale * (X - np.asarray(self.centre))


def _fmt(x: float) -> str:
    return repr(float(x))


def _parse_row(text: str, lineno: int, width: int | tuple) -> list[float]:
    parts = [s.strip() for s in text.split(",")]
    widths = (width,) if isinstance(width, int) else width
    if len(parts) not in widths:
        raise InstanceFormatError(f"expected {' or '.join(map(str, widths))} values, got {len(parts)}", lineno)
    try:
        vals = [float(s) for s in parts]
    except ValueError as exc:
        raise InstanceFormatError(f"not a number: {text.strip()!r}", lineno) from exc
    if not all(math.isfinite(v) for v in vals):
        raise InstanceFormatError("non-finite value", lineno)
    return vals


def _content_lines(path):
    try:
        with open(path, encoding="utf-8") as fh:
            for i, raw in enumerate(fh, start=1):
                s = raw.strip()
                if s and not s.startswith("#"):
                    yield i, s
    except UnicodeDecodeError as exc:
        raise InstanceFormatError(f"{path}: not UTF-8 text") from exc


def read_points(path, dim: int | None = None) -> np.ndarray:
    """Points file as an array, no normalization."""
    rows = []
    for lineno, s in _content_lines(path):
        vals = _parse_row(s, lineno, (2, 3) if dim is None else dim)
        if rows and len(vals) != len(rows[0]):
            raise InstanceFormatError("mixed point dimensions", lineno)
        rows.append(vals)
    if not rows:
        return np.zeros((0, dim or 2))
    return np.array(rows, dtype=float)


def normalizing_map(P: np.ndarray) -> AffineMap:
    """Map fitting the points into the unit ball, or the identity if they already fit."""
    if not len(P) or np.max(np.linalg.norm(P, axis=1)) <= 1.0:
        return AffineMap()
    centre = 0.5 * (P.min(axis=0) + P.max(axis=0))
    rad = float(np.max(np.linalg.norm(P - centre, axis=1)))
    scale = 1.0 / rad if rad > 0 else 1.0
    return AffineMap(scale, tuple(float(c) for c in centre))


def load_points(path, dim: int | None = None, normalize: bool = True, stream=None):
    """Read a points file; returns ``(points, map)``.

    Points outside the unit ball are mapped into it by centring the bounding
    box and scaling; the map is reported on ``stream`` (stderr by default).
    """
    P = read_points(path, dim)
    amap = normalizing_map(P) if normalize else AffineMap()
    if not amap.is_identity:
        print(f"normalized {path}: x -> {amap.scale!r} * (x - {amap.centre})", file=stream or sys.stderr)
        P = amap.apply(P)
    return P, amap


def save_points(path, P) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in np.asarray(P, dtype=float):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _header(kind_tag: str, params: dict) -> str:
    extra = "".join(f" {k}={_fmt(v)}" for k, v in sorted(params.items()))
    return kind_tag + extra + "\n"


def save_objects(path, kind: str, objects) -> None:
    """Write objects in the kind-tagged format."""
    _check_kind(kind)
    if kind == "triangle":
        raise ParameterError("triangle instances have no objects file")
    tag = OBJECT_TAGS[kind]
    rows: list[list[float] | str] = []
    params = {}
    if kind == "line2d":
        for o, d in zip(objects.origins, objects.directions):
            if d[0] == 0.0:
                rows.append("V," + _fmt(o[0]))
            else:
                a = d[1] / d[0]
                rows.append([a, o[1] - a * o[0]])
    elif kind == "plane3":
        rows = np.column_stack(objects.coefficients()).tolist()
    elif kind == "line3":
        rows = np.column_stack(objects.slopes()).tolist()
    elif kind == "circle2":
        rows = np.column_stack([objects.centers, objects.radii]).tolist()
    elif kind == "circle3":
        rows = np.column_stack([objects.centers, objects.radii, objects.axes]).tolist()
    else:
        params["r"] = objects.radius
        rows = objects.centers.tolist()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_header(tag, params))
        for row in rows:
            fh.write((row if isinstance(row, str) else ",".join(_fmt(v) for v in row)) + "\n")


def _parse_header(line: str, lineno: int):
    parts = line.split()
    tag, params = parts[0], {}
    for item in parts[1:]:
        if "=" not in item:
            raise InstanceFormatError(f"bad header field {item!r}", lineno)
        k, v = item.split("=", 1)
        try:
            params[k] = float(v)
        except ValueError as exc:
            raise InstanceFormatError(f"bad header value {item!r}", lineno) from exc
    return tag, params


def load_objects(path, kind: str | None = None, amap: AffineMap | None = None):
    """Read an objects file; returns ``(kind, objects)``.

    ``kind`` (if given) must match the header. ``amap`` (from
    :func:`load_points`) is applied so objects share the points' frame.
    """
    lines = list(_content_lines(path))
    if not lines:
        raise InstanceFormatError(f"{path}: missing kind header")
    lineno, head = lines[0]
    tag, params = _parse_header(head, lineno)
    kinds = {v: k for k, v in OBJECT_TAGS.items()}
    if tag not in kinds:
        raise InstanceFormatError(f"unknown object kind {tag!r}", lineno)
    found = kinds[tag]
    if kind is not None and kind != found:
        raise InstanceFormatError(f"objects are {found!r}, expected {kind!r}", lineno)
    body = lines[1:]
    amap = amap or AffineMap()
    s = amap.scale
    ctr = np.asarray(amap.centre) if amap.centre else None

    def move(X):
        return amap.apply(X)

    if found == "line2d":
        origins, dirs = [], []
        for ln, text in body:
            if text.split(",")[0].strip().upper() == "V":
                parts = [t.strip() for t in text.split(",")]
                if len(parts) != 2:
                    raise InstanceFormatError("vertical line needs 'V,x0'", ln)
                x0 = _parse_row(parts[1], ln, 1)[0]
                origins.append((x0, 0.0))
                dirs.append((0.0, 1.0))
            else:
                a, b = _parse_row(text, ln, 2)
                origins.append((0.0, b))
                dirs.append((1.0, a))
        O = np.array(origins).reshape(-1, 2)
        return found, Lines2D(move(O), np.array(dirs).reshape(-1, 2))
    if found == "plane3":
        A = np.array([_parse_row(t, ln, 3) for ln, t in body]).reshape(-1, 3)
        planes = Planes3D.from_coeffs(A[:, 0], A[:, 1], A[:, 2])
        t = None if ctr is None else -s * ctr
        return found, planes.transformed(np.eye(3), t, s) if not amap.is_identity else planes
    if found == "line3":
        A = np.array([_parse_row(t, ln, 4) for ln, t in body]).reshape(-1, 4)
        lines3 = Lines3D.from_slopes(A[:, 0], A[:, 1], A[:, 2], A[:, 3])
        return found, Lines3D(move(lines3.origins), lines3.directions)
    if found == "circle2":
        A = np.array([_parse_row(t, ln, 3) for ln, t in body]).reshape(-1, 3)
        return found, Circles2D(move(A[:, :2]), s * A[:, 2])
    if found == "circle3":
        A = np.array([_parse_row(t, ln, 7) for ln, t in body]).reshape(-1, 7)
        return found, Circles3D(move(A[:, :3]), s * A[:, 3], A[:, 4:])
    d = 2 if found == "congruent2" else 3
    if "r" not in params:
        raise InstanceFormatError("sphere header needs r=<radius>", lineno)
    A = np.array([_parse_row(t, ln, d) for ln, t in body]).reshape(-1, d)
    return found, Spheres(move(A), s * params["r"])


def save_instance(prefix, inst: Instance) -> list[Path]:
    """Write ``prefix.points`` (and ``prefix.objects`` unless triangle)."""
    prefix = Path(prefix)
    out = [prefix.with_name(prefix.name + ".points")]
    save_points(out[0], inst.points)
    if inst.objects is not None:
        out.append(prefix.with_name(prefix.name + ".objects"))
        save_objects(out[1], inst.kind, inst.objects)
    return out
