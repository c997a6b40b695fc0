"""Uniform grids, closed-cell crossing enumeration and sort-based bucket joins.

Crossing semantics are closed: a cell is crossed when its closed box meets the
object. Index ranges are computed from real intervals with a small relative
tolerance so that values landing on a cell boundary within rounding error are
attributed to both adjacent cells.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import OutOfDomainError, ParameterError

#: tolerance in cell units applied to closed index ranges
CELL_TOL = 1e-9


@dataclass(frozen=True)
class UniformGrid:
    origin: np.ndarray
    extents: np.ndarray
    counts: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.counts)

    @property
    def upper(self) -> np.ndarray:
        return self.origin + self.extents * self.counts

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    def locate(self, pts, tol: float = 1e-9) -> np.ndarray:
        """Half-open cell index of each point; points at the upper boundary clamp."""
        P = np.atleast_2d(np.asarray(pts, dtype=float))
        t = (P - self.origin) / self.extents
        if np.any(t < -tol) or np.any(t > self.counts + tol):
            raise OutOfDomainError("point outside grid domain")
        k = np.floor(t).astype(np.int64)
        return np.clip(k, 0, self.counts - 1)

    def cell_center(self, key) -> np.ndarray:
        return self.origin + (np.asarray(key, dtype=float) + 0.5) * self.extents

    def cell_box(self, key) -> tuple[np.ndarray, np.ndarray]:
        lo = self.origin + np.asarray(key, dtype=float) * self.extents
        return lo, lo + self.extents

    def contains(self, keys) -> np.ndarray:
        K = np.atleast_2d(keys)
        return np.all((K >= 0) & (K < self.counts), axis=1)

    def axis_range(self, axis: int, a, b, clip: bool = True):
        """Closed index range of cells along ``axis`` meeting [a, b]."""
        lo, hi = closed_index_range(a, b, self.origin[axis], self.extents[axis])
        if clip:
            lo = np.maximum(lo, 0)
            hi = np.minimum(hi, self.counts[axis] - 1)
        return lo, hi


def build_grid(lo, hi, extents) -> UniformGrid:
    """Grid covering the box [lo, hi] with the given cell extents (ceil counts)."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    ext = np.broadcast_to(np.asarray(extents, dtype=float), lo.shape).copy()
    if np.any(ext <= 0):
        raise ParameterError("cell extents must be positive")
    span = np.maximum(hi - lo, 0.0)
    counts = np.maximum(np.ceil(span / ext - 1e-12), 1).astype(np.int64)
    return UniformGrid(lo, ext, counts)


def closed_index_range(a, b, origin, h, tol: float = CELL_TOL):
    """Indices k with [origin + k h, origin + (k+1) h] meeting [a, b] (closed)."""
    ta = (np.asarray(a, dtype=float) - origin) / h
    tb = (np.asarray(b, dtype=float) - origin) / h
    lo = np.ceil(ta - tol).astype(np.int64) - 1
    hi = np.floor(tb + tol).astype(np.int64)
    return lo, hi


def expand_ranges(lo, hi):
    """Expand integer ranges [lo_i, hi_i] into (owner, value) arrays.

    Empty ranges (hi < lo) contribute nothing.
    """
    lo = np.asarray(lo, dtype=np.int64).ravel()
    hi = np.asarray(hi, dtype=np.int64).ravel()
    cnt = np.maximum(hi - lo + 1, 0)
    total = int(cnt.sum())
    owner = np.repeat(np.arange(len(lo)), cnt)
    if total == 0:
        return owner, np.zeros(0, dtype=np.int64)
    start = np.cumsum(cnt) - cnt
    val = np.arange(total, dtype=np.int64) - np.repeat(start, cnt) + np.repeat(lo, cnt)
    return owner, val


# ---------------------------------------------------------------------------
# crossing enumeration
# ---------------------------------------------------------------------------


def line_crossings_2d(c, d, grid: UniformGrid):
    """Cells of a 2D grid crossed by lines ``y = c x + d`` (|c| <= 1 expected).

    Returns ``(owner, keys)`` with keys of shape (k, 2).
    """
    c = np.asarray(c, dtype=float).ravel()
    d = np.asarray(d, dtype=float).ravel()
    nx = int(grid.counts[0])
    x0, hx = grid.origin[0], grid.extents[0]
    own = np.repeat(np.arange(len(c)), nx)
    col = np.tile(np.arange(nx, dtype=np.int64), len(c))
    xa = x0 + col * hx
    xb = xa + hx
    ya = c[own] * xa + d[own]
    yb = c[own] * xb + d[own]
    lo, hi = grid.axis_range(1, np.minimum(ya, yb), np.maximum(ya, yb))
    o2, row = expand_ranges(lo, hi)
    return own[o2], np.column_stack([col[o2], row])


def cells_crossed_by_line_2d(line, grid: UniformGrid) -> list[tuple[int, int]]:
    """Cells whose closed square meets ``line`` (a ``Line2``)."""
    if line.is_vertical:
        lo, hi = grid.axis_range(0, line.x0, line.x0)
        cols = np.arange(lo, hi + 1)
        return [(int(i), int(j)) for i in cols for j in range(grid.counts[1])]
    if abs(line.a) > 1:
        # transpose: x = y / a - b / a
        gt = UniformGrid(grid.origin[::-1].copy(), grid.extents[::-1].copy(), grid.counts[::-1].copy())
        _, K = line_crossings_2d([1.0 / line.a], [-line.b / line.a], gt)
        return sorted((int(k[1]), int(k[0])) for k in K)
    _, K = line_crossings_2d([line.a], [line.b], grid)
    return [tuple(map(int, k)) for k in K]


def plane_crossings_3d(a, b, c, grid: UniformGrid, pad: int = 0):
    """Cells of a 3D grid crossed by planes ``z = a x + b y + c``.

    ``pad`` widens each column's z-range by that many cells (then clips).
    """
    a, b, c = (np.asarray(v, dtype=float).ravel() for v in (a, b, c))
    nx, ny = int(grid.counts[0]), int(grid.counts[1])
    ncol = nx * ny
    own = np.repeat(np.arange(len(a)), ncol)
    cx = np.tile(np.repeat(np.arange(nx, dtype=np.int64), ny), len(a))
    cy = np.tile(np.tile(np.arange(ny, dtype=np.int64), nx), len(a))
    xa = grid.origin[0] + cx * grid.extents[0]
    ya = grid.origin[1] + cy * grid.extents[1]
    A, B, C = a[own], b[own], c[own]
    z0 = A * xa + B * ya + C
    dzx = A * grid.extents[0]
    dzy = B * grid.extents[1]
    zmin = z0 + np.minimum(dzx, 0) + np.minimum(dzy, 0)
    zmax = z0 + np.maximum(dzx, 0) + np.maximum(dzy, 0)
    lo, hi = grid.axis_range(2, zmin, zmax, clip=False)
    lo = np.maximum(lo - pad, 0)
    hi = np.minimum(hi + pad, grid.counts[2] - 1)
    o2, cz = expand_ranges(lo, hi)
    return own[o2], np.column_stack([cx[o2], cy[o2], cz])


def cells_crossed_by_plane_3d(plane, grid: UniformGrid) -> list[tuple[int, int, int]]:
    _, K = plane_crossings_3d([plane.a], [plane.b], [plane.c], grid)
    return [tuple(map(int, k)) for k in K]


def circle_crossings_2d(centers, radii, grid: UniformGrid):
    """Cells of a 2D grid whose closed square meets the circles (as curves)."""
    C = np.asarray(centers, dtype=float).reshape(-1, 2)
    r = np.broadcast_to(np.asarray(radii, dtype=float), (len(C),))
    lo, hi = grid.axis_range(0, C[:, 0] - r, C[:, 0] + r)
    own, col = expand_ranges(lo, hi)
    x0, hx = grid.origin[0], grid.extents[0]
    xa = np.maximum(x0 + col * hx, C[own, 0] - r[own]) - C[own, 0]
    xb = np.minimum(x0 + (col + 1) * hx, C[own, 0] + r[own]) - C[own, 0]
    dmax = np.maximum(np.abs(xa), np.abs(xb))
    dmin = np.where((xa <= 0) & (xb >= 0), 0.0, np.minimum(np.abs(xa), np.abs(xb)))
    rr = r[own] ** 2
    s_in = np.sqrt(np.maximum(rr - dmax**2, 0.0))
    s_out = np.sqrt(np.maximum(rr - dmin**2, 0.0))
    cy = C[own, 1]
    lo1, hi1 = grid.axis_range(1, cy + s_in, cy + s_out)
    lo2, hi2 = grid.axis_range(1, cy - s_out, cy - s_in)
    # merge the two arcs' row ranges into one list and dedupe
    o1, r1 = expand_ranges(lo1, hi1)
    o2, r2 = expand_ranges(lo2, hi2)
    ent = np.concatenate([o1, o2])
    row = np.concatenate([r1, r2])
    keys = np.column_stack([ent, row])
    keys = np.unique(keys, axis=0) if len(keys) else keys.reshape(0, 2)
    ent, row = keys[:, 0], keys[:, 1]
    return own[ent], np.column_stack([col[ent], row])


def cells_crossed_by_circle_2d(circle, grid: UniformGrid) -> list[tuple[int, int]]:
    _, K = circle_crossings_2d([circle.center], [circle.radius], grid)
    return [tuple(map(int, k)) for k in K]


@dataclass(frozen=True)
class PolarGrid:
    """Grid over (rho, theta) about ``center``: rho0 + i*drho, theta0 + j*dtheta."""

    center: np.ndarray
    rho0: float
    drho: float
    nrho: int
    dtheta: float
    ntheta: int
    theta0: float = 0.0

    def locate(self, pts) -> np.ndarray:
        """Polar cell of each point (rho clipped into range)."""
        P = np.atleast_2d(np.asarray(pts, dtype=float)) - self.center
        rho = np.hypot(P[:, 0], P[:, 1])
        th = np.mod(np.arctan2(P[:, 1], P[:, 0]) - self.theta0, 2 * math.pi)
        i = np.clip(np.floor((rho - self.rho0) / self.drho), 0, self.nrho - 1).astype(np.int64)
        j = np.clip(np.floor(th / self.dtheta), 0, self.ntheta - 1).astype(np.int64)
        return np.column_stack([i, j])


def dual_circle_polar_crossings(points, r: float, pg: PolarGrid, pad: int = 0):
    """Polar cells (i, j) met by the circles of radius ``r`` about ``points``.

    Each point must lie strictly inside its circle (|p - center| < r), so the
    circle is the graph rho = f(theta) = p.e + sqrt(r^2 - (p x e)^2) over theta.
    ``pad`` widens each column's row range by that many rows before clipping.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float)) - pg.center
    own = np.repeat(np.arange(len(P)), pg.ntheta)
    col = np.tile(np.arange(pg.ntheta, dtype=np.int64), len(P))
    t0 = pg.theta0 + col * pg.dtheta
    t1 = t0 + pg.dtheta
    px, py = P[own, 0], P[own, 1]

    def f(t):
        ex, ey = np.cos(t), np.sin(t)
        cr = px * ey - py * ex
        return px * ex + py * ey + np.sqrt(np.maximum(r * r - cr * cr, 0.0))

    fa, fb = f(t0), f(t1)
    lo_v = np.minimum(fa, fb)
    hi_v = np.maximum(fa, fb)
    norm = np.hypot(px, py)
    ang = np.arctan2(py, px)
    # extremes r + |p| at angle(p) and r - |p| at angle(p) + pi
    inside_max = _angle_in(ang, t0, t1)
    inside_min = _angle_in(ang + math.pi, t0, t1)
    hi_v = np.where(inside_max, r + norm, hi_v)
    lo_v = np.where(inside_min, r - norm, lo_v)
    lo, hi = closed_index_range(lo_v, hi_v, pg.rho0, pg.drho)
    lo = np.maximum(lo - pad, 0)
    hi = np.minimum(hi + pad, pg.nrho - 1)
    o2, rows = expand_ranges(lo, hi)
    return own[o2], np.column_stack([rows, col[o2]])


def _angle_in(a, t0, t1):
    return np.mod(a - t0, 2 * math.pi) <= (t1 - t0)


def cells_crossed_by_dual_circle_polar(p, r: float, pg: PolarGrid) -> list[tuple[int, int]]:
    _, K = dual_circle_polar_crossings([p], r, pg)
    return [tuple(map(int, k)) for k in K]


@dataclass(frozen=True)
class Grid4D:
    """Product grid over (a, b, c, d): the (a, c) slope grid times the (b, d) intercept grid."""

    origin: np.ndarray
    extents: np.ndarray
    counts: np.ndarray

    def locate(self, pts) -> np.ndarray:
        P = np.atleast_2d(np.asarray(pts, dtype=float))
        k = np.floor((P - self.origin) / self.extents).astype(np.int64)
        return np.clip(k, 0, self.counts - 1)


def dual_plane_4d_crossings(xi, eta, zeta, g: Grid4D, pad: int = 0, margin: int | None = None):
    """Cells of ``g`` met by the dual 2-planes {a xi + b = eta, c xi + d = zeta}.

    For every (a, c) cell, b ranges over eta - a xi for a in the cell, and d
    likewise; the crossing cells are the product of those two row ranges.
    ``pad`` widens each row range by that many cells; rows are clipped to
    [-margin, count - 1 + margin] (``margin`` defaults to ``pad``), so virtual
    rows just outside the box can be kept. Returns ``(owner, keys)`` with keys
    (ia, ib, ic, id).
    """
    margin = pad if margin is None else margin
    xi, eta, zeta = (np.asarray(v, dtype=float).ravel() for v in (xi, eta, zeta))
    na, nb, nc, nd = (int(v) for v in g.counts)
    n = len(xi)
    ia = np.arange(na)
    a0 = g.origin[0] + ia * g.extents[0]
    a1 = a0 + g.extents[0]
    # b-range per (point, ia)
    blo = eta[:, None] - np.maximum(a0 * xi[:, None], a1 * xi[:, None])
    bhi = eta[:, None] - np.minimum(a0 * xi[:, None], a1 * xi[:, None])
    jb0, jb1 = closed_index_range(blo, bhi, g.origin[1], g.extents[1])
    jb0 = np.maximum(jb0 - pad, -margin)
    jb1 = np.minimum(jb1 + pad, nb - 1 + margin)
    ic = np.arange(nc)
    c0 = g.origin[2] + ic * g.extents[2]
    c1 = c0 + g.extents[2]
    dlo = zeta[:, None] - np.maximum(c0 * xi[:, None], c1 * xi[:, None])
    dhi = zeta[:, None] - np.minimum(c0 * xi[:, None], c1 * xi[:, None])
    jd0, jd1 = closed_index_range(dlo, dhi, g.origin[3], g.extents[3])
    jd0 = np.maximum(jd0 - pad, -margin)
    jd1 = np.minimum(jd1 + pad, nd - 1 + margin)
    ob, vb = expand_ranges(jb0, jb1)  # owner index = point*na + ia
    od, vd = expand_ranges(jd0, jd1)  # owner index = point*nc + ic
    pb, ab = np.divmod(ob, na)
    pd, cd = np.divmod(od, nc)
    # product per point of the (ia, jb) list with the (ic, jd) list
    i1, i2 = product_by_group(pb, pd, n)
    keys = np.column_stack([ab[i1], vb[i1], cd[i2], vd[i2]])
    return pb[i1], keys


def product_by_group(ga, gb, ngroups: int):
    """All index pairs (i, j) with ga[i] == gb[j]; ga and gb must be sorted."""
    cb = np.bincount(gb, minlength=ngroups)
    sb = np.cumsum(cb) - cb
    # for each i in a, repeat cb[ga[i]] times
    rep = cb[ga]
    i1 = np.repeat(np.arange(len(ga)), rep)
    start = np.cumsum(rep) - rep
    off = np.arange(len(i1)) - np.repeat(start, rep)
    i2 = sb[ga[i1]] + off
    return i1, i2


def cells_crossed_by_dual_plane_4d(p, g: Grid4D) -> list[tuple[int, int, int, int]]:
    """Cells of ``g`` met by the dual plane of the point ``p = (xi, eta, zeta)``."""
    _, K = dual_plane_4d_crossings([p[0]], [p[1]], [p[2]], g)
    ok = np.all((K >= 0) & (K < g.counts), axis=1)
    return [tuple(map(int, k)) for k in K[ok]]


def neighbors(cell: Sequence[int], axes: Iterable[int], grid=None, include_self: bool = False):
    """Cells differing from ``cell`` by at most one along each of ``axes``.

    Only existing cells are returned when ``grid`` is given.
    """
    cell = tuple(int(v) for v in cell)
    axes = list(axes)
    out = []
    for off in np.ndindex(*(3,) * len(axes)):
        k = list(cell)
        for ax, o in zip(axes, off):
            k[ax] += o - 1
        k = tuple(k)
        if k == cell and not include_self:
            continue
        if grid is not None and not all(0 <= k[i] < grid.counts[i] for i in range(len(k))):
            continue
        out.append(k)
    return out


class BucketMap:
    """Sparse mapping from cell keys to lists of element indices."""

    def __init__(self):
        self._d: dict[tuple, list[int]] = {}

    def add(self, key, idx: int):
        self._d.setdefault(tuple(int(v) for v in key), []).append(int(idx))

    def add_many(self, keys, idx):
        for k, i in zip(np.asarray(keys).tolist(), np.asarray(idx).tolist()):
            self._d.setdefault(tuple(k), []).append(i)

    def get(self, key) -> list[int]:
        return self._d.get(tuple(int(v) for v in key), [])

    def __len__(self):
        return len(self._d)

    def __iter__(self):
        return iter(self._d.items())

    def total(self) -> int:
        return sum(len(v) for v in self._d.values())


# ---------------------------------------------------------------------------
# key encoding and joins
# ---------------------------------------------------------------------------


def encode_keys(*blocks: np.ndarray) -> list[np.ndarray]:
    """Encode integer key rows of several arrays to consistent int64 codes.

    All arrays must have the same number of columns. Codes are equal iff rows
    are equal. When the key box is small enough, codes are mixed-radix offsets
    in [0, volume of the key box).
    """
    blocks = [np.asarray(b, dtype=np.int64) for b in blocks]
    ncol = max(b.shape[1] if b.ndim == 2 else 1 for b in blocks)
    blocks = [b.reshape(len(b), ncol) for b in blocks]
    nonempty = [b for b in blocks if len(b)]
    if not nonempty:
        return [np.zeros(0, dtype=np.int64) for _ in blocks]
    lo = [min(int(b[:, k].min()) for b in nonempty) for k in range(ncol)]
    hi = [max(int(b[:, k].max()) for b in nonempty) for k in range(ncol)]
    span = [h - l + 1 for l, h in zip(lo, hi)]
    if math.prod(span) < 2**62:
        out = []
        for b in blocks:
            code = np.zeros(len(b), dtype=np.int64)
            for k in range(ncol):
                code *= span[k]
                code += b[:, k] - lo[k]
            out.append(code)
        return out
    allk = np.concatenate(blocks)
    _, inv = np.unique(allk, axis=0, return_inverse=True)
    inv = inv.ravel().astype(np.int64)
    out, s = [], 0
    for b in blocks:
        out.append(inv[s:s + len(b)])
        s += len(b)
    return out


def join_codes(ca: np.ndarray, cb: np.ndarray):
    """All index pairs (i, j) with ca[i] == cb[j] (in no particular order)."""
    if len(ca) == 0 or len(cb) == 0:
        z = np.zeros(0, dtype=np.int64)
        return z, z
    if len(cb) > len(ca):
        # index the smaller side
        jb, ia = _join_indexed(cb, ca)
        return ia, jb
    return _join_indexed(ca, cb)


def _join_indexed(ca: np.ndarray, cb: np.ndarray):
    """Join probing ``ca`` against an index built on ``cb``."""
    lo = min(int(ca.min()), int(cb.min()))
    top = max(int(ca.max()), int(cb.max())) - lo + 1
    ob = np.argsort(cb, kind="stable")
    if lo >= 0 and top <= max(1 << 22, 4 * (len(ca) + len(cb))):
        # dense table of bucket starts and sizes
        counts = np.bincount(cb - lo, minlength=top)
        starts = np.cumsum(counts) - counts
        cnt = counts[ca - lo]
        left = starts[ca - lo]
    else:
        sb = cb[ob]
        first = np.flatnonzero(np.r_[True, sb[1:] != sb[:-1]])
        ucodes = sb[first]
        ucount = np.diff(np.r_[first, len(sb)])
        pos = np.minimum(np.searchsorted(ucodes, ca), len(ucodes) - 1)
        found = ucodes[pos] == ca
        left = first[pos]
        cnt = np.where(found, ucount[pos], 0)
    hit = np.flatnonzero(cnt)
    cnt, left = cnt[hit], left[hit]
    ia = np.repeat(hit, cnt)
    start = np.cumsum(cnt) - cnt
    off = np.arange(len(ia)) - np.repeat(start, cnt)
    jb = ob[np.repeat(left, cnt) + off]
    return ia, jb


def join_keys(ka: np.ndarray, kb: np.ndarray):
    """All index pairs (i, j) with equal key rows ka[i] == kb[j]."""
    ca, cb = encode_keys(ka, kb)
    return join_codes(ca, cb)


def unique_pairs(a: np.ndarray, b: np.ndarray, return_counts: bool = False):
    """Distinct (a, b) pairs sorted lexicographically (optionally with multiplicity)."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if len(a) == 0:
        z = np.zeros(0, dtype=np.int64)
        return (z, z, z) if return_counts else (z, z)
    nb = int(b.max()) + 1
    code = a * nb + b
    u, cnt = np.unique(code, return_counts=True)
    ua, ub = np.divmod(u, nb)
    return (ua, ub, cnt) if return_counts else (ua, ub)
