"""Brute-force oracles and the naive epsilon-grid baselines.

The oracle distance routines below are written independently from the ones in
:mod:`approxinc.geom` (projection instead of cross products and vice versa) so
the two can be cross-checked.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import OracleBudgetError, ParameterError
from .geom import (Circles2D, Circles3D, Lines2D, Lines3D, Planes3D, Spheres, Triangle,
                   assign_direction_classes, axis_direction_net, normalize_slope_classes_2d,
                   rotation_to)
from .grid import closed_index_range
from .metrics import RunMetrics, finalize

PAIR_BUDGET = 10**7
TRIPLE_BUDGET = 3 * 10**7


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------


@dataclass
class OracleResult:
    pairs: np.ndarray
    distances: np.ndarray
    count: int
    elapsed: float

    def as_set(self) -> set:
        return set(map(tuple, self.pairs.tolist()))


def oracle_distance_matrix(P: np.ndarray, objects, oidx=None) -> np.ndarray:
    """Exact distances between every point and the selected objects, shape (m, k)."""
    P = np.asarray(P, dtype=float)
    sel = slice(None) if oidx is None else oidx
    if isinstance(objects, Lines2D):
        o, d = objects.origins[sel], objects.directions[sel]
        A, B = -d[:, 1], d[:, 0]
        C = -(A * o[:, 0] + B * o[:, 1])
        return np.abs(P[:, :1] * A + P[:, 1:2] * B + C)
    if isinstance(objects, Planes3D):
        n, h = objects.normals[sel], objects.offsets[sel]
        s = P @ n.T - h
        foot = P[:, None, :] - s[:, :, None] * n[None, :, :]
        return np.sqrt(((P[:, None, :] - foot) ** 2).sum(axis=2))
    if isinstance(objects, Lines3D):
        o, d = objects.origins[sel], objects.directions[sel]
        v = P[:, None, :] - o[None, :, :]
        t = (v * d[None, :, :]).sum(axis=2)
        w = v - t[:, :, None] * d[None, :, :]
        return np.sqrt((w * w).sum(axis=2))
    if isinstance(objects, Circles2D):
        c, r = objects.centers[sel], objects.radii[sel]
        dx = P[:, None, 0] - c[None, :, 0]
        dy = P[:, None, 1] - c[None, :, 1]
        return np.abs(np.hypot(dx, dy) - r[None, :])
    if isinstance(objects, Circles3D):
        c, r, n = objects.centers[sel], objects.radii[sel], objects.axes[sel]
        v = P[:, None, :] - c[None, :, :]
        rho = np.linalg.norm(np.cross(v, n[None, :, :]), axis=2)
        h = (v * n[None, :, :]).sum(axis=2)
        return np.sqrt((rho - r[None, :]) ** 2 + h * h)
    if isinstance(objects, Spheres):
        c = objects.centers[sel]
        v = P[:, None, :] - c[None, :, :]
        return np.abs(np.sqrt((v * v).sum(axis=2)) - objects.radius)
    raise ParameterError(f"unsupported object type {type(objects).__name__}")


def brute_force_pairs(P, objects, threshold: float, budget: int = PAIR_BUDGET) -> OracleResult:
    """Every (point, object) pair at exact distance <= threshold, sorted."""
    t0 = time.perf_counter()
    P = np.asarray(P, dtype=float)
    m, n = len(P), len(objects)
    if m * n > budget:
        raise OracleBudgetError(f"oracle refused: m*n = {m * n} exceeds budget {budget}")
    ps, os_, ds = [], [], []
    step = max(1, 2_000_000 // max(n, 1))
    for s in range(0, m, step):
        D = oracle_distance_matrix(P[s:s + step], objects)
        i, j = np.nonzero(D <= threshold)
        ps.append(i + s)
        os_.append(j)
        ds.append(D[i, j])
    if ps:
        pi, oi, d = np.concatenate(ps), np.concatenate(os_), np.concatenate(ds)
    else:
        pi = oi = np.zeros(0, dtype=np.int64)
        d = np.zeros(0)
    pairs = np.column_stack([pi, oi]).astype(np.int64)
    return OracleResult(pairs, d, len(pairs), time.perf_counter() - t0)


def brute_force_triples(B, tri: Triangle, eps: float, budget: int = TRIPLE_BUDGET) -> OracleResult:
    """Ordered triples (p, q, o) with all three side deviations <= eps.

    ``distances`` holds the largest of the three deviations per triple.
    """
    t0 = time.perf_counter()
    B = np.asarray(B, dtype=float)
    n = len(B)
    if n**3 > budget:
        raise OracleBudgetError(f"oracle refused: n^3 = {n**3} exceeds budget {budget}")
    if n < 3:
        return OracleResult(np.zeros((0, 3), dtype=np.int64), np.zeros(0), 0, time.perf_counter() - t0)
    diff = B[:, None, :] - B[None, :, :]
    D = np.sqrt((diff * diff).sum(axis=2))
    out, dev = [], []
    for p in range(n):
        eu = np.abs(D[p] - tri.u)
        ev = np.abs(D[p] - tri.v)
        qs = np.flatnonzero(eu <= eps)
        os_ = np.flatnonzero(ev <= eps)
        qs = qs[qs != p]
        os_ = os_[os_ != p]
        if not len(qs) or not len(os_):
            continue
        ew = np.abs(D[np.ix_(qs, os_)] - tri.w)
        qi, oi = np.nonzero(ew <= eps)
        q, o = qs[qi], os_[oi]
        keep = q != o
        q, o = q[keep], o[keep]
        out.append(np.column_stack([np.full(len(q), p), q, o]))
        dev.append(np.maximum(np.maximum(eu[q], ev[o]), ew[qi[keep], oi[keep]]))
    T = np.concatenate(out).astype(np.int64) if out else np.zeros((0, 3), dtype=np.int64)
    d = np.concatenate(dev) if dev else np.zeros(0)
    return OracleResult(T, d, len(T), time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# naive epsilon grid
# ---------------------------------------------------------------------------


class _PointIndex:
    """Points bucketed in an eps-grid, sorted by linear cell code for several axis orders."""

    def __init__(self, P: np.ndarray, h: float, lo=None, hi=None):
        self.P = P
        d = P.shape[1]
        lo = np.full(d, -1.0) if lo is None else np.asarray(lo, dtype=float)
        hi = np.full(d, 1.0) if hi is None else np.asarray(hi, dtype=float)
        if len(P):
            lo = np.minimum(lo, P.min(axis=0))
            hi = np.maximum(hi, P.max(axis=0))
        self.origin = lo
        self.h = h
        self.counts = np.maximum(np.ceil((hi - lo) / h - 1e-12), 1).astype(np.int64)
        self.keys = np.clip(np.floor((P - lo) / h).astype(np.int64), 0, self.counts - 1)
        self._orders: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}

    def layout(self, axes: tuple):
        """(sorted codes, permutation) for codes with ``axes[-1]`` fastest."""
        if axes not in self._orders:
            code = np.zeros(len(self.P), dtype=np.int64)
            for a in axes:
                code = code * self.counts[a] + self.keys[:, a]
            order = np.argsort(code, kind="stable")
            self._orders[axes] = (code[order], order)
        return self._orders[axes]

    def code(self, axes: tuple, cols: list[np.ndarray]) -> np.ndarray:
        c = np.zeros(len(cols[0]), dtype=np.int64)
        for a, v in zip(axes, cols):
            c = c * self.counts[a] + v
        return c

    def range_query(self, axes, prefix_cols, lo, hi):
        """Points whose cell matches ``prefix_cols`` and last-axis index in [lo, hi]."""
        codes, order = self.layout(axes)
        ca = self.code(axes, list(prefix_cols) + [lo])
        cb = self.code(axes, list(prefix_cols) + [hi])
        left = np.searchsorted(codes, ca, "left")
        right = np.searchsorted(codes, cb, "right")
        cnt = right - left
        own = np.repeat(np.arange(len(ca)), cnt)
        start = np.cumsum(cnt) - cnt
        pos = np.repeat(left, cnt) + (np.arange(len(own)) - np.repeat(start, cnt))
        return own, order[pos]


def _neighbour_union_1d(lo, hi, n_last):
    """Per column: union of [lo-1, hi+1] over the column and its two neighbours.

    ``lo``/``hi`` have shape (k, ncol) with empty columns marked lo > hi.
    """
    big = np.iinfo(np.int64).max // 4
    L = np.where(lo <= hi, lo, big)
    H = np.where(lo <= hi, hi, -big)
    Lp = np.pad(L, ((0, 0), (1, 1)), constant_values=big)
    Hp = np.pad(H, ((0, 0), (1, 1)), constant_values=-big)
    L3 = np.minimum(np.minimum(Lp[:, :-2], Lp[:, 1:-1]), Lp[:, 2:])
    H3 = np.maximum(np.maximum(Hp[:, :-2], Hp[:, 1:-1]), Hp[:, 2:])
    ok = L3 <= H3
    L3 = np.where(ok, np.maximum(L3 - 1, 0), 1)
    H3 = np.where(ok, np.minimum(H3 + 1, n_last - 1), 0)
    return L3, H3


def _neighbour_union_2d(lo, hi, n_last):
    big = np.iinfo(np.int64).max // 4
    L = np.where(lo <= hi, lo, big)
    H = np.where(lo <= hi, hi, -big)
    Lp = np.pad(L, ((0, 0), (1, 1), (1, 1)), constant_values=big)
    Hp = np.pad(H, ((0, 0), (1, 1), (1, 1)), constant_values=-big)
    L3 = Lp[:, 1:-1, 1:-1].copy()
    H3 = Hp[:, 1:-1, 1:-1].copy()
    for dx in range(3):
        for dy in range(3):
            L3 = np.minimum(L3, Lp[:, dx:dx + L.shape[1], dy:dy + L.shape[2]])
            H3 = np.maximum(H3, Hp[:, dx:dx + L.shape[1], dy:dy + L.shape[2]])
    ok = L3 <= H3
    L3 = np.where(ok, np.maximum(L3 - 1, 0), 1)
    H3 = np.where(ok, np.minimum(H3 + 1, n_last - 1), 0)
    return L3, H3


def _naive_lines2d(idx: _PointIndex, lines: Lines2D, eps: float, chunk_cells: int = 4_000_000):
    """Probe cells crossed by each line plus their neighbours."""
    D, O = lines.directions, lines.origins
    steep = np.abs(D[:, 1]) > np.abs(D[:, 0])
    rp, ro, visited = [], [], 0
    for is_steep in (False, True):
        sel = np.flatnonzero(steep == is_steep)
        if not len(sel):
            continue
        u, v = (1, 0) if is_steep else (0, 1)  # u: column axis, v: row axis
        slope = D[sel, v] / D[sel, u]
        icpt = O[sel, v] - slope * O[sel, u]
        ncol, nrow = int(idx.counts[u]), int(idx.counts[v])
        x = idx.origin[u] + np.arange(ncol + 1) * eps
        step = max(1, chunk_cells // (ncol + 2))
        for s in range(0, len(sel), step):
            c, d = slope[s:s + step, None], icpt[s:s + step, None]
            y = c * x[None, :] + d
            ya, yb = y[:, :-1], y[:, 1:]
            lo, hi = closed_index_range(np.minimum(ya, yb), np.maximum(ya, yb), idx.origin[v], eps)
            lo = np.maximum(lo, 0)
            hi = np.minimum(hi, nrow - 1)
            L3, H3 = _neighbour_union_1d(lo, hi, nrow)
            visited += int(np.maximum(H3 - L3 + 1, 0).sum())
            li, col = np.nonzero(H3 >= L3)
            own, pts = idx.range_query((u, v), [col], L3[li, col], H3[li, col])
            rp.append(pts)
            ro.append(sel[s + li[own]])
    return _cat(rp), _cat(ro), visited


def _naive_planes(idx: _PointIndex, planes: Planes3D, eps: float, chunk_cells: int = 4_000_000):
    N, H = planes.normals, planes.offsets
    major = np.argmax(np.abs(N), axis=1)
    rp, ro, visited = [], [], 0
    for w in range(3):
        sel = np.flatnonzero(major == w)
        if not len(sel):
            continue
        u, v = [a for a in range(3) if a != w]
        # graph form x_w = A x_u + B x_v + C
        A = -N[sel, u] / N[sel, w]
        B = -N[sel, v] / N[sel, w]
        C = H[sel] / N[sel, w]
        nu, nv, nw = (int(idx.counts[a]) for a in (u, v, w))
        xu = idx.origin[u] + np.arange(nu) * eps
        xv = idx.origin[v] + np.arange(nv) * eps
        step = max(1, chunk_cells // (nu * nv))
        for s in range(0, len(sel), step):
            a, b, c = A[s:s + step, None, None], B[s:s + step, None, None], C[s:s + step, None, None]
            z0 = a * xu[None, :, None] + b * xv[None, None, :] + c
            da, db = a * eps, b * eps
            zmin = z0 + np.minimum(da, 0) + np.minimum(db, 0)
            zmax = z0 + np.maximum(da, 0) + np.maximum(db, 0)
            lo, hi = closed_index_range(zmin, zmax, idx.origin[w], eps)
            lo = np.maximum(lo, 0)
            hi = np.minimum(hi, nw - 1)
            L3, H3 = _neighbour_union_2d(lo, hi, nw)
            visited += int(np.maximum(H3 - L3 + 1, 0).sum())
            pl, cu, cv = np.nonzero(H3 >= L3)
            own, pts = idx.range_query((u, v, w), [cu, cv], L3[pl, cu, cv], H3[pl, cu, cv])
            rp.append(pts)
            ro.append(sel[s + pl[own]])
    return _cat(rp), _cat(ro), visited


def _cat(parts):
    return np.concatenate(parts).astype(np.int64) if parts else np.zeros(0, dtype=np.int64)


def _probe_columns(idx: _PointIndex, owner, cols, lo_val, hi_val, axes):
    """Probe along the last axis the cells whose centres lie in [lo_val, hi_val]."""
    w = axes[-1]
    h = idx.h
    c0 = idx.origin[w] + 0.5 * h
    lo = np.maximum(np.ceil((lo_val - c0) / h - 1e-12).astype(np.int64), 0)
    hi = np.minimum(np.floor((hi_val - c0) / h + 1e-12).astype(np.int64), idx.counts[w] - 1)
    ok = hi >= lo
    visited = int((hi - lo + 1)[ok].sum())
    own, pts = idx.range_query(axes, [c[ok] for c in cols], lo[ok], hi[ok])
    return np.asarray(owner)[ok][own], pts, visited


def _naive_shells(idx: _PointIndex, centers: np.ndarray, radii: np.ndarray, rho: float):
    """Cells whose centre lies within ``rho`` of a circle (2D) / sphere (3D)."""
    d = idx.P.shape[1]
    h = idx.h
    ctr = [idx.origin[a] + (np.arange(idx.counts[a]) + 0.5) * h for a in range(d)]
    rp, ro, visited = [], [], 0
    rin = np.maximum(radii - rho, 0.0)
    rout = radii + rho
    for k in range(len(centers)):
        c = centers[k]
        # columns over the first d-1 axes whose centres lie within rout
        grids = []
        for a in range(d - 1):
            sel = np.flatnonzero(np.abs(ctr[a] - c[a]) <= rout[k])
            grids.append(sel)
        if any(len(g) == 0 for g in grids):
            continue
        mesh = np.meshgrid(*grids, indexing="ij")
        cols = [m.ravel() for m in mesh]
        q = sum((ctr[a][cols[a]] - c[a]) ** 2 for a in range(d - 1))
        ok = q <= rout[k] ** 2
        cols = [cc[ok] for cc in cols]
        q = q[ok]
        s_out = np.sqrt(rout[k] ** 2 - q)
        s_in = np.sqrt(np.maximum(rin[k] ** 2 - q, 0.0))
        inner = q < rin[k] ** 2
        w = d - 1
        axes = tuple(range(d))
        # upper interval
        o1, p1, v1 = _probe_columns(idx, np.zeros(len(q), dtype=np.int64), cols,
                                    c[w] + np.where(inner, s_in, -s_out), c[w] + s_out, axes)
        # lower interval only where the column passes through the hole
        sub = np.flatnonzero(inner)
        o2, p2, v2 = _probe_columns(idx, np.zeros(len(sub), dtype=np.int64), [cc[sub] for cc in cols],
                                    c[w] - s_out[sub], c[w] - s_in[sub], axes)
        visited += v1 + v2
        pts = np.concatenate([p1, p2])
        rp.append(pts)
        ro.append(np.full(len(pts), k))
    return _cat(rp), _cat(ro), visited


def _naive_lines3d(idx: _PointIndex, lines: Lines3D, rho: float):
    """Cells whose centre lies within ``rho`` of each line."""
    h = idx.h
    ctr = [idx.origin[a] + (np.arange(idx.counts[a]) + 0.5) * h for a in range(3)]
    rp, ro, visited = [], [], 0
    for k in range(len(lines)):
        o, dvec = lines.origins[k], lines.directions[k]
        # grid of (x, y) centres; solve |v|^2 - (v.d)^2 <= rho^2 for z
        X, Y = np.meshgrid(np.arange(idx.counts[0]), np.arange(idx.counts[1]), indexing="ij")
        X, Y = X.ravel(), Y.ravel()
        vx = ctr[0][X] - o[0]
        vy = ctr[1][Y] - o[1]
        dx, dy, dz = dvec
        # quadratic in t = z - o_z: (1 - dz^2) t^2 - 2 dz (vx dx + vy dy) t + (vx^2 + vy^2 - (vx dx + vy dy)^2 - rho^2) <= 0
        s = vx * dx + vy * dy
        qa = 1.0 - dz * dz
        qb = -2.0 * dz * s
        qc = vx * vx + vy * vy - s * s - rho * rho
        if qa < 1e-12:
            ok = qc <= 0
            lo = np.full(len(X), -np.inf)
            hi = np.full(len(X), np.inf)
        else:
            disc = qb * qb - 4 * qa * qc
            ok = disc >= 0
            sq = np.sqrt(np.maximum(disc, 0))
            lo = (-qb - sq) / (2 * qa) + o[2]
            hi = (-qb + sq) / (2 * qa) + o[2]
        sel = np.flatnonzero(ok)
        lo = np.clip(lo[sel], idx.origin[2] - h, idx.origin[2] + (idx.counts[2] + 1) * h)
        hi = np.clip(hi[sel], idx.origin[2] - h, idx.origin[2] + (idx.counts[2] + 1) * h)
        own, pts, v = _probe_columns(idx, np.zeros(len(sel), dtype=np.int64), [X[sel], Y[sel]], lo, hi, (0, 1, 2))
        visited += v
        rp.append(pts)
        ro.append(np.full(len(pts), k))
    return _cat(rp), _cat(ro), visited


def _naive_circles3d(idx: _PointIndex, circles: Circles3D, rho: float):
    """Cells whose centre lies within ``rho`` of each spatial circle (sampled, then exact)."""
    h = idx.h
    reach = rho + 0.5 * h
    span = int(math.ceil(reach / h)) + 1
    off = np.stack(np.meshgrid(*(np.arange(-span, span + 1),) * 3, indexing="ij"), -1).reshape(-1, 3)
    # a sample lies within reach of the cell centre, and inside its base cell
    off = off[np.linalg.norm(off, axis=1) <= reach / h + math.sqrt(3) / 2 + 1e-9]
    cnt = idx.counts
    rp, ro, visited = [], [], 0
    for k in range(len(circles)):
        c, r, n = circles.centers[k], circles.radii[k], circles.axes[k]
        a = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        e1 = np.cross(n, a)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(n, e1)
        ns = max(8, int(math.ceil(2 * math.pi * r / h)))
        t = np.arange(ns) * (2 * math.pi / ns)
        S = c + r * (np.cos(t)[:, None] * e1 + np.sin(t)[:, None] * e2)
        base = np.floor((S - idx.origin) / h).astype(np.int64)
        cells = (base[:, None, :] + off[None, :, :]).reshape(-1, 3)
        cells = cells[np.all((cells >= 0) & (cells < idx.counts), axis=1)]
        if not len(cells):
            continue
        code = np.unique((cells[:, 0] * cnt[1] + cells[:, 1]) * cnt[2] + cells[:, 2])
        cells = np.column_stack([code // (cnt[1] * cnt[2]), (code // cnt[2]) % cnt[1], code % cnt[2]])
        cen = idx.origin + (cells + 0.5) * h
        v = cen - c
        hh = v @ n
        rr = np.linalg.norm(v - hh[:, None] * n, axis=1)
        cells = cells[np.hypot(rr - r, hh) <= rho]
        visited += len(cells)
        own, pts = idx.range_query((0, 1, 2), [cells[:, 0], cells[:, 1]], cells[:, 2], cells[:, 2])
        rp.append(pts)
        ro.append(np.full(len(pts), k))
    return _cat(rp), _cat(ro), visited


def _naive_raw(P: np.ndarray, objects, eps: float, lo=None, hi=None):
    """Raw candidate pairs and probe count of the naive grid for any object kind."""
    idx = _PointIndex(P, eps, lo, hi)
    d = P.shape[1]
    rho = 1.5 * math.sqrt(d) * eps
    if isinstance(objects, Lines2D):
        return _naive_lines2d(idx, objects, eps)
    if isinstance(objects, Planes3D):
        return _naive_planes(idx, objects, eps)
    if isinstance(objects, Circles2D):
        return _naive_shells(idx, objects.centers, objects.radii, rho)
    if isinstance(objects, Spheres):
        return _naive_shells(idx, objects.centers, np.full(len(objects), objects.radius), rho)
    if isinstance(objects, Lines3D):
        return _naive_lines3d(idx, objects, rho)
    if isinstance(objects, Circles3D):
        return _naive_circles3d(idx, objects, rho)
    raise ParameterError(f"unsupported object type {type(objects).__name__}")


def _check_objects_dim(P, objects):
    dim = {Lines2D: 2, Circles2D: 2, Planes3D: 3, Lines3D: 3, Circles3D: 3}
    want = dim.get(type(objects))
    if isinstance(objects, Spheres):
        want = objects.centers.shape[1] if len(objects) else P.shape[1]
    if want is None:
        raise ParameterError(f"unsupported object type {type(objects).__name__}")
    return want


def naive_grid_report(P, objects, eps: float, mode: str = "filtered"):
    """Naive epsilon-grid reporting.

    Lines and planes probe every cell they cross plus all neighbouring cells.
    Other kinds probe every cell whose centre lies within ``1.5 sqrt(d) eps``
    of the object, a superset of the crossed cells and their neighbours.
    """
    t0 = time.perf_counter()
    dim = _check_objects_dim(np.asarray(P), objects)
    P = np.asarray(P, dtype=float).reshape(-1, dim)
    metrics = RunMetrics(strategy="naive")
    if len(P) == 0 or len(objects) == 0:
        rp = ro = np.zeros(0, dtype=np.int64)
        visited = 0
    else:
        rp, ro, visited = _naive_raw(P, objects, eps)
    metrics.cells_visited = visited
    res = finalize(rp, ro, lambda pi, oi: objects.distances(P, pi, oi), eps, mode, metrics)
    metrics.elapsed_ms = 1e3 * (time.perf_counter() - t0)
    return res


def naive_duality_report(P, objects, eps: float, mode: str = "filtered"):
    """Naive grid on whichever side is smaller after dualizing (or swapping roles)."""
    t0 = time.perf_counter()
    dim = _check_objects_dim(np.asarray(P), objects)
    P = np.asarray(P, dtype=float).reshape(-1, dim)
    m, n = len(P), len(objects)
    if not isinstance(objects, (Lines2D, Planes3D, Spheres)):
        raise ParameterError(f"naive duality does not support {type(objects).__name__}")
    metrics = RunMetrics()
    rp = ro = np.zeros(0, dtype=np.int64)
    visited = 0
    if m and n:
        if m >= n:
            metrics.strategy = "naive-primal"
            rp, ro, visited = _naive_raw(P, objects, eps)
        elif isinstance(objects, Spheres):
            metrics.strategy = "naive-swapped"
            sw = Spheres(P, objects.radius)
            ro, rp, visited = _naive_raw(objects.centers, sw, eps)
        elif isinstance(objects, Lines2D):
            metrics.strategy = "naive-dual"
            rp, ro, visited = _naive_dual_lines2d(P, objects, eps)
        else:
            metrics.strategy = "naive-dual"
            rp, ro, visited = _naive_dual_planes(P, objects, eps)
    metrics.cells_visited = visited
    res = finalize(rp, ro, lambda pi, oi: objects.distances(P, pi, oi), eps, mode, metrics)
    metrics.elapsed_ms = 1e3 * (time.perf_counter() - t0)
    return res


def _naive_dual_lines2d(P, lines: Lines2D, eps: float):
    """Dual points (c, -d) of the lines against dual lines y = xi x - eta of the points."""
    rp, ro, visited = [], [], 0
    h = math.sqrt(2.0) * eps
    for cls in normalize_slope_classes_2d(lines):
        if not len(cls.indices):
            continue
        Q = cls.rotate(P)
        dual_pts = np.column_stack([cls.slopes, -cls.intercepts])
        dual_lines = Lines2D.from_slopes(Q[:, 0], -Q[:, 1])
        lo = dual_pts.min(axis=0) - h
        hi = dual_pts.max(axis=0) + h
        li, pi, v = _naive_raw(dual_pts, dual_lines, h, lo, hi)
        visited += v
        rp.append(pi)
        ro.append(cls.indices[li])
    return _cat(rp), _cat(ro), visited


def _naive_dual_planes(P, planes: Planes3D, eps: float):
    rp, ro, visited = [], [], 0
    net = axis_direction_net()
    lab = assign_direction_classes(planes.normals, net)
    h = math.sqrt(2.0) * eps
    for k in range(len(net)):
        sel = np.flatnonzero(lab == k)
        if not len(sel):
            continue
        R = rotation_to(net[k])
        a, b, c = planes.subset(sel).transformed(R).coefficients()
        Q = P @ R.T
        dual_pts = np.column_stack([a, b, -c])
        dual_planes = Planes3D.from_coeffs(Q[:, 0], Q[:, 1], -Q[:, 2])
        lo = dual_pts.min(axis=0) - h
        hi = dual_pts.max(axis=0) + h
        li, pi, v = _naive_raw(dual_pts, dual_planes, h, lo, hi)
        visited += v
        rp.append(pi)
        ro.append(sel[li])
    return _cat(rp), _cat(ro), visited
