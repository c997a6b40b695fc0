"""Spatial approximate incidences: planes, congruent pairs, lines and congruent circles."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .geom import (BandNet, Circles3D, Lines3D, Planes3D, UNIT_TO_SQUARE, band_direction_net,
                   check_eps, frames_to_z, normalize_direction_classes_3d, rotation_to, rotations_from_z)
from .grid import (Grid4D, UniformGrid, build_grid, closed_index_range, dual_plane_4d_crossings,
                   encode_keys, expand_ranges, join_codes, plane_crossings_3d, unique_pairs)
from .incidence2d import DeltaPlan, plan_deltas
from .metrics import RunMetrics, check_mode, empty_result, finalize

SQRT2 = math.sqrt(2.0)


def _as_points3(P) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    return P.reshape(-1, 3) if P.size else np.zeros((0, 3))


def _primal_grid(X: np.ndarray, d1: float, pad_axes, strategy: str, eps: float):
    """Cube grid over the bounding box of X, padded by one cell along ``pad_axes``.

    For the dual-only strategy the grid is a single cube around all points.
    """
    lo, hi = X.min(axis=0), X.max(axis=0)
    if strategy == "dual-only":
        side = float(np.max(hi - lo)) + 2 * SQRT2 * eps
        centre = 0.5 * (lo + hi)
        return build_grid(centre - side / 2, centre + side / 2, side), side
    pad = np.zeros(3)
    pad[list(pad_axes)] = d1
    grid = build_grid(lo - pad, hi + pad, d1)
    need = np.where(pad > 0, 3, 1)
    return UniformGrid(grid.origin, grid.extents, np.maximum(grid.counts, need)), d1


def _copies(keys: np.ndarray, offsets: np.ndarray, counts: np.ndarray):
    """Replicate cell keys by ``offsets``; returns (source index, shifted key) inside the grid."""
    k = len(offsets)
    idx = np.repeat(np.arange(len(keys)), k)
    K = np.repeat(keys, k, axis=0) + np.tile(offsets, (len(keys), 1))
    ok = np.all((K >= 0) & (K < counts), axis=1)
    return idx[ok], K[ok]


# ---------------------------------------------------------------------------
# points vs planes
# ---------------------------------------------------------------------------


def _pp3_core(X: np.ndarray, a, b, c, eps: float, plan: DeltaPlan):
    """Raw candidates for points X and planes z = a x + b y + c with |a|, |b| <= 1."""
    grid, d1 = _primal_grid(X, plan.delta1, (2,), plan.strategy, eps)
    pk = grid.locate(X)
    lown, lkey = plane_crossings_3d(a, b, c, grid)
    visited = len(lown)
    offs = np.zeros((1, 3), dtype=np.int64) if plan.strategy == "dual-only" else \
        np.array([(0, 0, -1), (0, 0, 0), (0, 0, 1)])
    p_src, p_key = _copies(pk, offs, grid.counts)
    if plan.strategy == "primal-only":
        cp, cl = encode_keys(p_key, lkey)
        ia, jb = join_codes(cp, cl)
        return p_src[ia], lown[jb], visited
    d2 = eps / d1
    n2 = int(math.ceil(1.0 / d2 - 1e-12))
    hz = 3.0 * d1 * d2
    dgrid = UniformGrid(np.array([-1.0, -1.0, -1.5 * d1]), np.array([2 * d2, 2 * d2, hz]),
                        np.array([n2, n2, n2]))
    # dual points of the planes in each cube's local frame (origin at the cube centre)
    oc = grid.origin + (lkey + 0.5) * grid.extents
    c_loc = a[lown] * oc[:, 0] + b[lown] * oc[:, 1] + c[lown] - oc[:, 2]
    dk = dgrid.locate(np.column_stack([a[lown], b[lown], -c_loc]))
    # dual planes of the points: Z = xi X + eta Y - zeta, one row of slack each way
    op = grid.origin + (p_key + 0.5) * grid.extents
    loc = X[p_src] - op
    own, k3 = plane_crossings_3d(loc[:, 0], loc[:, 1], -loc[:, 2], dgrid, pad=1)
    visited += len(own)
    cp, cl = encode_keys(np.column_stack([p_key[own], k3]), np.column_stack([lkey, dk]))
    ia, jb = join_codes(cp, cl)
    return p_src[own[ia]], lown[jb], visited


def _as_planes(H) -> Planes3D:
    if isinstance(H, Planes3D):
        return H
    arr = np.asarray(H, dtype=float).reshape(-1, 3)
    return Planes3D.from_coeffs(arr[:, 0], arr[:, 1], arr[:, 2])


def report_point_plane_3d(P, H, eps: float, mode: str = "filtered"):
    """Report point-plane pairs at distance <= eps.

    ``H`` is a :class:`Planes3D` or an (n, 3) array of (a, b, c) with
    z = a x + b y + c. Planes are split into 13 classes by nearest axis/diagonal
    normal; each class is rotated so its normals are near +z and solved with a
    cube grid (side delta1) whose cells are each dualized into a 3D grid.
    """
    t0 = time.perf_counter()
    eps = check_eps(eps)
    check_mode(mode)
    X = _as_points3(P)
    planes = _as_planes(H)
    m, n = len(X), len(planes)
    if m == 0 or n == 0:
        return empty_result(mode)
    eps_w = UNIT_TO_SQUARE.eps(eps)
    metrics = RunMetrics()
    rp, ro, tags, strategies = [], [], [], []
    for k, cls in enumerate(normalize_direction_classes_3d(planes.normals)):
        plan = plan_deltas(m, len(cls.indices), eps_w, "point-plane-3d")
        strategies.append(plan.strategy)
        sub = planes.subset(cls.indices).transformed(cls.rotation)
        a, b, c = sub.coefficients()
        W = UNIT_TO_SQUARE.forward(X @ cls.rotation.T)
        pi, li, vis = _pp3_core(W, a, b, 0.5 * (c - a - b + 1.0), eps_w, plan)
        metrics.cells_visited += vis
        rp.append(pi)
        ro.append(cls.indices[li])
        tags.append(np.full(len(pi), k))
        metrics.extra.setdefault("plans", []).append(plan)
    metrics.strategy = "+".join(sorted(set(strategies)))
    res = finalize(np.concatenate(rp), np.concatenate(ro), lambda pi, oi: planes.distances(X, pi, oi),
                   eps, mode, metrics, tags=np.concatenate(tags))
    metrics.elapsed_ms = 1e3 * (time.perf_counter() - t0)
    return res


# ---------------------------------------------------------------------------
# congruent pairs in space: cap directions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CapDirectionNet:
    """Directions covering the sphere within ``psi`` plus the matching probe box.

    The box, in a frame where the direction is +z, is
    |x|, |y| <= half_width and z in [z_lo, z_hi].
    """

    directions: np.ndarray
    psi: float
    half_width: float
    z_lo: float
    z_hi: float

    def __len__(self):
        return len(self.directions)

    @property
    def box(self) -> np.ndarray:
        return np.array([2 * self.half_width, 2 * self.half_width, self.z_hi - self.z_lo])

    @property
    def cell(self) -> np.ndarray:
        """Bucket size: half the box across, the full box height.

        Halving the wide sides tightens the probed region around the box, which
        keeps the number of directions reporting the same pair small.
        """
        return np.array([self.half_width, self.half_width, self.z_hi - self.z_lo])


def build_cap_directions(eps: float, r: float = 0.5) -> CapDirectionNet:
    """Cap net with covering radius sqrt(eps) and the enclosing box of a cap of the shell."""
    psi = math.sqrt(eps)
    net: BandNet = band_direction_net(psi)
    return CapDirectionNet(net.directions, psi, (r + eps) * math.sin(psi), (r - eps) * math.cos(psi), r + eps)


def _check_congruent3(r: float, eps: float):
    if not (0.0 < r <= 0.5):
        raise ParameterError(f"radius must lie in (0, 1/2], got {r}")
    if eps >= r:
        raise ParameterError("eps must be smaller than the radius")


def congruent_pairs_3d_raw(P: np.ndarray, Q: np.ndarray, r: float, eps: float, metrics: RunMetrics | None = None,
                           chunk_entries: int = 4_000_000):
    """Raw candidates (p, q, direction index) of the cap-direction scheme, duplicates kept."""
    metrics = RunMetrics() if metrics is None else metrics
    net = build_cap_directions(eps, r)
    R_all = frames_to_z(net.directions)
    W = net.cell
    lo = np.array([-net.half_width, -net.half_width, net.z_lo])
    hi = np.array([net.half_width, net.half_width, net.z_hi])
    metrics.extra.update(directions=len(net), box=tuple(net.box), cell=tuple(W))
    m, n = len(P), len(Q)
    step = max(1, chunk_entries // (m + 18 * n))
    rp, rq, tags = [], [], []
    for s in range(0, len(net), step):
        R = R_all[s:s + step]
        D = len(R)
        Pr = np.einsum("kij,mj->kmi", R, P)
        Qr = np.einsum("kij,nj->kni", R, Q)
        pkey = np.floor(Pr / W).astype(np.int64).reshape(-1, 3)
        pdir = np.repeat(np.arange(D), m)
        pidx = np.tile(np.arange(m), D)
        i0, i1 = closed_index_range(Qr + lo, Qr + hi, 0.0, W)
        i0, i1 = i0.reshape(-1, 3), i1.reshape(-1, 3)
        # product of the three per-axis index ranges of each (direction, q)
        ox, vx = expand_ranges(i0[:, 0], i1[:, 0])
        oy, vy = expand_ranges(i0[ox, 1], i1[ox, 1])
        oz, vz = expand_ranges(i0[ox[oy], 2], i1[ox[oy], 2])
        owner = ox[oy[oz]]
        metrics.cells_visited += len(owner)
        qdir, qidx = np.divmod(owner, n)
        cp, cq = encode_keys(np.column_stack([pdir, pkey]),
                             np.column_stack([qdir, vx[oy[oz]], vy[oz], vz]))
        ia, jb = join_codes(cp, cq)
        rp.append(pidx[ia])
        rq.append(qidx[jb])
        tags.append(s + pdir[ia])
    return np.concatenate(rp), np.concatenate(rq), np.concatenate(tags)


def report_congruent_pairs_3d(P, Q, r: float, eps: float, mode: str = "filtered",
                              chunk_entries: int = 4_000_000):
    """Pairs (p, q) in space with | |pq| - r | <= eps.

    For every net direction u the space is rotated so that u points up. The box
    enclosing the part of the shell about the origin seen within angle
    sqrt(eps) of u fixes the bucket size (half the box across, full height); P
    is bucketed and each q probes the cells met by the box translated to q.
    """
    t0 = time.perf_counter()
    eps = check_eps(eps)
    check_mode(mode)
    _check_congruent3(r, eps)
    P, Q = _as_points3(P), _as_points3(Q)
    if len(P) == 0 or len(Q) == 0:
        return empty_result(mode)
    metrics = RunMetrics(strategy="cap-net")
    rp, rq, tags = congruent_pairs_3d_raw(P, Q, r, eps, metrics, chunk_entries)
    res = finalize(rp, rq, lambda pi, qi: np.abs(np.linalg.norm(P[pi] - Q[qi], axis=1) - r), eps, mode,
                   metrics, tags=tags)
    metrics.elapsed_ms = 1e3 * (time.perf_counter() - t0)
    return res


# ---------------------------------------------------------------------------
# points vs lines in space
# ---------------------------------------------------------------------------


def _line_cube_crossings(a, b, c, d, grid: UniformGrid, col0, col1):
    """Cubes met by lines y = a x + b, z = c x + d within x-columns [col0, col1]."""
    own, ix = expand_ranges(col0, col1)
    h = grid.extents
    x0 = grid.origin[0] + ix * h[0]
    x1 = x0 + h[0]
    A, B, C, D = a[own], b[own], c[own], d[own]
    ya, yb = A * x0 + B, A * x1 + B
    r0, r1 = grid.axis_range(1, np.minimum(ya, yb), np.maximum(ya, yb))
    o2, iy = expand_ranges(r0, r1)
    # sub-interval of the column where y stays in row iy
    A2, B2 = A[o2], B[o2]
    ylo = grid.origin[1] + iy * h[1]
    with np.errstate(divide="ignore", invalid="ignore"):
        ta = (ylo - B2) / A2
        tb = (ylo + h[1] - B2) / A2
    flat = np.abs(A2) < 1e-15
    sa = np.where(flat, x0[o2], np.maximum(x0[o2], np.minimum(ta, tb)))
    sb = np.where(flat, x1[o2], np.minimum(x1[o2], np.maximum(ta, tb)))
    sb = np.maximum(sa, sb)
    za, zb = C[o2] * sa + D[o2], C[o2] * sb + D[o2]
    z0, z1 = grid.axis_range(2, np.minimum(za, zb), np.maximum(za, zb))
    o3, iz = expand_ranges(z0, z1)
    src = o2[o3]
    return own[src], np.column_stack([ix[src], iy[o3], iz])


def _pl3_core(X: np.ndarray, a, b, c, d, eps: float, plan: DeltaPlan, pg=None, lg=None):
    """Raw candidates for points X and lines y = a x + b, z = c x + d (|a|, |c| <= 1).

    ``pg`` and ``lg`` are optional group labels; only pairs in the same group
    are considered. Returns (point idx, line idx, cells visited); pairs are
    deduplicated per cube.
    """
    m, n = len(X), len(a)
    pg = np.zeros(m, dtype=np.int64) if pg is None else np.asarray(pg, dtype=np.int64)
    lg = np.zeros(n, dtype=np.int64) if lg is None else np.asarray(lg, dtype=np.int64)
    grid, d1 = _primal_grid(X, plan.delta1, (1, 2), plan.strategy, eps)
    pk = grid.locate(X)
    # restrict each line to the x-extent of its group's points
    G = int(max(pg.max(), lg.max())) + 1
    gxlo = np.full(G, np.inf)
    gxhi = np.full(G, -np.inf)
    np.minimum.at(gxlo, pg, X[:, 0])
    np.maximum.at(gxhi, pg, X[:, 0])
    live = np.flatnonzero(np.isfinite(gxlo[lg]))
    c0, c1 = grid.axis_range(0, gxlo[lg[live]], gxhi[lg[live]])
    lo_, lkey = _line_cube_crossings(a[live], b[live], c[live], d[live], grid, c0, c1)
    lown = live[lo_]
    visited = len(lown)
    if plan.strategy == "dual-only":
        offs = np.zeros((1, 3), dtype=np.int64)
    else:
        offs = np.array([(0, dy, dz) for dy in (-1, 0, 1) for dz in (-1, 0, 1)])
    p_src, p_key = _copies(pk, offs, grid.counts)
    if plan.strategy == "primal-only":
        cp, cl = encode_keys(np.column_stack([pg[p_src], p_key]), np.column_stack([lg[lown], lkey]))
        ia, jb = join_codes(cp, cl)
        return p_src[ia], lown[jb], visited
    d2 = eps / d1
    na = int(math.ceil(1.0 / d2 - 1e-12))
    hb = 3.0 * d1 * d2
    g4 = Grid4D(np.array([-1.0, -d1, -1.0, -d1]), np.array([2 * d2, hb, 2 * d2, hb]),
                np.array([na, na, na, na]))
    # dual points of the lines, local frame at the cube's min corner
    X0 = grid.origin + lkey * grid.extents
    A, C = a[lown], c[lown]
    b_loc = A * X0[:, 0] + b[lown] - X0[:, 1]
    d_loc = C * X0[:, 0] + d[lown] - X0[:, 2]
    lk = g4.locate(np.column_stack([A, b_loc, C, d_loc]))
    # each dual point also claims its 8 neighbours in the (b, d) plane
    off_bd = np.array([(0, db, 0, dd) for db in (-1, 0, 1) for dd in (-1, 0, 1)])
    le = np.repeat(np.arange(len(lown)), 9)
    lk9 = np.repeat(lk, 9, axis=0) + np.tile(off_bd, (len(lown), 1))
    # dual planes of the point copies, keeping one virtual row outside the box
    loc = X[p_src] - (grid.origin + p_key * grid.extents)
    own, k4 = dual_plane_4d_crossings(loc[:, 0], loc[:, 1], loc[:, 2], g4, pad=0, margin=1)
    visited += len(own)
    cp, cl = encode_keys(np.column_stack([pg[p_src[own]], p_key[own], k4]),
                         np.column_stack([lg[lown[le]], lkey[le], lk9]))
    ia, jb = join_codes(cp, cl)
    pe, ee = unique_pairs(own[ia], le[jb])
    return p_src[pe], lown[ee], visited


def _as_lines3(L) -> Lines3D:
    if isinstance(L, Lines3D):
        return L
    arr = np.asarray(L, dtype=float).reshape(-1, 4)
    return Lines3D.from_slopes(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3])


def _to_working_lines(a, b, c, d):
    """Slope form of the same lines after the map x -> (x + 1) / 2."""
    return a, 0.5 * (b - a + 1.0), c, 0.5 * (d - c + 1.0)


def report_point_line_3d(P, L, eps: float, mode: str = "filtered"):
    """Report pairs of points and spatial lines at distance <= eps.

    Lines are split into 13 direction classes and each class is rotated so its
    directions are near +x. A cube grid (side delta1) holds each point in the
    3x3 block of cubes sharing its x-slab; per cube the lines are dualized to
    points (a, b, c, d) of a 4D grid and the points to 2-planes.
    """
    t0 = time.perf_counter()
    eps = check_eps(eps)
    check_mode(mode)
    X = _as_points3(P)
    lines = _as_lines3(L)
    m, n = len(X), len(lines)
    if m == 0 or n == 0:
        return empty_result(mode)
    eps_w = UNIT_TO_SQUARE.eps(eps)
    metrics = RunMetrics()
    rp, ro, tags, strategies = [], [], [], []
    for k, cls in enumerate(normalize_direction_classes_3d(lines.directions, target=(1.0, 0.0, 0.0))):
        plan = plan_deltas(m, len(cls.indices), eps_w, "point-line-3d")
        strategies.append(plan.strategy)
        sub = lines.subset(cls.indices).transformed(cls.rotation)
        a, b, c, d = _to_working_lines(*sub.slopes())
        W = UNIT_TO_SQUARE.forward(X @ cls.rotation.T)
        pi, li, vis = _pl3_core(W, a, b, c, d, eps_w, plan)
        metrics.cells_visited += vis
        rp.append(pi)
        ro.append(cls.indices[li])
        tags.append(np.full(len(pi), k))
        metrics.extra.setdefault("plans", []).append(plan)
    metrics.strategy = "+".join(sorted(set(strategies)))
    res = finalize(np.concatenate(rp), np.concatenate(ro), lambda pi, oi: lines.distances(X, pi, oi),
                   eps, mode, metrics, tags=np.concatenate(tags))
    metrics.elapsed_ms = 1e3 * (time.perf_counter() - t0)
    return res


# ---------------------------------------------------------------------------
# points vs congruent circles in space
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TorusSector:
    """Sector geometry shared by all circles of radius ``r``.

    The circle is cut into ``count`` equal arcs of angle ``angle``. The arc
    around the in-plane direction e_m is replaced by the segment through
    ``axis_offset * e_m`` along the tangent, of half length ``half_length``;
    points within eps of the arc are within ``eps_line`` of that segment.
    """

    r: float
    eps: float
    count: int
    angle: float
    axis_offset: float
    half_length: float
    eps_line: float

    @property
    def slab_width(self) -> float:
        return 2.0 * self.r * math.sin(self.angle / 2)


def torus_sectors(r: float, eps: float) -> TorusSector:
    K = int(math.ceil(2 * math.pi / math.sqrt(eps)))
    dlt = 2 * math.pi / K
    sag = r * (1.0 - math.cos(dlt / 2))
    return TorusSector(r, eps, K, dlt, r * (1.0 + math.cos(dlt / 2)) / 2, (r + eps) * math.sin(dlt / 2),
                       max(1.5 * eps, eps + sag / 2))


def cylinder_slabs(A: np.ndarray, B: np.ndarray, radius: float, width: float):
    """Closed slab index ranges met by the cylinders of ``radius`` around segments AB."""
    u = B - A
    nrm = np.linalg.norm(u, axis=1)
    dx = np.abs(u[:, 0]) / np.where(nrm > 0, nrm, 1.0)
    spread = radius * np.sqrt(np.clip(1.0 - dx * dx, 0.0, 1.0))
    xmin = np.minimum(A[:, 0], B[:, 0]) - spread
    xmax = np.maximum(A[:, 0], B[:, 0]) + spread
    return closed_index_range(xmin, xmax, 0.0, width)


def sector_axis_segments(centers: np.ndarray, T: np.ndarray, ts: TorusSector, j: int):
    """Axis segment endpoints of sector ``j`` of circles with the given centres.

    ``T`` stacks the rotations taking +z to each circle's normal.
    """
    phi = (j + 0.5) * ts.angle
    em = np.array([math.cos(phi), math.sin(phi), 0.0])
    et = np.array([-math.sin(phi), math.cos(phi), 0.0])
    mid = centers + ts.axis_offset * (T @ em)
    tang = T @ et
    return mid - ts.half_length * tang, mid + ts.half_length * tang


def _sector_frame(phi: float) -> np.ndarray:
    """Rotation about z taking the tangent direction at angle ``phi`` to +x."""
    t = -(phi + math.pi / 2)
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def circle_class_net() -> np.ndarray:
    """Axis-direction classes for spatial circles: unoriented net of angular radius pi/12."""
    return band_direction_net(math.pi / 12, hemisphere=True).directions


def sector_segments_world(C: Circles3D, ci: np.ndarray, tags: np.ndarray, r: float, eps: float):
    """Axis segment endpoints (in input coordinates) behind raw candidate tags.

    ``tags`` are the ``class * sectors + sector`` values returned with raw
    point-circle candidates.
    """
    net = circle_class_net()
    ts = torus_sectors(r, eps)
    A = np.zeros((len(ci), 3))
    B = np.zeros((len(ci), 3))
    k_all, j_all = np.divmod(np.asarray(tags), ts.count)
    for k in np.unique(k_all):
        Ru = rotation_to(net[k])
        for j in np.unique(j_all[k_all == k]):
            sel = np.flatnonzero((k_all == k) & (j_all == j))
            cen = C.centers[ci[sel]] @ Ru.T
            nrm = C.axes[ci[sel]] @ Ru.T
            nrm[nrm[:, 2] < 0] *= -1.0
            a, b = sector_axis_segments(cen, rotations_from_z(nrm), ts, int(j))
            A[sel], B[sel] = a @ Ru, b @ Ru
    return A, B


def _point_circle_3d_raw(X: np.ndarray, C: Circles3D, r: float, eps: float, metrics: RunMetrics):
    """Raw candidate (point, circle, tag) triples; tag = class * sectors + sector."""
    net = circle_class_net()
    lab = np.argmax(np.abs(C.axes @ net.T), axis=1)
    ts = torus_sectors(r, eps)
    w = ts.slab_width
    eps_w = UNIT_TO_SQUARE.eps(ts.eps_line)
    frames = [_sector_frame((j + 0.5) * ts.angle) for j in range(ts.count)]
    S = np.stack(frames)
    metrics.extra.update(sectors=ts.count, eps_line=ts.eps_line, classes=len(net))
    rp, rc, tags, strategies = [], [], [], []
    for k in range(len(net)):
        idx = np.flatnonzero(lab == k)
        if not len(idx):
            continue
        Ru = rotation_to(net[k])
        cen = C.centers[idx] @ Ru.T
        nrm = C.axes[idx] @ Ru.T
        nrm[nrm[:, 2] < 0] *= -1.0
        T = rotations_from_z(nrm)
        Xc = X @ Ru.T
        # all sectors at once: segments in each sector's frame
        seg_a, seg_b, seg_j = [], [], []
        for j in range(ts.count):
            A, B = sector_axis_segments(cen, T, ts, j)
            seg_a.append(A @ S[j].T)
            seg_b.append(B @ S[j].T)
            seg_j.append(np.full(len(idx), j))
        A = np.concatenate(seg_a)
        B = np.concatenate(seg_b)
        lj = np.concatenate(seg_j)
        lc = np.tile(np.arange(len(idx)), ts.count)
        s0, s1 = cylinder_slabs(A, B, ts.eps_line + 1e-12, w)
        lown, lslab = expand_ranges(s0, s1)
        # point slabs in every sector frame
        Xs = np.einsum("jab,mb->jma", S, Xc)
        pslab = np.floor(Xs[:, :, 0] / w).astype(np.int64)
        pj = np.repeat(np.arange(ts.count), len(X))
        pidx = np.tile(np.arange(len(X)), ts.count)
        cp, cl = encode_keys(np.column_stack([pj, pslab.ravel()]), np.column_stack([lj[lown], lslab]))
        used = np.isin(cp, cl)
        if not used.any():
            continue
        grp_codes, pgrp = np.unique(cp[used], return_inverse=True)
        sel = np.isin(cl, grp_codes)
        lgrp = np.searchsorted(grp_codes, cl[sel])
        l_ent = lown[sel]
        Pw = UNIT_TO_SQUARE.forward(Xs.reshape(-1, 3)[used])
        direc = B[l_ent] - A[l_ent]
        sa = direc[:, 1] / direc[:, 0]
        sc = direc[:, 2] / direc[:, 0]
        sb = A[l_ent, 1] - sa * A[l_ent, 0]
        sd = A[l_ent, 2] - sc * A[l_ent, 0]
        # segments only live inside their slab, so they count as a fraction of a full line
        n_eff = max(1, int(round(len(l_ent) * UNIT_TO_SQUARE.eps(w))))
        plan = plan_deltas(len(Pw), n_eff, eps_w, "point-line-3d")
        strategies.append(plan.strategy)
        pe, le, vis = _pl3_core(Pw, *_to_working_lines(sa, sb, sc, sd), eps_w, plan, pg=pgrp, lg=lgrp)
        metrics.cells_visited += vis + len(lown)
        rp.append(pidx[used][pe])
        rc.append(idx[lc[l_ent[le]]])
        tags.append(k * ts.count + lj[l_ent[le]])
    metrics.strategy = "+".join(sorted(set(strategies))) or "empty"
    if not rp:
        z = np.zeros(0, dtype=np.int64)
        return z, z, z
    return np.concatenate(rp), np.concatenate(rc), np.concatenate(tags)


def _as_circles3(C, r=None) -> Circles3D:
    if isinstance(C, Circles3D):
        return C
    arr = np.asarray(C, dtype=float).reshape(-1, 6)
    if r is None:
        raise ParameterError("radius required when circles are given as (centre, axis) rows")
    return Circles3D(arr[:, :3], r, arr[:, 3:])


def report_point_circle_3d(P, C, eps: float, r: float | None = None, mode: str = "filtered",
                           check_ratio: bool = True):
    """Point-circle pairs in space at distance <= eps, all circles of one radius r.

    Circles are grouped by axis direction (net of angular radius pi/12) and
    each circle is cut into about 2 pi / sqrt(eps) sectors. The part of the
    eps-torus near a sector sits inside a thin cylinder around a chord-parallel
    segment, so each sector becomes a point-line instance restricted to the
    x-slabs (in the sector's frame) that its cylinder meets.

    Requires eps < r / 10 unless ``check_ratio`` is False.
    """
    t0 = time.perf_counter()
    eps = check_eps(eps)
    check_mode(mode)
    X = _as_points3(P)
    C = _as_circles3(C, r)
    if len(X) == 0 or len(C) == 0:
        return empty_result(mode)
    r = float(C.radii[0]) if r is None else float(r)
    if not np.allclose(C.radii, r, rtol=1e-9, atol=1e-12):
        raise ParameterError("all circles must share the radius r")
    if check_ratio and eps >= r / 10:
        raise ParameterError("eps must be smaller than r / 10")
    if eps >= r:
        raise ParameterError("eps must be smaller than r")
    metrics = RunMetrics()
    rp, rc, tg = _point_circle_3d_raw(X, C, r, eps, metrics)
    res = finalize(rp, rc, lambda pi, ci: C.distances(X, pi, ci), eps, mode, metrics, tags=tg)
    metrics.elapsed_ms = 1e3 * (time.perf_counter() - t0)
    return res
