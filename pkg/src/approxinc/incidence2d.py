"""Planar approximate incidences: points vs lines, congruent circles and arbitrary circles."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .geom import Circles2D, Line2, Lines2D, UNIT_TO_SQUARE, check_eps, normalize_slope_classes_2d
from .grid import (PolarGrid, UniformGrid, build_grid, plane_crossings_3d, circle_crossings_2d, closed_index_range,
                   dual_circle_polar_crossings, encode_keys, expand_ranges, join_codes,
                   line_crossings_2d)
from .metrics import BipartiteCover, RunMetrics, check_mode, empty_result, finalize

SQRT2 = math.sqrt(2.0)

STRATEGIES = ("primal-dual", "primal-only", "dual-only", "roles-swapped", "empty")


@dataclass(frozen=True)
class DeltaPlan:
    """Primal cell size ``delta1``, dual cell size ``delta2`` and the chosen strategy."""

    delta1: float
    delta2: float
    strategy: str
    swapped: bool = False


def plan_deltas(m: int, n: int, eps: float, constraint_profile: str = "point-line-2d",
                r: float | None = None) -> DeltaPlan:
    """Choose cell sizes for the primal-dual schemes.

    ``m`` is the number of points, ``n`` the number of objects. ``eps`` is the
    tolerance in the frame the algorithm runs in.
    """
    if m == 0 or n == 0:
        return DeltaPlan(0.0, 0.0, "empty")
    if constraint_profile == "point-line-2d":
        d1 = math.sqrt(n * eps / m)
        if d1 > 1.0:
            return DeltaPlan(1.0, eps, "dual-only")
        if d1 < SQRT2 * eps:
            # the primal cell must be at least sqrt(2) eps for the above/below argument
            return DeltaPlan(SQRT2 * eps, 1.0 / SQRT2, "primal-only")
        return DeltaPlan(d1, eps / d1, "primal-dual")
    if constraint_profile == "point-plane-3d":
        d1 = (n * eps * eps / m) ** 0.25
        if d1 > 1.0:
            return DeltaPlan(1.0, eps, "dual-only")
        if d1 < SQRT2 * eps:
            return DeltaPlan(SQRT2 * eps, 1.0 / SQRT2, "primal-only")
        return DeltaPlan(d1, eps / d1, "primal-dual")
    if constraint_profile == "point-line-3d":
        d1 = (eps * eps * n / m) ** (1.0 / 3.0)
        if d1 > 1.0:
            return DeltaPlan(1.0, eps, "dual-only")
        if d1 < SQRT2 * eps:
            return DeltaPlan(SQRT2 * eps, 1.0 / SQRT2, "primal-only")
        return DeltaPlan(d1, eps / d1, "primal-dual")
    if constraint_profile == "point-circle-2d":
        if r is None:
            raise ParameterError("point-circle-2d planning needs r (the smallest radius)")
        d1 = (eps * eps * n / m) ** (1.0 / 3.0)
        if d1 >= r:
            return DeltaPlan(r, eps / r, "dual-only")
        if d1 < eps:
            return DeltaPlan(eps, 1.0, "primal-only")
        return DeltaPlan(d1, eps / d1, "primal-dual")
    if constraint_profile == "congruent-2d":
        if r is None:
            raise ParameterError("congruent-2d planning needs r")
        swapped = m > n
        if swapped:
            m, n = n, m
        d1 = min(math.sqrt(r * n * eps / m), r / 4.0)
        if d1 < SQRT2 * eps or d1 < 2.0 * eps:
            return DeltaPlan(eps, 1.0, "dual-only", swapped)
        return DeltaPlan(d1, SQRT2 * eps / d1, "primal-dual", swapped)
    raise ParameterError(f"unknown constraint profile {constraint_profile!r}")


def _as_lines(L) -> Lines2D:
    if isinstance(L, Lines2D):
        return L
    L = list(L)
    if L and isinstance(L[0], Line2):
        return Lines2D.from_lines(L)
    arr = np.asarray(L, dtype=float).reshape(-1, 2)
    return Lines2D.from_slopes(arr[:, 0], arr[:, 1])


def _as_points2(P) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    return P.reshape(-1, 2) if P.size else np.zeros((0, 2))


# ---------------------------------------------------------------------------
# points vs lines
# ---------------------------------------------------------------------------


def _pl2_core(X: np.ndarray, c: np.ndarray, d: np.ndarray, eps: float, plan: DeltaPlan):
    """Raw candidates for points ``X`` and lines ``y = c x + d`` with |c| <= 1.

    Returns (point idx, line idx, block code, cells visited). Pairs with the same
    block code form one complete bipartite block.
    """
    if plan.strategy == "dual-only":
        lo, hi = X.min(axis=0), X.max(axis=0)
        side = float(np.max(hi - lo)) + 2 * SQRT2 * eps
        centre = 0.5 * (lo + hi)
        grid = build_grid(centre - side / 2, centre + side / 2, side)
        d1 = side
    else:
        d1 = plan.delta1
        lo, hi = X.min(axis=0), X.max(axis=0)
        grid = build_grid([lo[0], lo[1] - d1], [hi[0], hi[1] + d1], d1)
        grid = type(grid)(grid.origin, grid.extents, np.maximum(grid.counts, [1, 3]))
    pk = grid.locate(X)
    # lines crossing each cell
    lown, lkey = line_crossings_2d(c, d, grid)
    visited = len(lown)
    if plan.strategy == "dual-only":
        copies = [0]
    else:
        copies = [-1, 0, 1]
    p_idx = np.repeat(np.arange(len(X)), len(copies))
    p_key = np.repeat(pk, len(copies), axis=0)
    p_key[:, 1] += np.tile(copies, len(X))
    ok = (p_key[:, 1] >= 0) & (p_key[:, 1] < grid.counts[1])
    p_idx, p_key = p_idx[ok], p_key[ok]
    if plan.strategy == "primal-only":
        cp, cl = encode_keys(p_key, lkey)
        ia, jb = join_codes(cp, cl)
        return p_idx[ia], lown[jb], cp[ia], visited
    d2 = eps / d1
    na = int(math.ceil(1.0 / d2 - 1e-12))
    hb = 2.0 * d1 * d2
    # dual points of lines in each cell's local frame
    oc = grid.origin + (lkey + 0.5) * grid.extents
    dl = c[lown] * oc[:, 0] + d[lown] - oc[:, 1]
    la = np.clip(np.floor((c[lown] + 1.0) / (2 * d2)).astype(np.int64), 0, na - 1)
    lb = np.clip(np.floor((-dl + d1) / hb).astype(np.int64), 0, na - 1)
    # dual lines of points: y = xi x - eta per column
    op = grid.origin + (p_key + 0.5) * grid.extents
    xi = X[p_idx, 0] - op[:, 0]
    eta = X[p_idx, 1] - op[:, 1]
    own = np.repeat(np.arange(len(p_idx)), na)
    col = np.tile(np.arange(na, dtype=np.int64), len(p_idx))
    xa = -1.0 + 2 * d2 * col
    xb = xa + 2 * d2
    ya = xi[own] * xa - eta[own]
    yb = xi[own] * xb - eta[own]
    r0, r1 = closed_index_range(np.minimum(ya, yb), np.maximum(ya, yb), -d1, hb)
    r0 = np.maximum(r0 - 1, 0)
    r1 = np.minimum(r1 + 1, na - 1)
    o2, row = expand_ranges(r0, r1)
    visited += len(o2)
    pe = own[o2]
    pkeys = np.column_stack([p_key[pe], col[o2], row])
    lkeys = np.column_stack([lkey, la, lb])
    cp, cl = encode_keys(pkeys, lkeys)
    ia, jb = join_codes(cp, cl)
    return p_idx[pe[ia]], lown[jb], cp[ia], visited


def point_line_2d_raw(X: np.ndarray, lines: Lines2D, eps: float, metrics: RunMetrics | None = None):
    """Raw candidate multiset (point, line, block code, slope class), duplicates kept.

    Pairs sharing a block code form one complete bipartite block.
    """
    metrics = RunMetrics() if metrics is None else metrics
    eps_w = UNIT_TO_SQUARE.eps(eps)
    m = len(X)
    rp, ro, codes, tags, strategies = [], [], [], [], []
    code_base = 0
    for k, cls in enumerate(normalize_slope_classes_2d(lines)):
        if not len(cls.indices):
            continue
        plan = plan_deltas(m, len(cls.indices), eps_w)
        strategies.append(plan.strategy)
        W = UNIT_TO_SQUARE.forward(cls.rotate(X))
        c = cls.slopes
        d = 0.5 * (cls.intercepts - c + 1.0)
        pi, li, code, vis = _pl2_core(W, c, d, eps_w, plan)
        metrics.cells_visited += vis
        rp.append(pi)
        ro.append(cls.indices[li])
        codes.append(code + code_base)
        code_base += int(code.max()) + 1 if len(code) else 0
        tags.append(np.full(len(pi), k))
        metrics.extra.setdefault("plans", []).append(plan)
    metrics.strategy = "+".join(sorted(set(strategies)))
    if not rp:
        z = np.zeros(0, dtype=np.int64)
        return z, z, z, z
    return np.concatenate(rp), np.concatenate(ro), np.concatenate(codes), np.concatenate(tags)


def report_point_line_2d(P, L, eps: float, mode: str = "filtered"):
    """Report point-line pairs at distance <= eps.

    Modes: ``filtered`` (exact set), ``candidates`` (all raw candidates with
    exact distances), ``count`` and ``bipartite`` (compact block cover of the
    raw candidate multiset).
    """
    t0 = time.perf_counter()
    eps = check_eps(eps)
    check_mode(mode, ("candidates", "filtered", "count", "bipartite"))
    X = _as_points2(P)
    lines = _as_lines(L)
    if len(X) == 0 or len(lines) == 0:
        return empty_result(mode)
    metrics = RunMetrics()
    rp, ro, code, tags = point_line_2d_raw(X, lines, eps, metrics)
    if mode == "bipartite":
        order = np.argsort(code, kind="stable")
        code, bp, bo = code[order], rp[order], ro[order]
        starts = np.flatnonzero(np.r_[True, code[1:] != code[:-1]]) if len(code) else np.zeros(0, dtype=np.int64)
        ends = np.r_[starts[1:], len(code)]
        blocks = [(np.unique(bp[s:e]), np.unique(bo[s:e])) for s, e in zip(starts, ends)]
        metrics.candidates = len(rp)
        metrics.elapsed_ms = 1e3 * (time.perf_counter() - t0)
        return BipartiteCover(blocks, metrics)
    res = finalize(rp, ro, lambda pi, oi: lines.distances(X, pi, oi), eps, mode, metrics, tags=tags)
    metrics.elapsed_ms = 1e3 * (time.perf_counter() - t0)
    return res


# ---------------------------------------------------------------------------
# congruent pairs: sector method
# ---------------------------------------------------------------------------


def sector_rectangle(r: float, eps: float, phi: float) -> tuple[float, float, float]:
    """Enclosing rectangle of an annulus sector of angle ``phi`` centred on +x.

    Returns (x_lo, x_hi, half_height): x in [x_lo, x_hi], |y| <= half_height.
    """
    return (r - eps) * math.cos(phi / 2), r + eps, (r + eps) * math.sin(phi / 2)


def _check_congruent(r: float, eps: float):
    if not (0.0 < r <= 0.5):
        raise ParameterError(f"radius must lie in (0, 1/2], got {r}")
    if eps >= r:
        raise ParameterError("eps must be smaller than the radius")


def report_congruent_pairs_2d_sector(P, Q, r: float, eps: float, mode: str = "filtered",
                                     chunk_entries: int = 3_000_000):
    """Pairs (p, q) with | |pq| - r | <= eps via canonical arc directions.

    The circle of directions is cut into ``ceil(2 pi / sqrt(eps))`` arcs. For
    each arc the plane is rotated so the arc is centred on +x, points of ``P``
    are bucketed in a grid of the enclosing rectangle's size, and every ``q``
    probes the cells met by the rectangle translated to ``q``.
    """
    t0 = time.perf_counter()
    eps = check_eps(eps)
    check_mode(mode)
    _check_congruent(r, eps)
    P, Q = _as_points2(P), _as_points2(Q)
    if len(P) == 0 or len(Q) == 0:
        return empty_result(mode)
    K = int(math.ceil(2 * math.pi / math.sqrt(eps)))
    phi = 2 * math.pi / K
    xlo, xhi, hh = sector_rectangle(r, eps, phi)
    W, H = xhi - xlo, 2 * hh
    metrics = RunMetrics(strategy="sector")
    metrics.extra.update(arcs=K, rect_short=W, rect_long=H)
    m, n = len(P), len(Q)
    step = max(1, chunk_entries // (m + 9 * n))
    rp, rq, tags = [], [], []
    for s in range(0, K, step):
        arcs = np.arange(s, min(K, s + step))
        th = (arcs + 0.5) * phi
        ct, st = np.cos(th)[:, None], np.sin(th)[:, None]
        # rotation by -theta
        px = ct * P[None, :, 0] + st * P[None, :, 1]
        py = -st * P[None, :, 0] + ct * P[None, :, 1]
        qx = ct * Q[None, :, 0] + st * Q[None, :, 1]
        qy = -st * Q[None, :, 0] + ct * Q[None, :, 1]
        A = len(arcs)
        pkx = np.floor(px / W).astype(np.int64).ravel()
        pky = np.floor(py / H).astype(np.int64).ravel()
        parc = np.repeat(np.arange(A), m)
        pidx = np.tile(np.arange(m), A)
        x0, x1 = closed_index_range(qx + xlo, qx + xhi, 0.0, W)
        y0, y1 = closed_index_range(qy - hh, qy + hh, 0.0, H)
        ox, vx = expand_ranges(x0.ravel(), x1.ravel())
        cnty = (y1 - y0 + 1).ravel()
        # product of x and y ranges per (arc, q)
        rep = cnty[ox]
        e = np.repeat(np.arange(len(ox)), rep)
        start = np.cumsum(rep) - rep
        vy = y0.ravel()[ox[e]] + (np.arange(len(e)) - np.repeat(start, rep))
        qflat = ox[e]
        metrics.cells_visited += len(e)
        qarc, qidx = np.divmod(qflat, n)
        cp, cq = encode_keys(np.column_stack([parc, pkx, pky]), np.column_stack([qarc, vx[e], vy]))
        ia, jb = join_codes(cp, cq)
        rp.append(pidx[ia])
        rq.append(qidx[jb])
        tags.append(arcs[parc[ia]])
    rp, rq = np.concatenate(rp), np.concatenate(rq)
    res = finalize(rp, rq, lambda pi, qi: np.abs(np.linalg.norm(P[pi] - Q[qi], axis=1) - r), eps, mode,
                   metrics, tags=np.concatenate(tags))
    metrics.elapsed_ms = 1e3 * (time.perf_counter() - t0)
    return res


# ---------------------------------------------------------------------------
# congruent pairs: duality method
# ---------------------------------------------------------------------------


def _grid_probe_pairs(Pts: np.ndarray, centers: np.ndarray, r: float, h: float):
    """Naive eps-grid: points bucketed at cell size h; circles probe crossed cells and neighbours."""
    lo = Pts.min(axis=0) - h
    hi = Pts.max(axis=0) + h
    grid = build_grid(lo, hi, h)
    pk = grid.locate(Pts)
    own, key = circle_crossings_2d(centers, np.full(len(centers), r), grid)
    off = np.array([(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1)])
    own9 = np.repeat(own, 9)
    key9 = np.repeat(key, 9, axis=0) + np.tile(off, (len(own), 1))
    ok = np.all((key9 >= 0) & (key9 < grid.counts), axis=1)
    own9, key9 = own9[ok], key9[ok]
    code = encode_keys(np.column_stack([own9, key9]))[0]
    _, first = np.unique(code, return_index=True)
    own9, key9 = own9[first], key9[first]
    cp, cc = encode_keys(pk, key9)
    ia, jb = join_codes(cp, cc)
    return ia, own9[jb], len(own9) + len(own)


def report_congruent_pairs_2d_dual(P, Q, r: float, eps: float, mode: str = "filtered"):
    """Pairs (p, q) with | |pq| - r | <= eps via a primal grid and polar dual grids.

    Roles are flipped so the primal point set is the smaller one. Each primal
    cell S_i (side delta1) collects the points in its 3x3 neighbourhood and the
    circles of radius r about Q crossing S_i. The centres q of those circles lie
    in an annulus about the cell centre o_i, which is gridded in polar
    coordinates (radial step 2 eps, angular step 2 pi delta2); every point p
    contributes the polar cells crossed by the circle of radius r about p,
    widened by one radial row.
    """
    t0 = time.perf_counter()
    eps = check_eps(eps)
    check_mode(mode)
    _check_congruent(r, eps)
    P0, Q0 = _as_points2(P), _as_points2(Q)
    if len(P0) == 0 or len(Q0) == 0:
        return empty_result(mode)
    plan = plan_deltas(len(P0), len(Q0), eps, "congruent-2d", r=r)
    A, B = (Q0, P0) if plan.swapped else (P0, Q0)
    metrics = RunMetrics(strategy=plan.strategy + ("/swapped" if plan.swapped else ""))
    metrics.extra["plan"] = plan
    if plan.strategy == "dual-only":
        # circles about the smaller set probe an eps-grid of the larger set
        ib, ia, vis = _grid_probe_pairs(B, A, r, eps)
        metrics.cells_visited = vis
    else:
        ia, ib, vis = _congruent_dual_core(A, B, r, eps, plan)
        metrics.cells_visited = vis
    rp, rq = (ib, ia) if plan.swapped else (ia, ib)
    res = finalize(rp, rq, lambda pi, qi: np.abs(np.linalg.norm(P0[pi] - Q0[qi], axis=1) - r), eps, mode,
                   metrics)
    metrics.elapsed_ms = 1e3 * (time.perf_counter() - t0)
    return res


def _congruent_dual_core(A: np.ndarray, B: np.ndarray, r: float, eps: float, plan: DeltaPlan):
    d1, d2 = plan.delta1, plan.delta2
    lo, hi = A.min(axis=0), A.max(axis=0)
    grid = build_grid(lo - d1, hi + d1, d1)
    grid = type(grid)(grid.origin, grid.extents, np.maximum(grid.counts, 3))
    ak = grid.locate(A)
    # circles about B crossing each primal cell
    cown, ckey = circle_crossings_2d(B, np.full(len(B), r), grid)
    visited = len(cown)
    # points copied into the 3x3 neighbourhood
    off = np.array([(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1)])
    a_idx = np.repeat(np.arange(len(A)), 9)
    a_key = np.repeat(ak, 9, axis=0) + np.tile(off, (len(A), 1))
    ok = np.all((a_key >= 0) & (a_key < grid.counts), axis=1)
    a_idx, a_key = a_idx[ok], a_key[ok]
    half_diag = d1 / SQRT2
    rho0 = r - half_diag
    drho = 2.0 * eps
    nrho = int(math.ceil(2 * half_diag / drho - 1e-12))
    nth = int(math.ceil(1.0 / d2 - 1e-12))
    dth = 2 * math.pi / nth
    # polar location of each centre b about the cell centre
    oc = grid.origin + (ckey + 0.5) * grid.extents
    v = B[cown] - oc
    rho = np.hypot(v[:, 0], v[:, 1])
    th = np.mod(np.arctan2(v[:, 1], v[:, 0]), 2 * math.pi)
    bi = np.clip(np.floor((rho - rho0) / drho).astype(np.int64), 0, nrho - 1)
    bj = np.clip(np.floor(th / dth).astype(np.int64), 0, nth - 1)
    # dual circles of the points, per polar column, rows widened by one
    oa = grid.origin + (a_key + 0.5) * grid.extents
    pg = PolarGrid(np.zeros(2), rho0, drho, nrho, dth, nth)
    own, pk = dual_circle_polar_crossings(A[a_idx] - oa, r, pg, pad=1)
    visited += len(own)
    keys_a = np.column_stack([a_key[own], pk])
    keys_b = np.column_stack([ckey, bi, bj])
    ca, cb = encode_keys(keys_a, keys_b)
    ia, jb = join_codes(ca, cb)
    return a_idx[own[ia]], cown[jb], visited


# ---------------------------------------------------------------------------
# points vs arbitrary circles: power, lifting and 3D duality
# ---------------------------------------------------------------------------


def report_point_circle_2d(P, C, eps: float, r1: float | None = None, r2: float | None = None,
                           mode: str = "filtered"):
    """Point-circle pairs at distance <= eps for circles with radii in [r1, r2].

    Each primal cell S_i (side delta1) collects the points in its 3x3
    neighbourhood and the circles crossing it. In the cell's local frame a
    point p lifts to (p, |p|^2) and a circle (q, r) to the plane
    z = 2 q.x + r^2 - |q|^2, whose vertical distance is the power of p. The
    lifted problem is dualized (planes become points c* = (2q, |q|^2 - r^2),
    points become planes) and solved on a 3D grid of the box holding the c*.
    """
    t0 = time.perf_counter()
    eps = check_eps(eps)
    check_mode(mode)
    X = _as_points2(P)
    if not isinstance(C, Circles2D):
        arr = np.asarray(C, dtype=float).reshape(-1, 3)
        C = Circles2D(arr[:, :2], arr[:, 2])
    if len(X) == 0 or len(C) == 0:
        return empty_result(mode)
    r1 = float(C.radii.min()) if r1 is None else float(r1)
    r2 = float(C.radii.max()) if r2 is None else float(r2)
    if r1 <= 0 or r2 < r1:
        raise ParameterError("need 0 < r1 <= r2")
    if np.any(C.radii < r1 - 1e-12) or np.any(C.radii > r2 + 1e-12):
        raise ParameterError("circle radii outside [r1, r2]")
    if eps > r1:
        raise ParameterError("eps must not exceed r1")
    plan = plan_deltas(len(X), len(C), eps, "point-circle-2d", r=r1)
    metrics = RunMetrics(strategy=plan.strategy)
    metrics.extra["plan"] = plan
    pi, ci, vis = _point_circle_core(X, C, eps, r2, plan)
    metrics.cells_visited = vis
    res = finalize(pi, ci, lambda a, b: C.distances(X, a, b), eps, mode, metrics)
    metrics.elapsed_ms = 1e3 * (time.perf_counter() - t0)
    return res


def _point_circle_core(X, C: Circles2D, eps: float, r2: float, plan: DeltaPlan):
    lo, hi = X.min(axis=0), X.max(axis=0)
    if plan.strategy == "dual-only":
        side = float(np.max(hi - lo)) + 2 * eps
        centre = 0.5 * (lo + hi)
        grid = build_grid(centre - side / 2, centre + side / 2, side)
        d1 = side
        offs = np.zeros((1, 2), dtype=np.int64)
    else:
        d1 = plan.delta1
        grid = build_grid(lo - d1, hi + d1, d1)
        grid = type(grid)(grid.origin, grid.extents, np.maximum(grid.counts, 3))
        offs = np.array([(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1)])
    xk = grid.locate(X)
    cown, ckey = circle_crossings_2d(C.centers, C.radii, grid)
    visited = len(cown)
    p_idx = np.repeat(np.arange(len(X)), len(offs))
    p_key = np.repeat(xk, len(offs), axis=0) + np.tile(offs, (len(X), 1))
    ok = np.all((p_key >= 0) & (p_key < grid.counts), axis=1)
    p_idx, p_key = p_idx[ok], p_key[ok]
    if plan.strategy == "primal-only":
        cp, cc = encode_keys(p_key, ckey)
        ia, jb = join_codes(cp, cc)
        return p_idx[ia], cown[jb], visited
    d2 = eps / d1
    rho_c = d1 / SQRT2 if plan.strategy != "dual-only" else d1 / SQRT2
    L = 2.0 * (r2 + rho_c)
    Zh = rho_c * (2.0 * r2 + rho_c)
    nxy = int(math.ceil(1.0 / d2 - 1e-12))
    hxy = 2.0 * L / nxy
    hz = 3.0 * r2 * eps
    nz = max(1, int(math.ceil(2 * Zh / hz - 1e-12)))
    # dual points of the circles
    oc = grid.origin + (ckey + 0.5) * grid.extents
    qt = C.centers[cown] - oc
    cx = 2 * qt[:, 0]
    cy = 2 * qt[:, 1]
    cz = (qt * qt).sum(axis=1) - C.radii[cown] ** 2
    kx = np.clip(np.floor((cx + L) / hxy).astype(np.int64), 0, nxy - 1)
    ky = np.clip(np.floor((cy + L) / hxy).astype(np.int64), 0, nxy - 1)
    kz = np.clip(np.floor((cz + Zh) / hz).astype(np.int64), 0, nz - 1)
    # dual planes of the lifted points: z = xp X + yp Y - |p|^2
    op = grid.origin + (p_key + 0.5) * grid.extents
    pt = X[p_idx] - op
    dgrid = UniformGrid(np.array([-L, -L, -Zh]), np.array([hxy, hxy, hz]), np.array([nxy, nxy, nz]))
    own, k3 = plane_crossings_3d(pt[:, 0], pt[:, 1], -(pt * pt).sum(axis=1), dgrid, pad=1)
    visited += len(own)
    keys_p = np.column_stack([p_key[own], k3])
    keys_c = np.column_stack([ckey, kx, ky, kz])
    cp, cc = encode_keys(keys_p, keys_c)
    ia, jb = join_codes(cp, cc)
    return p_idx[own[ia]], cown[jb], visited
