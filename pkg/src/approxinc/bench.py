"""Benchmark harness: algorithm registry, sweeps and CSV output."""
from __future__ import annotations

import csv
import io
import itertools
import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable

import numpy as np

from .baselines import PAIR_BUDGET, TRIPLE_BUDGET, brute_force_pairs, brute_force_triples, \
    naive_duality_report, naive_grid_report
from .errors import OracleBudgetError, ParameterError
from .geom import Triangle
from .incidence2d import (report_congruent_pairs_2d_dual, report_congruent_pairs_2d_sector,
                          report_point_circle_2d, report_point_line_2d)
from .incidence3d import (report_congruent_pairs_3d, report_point_circle_3d, report_point_line_3d,
                          report_point_plane_3d)
from .instances import DEFAULTS, KINDS, Instance, gen_random_instance
from .triangles import TriangleQuery, report_congruent_triangles

log = logging.getLogger(__name__)

CSV_FIELDS = ("kind", "algo", "m", "n", "eps", "param", "seed", "mode", "cells_visited", "candidates",
              "k_true", "k_filtered", "dup_factor", "max_distortion", "elapsed_ms")

RESERVED_ALGOS = ("large-n",)


def _radius(inst: Instance) -> float:
    return float(inst.objects.radius) if hasattr(inst.objects, "radius") else float(inst.params["r"])


def _efficient(inst: Instance, eps: float, mode: str):
    k, P, S = inst.kind, inst.points, inst.objects
    if k == "line2d":
        return report_point_line_2d(P, S, eps, mode)
    if k == "plane3":
        return report_point_plane_3d(P, S, eps, mode)
    if k == "line3":
        return report_point_line_3d(P, S, eps, mode)
    if k == "circle2":
        return report_point_circle_2d(P, S, eps, inst.params.get("r1"), inst.params.get("r2"), mode)
    if k == "congruent2":
        return report_congruent_pairs_2d_sector(P, S.centers, _radius(inst), eps, mode)
    if k == "congruent3":
        return report_congruent_pairs_3d(P, S.centers, _radius(inst), eps, mode)
    if k == "circle3":
        return report_point_circle_3d(P, S, eps, _radius(inst), mode)
    return report_congruent_triangles(P, TriangleQuery(Triangle(*inst.params["tri"]), eps), mode)


def _congruent_dual(inst: Instance, eps: float, mode: str):
    if inst.kind != "congruent2":
        raise ParameterError("algorithm 'dual' only applies to congruent2")
    return report_congruent_pairs_2d_dual(inst.points, inst.objects.centers, _radius(inst), eps, mode)


def _naive(inst: Instance, eps: float, mode: str):
    if inst.kind == "triangle":
        raise ParameterError("no naive baseline for triangles")
    return naive_grid_report(inst.points, inst.objects, eps, mode)


def _naive_duality(inst: Instance, eps: float, mode: str):
    return naive_duality_report(inst.points, inst.objects, eps, mode)


ALGORITHMS: dict[str, Callable] = {
    "efficient": _efficient,
    "dual": _congruent_dual,
    "naive": _naive,
    "naive-duality": _naive_duality,
}


def run_algorithm(inst: Instance, algo: str, eps: float, mode: str = "filtered"):
    """Run ``algo`` on ``inst``; ``mode`` is passed through to the algorithm."""
    if algo in RESERVED_ALGOS:
        raise ParameterError(f"algorithm {algo!r} is reserved in the CSV schema but not implemented")
    if algo not in ALGORITHMS:
        raise ParameterError(f"unknown algorithm {algo!r}; choose from {', '.join(ALGORITHMS)}")
    return ALGORITHMS[algo](inst, eps, mode)


def oracle(inst: Instance, eps: float):
    """Brute-force ground truth (pairs, or triples for triangles)."""
    if inst.kind == "triangle":
        return brute_force_triples(inst.points, Triangle(*inst.params["tri"]), eps, TRIPLE_BUDGET)
    return brute_force_pairs(inst.points, inst.objects, eps, PAIR_BUDGET)


@dataclass
class BenchConfig:
    """One sweep: the product of algorithms, sizes, tolerances and seeds.

    With ``equal_mn`` each m is paired with n = m instead of taking the
    product with ``ns``.
    """

    kind: str
    algos: list[str] = field(default_factory=lambda: ["efficient"])
    ms: list[int] = field(default_factory=lambda: [1000])
    ns: list[int] = field(default_factory=lambda: [1000])
    epss: list[float] = field(default_factory=lambda: [0.01])
    seeds: list[int] = field(default_factory=lambda: [0])
    mode: str = "count"
    params: dict = field(default_factory=dict)
    equal_mn: bool = False
    with_oracle: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown kind {self.kind!r}")
        if self.mode not in ("count", "report", "candidates"):
            raise ParameterError("mode must be count, report or candidates")
        for name in ("algos", "ms", "ns", "epss", "seeds"):
            if not list(getattr(self, name)):
                raise ParameterError(f"empty sweep list {name}")
        for a in self.algos:
            if a not in ALGORITHMS and a not in RESERVED_ALGOS:
                raise ParameterError(f"unknown algorithm {a!r}")

    def points(self) -> Iterable[tuple]:
        sizes = [(m, m) for m in self.ms] if self.equal_mn else list(itertools.product(self.ms, self.ns))
        for (m, n), eps, seed, algo in itertools.product(sizes, self.epss, self.seeds, self.algos):
            yield algo, m, n, eps, seed


@dataclass
class BenchRecord:
    kind: str
    algo: str
    m: int
    n: int
    eps: float
    param: str
    seed: int
    mode: str
    cells_visited: int
    candidates: int
    k_true: int | None
    k_filtered: int
    dup_factor: int
    max_distortion: float
    elapsed_ms: float

    @property
    def ratio(self) -> float:
        """Raw candidates per filtered pair; at least 1 since every filtered pair is a candidate."""
        return max(1.0, self.candidates / max(self.k_filtered, 1))

    def row(self) -> dict:
        d = asdict(self)
        d["k_true"] = "" if self.k_true is None else self.k_true
        return d


def param_string(kind: str, params: dict) -> str:
    if kind in ("congruent2", "congruent3", "circle3"):
        return repr(float(params.get("r", DEFAULTS["r"][kind])))
    if kind == "circle2":
        return f"{params.get('r1', DEFAULTS['r1'])}:{params.get('r2', DEFAULTS['r2'])}"
    if kind == "triangle":
        return ":".join(str(v) for v in params.get("tri", DEFAULTS["tri"]))
    return ""


def oracle_count(inst: Instance, eps: float) -> int | None:
    """Ground-truth count, or None (with a warning) when the oracle refuses."""
    try:
        return oracle(inst, eps).count
    except OracleBudgetError as exc:
        log.warning("%s; k_true left blank", exc)
        return None


_UNSET = object()


def bench_one(inst: Instance, algo: str, eps: float, mode: str, with_oracle: bool = True,
              k_true=_UNSET) -> BenchRecord:
    """Run one algorithm on one instance and collect its counters.

    The algorithm always runs in candidates mode so the counters are
    available; the filtered count is taken from the exact distances.
    ``k_true`` may be passed in to reuse an oracle count.
    """
    res = run_algorithm(inst, algo, eps, "candidates")
    met = res.metrics
    if k_true is _UNSET:
        k_true = oracle_count(inst, eps) if with_oracle else None
    return BenchRecord(inst.kind, algo, inst.m, inst.n, eps, param_string(inst.kind, inst.params),
                       inst.seed, mode, int(met.cells_visited), int(met.candidates), k_true,
                       int(met.k_filtered), int(met.max_multiplicity), float(met.max_distortion),
                       round(float(met.elapsed_ms), 3))


def run_benchmark(config: BenchConfig, progress: Callable | None = None) -> list[BenchRecord]:
    """One record per sweep point, in config order."""
    out = []
    cache: dict = {}
    truth: dict = {}
    for algo, m, n, eps, seed in config.points():
        key = (m, n, seed)
        if key not in cache:
            cache.clear()
            truth.clear()
            cache[key] = gen_random_instance(config.kind, m, n, seed, config.params)
        if eps not in truth:
            truth[eps] = oracle_count(cache[key], eps) if config.with_oracle else None
        rec = bench_one(cache[key], algo, eps, config.mode, config.with_oracle, truth[eps])
        out.append(rec)
        if progress:
            progress(rec)
    return out


def records_to_csv(records: Iterable[BenchRecord], fh=None) -> str | None:
    """Write records as CSV to ``fh``, or return the text if ``fh`` is None."""
    buf = io.StringIO() if fh is None else fh
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow(r.row())
    return buf.getvalue() if fh is None else None


def read_csv(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


def summarize(records: list[BenchRecord]) -> dict:
    """Median and spread of max distortion per (kind, algo, eps)."""
    groups: dict = {}
    for r in records:
        groups.setdefault((r.kind, r.algo, r.eps), []).append(r.max_distortion)
    return {k: {"median": float(np.median(v)), "min": float(np.min(v)), "max": float(np.max(v)), "runs": len(v)}
            for k, v in groups.items()}
