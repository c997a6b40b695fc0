"""Result containers and run counters."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np

from .grid import unique_pairs


@dataclass
class RunMetrics:
    """Work counters of one algorithm run.

    ``cells_visited`` counts object-side cell probes (primal crossings, dual
    crossings, neighbour probes). ``candidates`` counts raw emitted pairs before
    deduplication, ``distinct`` after it.
    """

    cells_visited: int = 0
    candidates: int = 0
    distinct: int = 0
    k_filtered: int = 0
    max_multiplicity: int = 0
    max_distortion: float = 1.0
    elapsed_ms: float = 0.0
    strategy: str = ""
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def dup_factor(self) -> int:
        return self.max_multiplicity

    @property
    def mean_multiplicity(self) -> float:
        return self.candidates / self.distinct if self.distinct else 1.0


class IncidencePair(NamedTuple):
    point_index: int
    object_index: int
    exact_distance: float
    subproblem_tag: int = 0


@dataclass
class IncidenceResult:
    """Distinct (point, object) pairs with exact distances.

    ``pairs`` is an int array of shape (k, 2) sorted lexicographically.
    """

    pairs: np.ndarray
    distances: np.ndarray
    metrics: RunMetrics
    tags: np.ndarray | None = None

    def __len__(self):
        return len(self.pairs)

    def as_set(self) -> set[tuple[int, int]]:
        return set(map(tuple, self.pairs.tolist()))

    def records(self) -> list[IncidencePair]:
        tags = self.tags if self.tags is not None else np.zeros(len(self.pairs), dtype=np.int64)
        return [IncidencePair(int(p), int(o), float(d), int(t))
                for (p, o), d, t in zip(self.pairs, self.distances, tags)]


@dataclass
class BipartiteCover:
    """Candidate pairs as a union of complete bipartite blocks."""

    blocks: list[tuple[np.ndarray, np.ndarray]]
    metrics: RunMetrics

    def __len__(self):
        return len(self.blocks)

    def expand(self) -> np.ndarray:
        """Multiset of (point, object) pairs, one row per block incidence."""
        parts = [np.stack(np.meshgrid(pi, oi, indexing="ij"), -1).reshape(-1, 2)
                 for pi, oi in self.blocks if len(pi) and len(oi)]
        if not parts:
            return np.zeros((0, 2), dtype=np.int64)
        return np.concatenate(parts).astype(np.int64)


def finalize(raw_p, raw_o, dist_fn, eps: float, mode: str, metrics: RunMetrics,
             tags=None) -> IncidenceResult | int:
    """Deduplicate raw candidates, attach exact distances and apply the mode.

    ``dist_fn(pi, oi)`` returns exact distances in the caller's original frame.
    """
    raw_p = np.asarray(raw_p, dtype=np.int64)
    raw_o = np.asarray(raw_o, dtype=np.int64)
    pi, oi, cnt = unique_pairs(raw_p, raw_o, return_counts=True)
    metrics.candidates = int(len(raw_p))
    metrics.distinct = int(len(pi))
    metrics.max_multiplicity = int(cnt.max()) if len(cnt) else 0
    d = dist_fn(pi, oi) if len(pi) else np.zeros(0)
    metrics.max_distortion = float(max(1.0, d.max() / eps)) if len(d) else 1.0
    keep = d <= eps
    metrics.k_filtered = int(keep.sum())
    t = None
    if tags is not None and len(pi):
        # first tag seen for each distinct pair
        tags = np.asarray(tags)
        nb = int(raw_o.max()) + 1
        code = raw_p * nb + raw_o
        order = np.argsort(code, kind="stable")
        first = np.unique(code[order], return_index=True)[1]
        t = tags[order[first]]
    if mode == "count":
        return metrics.k_filtered
    if mode == "filtered":
        return IncidenceResult(np.column_stack([pi[keep], oi[keep]]), d[keep], metrics,
                               None if t is None else t[keep])
    return IncidenceResult(np.column_stack([pi, oi]), d, metrics, t)


def empty_result(mode: str, strategy: str = "empty") -> IncidenceResult | int:
    m = RunMetrics(strategy=strategy)
    if mode == "count":
        return 0
    if mode == "bipartite":
        return BipartiteCover([], m)
    return IncidenceResult(np.zeros((0, 2), dtype=np.int64), np.zeros(0), m)


MODES = ("candidates", "filtered", "count", "bipartite")


def check_mode(mode: str, allowed=("candidates", "filtered", "count")) -> str:
    from .errors import ParameterError

    if mode not in allowed:
        raise ParameterError(f"mode must be one of {allowed}, got {mode!r}")
    return mode
