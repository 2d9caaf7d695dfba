"""Instrumented Lloyd iteration with exact potential bookkeeping.

Cluster ids are fixed at seeding (0..k-1). A cluster that loses every point
is retired and its id is never reused, so ids stay comparable across the
whole run. Potentials are always recomputed from their definition.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import bisector, distance_to_hyperplane
from .kernels import mix_seed, nearest_center

INIT_MODES = ("sample_points", "first_k", "explicit")
DEFAULT_MAX_ITERATIONS = 1_000_000
REPEAT_CHECK_MAX_N = 64


class RepeatedClusteringError(RuntimeError):
    """A clustering reappeared inside one run."""


@dataclass(frozen=True)
class ClusteringState:
    assignment: np.ndarray  # (n,) cluster id per point
    ids: np.ndarray  # live cluster ids, ascending
    centers: np.ndarray  # (len(ids), d), row r is the center of ids[r]
    potential: float

    def rows(self, cluster_ids) -> np.ndarray:
        return np.searchsorted(self.ids, cluster_ids)

    def center(self, cid: int) -> np.ndarray:
        r = int(np.searchsorted(self.ids, cid))
        if r >= self.ids.size or self.ids[r] != cid:
            raise KeyError(f"cluster {cid} is not live")
        return self.centers[r]

    def members(self, cid: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == cid)


@dataclass
class IterationRecord:
    index: int
    pre_state: ClusteringState
    post_state: ClusteringState
    reassignments: np.ndarray  # (r, 3) rows of (point, from, to)
    assignment_drop: float
    move_drop: float
    removed_clusters: list[int]
    per_point_terms: np.ndarray = field(default_factory=lambda: np.zeros(0))
    per_cluster_terms: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def total_drop(self) -> float:
        return self.pre_state.potential - self.post_state.potential

    @property
    def changed(self) -> bool:
        return self.reassignments.shape[0] > 0 or bool(self.removed_clusters)


@dataclass
class Trace:
    points: np.ndarray
    initial: ClusteringState
    records: list[IterationRecord]
    termination: str  # "converged" or "max_iterations"
    k_initial: int
    k_final: int
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def potentials(self) -> list[float]:
        return [self.initial.potential] + [r.post_state.potential for r in self.records]


def _sq_to(points: np.ndarray, rows_centers: np.ndarray) -> np.ndarray:
    diff = points - rows_centers
    return np.einsum("ij,ij->i", diff, diff)


def _fsum(values) -> float:
    return math.fsum(values.tolist())


def assign(points, centers) -> np.ndarray:
    """Row index of the nearest center for every point, lowest index on ties."""
    centers = np.asarray(centers, dtype=np.float64)
    if centers.ndim != 2 or centers.shape[0] == 0:
        raise ValueError("at least one center is required")
    labels, _ = nearest_center(np.asarray(points, dtype=np.float64), centers)
    return labels


def recenter(points, assignment, ids) -> tuple[np.ndarray, np.ndarray, list[int]]:
    """Move each live cluster to the centroid of its members.

    Returns ``(surviving_ids, centers, removed_ids)``; clusters without
    members are dropped.
    """
    points = np.asarray(points, dtype=np.float64)
    assignment = np.asarray(assignment)
    keep, centers, removed = [], [], []
    for cid in np.asarray(ids).tolist():
        mask = assignment == cid
        if not mask.any():
            removed.append(cid)
            continue
        keep.append(cid)
        centers.append(points[mask].mean(axis=0))
    d = points.shape[1]
    return np.asarray(keep, dtype=np.int64), np.asarray(centers, dtype=np.float64).reshape(-1, d), removed


def potential(points, centers) -> float:
    """Sum over points of the squared distance to the nearest center."""
    points = np.asarray(points, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    if centers.ndim != 2 or centers.shape[0] == 0:
        raise ValueError("at least one center is required")
    labels = assign(points, centers)
    return _fsum(_sq_to(points, centers[labels]))


def state_potential(points, assignment, ids, centers) -> float:
    rows = np.searchsorted(ids, assignment)
    return _fsum(_sq_to(points, centers[rows]))


def initial_state(points, centers) -> ClusteringState:
    points = np.asarray(points, dtype=np.float64)
    centers = np.array(centers, dtype=np.float64)
    ids = np.arange(centers.shape[0], dtype=np.int64)
    labels = assign(points, centers)
    return ClusteringState(labels, ids, centers, _fsum(_sq_to(points, centers[labels])))


def drop_decompositions(record: IterationRecord, points) -> tuple[np.ndarray, np.ndarray]:
    """Per-point reassignment terms and per-cluster movement terms.

    A point leaving center ``c_i`` for ``c_j`` contributes
    ``2 |c_i - c_j| dist(x, bisector(c_i, c_j))``; a surviving cluster
    contributes ``|C| |c_pre - mean(C)|^2`` with ``C`` its new member set.
    """
    points = np.asarray(points, dtype=np.float64)
    pre, post = record.pre_state, record.post_state
    point_terms = np.empty(record.reassignments.shape[0])
    for t, (x, i, j) in enumerate(record.reassignments.tolist()):
        ci, cj = pre.center(i), pre.center(j)
        point_terms[t] = 2.0 * float(np.linalg.norm(ci - cj)) * distance_to_hyperplane(points[x], bisector(ci, cj))
    cluster_terms = np.empty(post.ids.size)
    for r, cid in enumerate(post.ids.tolist()):
        members = points[post.assignment == cid]
        shift = pre.center(cid) - members.mean(axis=0)
        cluster_terms[r] = members.shape[0] * float(shift @ shift)
    return point_terms, cluster_terms


def step(state: ClusteringState, points, index: int = 1) -> tuple[ClusteringState, IterationRecord]:
    """One assignment phase followed by one recentering phase."""
    points = np.asarray(points, dtype=np.float64)
    pre_sq = _sq_to(points, state.centers[state.rows(state.assignment)])
    labels = assign(points, state.centers)
    new_assign = state.ids[labels]
    mid_sq = _sq_to(points, state.centers[labels])

    moved = np.flatnonzero(new_assign != state.assignment)
    reassignments = np.column_stack([moved, state.assignment[moved], new_assign[moved]]).astype(np.int64)

    ids, centers, removed = recenter(points, new_assign, state.ids)
    post_sq = _sq_to(points, centers[np.searchsorted(ids, new_assign)])
    new_state = ClusteringState(new_assign, ids, centers, _fsum(post_sq))

    record = IterationRecord(
        index=index,
        pre_state=state,
        post_state=new_state,
        reassignments=reassignments.reshape(-1, 3),
        assignment_drop=_fsum(pre_sq - mid_sq),
        move_drop=_fsum(mid_sq - post_sq),
        removed_clusters=removed,
    )
    record.per_point_terms, record.per_cluster_terms = drop_decompositions(record, points)
    return new_state, record


def _seed_centers(points, k, init, seed, centers):
    n = points.shape[0]
    if init == "explicit":
        if centers is None:
            raise ValueError("init='explicit' requires centers")
        c = np.array(centers, dtype=np.float64).reshape(k, points.shape[1])
        return c
    if centers is not None:
        raise ValueError("centers are only accepted with init='explicit'")
    if init == "first_k":
        return points[:k].copy()
    if init == "sample_points":
        rng = np.random.default_rng(mix_seed(seed, 0x5EED5))
        return points[rng.choice(n, size=k, replace=False)].copy()
    raise ValueError(f"unknown init {init!r}; expected one of {INIT_MODES}")


def _clustering_key(state: ClusteringState) -> bytes:
    return state.assignment.tobytes() + b"|" + state.ids.tobytes()


def run(
    points,
    k: int,
    init: str = "sample_points",
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    seed: int = 0,
    centers=None,
    meta: dict | None = None,
) -> Trace:
    """Iterate Lloyd steps until the member sets stop changing.

    The first iteration converges only if recentering reproduces the seed
    centers exactly; later iterations converge when no point is reassigned.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= n (k={k}, n={n})")
    if max_iterations < 1:
        raise ValueError("max_iterations must be positive")
    state = initial_state(points, _seed_centers(points, k, init, seed, centers))
    start = state
    records: list[IterationRecord] = []
    seen: set[bytes] | None = set() if n <= REPEAT_CHECK_MAX_N else None
    termination = "max_iterations"
    for t in range(1, max_iterations + 1):
        state, rec = step(state, points, t)
        records.append(rec)
        if t == 1:
            done = not rec.removed_clusters and np.array_equal(rec.pre_state.centers, state.centers)
        else:
            done = not rec.changed
        if done:
            termination = "converged"
            break
        if seen is not None:
            key = _clustering_key(state)
            if key in seen:
                raise RepeatedClusteringError(f"clustering after iteration {t} repeats an earlier one")
            seen.add(key)
    return Trace(points, start, records, termination, k, int(state.ids.size), dict(meta or {}))
