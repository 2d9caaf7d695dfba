"""Builders for hand-made states, records and traces."""
import numpy as np

from smoothkmeans.engine import ClusteringState, IterationRecord, Trace, drop_decompositions


def state(assignment, centers: dict, potential=0.0):
    ids = np.array(sorted(centers), dtype=np.int64)
    ctr = np.array([centers[i] for i in ids], dtype=np.float64)
    return ClusteringState(np.asarray(assignment, dtype=np.int64), ids, ctr, float(potential))


def record(index, pre, post, points=None):
    moved = np.flatnonzero(pre.assignment != post.assignment)
    reas = np.column_stack([moved, pre.assignment[moved], post.assignment[moved]]).astype(np.int64).reshape(-1, 3)
    removed = sorted(set(pre.ids.tolist()) - set(post.ids.tolist()))
    rec = IterationRecord(index, pre, post, reas, 0.0, pre.potential - post.potential, removed)
    if points is not None:
        rec.per_point_terms, rec.per_cluster_terms = drop_decompositions(rec, points)
    return rec


def trace(points, states, meta=None):
    """Trace whose consecutive states are given; drops are not physical."""
    recs = [record(i + 1, a, b) for i, (a, b) in enumerate(zip(states, states[1:]))]
    return Trace(np.asarray(points, dtype=np.float64), states[0], recs, "converged", states[0].ids.size,
                 states[-1].ids.size, dict(meta or {}))


def max_matching_bruteforce(nodes, edges):
    """Exhaustive maximum matching on a small simple graph."""
    edges = sorted({tuple(sorted(e)) for e in edges if e[0] != e[1] and e[0] in nodes and e[1] in nodes})
    best = 0

    def go(i, used, size):
        nonlocal best
        best = max(best, size)
        for j in range(i, len(edges)):
            a, b = edges[j]
            if a not in used and b not in used:
                go(j + 1, used | {a, b}, size + 1)

    go(0, frozenset(), 0)
    return best
