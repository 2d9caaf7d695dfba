"""Transition graphs, blueprints and their category taxonomy.

A transition graph has one vertex per cluster and one directed edge
``(from, to, point)`` per reassigned point. Blueprints are its weakly
connected components, decorated with an approximate center per vertex.
"""
from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .engine import ClusteringState, IterationRecord, Trace
from .geometry import bisector, distance_to_hyperplane

DEGENERACY_TOL = 1e-12
CATEGORIES = ("D1", "D2", "D3", "D4", "D5", "D6")
# bit per flag in the CSV bitmask; D4 is the per-blueprint candidate flag
FLAG_BITS = {"D1": 1, "D2": 2, "D3": 4, "D4": 8, "D5": 16, "D6": 32}
PRIORITY = ("D5", "D1", "D2", "D3", "D4", "D6")
MODES = ("actual", "lattice")


@dataclass(frozen=True)
class TransitionGraph:
    vertices: tuple[int, ...]
    edges: tuple[tuple[int, int, int], ...]  # (from, to, point)

    @property
    def m(self) -> int:
        return len(self.edges)

    def in_degree(self) -> Counter:
        return Counter(e[1] for e in self.edges)

    def out_degree(self) -> Counter:
        return Counter(e[0] for e in self.edges)

    def degree(self) -> dict[int, int]:
        ins, outs = self.in_degree(), self.out_degree()
        return {v: ins[v] + outs[v] for v in self.vertices}


def _graph_from_edges(edges) -> TransitionGraph:
    edges = tuple(sorted((int(a), int(b), int(x)) for a, b, x in edges))
    verts = sorted({e[0] for e in edges} | {e[1] for e in edges})
    return TransitionGraph(tuple(verts), edges)


def transition_graph(prev_assignment, next_assignment) -> TransitionGraph:
    prev = np.asarray(prev_assignment)
    nxt = np.asarray(next_assignment)
    if prev.shape != nxt.shape:
        raise ValueError("assignments cover different point sets")
    moved = np.flatnonzero(prev != nxt)
    return _graph_from_edges(zip(prev[moved].tolist(), nxt[moved].tolist(), moved.tolist()))


def components(graph: TransitionGraph) -> list[TransitionGraph]:
    """Weakly connected components, ordered by their smallest vertex."""
    parent = {v: v for v in graph.vertices}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for a, b, _ in graph.edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list] = defaultdict(list)
    for e in graph.edges:
        groups[find(e[0])].append(e)
    return [_graph_from_edges(groups[r]) for r in sorted(groups)]


def balanced_vertices(graph: TransitionGraph) -> set[int]:
    ins, outs = graph.in_degree(), graph.out_degree()
    return {v for v in graph.vertices if ins[v] == outs[v]}


def approx_center(gained, lost) -> np.ndarray:
    """``(|B| mean(B) - |A| mean(A)) / (|B| - |A|)`` for gains A and losses B."""
    gained = np.asarray(gained, dtype=np.float64)
    lost = np.asarray(lost, dtype=np.float64)
    na = gained.shape[0] if gained.size else 0
    nb = lost.shape[0] if lost.size else 0
    if na == nb:
        raise ValueError("balanced cluster has no formula center")
    d = (gained if na else lost).shape[1]
    sum_a = gained.sum(axis=0) if na else np.zeros(d)
    sum_b = lost.sum(axis=0) if nb else np.zeros(d)
    return (sum_b - sum_a) / (nb - na)


def lattice_spacing(epsilon: float, n: int, d: int) -> float:
    return math.sqrt(n * epsilon / d)


def lattice_point(center, epsilon: float, n: int, d: int, D: float | None) -> np.ndarray:
    """Nearest point of the axis-aligned lattice anchored at the cube corner.

    Spacing per axis is sqrt(n eps / d), so the snap moves the center by at
    most sqrt(n eps) / 2. ``D=None`` anchors the lattice at the origin.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    center = np.asarray(center, dtype=np.float64)
    s = lattice_spacing(epsilon, n, d)
    anchor = 0.0
    if D is not None:
        anchor = -D / 2.0
        reach = D / 2.0 + math.sqrt(n * epsilon)
        if np.any(np.abs(center) > reach):
            raise ValueError("center lies outside the lattice region")
    return anchor + s * np.round((center - anchor) / s)


@dataclass
class Blueprint:
    graph: TransitionGraph
    m: int
    b: int
    epsilon: float
    approx_centers: dict[int, np.ndarray]
    balanced_center_mode: str
    degenerate: bool
    balanced: frozenset = field(default_factory=frozenset)

    @property
    def vertices(self) -> tuple[int, ...]:
        return self.graph.vertices


@dataclass(frozen=True)
class CategoryReport:
    flags: frozenset
    primary: str
    delta4_window: bool | None = None

    @property
    def bitmask(self) -> int:
        return sum(FLAG_BITS[f] for f in self.flags)


def build_blueprint(
    component: TransitionGraph,
    pre_state: ClusteringState,
    points,
    epsilon: float,
    mode: str = "actual",
    D: float | None = None,
) -> Blueprint:
    """Attach approximate centers to one component.

    Unbalanced vertices get the gain/loss formula center. Balanced vertices
    get their true center (``actual``) or its lattice snap (``lattice``);
    with a nonpositive epsilon the lattice is infinitely fine and the true
    center is used.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if component.m == 0:
        raise ValueError("component has no edges")
    points = np.asarray(points, dtype=np.float64)
    n, d = points.shape
    gains: dict[int, list[int]] = defaultdict(list)
    losses: dict[int, list[int]] = defaultdict(list)
    for a, b, x in component.edges:
        losses[a].append(x)
        gains[b].append(x)
    bal = balanced_vertices(component)
    centers = {}
    for v in component.vertices:
        if v in bal:
            c = pre_state.center(v)
            if mode == "lattice" and epsilon > 0:
                c = lattice_point(c, epsilon, n, d, D)
            centers[v] = np.array(c, dtype=np.float64)
        else:
            centers[v] = approx_center(points[gains[v]].reshape(-1, d), points[losses[v]].reshape(-1, d))
    degenerate = any(
        float(np.linalg.norm(centers[a] - centers[b])) < DEGENERACY_TOL for a, b, _ in component.edges
    )
    return Blueprint(component, component.m, len(bal), float(epsilon), centers, mode, degenerate, frozenset(bal))


def max_bisector_distance(blueprint: Blueprint, points) -> float:
    """Largest distance from a switching point to its approximate bisector."""
    if blueprint.degenerate:
        raise ValueError("approximate bisector undefined")
    points = np.asarray(points, dtype=np.float64)
    ac = blueprint.approx_centers
    return max(distance_to_hyperplane(points[x], bisector(ac[a], ac[b])) for a, b, x in blueprint.graph.edges)


def degree2_pair_count(graph: TransitionGraph) -> int:
    """Maximum number of disjoint adjacent pairs of unbalanced degree-2 vertices.

    Those vertices induce paths and cycles, where a maximum matching has
    floor(h / 2) edges for a piece with h vertices.
    """
    deg = graph.degree()
    bal = balanced_vertices(graph)
    nodes = {v for v, k in deg.items() if k == 2 and v not in bal}
    sub = TransitionGraph(
        tuple(sorted(nodes)),
        tuple(e for e in graph.edges if e[0] in nodes and e[1] in nodes),
    )
    return sum(len(comp.vertices) // 2 for comp in components(sub))


def classify(
    blueprint: Blueprint,
    d: int,
    delta4_window: bool | None = None,
    const_1: int = 8,
    const_2: int = 7,
) -> CategoryReport:
    """Flag the six categories and pick one primary category.

    ``delta4_window`` says whether the iteration sits in a 3-iteration window
    made only of low-degree blueprints; ``None`` means no window context, in
    which case the per-blueprint candidate flag stands in for it.
    """
    g = blueprint.graph
    ins, outs, deg = g.in_degree(), g.out_degree(), g.degree()
    flags = set()
    if any(ins[v] <= const_1 * d and outs[v] <= const_1 * d and deg[v] > 0 for v in blueprint.balanced):
        flags.add("D1")
    if any(k == 1 for k in deg.values()):
        flags.add("D2")
    if not blueprint.degenerate and degree2_pair_count(g) >= 3:
        flags.add("D3")
    candidate = max(deg.values()) <= const_2
    if candidate:
        flags.add("D4")
    if blueprint.degenerate:
        flags.add("D5")
    in_window = candidate if delta4_window is None else (candidate and delta4_window)
    if not flags & {"D1", "D2", "D3", "D5"} and not in_window:
        flags.add("D6")
    for cat in PRIORITY:
        if cat == "D4" and not in_window:
            continue
        if cat in flags:
            return CategoryReport(frozenset(flags), cat, delta4_window)
    raise AssertionError("unreachable: D6 covers every remaining blueprint")


def node_bound(m: int, b: int, d: int, const_1: int = 8, const_2: int = 7) -> float:
    """Upper bound on the vertex count of a blueprint meeting the hypotheses below."""
    if b == 0:
        bound = Fraction(5 * m, 6) - Fraction(const_2 - 4, 3)
    else:
        bound = Fraction(5 * m, 6) - Fraction((2 * const_1 * d - 1) * b - 2, 3)
    return float(bound)


def node_bound_applies(graph: TransitionGraph, d: int, const_1: int = 8, const_2: int = 7) -> bool:
    """Check the structural hypotheses of the vertex-count bound."""
    deg = graph.degree()
    if not deg or min(deg.values()) < 2:
        return False
    if any(deg[v] < 2 * d * const_1 + 2 for v in balanced_vertices(graph)):
        return False
    if degree2_pair_count(graph) > 2:
        return False
    return max(deg.values()) >= const_2 + 1


def delta_eps(trace: Trace, epsilon: float) -> float | None:
    """Closest pair of exchanging pre-iteration centers over low-drop iterations.

    Only iterations after the first count. Returns ``None`` when no
    iteration with total drop <= epsilon exchanges a point.
    """
    best = None
    for rec in trace.records[1:]:
        if rec.total_drop > epsilon or rec.reassignments.shape[0] == 0:
            continue
        dist = min_exchange_distance(rec)
        best = dist if best is None else min(best, dist)
    return best


def min_exchange_distance(rec: IterationRecord) -> float:
    pre = rec.pre_state
    pairs = {(min(i, j), max(i, j)) for _, i, j in rec.reassignments.tolist()}
    return min(float(np.linalg.norm(pre.center(i) - pre.center(j))) for i, j in pairs)


@dataclass
class ComponentRow:
    iteration: int
    component: int
    blueprint: Blueprint
    report: CategoryReport
    lam: float | None


def iteration_blueprints(
    rec: IterationRecord, points, epsilon: float | None = None, mode: str = "actual", D: float | None = None
) -> list[Blueprint]:
    eps = rec.total_drop if epsilon is None else epsilon
    graph = transition_graph(rec.pre_state.assignment, rec.post_state.assignment)
    return [build_blueprint(c, rec.pre_state, points, eps, mode, D) for c in components(graph)]


def delta4_window_iterations(candidate_by_iter: dict[int, bool]) -> set[int]:
    """Iterations lying in some run of 3 consecutive all-candidate iterations."""
    hits = set()
    for t in candidate_by_iter:
        if all(candidate_by_iter.get(t + s, False) for s in range(3)):
            hits.update({t, t + 1, t + 2})
    return hits


def classify_trace(
    trace: Trace,
    epsilon: float | None = None,
    mode: str = "actual",
    D: float | None = None,
    const_1: int = 8,
    const_2: int = 7,
) -> list[ComponentRow]:
    """Blueprints and categories for every component of every iteration.

    ``epsilon=None`` uses each iteration's own total drop.
    """
    per_iter = []
    candidate: dict[int, bool] = {}
    for rec in trace.records:
        if rec.reassignments.shape[0] == 0:
            continue
        bps = iteration_blueprints(rec, trace.points, epsilon, mode, D)
        per_iter.append((rec.index, bps))
        candidate[rec.index] = all(max(bp.graph.degree().values()) <= const_2 for bp in bps)
    windows = delta4_window_iterations(candidate)
    rows = []
    for t, bps in per_iter:
        for ci, bp in enumerate(bps):
            rep = classify(bp, trace.d, t in windows, const_1, const_2)
            lam = None if bp.degenerate else max_bisector_distance(bp, trace.points)
            rows.append(ComponentRow(t, ci, bp, rep, lam))
    return rows
