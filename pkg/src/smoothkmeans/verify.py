"""Per-trace verifiers for the deterministic drop and structure properties, plus brute-force oracles.

Every verifier returns a :class:`VerificationReport`. ``max_slack`` is the
largest absolute deviation for identity checks and the largest margin
``allowed - observed`` for inequality checks; ``min_margin`` is the tightest
margin seen (negative means violated).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .blueprint import (
    approx_center,
    balanced_vertices,
    classify_trace,
    iteration_blueprints,
    max_bisector_distance,
    min_exchange_distance,
    node_bound,
    node_bound_applies,
    transition_graph,
)
from .engine import Trace, drop_decompositions
from .kernels import coarse_threshold

COARSE_MAX_N = 14
COARSE_MAX_C = 3
BRUTE_MAX_N = 9
MONO_TOL = 1e-9

PASS, FAIL, NA = "pass", "fail", "not applicable"


@dataclass
class VerificationReport:
    lemma: str
    trace_id: str = ""
    checked: int = 0
    violations: list[tuple[str, int, str]] = field(default_factory=list)
    max_slack: float = 0.0
    min_margin: float = math.inf
    applicable: bool = True
    note: str = ""

    @property
    def status(self) -> str:
        if not self.applicable:
            return NA
        return FAIL if self.violations else PASS

    @property
    def passed(self) -> bool:
        return not self.violations

    def _margin(self, iteration: int, allowed: float, observed: float, tol: float, details: str):
        self.checked += 1
        margin = allowed - observed
        self.max_slack = max(self.max_slack, margin) if self.checked > 1 else margin
        self.min_margin = min(self.min_margin, margin)
        if margin < -tol:
            self.violations.append((self.trace_id, iteration, details))

    def summary_line(self) -> str:
        margin = "NA" if math.isinf(self.min_margin) else format(self.min_margin, ".6g")
        line = (
            f"{self.lemma:<20} trace={self.trace_id or '-'} status={self.status.upper().replace(' ', '_')}"
            f" checked={self.checked} violations={len(self.violations)}"
            f" max_slack={self.max_slack:.6g} min_margin={margin}"
        )
        return line + (f" note={self.note}" if self.note else "")


def _scale(rec) -> float:
    return 1.0 + abs(rec.pre_state.potential)


def check_drop_identities(trace: Trace, rel_tol: float = 1e-8, trace_id: str = "") -> VerificationReport:
    """Assignment drop equals the summed bisector terms; move drop the summed cluster terms.

    Deviations are measured relative to ``1 + potential`` at the start of the
    iteration, the scale at which both drops are computed.
    """
    rep = VerificationReport("drop_identity", trace_id)
    for rec in trace.records:
        pp, pc = rec.per_point_terms, rec.per_cluster_terms
        for name, drop, terms in (("assignment", rec.assignment_drop, pp), ("move", rec.move_drop, pc)):
            dev = abs(drop - math.fsum(terms.tolist())) / _scale(rec)
            rep.checked += 1
            rep.max_slack = max(rep.max_slack, dev)
            rep.min_margin = min(rep.min_margin, -dev)
            if dev > rel_tol:
                rep.violations.append((trace_id, rec.index, f"{name} drop {drop!r} vs terms {terms.sum()!r}"))
    return rep


def check_monotone(trace: Trace, trace_id: str = "") -> VerificationReport:
    rep = VerificationReport("monotone_potential", trace_id)
    for rec in trace.records:
        pre, post = rec.pre_state.potential, rec.post_state.potential
        rep._margin(rec.index, pre, post, MONO_TOL * _scale(rec), f"potential rose {pre!r} -> {post!r}")
    return rep


def _gains_losses(rec):
    gains: dict[int, list[int]] = {}
    losses: dict[int, list[int]] = {}
    for x, i, j in rec.reassignments.tolist():
        losses.setdefault(i, []).append(x)
        gains.setdefault(j, []).append(x)
    return gains, losses


def check_far_from_approx(trace: Trace, trace_id: str = "") -> VerificationReport:
    """Total drop >= |mean(C) - approx center of C|^2 / n for each unbalanced cluster."""
    rep = VerificationReport("far_from_approx", trace_id)
    pts, n, d = trace.points, trace.n, trace.d
    for rec in trace.records:
        if rec.reassignments.shape[0] == 0:
            continue
        gains, losses = _gains_losses(rec)
        drop = rec.total_drop
        for cid in sorted(set(gains) | set(losses)):
            a, b = gains.get(cid, []), losses.get(cid, [])
            if len(a) == len(b):
                continue
            mass = pts[rec.pre_state.members(cid)].mean(axis=0)
            diff = mass - approx_center(pts[a].reshape(-1, d), pts[b].reshape(-1, d))
            need = float(diff @ diff) / n
            rep._margin(rec.index, drop, need, MONO_TOL * _scale(rec), f"cluster {cid}: drop {drop!r} < {need!r}")
    return rep


def _cube(trace: Trace, D: float | None):
    if D is None:
        D = trace.meta.get("D")
    if D is None:
        return None, "cube side unknown"
    if trace.meta.get("in_cube") is False:
        return None, "dataset outside cube"
    if trace.meta.get("in_cube") is None and np.any(np.abs(trace.points) > D / 2.0):
        return None, "dataset outside cube"
    return float(D), ""


def check_bisector_inequality(
    trace: Trace, mode: str = "actual", D: float | None = None, trace_id: str = ""
) -> VerificationReport:
    """min exchanging-pair distance * max bisector distance <= 6 D sqrt(n d drop).

    Checked per iteration after the first, for every non-degenerate
    component, with the iteration's own drop as epsilon.
    """
    rep = VerificationReport(f"bisector_{mode}", trace_id)
    D, why = _cube(trace, D)
    if D is None:
        rep.applicable, rep.note = False, why.replace(" ", "_")
        return rep
    n, d = trace.n, trace.d
    for rec in trace.records[1:]:
        if rec.reassignments.shape[0] == 0:
            continue
        eps = max(rec.total_drop, 0.0)
        delta = min_exchange_distance(rec)
        bound = 6.0 * D * math.sqrt(n * d * eps)
        for ci, bp in enumerate(iteration_blueprints(rec, trace.points, eps, mode, D)):
            if bp.degenerate:
                continue
            lhs = delta * max_bisector_distance(bp, trace.points)
            rep._margin(rec.index, bound, lhs, 1e-12 * (1.0 + bound), f"component {ci}: {lhs!r} > {bound!r}")
    return rep


def _check_coarse_args(n: int, c: int):
    if n > COARSE_MAX_N or c > COARSE_MAX_C:
        raise ValueError("instance too large for exhaustive oracle")
    if c < 1:
        raise ValueError("c must be at least 1")


def is_coarse(points, eta: float, c: int) -> bool:
    """Exhaustive (eta, c)-coarseness test over nonempty subsets."""
    points = np.asarray(points, dtype=np.float64)
    _check_coarse_args(points.shape[0], c)
    return eta < coarse_threshold(points, c)


def is_coarse_bruteforce(points, eta: float, c: int) -> bool:
    """Second oracle, built from an explicit subset adjacency matrix.

    ``B[i, j]`` marks distinct subsets within symmetric difference ``c`` whose
    means lie within ``eta``; a bad triple exists iff ``B @ B`` has a nonzero
    off-diagonal entry.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if n > BRUTE_MAX_N:
        raise ValueError("instance too large for exhaustive oracle")
    subsets = [frozenset(s) for r in range(1, n + 1) for s in itertools.combinations(range(n), r)]
    means = np.array([points[sorted(s)].mean(axis=0) for s in subsets])
    size = np.array([len(s) for s in subsets])
    member = np.array([[i in s for i in range(n)] for s in subsets], dtype=np.int64)
    symdiff = size[:, None] + size[None, :] - 2 * (member @ member.T)
    dist = np.linalg.norm(means[:, None, :] - means[None, :, :], axis=-1)
    adj = ((symdiff <= c) & (dist <= eta) & ~np.eye(len(subsets), dtype=bool)).astype(np.int64)
    two = adj @ adj
    np.fill_diagonal(two, 0)
    return not np.any(two)


def _windows(trace: Trace, require_changes: bool = True):
    """Start indices of 3-iteration windows after the first iteration."""
    recs = trace.records
    for s in range(1, len(recs) - 2):
        win = recs[s : s + 3]
        if require_changes and not all(r.reassignments.shape[0] > 0 for r in win):
            continue
        yield win


def check_epoch_bound(trace: Trace, trace_id: str = "") -> VerificationReport:
    """Over any 3 changing iterations some cluster takes 3 distinct member sets."""
    rep = VerificationReport("epoch_bound", trace_id)
    for win in _windows(trace):
        states = [win[0].pre_state] + [r.post_state for r in win]
        ids = win[0].pre_state.ids.tolist()
        rep.checked += 1
        best = max(len({s.members(cid).tobytes() for s in states}) for cid in ids)
        rep.max_slack = max(rep.max_slack, best - 3)
        rep.min_margin = min(rep.min_margin, best - 3)
        if best < 3:
            rep.violations.append((trace_id, win[0].index, "no cluster took three configurations"))
    return rep


def _max_exchange(rec) -> int:
    gains, losses = _gains_losses(rec)
    return max(len(gains.get(v, [])) + len(losses.get(v, [])) for v in set(gains) | set(losses))


def check_coarse_drop(points, trace: Trace, eta: float, c: int, trace_id: str = "") -> VerificationReport:
    """Windows where each cluster exchanges <= c points per iteration drop >= eta^2."""
    if not is_coarse(points, eta, c):
        raise ValueError("dataset not (eta, c)-coarse")
    rep = VerificationReport("coarse_drop", trace_id, note=f"eta={eta:.6g},c={c}")
    for win in _windows(trace):
        if any(r.removed_clusters for r in win):
            continue
        if any(_max_exchange(r) > c for r in win):
            continue
        drop = win[0].pre_state.potential - win[-1].post_state.potential
        rep._margin(win[0].index, drop, eta * eta, 1e-9, f"window drop {drop!r} < eta^2 {eta * eta!r}")
    return rep


def check_potential_bound(trace: Trace, D: float | None = None, trace_id: str = "") -> VerificationReport:
    """Potential after the first iteration is at most n d D^2."""
    rep = VerificationReport("potential_ceiling", trace_id)
    D, why = _cube(trace, D)
    if D is None or not trace.records:
        rep.applicable, rep.note = False, (why or "empty trace").replace(" ", "_")
        return rep
    ceiling = trace.n * trace.d * D * D
    psi = trace.records[0].post_state.potential
    rep._margin(1, ceiling, psi, 0.0, f"potential {psi!r} > {ceiling!r}")
    return rep


def check_node_bound(trace: Trace, rows=None, trace_id: str = "", const_1: int = 8, const_2: int = 7):
    """Vertex count <= node bound on every blueprint meeting the bound's hypotheses."""
    rep = VerificationReport("node_bound", trace_id)
    if rows is None:
        rows = classify_trace(trace)
    for row in rows:
        g = row.blueprint.graph
        if not node_bound_applies(g, trace.d, const_1, const_2):
            continue
        bound = node_bound(g.m, len(balanced_vertices(g)), trace.d, const_1, const_2)
        rep._margin(row.iteration, bound, len(g.vertices), 1e-9, f"{len(g.vertices)} vertices > {bound!r}")
    return rep


def refresh_terms(trace: Trace) -> None:
    """Recompute the per-point and per-cluster terms from the stored states."""
    for rec in trace.records:
        rec.per_point_terms, rec.per_cluster_terms = drop_decompositions(rec, trace.points)


def check_reassignments(trace: Trace, trace_id: str = "") -> VerificationReport:
    """Stored reassignment lists match the assignment diffs."""
    rep = VerificationReport("reassignment_log", trace_id)
    for rec in trace.records:
        g = transition_graph(rec.pre_state.assignment, rec.post_state.assignment)
        rep.checked += 1
        logged = sorted(tuple(r) for r in rec.reassignments[:, [1, 2, 0]].tolist())
        if logged != sorted(g.edges):
            rep.violations.append((trace_id, rec.index, "reassignment list disagrees with assignments"))
    return rep


def coarse_eta(points, c: int) -> float:
    """Largest eta that is coarse with a margin for centroid rounding (0 if none).

    The exact threshold sits where two centroid distances tie, and independent
    ways of computing those centroids disagree there by a few ulps; backing
    off by that much keeps every oracle on the same side.
    """
    points = np.asarray(points, dtype=np.float64)
    thr = coarse_threshold(points, c)
    if not math.isfinite(thr) or thr <= 0.0:
        return 0.0
    scale = float(np.max(np.abs(points))) if points.size else 0.0
    eta = thr - (1e-9 * thr + 64.0 * np.finfo(np.float64).eps * scale)
    return max(float(eta), 0.0)


def verify_trace(trace: Trace, trace_id: str = "", modes=("actual", "lattice"), coarse_c: int = 2):
    """Run every applicable verifier; returns the list of reports."""
    reports = [
        check_reassignments(trace, trace_id),
        check_monotone(trace, trace_id),
        check_drop_identities(trace, trace_id=trace_id),
        check_far_from_approx(trace, trace_id),
    ]
    reports += [check_bisector_inequality(trace, m, trace_id=trace_id) for m in modes]
    reports.append(check_epoch_bound(trace, trace_id))
    if trace.n > COARSE_MAX_N:
        reports.append(VerificationReport("coarse_drop", trace_id, applicable=False, note="n_above_oracle_guard"))
    elif not is_coarse(trace.points, eta := coarse_eta(trace.points, coarse_c), coarse_c):
        reports.append(VerificationReport("coarse_drop", trace_id, applicable=False, note="not_coarse_for_any_eta"))
    else:
        reports.append(check_coarse_drop(trace.points, trace, eta, coarse_c, trace_id))
    reports.append(check_node_bound(trace, trace_id=trace_id))
    reports.append(check_potential_bound(trace, trace_id=trace_id))
    return reports
