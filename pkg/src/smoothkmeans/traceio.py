"""Trace files: JSON with every float written at 17 significant digits."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .engine import ClusteringState, IterationRecord, Trace
from .verify import refresh_terms


def fmt_float(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialise non-finite value {x!r}")
    return format(x, ".17g")


def dumps(obj) -> str:
    """Compact JSON; floats as %.17g, numpy scalars and arrays unwrapped."""
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist())
    if isinstance(obj, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(dumps(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _state_dict(s: ClusteringState) -> dict:
    return {"assignment": s.assignment, "ids": s.ids, "centers": s.centers, "potential": s.potential}


def trace_to_text(trace: Trace) -> str:
    head = {
        "meta": trace.meta,
        "n": trace.n,
        "d": trace.d,
        "k_initial": trace.k_initial,
        "k_final": trace.k_final,
        "termination": trace.termination,
        "points": trace.points,
        "initial": _state_dict(trace.initial),
    }
    lines = ["{" + dumps(head)[1:-1] + ',"iterations":[']
    its = []
    for rec in trace.records:
        its.append(
            dumps(
                {
                    "index": rec.index,
                    **_state_dict(rec.post_state),
                    "reassignments": rec.reassignments,
                    "assignment_drop": rec.assignment_drop,
                    "move_drop": rec.move_drop,
                    "removed": list(rec.removed_clusters),
                }
            )
        )
    lines.append(",\n".join(its))
    lines.append("]}")
    return "\n".join(lines) + "\n"


def write_trace(trace: Trace, path) -> None:
    Path(path).write_text(trace_to_text(trace))


def _state(obj, n: int, d: int) -> ClusteringState:
    assignment = np.asarray(obj["assignment"], dtype=np.int64)
    ids = np.asarray(obj["ids"], dtype=np.int64)
    centers = np.asarray(obj["centers"], dtype=np.float64).reshape(-1, d)
    if assignment.shape != (n,) or centers.shape[0] != ids.size:
        raise ValueError("state arrays have inconsistent shapes")
    if ids.size == 0 or np.any(np.diff(ids) <= 0) or not np.all(np.isin(assignment, ids)):
        raise ValueError("state assigns points to clusters that are not live")
    return ClusteringState(assignment, ids, centers, float(obj["potential"]))


def trace_from_text(text: str) -> Trace:
    """Parse a trace file; raises ``ValueError`` on anything malformed."""
    try:
        obj = json.loads(text)
        n, d = int(obj["n"]), int(obj["d"])
        points = np.asarray(obj["points"], dtype=np.float64)
        if points.shape != (n, d):
            raise ValueError("points do not match n and d")
        prev = start = _state(obj["initial"], n, d)
        records = []
        for it in obj["iterations"]:
            post = _state(it, n, d)
            reas = np.asarray(it["reassignments"], dtype=np.int64).reshape(-1, 3)
            records.append(
                IterationRecord(
                    index=int(it["index"]),
                    pre_state=prev,
                    post_state=post,
                    reassignments=reas,
                    assignment_drop=float(it["assignment_drop"]),
                    move_drop=float(it["move_drop"]),
                    removed_clusters=[int(c) for c in it["removed"]],
                )
            )
            prev = post
        trace = Trace(
            points,
            start,
            records,
            str(obj["termination"]),
            int(obj["k_initial"]),
            int(obj["k_final"]),
            dict(obj.get("meta") or {}),
        )
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ValueError(f"malformed trace: {exc}") from None
    try:
        refresh_terms(trace)
    except (KeyError, IndexError) as exc:
        raise ValueError(f"malformed trace: {exc}") from None
    return trace


def read_trace(path) -> Trace:
    return trace_from_text(Path(path).read_text())
