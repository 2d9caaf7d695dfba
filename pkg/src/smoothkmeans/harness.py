"""Single-run pipeline, parameter sweeps and CSV/summary emission."""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import blueprint as bp
from .engine import DEFAULT_MAX_ITERATIONS, Trace, run
from .instances import AdversarialInstance, check_in_cube, cube_bound, generate, perturb
from .kernels import mix_seed
from .traceio import fmt_float
from .verify import verify_trace


def fmt(value) -> str:
    """CSV cell: NA for missing, 1/0 for flags, %.17g for floats."""
    if value is None:
        return "NA"
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return fmt_float(value)
    return str(value)


def write_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def model_cube(n: int, k: int, d: int) -> float | None:
    try:
        return cube_bound(n, k, d)
    except ValueError:
        return None


def pipeline(
    instance: AdversarialInstance,
    k: int,
    sigma: float,
    noise_seed: int,
    init_seed: int,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    meta: dict | None = None,
) -> Trace:
    """Perturb, attach the cube bound, and run k-means."""
    ds = perturb(instance, sigma, noise_seed)
    D = model_cube(ds.n, k, ds.d)
    if D is not None:
        check_in_cube(ds, D)
    info = {"n": ds.n, "d": ds.d, "k": k, "sigma": float(sigma), "seed": int(noise_seed), "D": D, "in_cube": ds.in_cube}
    info.update(meta or {})
    return run(ds.points, k, "sample_points", max_iterations, init_seed, meta=info)


CLASSIFY_HEADER = ["trace_id", "iteration", "component", "m", "b", "degenerate", "flags", "primary", "lambda"]


def classification_rows(trace: Trace, trace_id: str, epsilon: float | None = None, mode: str = "actual"):
    D = trace.meta.get("D")
    rows = bp.classify_trace(trace, epsilon, mode, D)
    return rows, [
        [trace_id, r.iteration, r.component, r.blueprint.m, r.blueprint.b, r.blueprint.degenerate,
         r.report.bitmask, r.report.primary, r.lam]
        for r in rows
    ]


def classification_csv(trace: Trace, trace_id: str, epsilon: float | None = None, mode: str = "actual") -> str:
    return write_csv(CLASSIFY_HEADER, classification_rows(trace, trace_id, epsilon, mode)[1])


def verification_summary(trace: Trace, trace_id: str, modes=("actual", "lattice")) -> tuple[str, bool]:
    reports = verify_trace(trace, trace_id, modes)
    text = "\n".join(r.summary_line() for r in reports) + "\n"
    return text, all(r.passed for r in reports)


@dataclass
class SweepConfig:
    kind: str = "uniform"
    params: dict = field(default_factory=dict)
    n: list[int] = field(default_factory=lambda: [50])
    d: list[int] = field(default_factory=lambda: [2])
    k: list[int] = field(default_factory=lambda: [3])
    sigma: list[float] = field(default_factory=lambda: [0.1])
    seeds: int = 1
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    epsilon: float | None = None
    mode: str = "actual"
    out: str | None = None
    master_seed: int = 0

    def __post_init__(self):
        for name in ("n", "d", "k", "sigma"):
            vals = getattr(self, name)
            if not isinstance(vals, (list, tuple)):
                vals = [vals]
            if not vals:
                raise ValueError(f"sweep list {name!r} is empty")
            setattr(self, name, list(vals))
        if self.seeds < 1:
            raise ValueError("seeds must be at least 1")
        if any(s < 0 for s in self.sigma):
            raise ValueError("sigma must be nonnegative")
        if self.mode not in bp.MODES:
            raise ValueError(f"unknown mode {self.mode!r}")

    @classmethod
    def from_file(cls, path) -> "SweepConfig":
        data = json.loads(Path(path).read_text())
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown sweep config keys: {sorted(unknown)}")
        return cls(**data)

    def cells(self):
        return sorted(itertools.product(self.n, self.d, self.k, self.sigma, range(self.seeds)))


SWEEP_HEADER = [
    "n", "d", "k", "sigma", "seed", "iterations", "converged", "final_potential",
    "min_drop", "min_window_drop", "delta_eps", "max_lambda",
    "D1", "D2", "D3", "D4", "D5", "D6", "in_cube", "error",
]


def _window_drops(trace: Trace) -> list[float]:
    recs = trace.records
    out = []
    for s in range(1, len(recs) - 2):
        win = recs[s : s + 3]
        if all(r.reassignments.shape[0] > 0 for r in win):
            out.append(win[0].pre_state.potential - win[-1].post_state.potential)
    return out


def trace_row(trace: Trace, epsilon: float | None = None, mode: str = "actual") -> dict:
    """Sweep-row statistics of one finished trace."""
    drops = [r.total_drop for r in trace.records[1:] if r.reassignments.shape[0] > 0]
    min_drop = min(drops) if drops else None
    windows = _window_drops(trace)
    rows = bp.classify_trace(trace, epsilon, mode, trace.meta.get("D"))
    lams = [r.lam for r in rows if r.lam is not None]
    hist = {c: 0 for c in bp.CATEGORIES}
    for r in rows:
        hist[r.report.primary] += 1
    return {
        "iterations": len(trace.records),
        "converged": trace.termination == "converged",
        "final_potential": trace.records[-1].post_state.potential,
        "min_drop": min_drop,
        "min_window_drop": min(windows) if windows else None,
        "delta_eps": None if min_drop is None else bp.delta_eps(trace, min_drop),
        "max_lambda": max(lams) if lams else None,
        **hist,
        "in_cube": trace.meta.get("in_cube"),
    }


def cell_seeds(master: int, n: int, d: int, k: int, seed: int) -> tuple[int, int, int]:
    """Instance, noise and init seeds for a cell.

    Instance and noise seeds ignore k and sigma so every sigma level perturbs
    the same instance along the same Gaussian directions.
    """
    return mix_seed(master, 1, n, d, seed), mix_seed(master, 2, n, d, seed), mix_seed(master, 3, n, d, k, seed)


def run_cell(cfg: SweepConfig, cell) -> list:
    n, d, k, sigma, seed = cell
    row = {"n": n, "d": d, "k": k, "sigma": float(sigma), "seed": seed, "error": ""}
    try:
        inst_seed, noise_seed, init_seed = cell_seeds(cfg.master_seed, n, d, k, seed)
        inst = generate(cfg.kind, n, d, inst_seed, cfg.params)
        trace = pipeline(inst, k, sigma, noise_seed, init_seed, cfg.max_iterations)
        row.update(trace_row(trace, cfg.epsilon, cfg.mode))
    except (ValueError, RuntimeError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return [row.get(h) for h in SWEEP_HEADER]


def sweep(cfg: SweepConfig, threads: int = 1) -> list[list]:
    """One row per (n, d, k, sigma, seed) cell in lexicographic order."""
    cells = cfg.cells()
    if threads <= 1:
        rows = [run_cell(cfg, c) for c in cells]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda c: run_cell(cfg, c), cells))
    return rows


def sweep_csv(rows) -> str:
    return write_csv(SWEEP_HEADER, rows)


def sweep_summary(rows) -> str:
    """Median iteration count per (n, d, k, sigma) group."""
    groups: dict[tuple, list[int]] = {}
    idx = {h: i for i, h in enumerate(SWEEP_HEADER)}
    for r in rows:
        if r[idx["error"]]:
            continue
        key = tuple(r[idx[h]] for h in ("n", "d", "k", "sigma"))
        groups.setdefault(key, []).append(r[idx["iterations"]])
    lines = []
    for (n, d, k, s), its in sorted(groups.items()):
        lines.append(
            f"n={n} d={d} k={k} sigma={s:g} runs={len(its)} median_iterations={statistics.median(its):g}"
            f" max_iterations={max(its)}"
        )
    return "\n".join(lines) + ("\n" if lines else "")


def median_iterations(rows, sigma: float) -> float:
    idx = {h: i for i, h in enumerate(SWEEP_HEADER)}
    its = [r[idx["iterations"]] for r in rows if math.isclose(r[idx["sigma"]], sigma) and not r[idx["error"]]]
    return float(statistics.median(its))


def config_dict(cfg: SweepConfig) -> dict:
    return asdict(cfg)
