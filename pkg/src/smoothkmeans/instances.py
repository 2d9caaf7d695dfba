"""Adversarial instances in the unit cube and their Gaussian perturbations."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .kernels import hashed_normals, mix_seed

KINDS = ("uniform", "grid", "clustered")


@dataclass(frozen=True)
class AdversarialInstance:
    points: np.ndarray  # (n, d), every coordinate in [0, 1]

    def __post_init__(self):
        pts = self.points
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError("empty instance")
        if not np.all((pts >= 0.0) & (pts <= 1.0)):
            raise ValueError("adversarial points must lie in [0, 1]^d")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


@dataclass
class PerturbedDataset:
    points: np.ndarray
    sigma: float
    master_seed: int
    D: float | None = None
    in_cube: bool | None = None
    source: AdversarialInstance | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


def _grid_side(n: int, d: int) -> int:
    g = max(1, int(round(n ** (1.0 / d))))
    while g**d < n:
        g += 1
    while g > 1 and (g - 1) ** d >= n:
        g -= 1
    return g


def generate(kind: str, n: int, d: int, seed: int, params: dict | None = None) -> AdversarialInstance:
    """Build a deterministic instance of ``n`` points in ``[0, 1]^d``.

    ``grid`` places ceil(n^(1/d)) evenly spaced values per axis and keeps the
    first ``n`` lattice points in lexicographic order. ``clustered`` scatters
    points uniformly in balls of radius ``params["spread"]`` (default 0.05)
    around ceil(sqrt(n)) uniform anchors, round robin, clamped to the cube.
    """
    if n < 1 or d < 1:
        raise ValueError("empty instance")
    params = dict(params or {})
    if kind == "grid":
        g = _grid_side(n, d)
        axis = np.linspace(0.0, 1.0, g) if g > 1 else np.zeros(1)
        pts = np.array(list(itertools.islice(itertools.product(axis, repeat=d), n)))
        return AdversarialInstance(pts.reshape(n, d))

    rng = np.random.default_rng(mix_seed(seed, KINDS.index(kind) if kind in KINDS else -1, n, d))
    if kind == "uniform":
        return AdversarialInstance(rng.random((n, d)))
    if kind == "clustered":
        spread = float(params.get("spread", 0.05))
        if spread < 0:
            raise ValueError("spread must be nonnegative")
        n_anchor = math.isqrt(n - 1) + 1 if n > 1 else 1
        anchors = rng.random((n_anchor, d))
        direction = rng.standard_normal((n, d))
        norms = np.linalg.norm(direction, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        radius = spread * rng.random(n) ** (1.0 / d)
        pts = anchors[np.arange(n) % n_anchor] + direction / norms * radius[:, None]
        return AdversarialInstance(np.clip(pts, 0.0, 1.0))
    raise ValueError(f"unknown instance kind {kind!r}; expected one of {KINDS}")


def perturb(instance: AdversarialInstance, sigma: float, seed: int) -> PerturbedDataset:
    """Add iid N(0, sigma^2) noise; the deviate at (i, j) depends only on (seed, i, j)."""
    if not sigma >= 0.0:
        raise ValueError("sigma must be nonnegative")
    pts = instance.points.astype(np.float64, copy=True)
    if sigma > 0.0:
        pts = pts + sigma * hashed_normals(seed, instance.n, instance.d)
    return PerturbedDataset(pts, float(sigma), int(seed), source=instance)


def cube_bound(n: int, k: int, d: int) -> float:
    """Side length sqrt(90 k d ln n) of the cube that holds the data w.h.p."""
    if n < 3 or k < 2 or d < 2:
        raise ValueError("outside model assumptions (need n >= 3, k >= 2, d >= 2)")
    return math.sqrt(90.0 * k * d * math.log(n))


def check_in_cube(ds: PerturbedDataset, D: float) -> bool:
    if not D > 0:
        raise ValueError("cube side must be positive")
    half = D / 2.0
    inside = bool(np.all(np.abs(ds.points) <= half))
    ds.D = float(D)
    ds.in_cube = inside
    return inside


def write_instance(path, points) -> None:
    pts = np.asarray(points, dtype=np.float64)
    lines = [f"{pts.shape[0]} {pts.shape[1]}"]
    lines += [" ".join(format(v, ".17g") for v in row) for row in pts]
    Path(path).write_text("\n".join(lines) + "\n")


def read_instance(path) -> np.ndarray:
    """Parse the ``n d`` header plus ``n`` rows of ``d`` decimals."""
    text = Path(path).read_text()
    rows = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not rows or len(rows[0]) != 2:
        raise ValueError(f"{path}: header must be 'n d'")
    try:
        n, d = int(rows[0][0]), int(rows[0][1])
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=np.float64)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    if n < 1 or d < 1 or data.shape != (n, d):
        raise ValueError(f"{path}: expected {n} rows of {d} coordinates")
    if not np.all(np.isfinite(data)):
        raise ValueError(f"{path}: non-finite coordinate")
    return data
