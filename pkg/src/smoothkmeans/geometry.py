"""Vector and hyperplane primitives.

Vectors are plain 1-D float64 numpy arrays; hyperplanes are kept in Hesse
normal form so a point distance is one dot product.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNIT_TOL = 1e-12


def as_vector(x, d: int | None = None) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError("vector must be one-dimensional")
    if d is not None and v.shape[0] != d:
        raise ValueError(f"dimension mismatch: expected {d}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite coordinates")
    return v


@dataclass(frozen=True)
class Hyperplane:
    """The set ``{y : y . normal == offset}`` with a unit-length normal."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        if abs(float(np.linalg.norm(self.normal)) - 1.0) > UNIT_TOL:
            raise ValueError("hyperplane normal must have unit length")

    @property
    def dim(self) -> int:
        return self.normal.shape[0]


def centroid(points) -> np.ndarray:
    """Coordinate-wise mean of a nonempty point multiset."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0 or pts.shape[0] == 0:
        raise ValueError("empty point set")
    if pts.ndim != 2:
        raise ValueError("points must be a 2-D array of shape (m, d)")
    return pts.mean(axis=0)


def bisector(a, b) -> Hyperplane:
    a = as_vector(a)
    b = as_vector(b, a.shape[0])
    if np.array_equal(a, b):
        raise ValueError("degenerate bisector")
    diff = b - a
    normal = diff / np.linalg.norm(diff)
    return Hyperplane(normal, float(normal @ (a + b)) / 2.0)


def distance_to_hyperplane(x, plane: Hyperplane) -> float:
    x = as_vector(x, plane.dim)
    return abs(float(x @ plane.normal) - plane.offset)
