"""Instrumented Lloyd k-means under Gaussian perturbations.

Runs Lloyd iterations with exact potential accounting, extracts transition
blueprints from consecutive iterations, and checks the deterministic
potential-drop properties on every trace.
"""
from ._jit import USE_NUMBA
from .engine import ClusteringState, IterationRecord, Trace, assign, potential, recenter, run, step
from .geometry import Hyperplane, bisector, centroid, distance_to_hyperplane
from .instances import check_in_cube, cube_bound, generate, perturb

__all__ = [
    "USE_NUMBA",
    "ClusteringState",
    "IterationRecord",
    "Trace",
    "Hyperplane",
    "assign",
    "bisector",
    "centroid",
    "check_in_cube",
    "cube_bound",
    "distance_to_hyperplane",
    "generate",
    "perturb",
    "potential",
    "recenter",
    "run",
    "step",
]
