"""Hot numeric kernels.

Each kernel exists twice: a numba-compiled loop version and a vectorised
numpy version. Both accumulate in the same order so the two paths agree
bit for bit on the inputs the package produces; ``tests/test_kernels.py``
holds them to that. The public names dispatch on ``_jit.USE_NUMBA``.
"""
from __future__ import annotations

import numpy as np

from ._jit import USE_NUMBA, njit

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_ROW_STEP = 0xD1B54A32D192ED03
_COL_STEP = 0x8CB92BA72F3D8DD7

_U_GOLDEN = np.uint64(_GOLDEN)
_U_ROW = np.uint64(_ROW_STEP)
_U_COL = np.uint64(_COL_STEP)
_U_M1 = np.uint64(0xBF58476D1CE4E5B9)
_U_M2 = np.uint64(0x94D049BB133111EB)
_U_30 = np.uint64(30)
_U_27 = np.uint64(27)
_U_31 = np.uint64(31)
_U_ONE = np.uint64(1)
_U_TWO = np.uint64(2)


def splitmix64(x: int) -> int:
    """Scalar splitmix64 finaliser on a python int (wraps to 64 bits)."""
    z = (x + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def mix_seed(*words: int) -> int:
    """Fold integers into one 64-bit seed; order matters."""
    h = splitmix64(0)
    for w in words:
        h = splitmix64(h ^ (int(w) & _MASK64))
    return h


def _fmix_np(z):
    z = z + _U_GOLDEN
    z = (z ^ (z >> _U_30)) * _U_M1
    z = (z ^ (z >> _U_27)) * _U_M2
    return z ^ (z >> _U_31)


def _hashed_bits_numpy(seed: int, n: int, d: int):
    base = np.uint64(splitmix64(seed & _MASK64))
    rows = np.arange(1, n + 1, dtype=np.uint64)[:, None]
    cols = np.arange(1, d + 1, dtype=np.uint64)[None, :]
    with np.errstate(over="ignore"):
        h = _fmix_np(_fmix_np(base + rows * _U_ROW) + cols * _U_COL)
        return _fmix_np(h + _U_ONE), _fmix_np(h + _U_TWO)


@njit(cache=True)
def _fmix_nb(z):
    z = z + _U_GOLDEN
    z = (z ^ (z >> _U_30)) * _U_M1
    z = (z ^ (z >> _U_27)) * _U_M2
    return z ^ (z >> _U_31)


@njit(cache=True)
def _hashed_bits_loop(base, n, d):
    a = np.empty((n, d), dtype=np.uint64)
    b = np.empty((n, d), dtype=np.uint64)
    for i in range(n):
        hr = _fmix_nb(base + np.uint64(i + 1) * _U_ROW)
        for j in range(d):
            h = _fmix_nb(hr + np.uint64(j + 1) * _U_COL)
            a[i, j] = _fmix_nb(h + _U_ONE)
            b[i, j] = _fmix_nb(h + _U_TWO)
    return a, b


def _hashed_bits_numba(seed: int, n: int, d: int):
    return _hashed_bits_loop(np.uint64(splitmix64(seed & _MASK64)), n, d)


def _bits_to_normals(a, b):
    # Box-Muller on 53-bit uniforms; u1 in (0, 1] keeps the log finite.
    u1 = ((a >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
    u2 = (b >> np.uint64(11)).astype(np.float64) * 2.0**-53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def hashed_normals(seed: int, n: int, d: int) -> np.ndarray:
    """Standard normal deviates, entry (i, j) a pure function of (seed, i, j)."""
    bits = _hashed_bits_numba(seed, n, d) if USE_NUMBA else _hashed_bits_numpy(seed, n, d)
    return _bits_to_normals(*bits)


def _nearest_numpy(points, centers):
    n, d = points.shape
    sq = np.zeros((n, centers.shape[0]))
    for j in range(d):
        diff = points[:, j, None] - centers[None, :, j]
        sq += diff * diff
    labels = np.argmin(sq, axis=1)
    return labels.astype(np.int64), sq[np.arange(n), labels]


@njit(cache=True)
def _nearest_numba(points, centers):
    n, d = points.shape
    k = centers.shape[0]
    labels = np.empty(n, dtype=np.int64)
    best = np.empty(n)
    for i in range(n):
        bi = 0
        bd = np.inf
        for c in range(k):
            s = 0.0
            for j in range(d):
                t = points[i, j] - centers[c, j]
                s += t * t
            if s < bd:
                bd = s
                bi = c
        labels[i] = bi
        best[i] = bd
    return labels, best


def nearest_center(points: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index of the nearest center per point (first index on ties) and the squared distance."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    if USE_NUMBA:
        return _nearest_numba(points, centers)
    return _nearest_numpy(points, centers)


def _flip_masks(n: int, c: int) -> np.ndarray:
    masks = [m for m in range(1, 1 << n) if bin(m).count("1") <= c]
    return np.asarray(masks, dtype=np.int64)


def _subset_means_numpy(points):
    n, d = points.shape
    full = 1 << n
    masks = np.arange(full, dtype=np.int64)
    sums = np.zeros((full, d))
    counts = np.zeros(full)
    for b in range(n):
        has = (masks >> b) & 1 == 1
        sums[has] += points[b]
        counts[has] += 1.0
    counts[0] = 1.0
    return sums / counts[:, None]


def _coarse_threshold_numpy(points, c):
    n, d = points.shape
    means = _subset_means_numpy(points)
    masks = np.arange(1, 1 << n, dtype=np.int64)
    flips = _flip_masks(n, c)
    dist = np.empty((masks.size, flips.size))
    for fi, f in enumerate(flips):
        nb = masks ^ f
        sq = np.zeros(masks.size)
        for j in range(d):
            t = means[masks, j] - means[nb, j]
            sq += t * t
        col = np.sqrt(sq)
        col[nb == 0] = np.inf
        dist[:, fi] = col
    if flips.size < 2:
        return np.inf
    second = np.partition(dist, 1, axis=1)[:, 1]
    return float(second.min())


@njit(cache=True)
def _coarse_threshold_loop(points, flips):
    n, d = points.shape
    full = 1 << n
    sums = np.zeros((full, d))
    counts = np.zeros(full)
    for b in range(n):
        for m in range(full):
            if (m >> b) & 1 == 1:
                for j in range(d):
                    sums[m, j] += points[b, j]
                counts[m] += 1.0
    counts[0] = 1.0
    means = np.empty((full, d))
    for m in range(full):
        for j in range(d):
            means[m, j] = sums[m, j] / counts[m]
    best = np.inf
    for m in range(1, full):
        b1 = np.inf
        b2 = np.inf
        for f in flips:
            nb = m ^ f
            if nb == 0:
                continue
            s = 0.0
            for j in range(d):
                t = means[m, j] - means[nb, j]
                s += t * t
            r = np.sqrt(s)
            if r < b1:
                b2 = b1
                b1 = r
            elif r < b2:
                b2 = r
        if b2 < best:
            best = b2
    return best


def _coarse_threshold_numba(points, c):
    return float(_coarse_threshold_loop(points, _flip_masks(points.shape[0], c)))


def coarse_threshold(points: np.ndarray, c: int) -> float:
    """Smallest eta at which the point set stops being (eta, c)-coarse.

    For every nonempty subset S, take the two closest distinct nonempty
    neighbours T with |S xor T| <= c and record the larger of the two centroid
    distances; the minimum of that over all S is returned. The set is coarse
    for eta exactly when eta is strictly below the returned value.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    if USE_NUMBA:
        return _coarse_threshold_numba(points, c)
    return _coarse_threshold_numpy(points, c)
