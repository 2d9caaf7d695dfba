"""Compare the numba kernels against the pure-numpy fallback.

Kernel timings call both implementations in one process. The end-to-end
timing runs a full clustering in a child process per path, toggling
SMOOTHKMEANS_DISABLE_NUMBA, after a small warm-up run so JIT loading is excluded.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import os
import subprocess
import sys
import time
import timeit

import numpy as np

from smoothkmeans import kernels as K
from smoothkmeans._jit import HAVE_NUMBA


def _best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_cases():
    rng = np.random.default_rng(0)
    pts = rng.random((20000, 5))
    ctr = rng.random((50, 5))
    small = rng.random((12, 2))
    flips = K._flip_masks(12, 2)
    return [
        ("nearest_center 20000x5, k=50", lambda: K._nearest_numpy(pts, ctr), lambda: K._nearest_numba(pts, ctr)),
        ("hashed_normals 20000x5", lambda: K._hashed_bits_numpy(7, 20000, 5), lambda: K._hashed_bits_numba(7, 20000, 5)),
        ("coarse_threshold n=12, c=2", lambda: K._coarse_threshold_numpy(small, 2),
         lambda: K._coarse_threshold_loop(small, flips)),
    ]


def _same(a, b):
    if isinstance(a, tuple):
        return all(np.array_equal(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


SCRIPT = (
    "import time, numpy as np\n"
    "from smoothkmeans.harness import pipeline\n"
    "from smoothkmeans.instances import generate\n"
    "pipeline(generate('uniform', 20, 3, 9), 3, 0.05, 2, 3)\n"
    "t = time.perf_counter()\n"
    "tr = pipeline(generate('uniform', 3000, 3, 1), 25, 0.05, 2, 3)\n"
    "print(time.perf_counter() - t, len(tr.records), repr(tr.records[-1].post_state.potential))\n"
)


def end_to_end(disable):
    env = dict(os.environ, SMOOTHKMEANS_DISABLE_NUMBA="1" if disable else "0")
    out = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True, check=True)
    secs, iters, psi = out.stdout.split()
    return float(secs), int(iters), psi


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        sys.exit("numba is not installed; nothing to compare")
    print(f"{'kernel':<32}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}  identical")
    for name, f_np, f_nb in kernel_cases():
        f_nb()  # compile or load from cache
        same = _same(f_np(), f_nb())
        t_np, t_nb = _best(f_np, args.repeat), _best(f_nb, args.repeat)
        print(f"{name:<32}{t_np * 1e3:>12.3f}{t_nb * 1e3:>12.3f}{t_np / t_nb:>9.1f}x  {same}")
    end_to_end(False)  # warm the on-disk JIT cache
    (s_np, it_np, psi_np), (s_nb, it_nb, psi_nb) = end_to_end(True), end_to_end(False)
    print(f"\nend-to-end run n=3000 d=3 k=25: numpy {s_np:.3f}s, numba {s_nb:.3f}s "
          f"({s_np / s_nb:.1f}x), iterations {it_np} vs {it_nb}, same final potential: {psi_np == psi_nb}")


if __name__ == "__main__":
    t0 = time.perf_counter()
    main()
    print(f"total {time.perf_counter() - t0:.1f}s")
