"""Time the numba kernels against their pure-numpy fallbacks.

Run from the repository root:

    python benchmarks/bench_kernels.py

The numpy fallback is always available; the numba side is skipped when
numba is not importable or DEPTHNORM_NO_NUMBA is set.
"""

import time

import numpy as np

from depthnorm import _kernels

REPEATS = 5


def best_of(fn, *args):
    times = []
    for _ in range(REPEATS):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def row(name, numpy_fn, numba_fn, args):
    t_np = best_of(numpy_fn, *args)
    if numba_fn is None:
        print(f"{name:<28} numpy {t_np * 1e3:9.2f} ms   numba      -")
        return
    numba_fn(*args)  # compile outside the timed region
    t_nb = best_of(numba_fn, *args)
    print(
        f"{name:<28} numpy {t_np * 1e3:9.2f} ms   numba {t_nb * 1e3:9.2f} ms"
        f"   speedup {t_np / t_nb:6.1f}x"
    )


def main():
    rng = np.random.default_rng(0)
    have = _kernels.HAVE_NUMBA
    print(f"backend in use: {_kernels.backend()}")
    if not have:
        print("numba unavailable or disabled; timing the numpy path only\n")

    xt = rng.normal(size=(24, 50000))
    row(
        "pairwise distances 24x50k",
        _kernels.pairwise_dists_numpy,
        _kernels.pairwise_dists_numba if have else None,
        (xt,),
    )

    probes = rng.normal(size=(11000, 12))
    starts = np.arange(0, 11001, 11, dtype=np.int64)
    row(
        "median polish 1000 blocks",
        _kernels.polish_summaries_numpy,
        _kernels.polish_summaries_numba if have else None,
        (probes, starts, 20, 0.01),
    )
    row(
        "biweight 1000 blocks",
        lambda v, s: _kernels.biweight_summaries_numpy(v, s, 5.0, 1e-4, 50, 1e-9),
        (lambda v, s: _kernels.biweight_summaries_numba(v, s, 5.0, 1e-4, 50, 1e-9)) if have else None,
        (probes, starts),
    )


if __name__ == "__main__":
    main()
