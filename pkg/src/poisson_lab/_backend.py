"""Kernel backend selection.

Hot double-precision inner loops (windowed pole sums, Newton iteration,
polynomial grid scans) exist in two interchangeable implementations:

* ``_kernels_numba`` -- ``@njit(cache=True)`` loops with Kahan-compensated
  accumulation (default),
* ``_kernels_numpy``  -- vectorized NumPy with pairwise-summed reductions.

Set the environment variable ``POISSON_LAB_NO_NUMBA=1`` to force the NumPy
path (also used automatically when numba is unavailable).  Both backends
satisfy the same contracts; results may differ in the last few ulps because
the compensation schemes differ.  See ``benchmarks/kernel_bench.py`` for a
speed comparison.
"""

import os

_FORCED_NUMPY = os.environ.get("POISSON_LAB_NO_NUMBA", "").strip() not in ("", "0")

if _FORCED_NUMPY:
    from . import _kernels_numpy as kernels
    BACKEND = "numpy"
else:
    try:
        from . import _kernels_numba as kernels
        BACKEND = "numba"
    except ImportError:  # pragma: no cover - exercised only without numba
        from . import _kernels_numpy as kernels
        BACKEND = "numpy"


def warm_up():
    """Trigger JIT compilation (or cache loading) of every kernel.

    Cheap no-op for the NumPy backend.  Call once before timing anything.
    """
    import numpy as np

    pts = np.array([1.0, -2.0, 4.0])
    kernels.inv_power_sum(pts, 0.5 + 1.0j, 1)
    kernels.inv_power_sum(pts, 0.5 + 1.0j, 3)
    kernels.log_linear_sum(pts, 0.5 + 1.0j)
    kernels.log_f_nodes(pts, np.array([0.5 + 1.0j, 0.25 + 2.0j]))
    kernels.newton_saddle(pts, 1, 0.0 + 0.3j, 1e-8, 20, 40)
    kernels.horner_many(np.array([1.0, 0.5]), np.array([0.0, 0.5]))
    kernels.neg_recip_sum(pts)
