"""Pure NumPy fallbacks for the hot kernels.

Reductions rely on NumPy's pairwise summation, which is the compensation
scheme the double-precision contracts assume.  Node loops are vectorized
over the point set; memory is kept bounded by chunking over nodes.
"""

import numpy as np

_NODE_CHUNK = 256


def neg_recip_sum(points):
    return float(np.sum(-1.0 / points))


def inv_power_sum(points, z, r):
    if r == 1:
        return complex(np.sum(1.0 / (z - points)))
    return complex(np.sum((z - points) ** (-r)))


def log_linear_sum(points, z):
    return complex(np.sum(np.log(1.0 - z / points)))


def log_f_nodes(points, zs):
    out = np.empty(zs.shape[0], dtype=np.complex128)
    for lo in range(0, zs.shape[0], _NODE_CHUNK):
        hi = min(lo + _NODE_CHUNK, zs.shape[0])
        block = np.log(1.0 - zs[lo:hi, None] / points[None, :])
        out[lo:hi] = block.sum(axis=1)
    return out


def _phase_d1(points, k, z):
    return -k / z + inv_power_sum(points, z, 1)


def _phase_d2(points, k, z):
    return k / (z * z) - inv_power_sum(points, z, 2)


def newton_saddle(points, k, z0, tol, max_iter, max_halvings):
    """Same contract as the numba twin; see _kernels_numba.newton_saddle."""
    trace = np.empty((max_iter + 1, 3), dtype=np.float64)
    z = z0
    res = abs(_phase_d1(points, k, z))
    trace[0] = (z.real, z.imag, res)
    it = 0
    status = 0
    while res > tol:
        if it >= max_iter:
            status = 2
            break
        d1 = _phase_d1(points, k, z)
        d2 = _phase_d2(points, k, z)
        if d2 == 0:
            status = 1
            break
        step = -d1 / d2
        lam = 1.0
        accepted = False
        for _ in range(max_halvings):
            znew = z + lam * step
            if znew.imag > 0.0:
                rnew = abs(_phase_d1(points, k, znew))
                if rnew < res:
                    z = znew
                    res = rnew
                    accepted = True
                    break
            lam *= 0.5
        if not accepted:
            status = 1
            break
        it += 1
        trace[it] = (z.real, z.imag, res)
    return z, res, it, status, trace[: it + 1]


def horner_many(coeffs, xs):
    return np.polynomial.polynomial.polyval(xs, coeffs)
