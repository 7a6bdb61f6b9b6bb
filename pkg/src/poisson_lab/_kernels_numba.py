"""Numba implementations of the hot double-precision kernels.

All reductions use Kahan compensation: the window sums mix O(1) and O(1/M)
terms and the saddle residual tolerance sits near 1e-12.
"""

import cmath

import numpy as np
from numba import njit


@njit(cache=True)
def neg_recip_sum(points):
    s = 0.0
    c = 0.0
    for x in points:
        y = (-1.0 / x) - c
        t = s + y
        c = (t - s) - y
        s = t
    return s


@njit(cache=True)
def inv_power_sum(points, z, r):
    sr = 0.0
    si = 0.0
    cr = 0.0
    ci = 0.0
    for x in points:
        if r == 1:
            w = 1.0 / (z - x)
        else:
            w = (z - x) ** (-r)
        yr = w.real - cr
        yi = w.imag - ci
        tr = sr + yr
        ti = si + yi
        cr = (tr - sr) - yr
        ci = (ti - si) - yi
        sr = tr
        si = ti
    return complex(sr, si)


@njit(cache=True)
def log_linear_sum(points, z):
    # sum of log(1 - z/x), principal branch per factor
    sr = 0.0
    si = 0.0
    cr = 0.0
    ci = 0.0
    for x in points:
        w = cmath.log(1.0 - z / x)
        yr = w.real - cr
        yi = w.imag - ci
        tr = sr + yr
        ti = si + yi
        cr = (tr - sr) - yr
        ci = (ti - si) - yi
        sr = tr
        si = ti
    return complex(sr, si)


@njit(cache=True)
def log_f_nodes(points, zs):
    out = np.empty(zs.shape[0], dtype=np.complex128)
    for j in range(zs.shape[0]):
        out[j] = log_linear_sum(points, zs[j])
    return out


@njit(cache=True)
def _phase_d1(points, k, z):
    return -k / z + inv_power_sum(points, z, 1)


@njit(cache=True)
def _phase_d2(points, k, z):
    return k / (z * z) - inv_power_sum(points, z, 2)


@njit(cache=True)
def newton_saddle(points, k, z0, tol, max_iter, max_halvings):
    """Damped Newton iteration on the phase derivative.

    Returns (z, residual, iterations, status, trace) with status
    0 = converged, 1 = stalled or forced out of the upper half plane,
    2 = iteration limit.  trace rows are (Re z, Im z, residual).
    """
    trace = np.empty((max_iter + 1, 3), dtype=np.float64)
    z = z0
    res = abs(_phase_d1(points, k, z))
    trace[0, 0] = z.real
    trace[0, 1] = z.imag
    trace[0, 2] = res
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
        trace[it, 0] = z.real
        trace[it, 1] = z.imag
        trace[it, 2] = res
    return z, res, it, status, trace[: it + 1]


@njit(cache=True)
def horner_many(coeffs, xs):
    # coeffs in ascending order
    n = coeffs.shape[0]
    out = np.empty(xs.shape[0], dtype=np.float64)
    for j in range(xs.shape[0]):
        x = xs[j]
        acc = coeffs[n - 1]
        for i in range(n - 2, -1, -1):
            acc = acc * x + coeffs[i]
        out[j] = acc
    return out
