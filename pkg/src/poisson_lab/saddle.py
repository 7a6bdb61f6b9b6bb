"""Phase function evaluation and saddle location.

The phase for derivative order k is

    phase_k(z) = -k log z + sum over points of log(1 - z/x),

whose r-th derivative is the windowed sum
(-1)^(r-1) (r-1)! [ -k/z^r + sum (z-x)^(-r) ].  The saddle is the zero of
the first derivative near i*k/pi; it is located by damped Newton iteration
in ordinary double precision (the term spread is only polynomial in the
window size, and the iteration tolerance tracks the 1/k scale of the
derivative near the saddle).
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import InvalidParameterError, PoleError, SaddleFailureError
from .logcomplex import LogComplex
from .precision import PrecisionConfig
from .series import eval_log_f


@dataclass(frozen=True)
class SaddlePoint:
    """Located zero of the phase derivative, with diagnostics.

    ``localized`` records whether sigma fell within the expected ball of
    radius k/2 around i*k/pi; small-k debug runs converge fine outside it.
    """

    sigma: complex
    k: int
    residual: float
    iterations: int
    second_derivative: complex
    normalized_offset: float
    localized: bool
    tolerance: float
    trace: np.ndarray

    @property
    def success(self):
        return (self.residual <= self.tolerance and self.sigma.imag > 0
                and self.localized)


def default_tolerance(k):
    """Residual tolerance: the phase derivative scales like 1/k near the saddle."""
    return 1e-10 * math.pi / k


def eval_phase(s, k, z, p=PrecisionConfig()):
    """Log-complex value of the order-k phase at z."""
    zc = complex(z)
    if zc == 0:
        raise PoleError("phase has a branch point at z = 0")
    if zc.imag == 0.0 and np.any(s.positions == zc.real):
        raise PoleError(f"z={z} is a sample point")
    lf = eval_log_f(s, z, p)
    if lf.is_zero:
        return lf
    with p.context():
        import gmpy2
        logz = gmpy2.log(gmpy2.mpc(z))
        return LogComplex(lf.log_mag - k * logz.real, lf.arg - k * logz.imag)


def eval_phase_derivative(s, k, z, r):
    """r-th derivative of the order-k phase (double precision, compensated)."""
    if r < 1:
        raise InvalidParameterError(f"derivative order r must be >= 1, got {r}")
    zc = complex(z)
    if zc == 0:
        raise PoleError("pole at z = 0")
    if zc.imag == 0.0 and np.any(s.positions == zc.real):
        raise PoleError(f"z={z} is a sample point")
    ws = kernels.inv_power_sum(s.positions, zc, r)
    return (-1.0) ** (r - 1) * math.factorial(r - 1) * (-k / zc ** r + ws)


def find_saddle(s, k, tol=None, max_iter=60):
    """Damped Newton iteration on the phase derivative from i*k/pi.

    Raises SaddleFailureError (carrying the iteration trace) when the
    iteration stalls, is forced out of the upper half plane, or hits the
    iteration cap.  A converged result additionally records whether it
    landed inside the ball |sigma - i*k/pi| <= k/2.
    """
    if k < 1:
        raise InvalidParameterError(f"k must be >= 1, got {k}")
    tol = default_tolerance(k) if tol is None else float(tol)
    if tol <= 0:
        raise InvalidParameterError("tol must be positive")
    z0 = 1j * k / math.pi
    sigma, residual, iterations, status, trace = kernels.newton_saddle(
        s.positions, float(k), z0, tol, int(max_iter), 40)
    if status == 1:
        raise SaddleFailureError(
            f"Newton stalled or left the upper half plane at iteration {iterations}", trace)
    if status == 2:
        raise SaddleFailureError(f"no convergence within {max_iter} iterations", trace)
    sigma = complex(sigma)
    offset = abs(sigma - z0) / math.sqrt(k)
    d2 = eval_phase_derivative(s, k, sigma, 2)
    return SaddlePoint(sigma=sigma, k=k, residual=float(residual),
                       iterations=int(iterations), second_derivative=d2,
                       normalized_offset=float(offset),
                       localized=bool(abs(sigma - z0) <= k / 2),
                       tolerance=tol, trace=trace)


@dataclass(frozen=True)
class SaddleDiagnostics:
    """Scaled quantities summarizing the phase near a located saddle."""

    residual: float
    curvature_ratio: complex          # sigma^2 * phase''(sigma) / k, near 1
    third_derivative_ratio: float     # max over probes of |k^3 phase'''| / k
    probe_values: np.ndarray


def saddle_diagnostics(s, sp, n_probes=16):
    """Evaluate the three saddle health checks.

    The third-derivative probe points sit on the circle of radius k/2
    around sigma; probes can land near the real axis where windowed poles
    inflate the value, which the record keeps as-is.
    """
    if not (sp.residual <= sp.tolerance and sp.sigma.imag > 0):
        raise InvalidParameterError("diagnostics need a converged saddle")
    k = sp.k
    curvature = sp.sigma ** 2 * sp.second_derivative / k
    angles = 2.0 * math.pi * np.arange(n_probes) / n_probes
    probes = sp.sigma + (k / 2.0) * np.exp(1j * angles)
    vals = np.empty(n_probes)
    for i, z in enumerate(probes):
        zc = complex(z)
        if zc.imag == 0.0 and np.any(s.positions == zc.real):
            zc += 1e-9j
        d3 = eval_phase_derivative(s, k, zc, 3)
        vals[i] = k ** 3 * abs(d3) / k
    return SaddleDiagnostics(residual=sp.residual, curvature_ratio=curvature,
                             third_derivative_ratio=float(np.max(vals)),
                             probe_values=vals)


def write_saddle_jsonl(records, path, header=None):
    """One JSON line per saddle solve: (k, seed, sigma, residual, ...)."""
    lines = []
    if header is not None:
        lines.append(json.dumps({"header": header}, sort_keys=True))
    for rec in records:
        lines.append(json.dumps(rec, sort_keys=True))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def saddle_record(sp, seed):
    return {
        "k": sp.k,
        "seed": seed,
        "sigma_re": sp.sigma.real,
        "sigma_im": sp.sigma.imag,
        "residual": sp.residual,
        "iterations": sp.iterations,
        "normalized_offset": sp.normalized_offset,
        "localized": sp.localized,
    }
