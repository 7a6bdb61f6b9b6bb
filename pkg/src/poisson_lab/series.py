"""Windowed product function, its Taylor coefficients, and derivative
coefficients.

The windowed function is the degree-n polynomial

    F(z) = prod over points x of (1 - z/x),          n = point count,

whose coefficient of z^j is the j-th elementary symmetric function of the
negative reciprocals {-1/x}.  Coefficients are accumulated by sequential
polynomial multiplication in gmpy2 ``mpfr`` arithmetic (numerically benign:
every partial product is a real-rooted polynomial).  Newton's identities
over power sums provide an independent oracle; that route cancels
catastrophically, which is why it is only an oracle and why its working
precision must be chosen from a cancellation estimate
(``newton_required_bits``).

Coefficients of the k-th derivative are a[r] = e[k+r] * (k+r)!/r!.  The
normalizing amplitude and phase extracted at a saddle ``sigma`` are

    amplitude = k! * sqrt(2/(pi*k)) * |sigma^-k F(sigma)|   (kept as a log)
    theta     = arg(sigma^-k F(sigma))
"""

import math
from dataclasses import dataclass
from typing import Optional

import gmpy2
import numpy as np

from ._backend import kernels
from .errors import InvalidParameterError, InvalidSampleError, PoleError
from .logcomplex import LogComplex, wrap_angle
from .precision import PrecisionConfig
from .sampler import PoissonSample, shift_sample


@dataclass(frozen=True)
class CoefficientTable:
    """Taylor coefficients e[0..n_max] of the windowed product."""

    e: list
    window_halfwidth: float
    precision: PrecisionConfig
    n_points: int
    seed: Optional[int] = None
    intensity: float = 1.0
    sample: Optional[PoissonSample] = None

    @property
    def n_max(self):
        return len(self.e) - 1

    def sign(self, j):
        v = self.e[j]
        return 0 if v == 0 else (1 if v > 0 else -1)

    def log10_abs(self, j):
        v = self.e[j]
        if v == 0:
            return float("-inf")
        return float(gmpy2.log10(abs(v)))


@dataclass(frozen=True)
class DerivativeCoefficients:
    """Coefficients a[r] of the k-th derivative plus amplitude/phase.

    ``log_amplitude`` is ln(A) for the positive normalizer A; ``theta`` is
    its phase companion in radians.  Both are None-free only when a saddle
    was supplied; otherwise the table is in raw mode (A = 1, theta = None),
    which is what small hand-checkable cases use.
    """

    k: int
    a: list
    log_amplitude: object  # mpfr; 0 in raw mode
    theta: Optional[float]
    precision: PrecisionConfig
    seed: Optional[int] = None

    @property
    def r_max(self):
        return len(self.a) - 1

    @property
    def amplitude(self):
        return LogComplex(float(self.log_amplitude), 0.0)

    def scaled_floats(self, log_amplitude=None):
        """a[r] / A as float64, optionally against a caller-supplied ln A."""
        ln_a = self.log_amplitude if log_amplitude is None else log_amplitude
        out = np.zeros(len(self.a))
        with self.precision.context():
            for r, v in enumerate(self.a):
                if v == 0:
                    continue
                out[r] = float(v * gmpy2.exp(-gmpy2.mpfr(ln_a)))
        return out


def _positions_mpfr(s):
    """Sample positions as exact mpfr values (base + offset added exactly)."""
    if s.offset == 0.0:
        return [gmpy2.mpfr(float(x)) for x in s.points]
    off = gmpy2.mpfr(s.offset)
    return [gmpy2.mpfr(float(x)) + off for x in s.points]


def eval_log_f(s, z, p=PrecisionConfig()):
    """Sum of log(1 - z/x) over the sample, in log-complex form.

    Principal branch per factor; the exponential of the result equals the
    product regardless of branch bookkeeping.  z equal to a sample point
    returns the zero element.
    """
    with p.context():
        zc = gmpy2.mpc(z)
        re = gmpy2.mpfr(0)
        im = gmpy2.mpfr(0)
        for x in _positions_mpfr(s):
            w = 1 - zc / x
            if w == 0:
                return LogComplex.zero()
            lw = gmpy2.log(w)
            re += lw.real
            im += lw.imag
        return LogComplex(re, wrap_angle(im))


def eval_h(s, z):
    """Windowed logarithmic derivative: sum of 1/(z - x), double precision."""
    z = complex(z)
    pos = s.positions
    if z.imag == 0.0 and np.any(pos == z.real):
        raise PoleError(f"z={z} is a sample point")
    return kernels.inv_power_sum(pos, z, 1)


def _validate_coefficient_inputs(s, n_max):
    if n_max < 0 or n_max > s.count:
        raise InvalidParameterError(
            f"n_max must lie in [0, point count={s.count}], got {n_max}")
    if np.any(s.positions == 0.0):
        raise InvalidSampleError("sample contains the point 0")


def coefficients_product(s, n_max, p=PrecisionConfig()):
    """Elementary symmetric functions of {-1/x} by sequential multiplication.

    Method of record for coefficient tables.
    """
    _validate_coefficient_inputs(s, n_max)
    with p.context():
        e = [gmpy2.mpfr(0)] * (n_max + 1)
        e[0] = gmpy2.mpfr(1)
        one = gmpy2.mpfr(1)
        deg = 0
        for x in _positions_mpfr(s):
            y = -one / x
            deg = min(deg + 1, n_max)
            for j in range(deg, 0, -1):
                e[j] = e[j] + y * e[j - 1]
    return CoefficientTable(e=e, window_halfwidth=s.window_halfwidth,
                            precision=p, n_points=s.count, seed=s.seed,
                            intensity=s.intensity, sample=s)


def coefficients_newton(s, n_max, p=PrecisionConfig()):
    """Same table via power sums and Newton's identities (oracle route).

    Loses bits to cancellation; see ``newton_required_bits`` for how much
    precision a comparison at a given accuracy needs.
    """
    _validate_coefficient_inputs(s, n_max)
    with p.context():
        ys = [-gmpy2.mpfr(1) / x for x in _positions_mpfr(s)]
        power = [gmpy2.mpfr(1)] * len(ys)
        psums = [gmpy2.mpfr(0)] * (n_max + 1)
        for j in range(1, n_max + 1):
            acc = gmpy2.mpfr(0)
            for i, y in enumerate(ys):
                power[i] = power[i] * y
                acc += power[i]
            psums[j] = acc
        e = [gmpy2.mpfr(0)] * (n_max + 1)
        e[0] = gmpy2.mpfr(1)
        for n in range(1, n_max + 1):
            acc = gmpy2.mpfr(0)
            for i in range(1, n + 1):
                term = psums[i] * e[n - i]
                acc = acc + term if i % 2 == 1 else acc - term
            e[n] = acc / n
    return CoefficientTable(e=e, window_halfwidth=s.window_halfwidth,
                            precision=p, n_points=s.count, seed=s.seed,
                            intensity=s.intensity, sample=s)


def newton_required_bits(s, n_max, accuracy_bits=128, probe_bits=320):
    """Working precision needed for the Newton route to keep accuracy_bits.

    Runs a cheap product pass at probe_bits, bounds the largest term
    p_i * e[n-i] in the recurrence against n*e[n], and returns twice the
    worst cancellation plus the requested accuracy (so a run at the
    returned precision B agrees with the product route to 2**(-B/2)).
    """
    table = coefficients_product(s, n_max, PrecisionConfig(probe_bits))
    log2e = [float(gmpy2.log2(abs(v))) if v != 0 else -1e9 for v in table.e]
    y_max = float(np.max(1.0 / np.abs(s.positions)))
    n_pts = math.log2(max(s.count, 2))
    loss = 0.0
    for n in range(1, n_max + 1):
        big = max(i * math.log2(y_max) + n_pts + log2e[n - i] for i in range(1, n + 1))
        loss = max(loss, big - (math.log2(n) + log2e[n]))
    return int(2 * max(loss, 0.0)) + 2 * accuracy_bits


def factorial_ratio(n, r):
    """n!/r! as an exact integer (n >= r >= 0)."""
    return gmpy2.fac(n) // gmpy2.fac(r)


def derivative_coefficients(c, k, r_max, sigma=None, sample=None):
    """Coefficients a[r] = e[k+r]*(k+r)!/r! of the k-th derivative.

    When ``sigma`` (a located saddle) is given, also extracts the
    amplitude/phase normalizers from F at sigma; the source sample is taken
    from the table unless passed explicitly.  Without ``sigma`` the table is
    raw (amplitude 1), as used by the small explicit-point oracles.
    """
    if k < 0 or r_max < 0 or k + r_max > c.n_max:
        raise InvalidParameterError(
            f"need 0 <= k and k + r_max <= n_max={c.n_max}, got k={k}, r_max={r_max}")
    p = c.precision
    with p.context():
        a = [c.e[k + r] * gmpy2.mpfr(factorial_ratio(k + r, r)) for r in range(r_max + 1)]
        if sigma is None:
            return DerivativeCoefficients(k=k, a=a, log_amplitude=gmpy2.mpfr(0),
                                          theta=None, precision=p, seed=c.seed)
        src = sample if sample is not None else c.sample
        if src is None:
            raise InvalidParameterError("amplitude extraction needs the source sample")
        if k < 1:
            raise InvalidParameterError("amplitude normalization needs k >= 1")
        lf = eval_log_f(src, sigma, p)
        sig_abs = abs(gmpy2.mpc(sigma))
        sig_arg = gmpy2.atan2(gmpy2.mpfr(complex(sigma).imag), gmpy2.mpfr(complex(sigma).real))
        lgk = gmpy2.lgamma(gmpy2.mpfr(k + 1))[0]
        ln_amp = (lgk + gmpy2.mpfr("0.5") * gmpy2.log(2 / (gmpy2.const_pi() * k))
                  + lf.log_mag - k * gmpy2.log(sig_abs))
        theta = float(wrap_angle(lf.arg - k * sig_arg))
    return DerivativeCoefficients(k=k, a=a, log_amplitude=ln_amp, theta=theta,
                                  precision=p, seed=c.seed)


def synthetic_derivative(c, k):
    """Coefficients of the k-th derivative by repeated term-wise shifts.

    Independent of the factorial-ratio route; used as an oracle.
    """
    with c.precision.context():
        cur = list(c.e)
        for _ in range(k):
            cur = [cur[j + 1] * (j + 1) for j in range(len(cur) - 1)]
    return cur


@dataclass(frozen=True)
class IncreasingModulusReport:
    b_values: list
    log_moduli: list
    ok: bool


def check_increasing_modulus(s, a, b_grid):
    """Check |F(a + b i)| is nondecreasing along increasing |b| (log domain)."""
    bs = list(b_grid)
    if any(abs(bs[i + 1]) < abs(bs[i]) for i in range(len(bs) - 1)):
        raise InvalidParameterError("|b| grid must be nondecreasing")
    pos = s.positions
    logs = [kernels.log_linear_sum(pos, complex(a, b)).real for b in bs]
    ok = all(logs[i + 1] >= logs[i] - 1e-9 * max(1.0, abs(logs[i])) for i in range(len(logs) - 1))
    return IncreasingModulusReport(b_values=bs, log_moduli=logs, ok=ok)


def check_translation_covariance(s, lam, z_grid, p=PrecisionConfig()):
    """Max relative deviation of F(shifted sample, z) from
    F(z - lam)/F(-lam) over a grid (an exact identity on a finite window).
    """
    shifted = shift_sample(s, lam)
    pos = s.positions
    if np.any(pos == -lam):
        raise InvalidParameterError("-lam collides with a sample point")
    denom = eval_log_f(s, -lam, p)
    if denom.is_zero:
        raise InvalidParameterError("-lam is a zero of the window product")
    worst = 0.0
    for z in z_grid:
        zc = complex(z)
        if np.any(shifted.positions == zc) or np.any(pos == zc - lam):
            raise InvalidParameterError(f"grid point {z} collides with a pole/zero")
        lhs = eval_log_f(shifted, zc, p)
        rhs = eval_log_f(s, zc - lam, p) / denom
        worst = max(worst, lhs.relative_difference(rhs))
    return worst


# -- serialization ------------------------------------------------------

def write_coefficients_csv(table, path, extra_header=None):
    """CSV of (index, sign, log10_abs) with a JSON header line.

    Signs and log-magnitudes round-trip exactly (they are doubles); the
    log form is what survives the superexponential range.
    """
    import json as _json
    header = {
        "seed": table.seed,
        "window_halfwidth": table.window_halfwidth,
        "bits": table.precision.bits,
        "n_points": table.n_points,
        "intensity": table.intensity,
    }
    if extra_header:
        header.update(extra_header)
    lines = ["# " + _json.dumps(header, sort_keys=True)]
    lines.append("index,sign,log10_abs")
    for j in range(table.n_max + 1):
        lines.append(f"{j},{table.sign(j)},{table.log10_abs(j)!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_coefficients_csv(path):
    """Returns (header dict, signs array, log10_abs array)."""
    import json as _json
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    header = _json.loads(lines[0][2:])
    signs, logs = [], []
    for ln in lines[2:]:
        if not ln:
            continue
        _, sgn, lg = ln.split(",")
        signs.append(int(sgn))
        logs.append(float(lg))
    return header, np.asarray(signs), np.asarray(logs)
