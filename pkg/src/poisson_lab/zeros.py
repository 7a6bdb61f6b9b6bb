"""Real zeros of the k-th derivative and comparison with the cosine profile.

The k-th derivative is evaluated from its Taylor coefficients around 0,
scaled by the amplitude normalizer so values are O(1) on the window.  Zeros
are located by a sign-change scan on a grid finer than the unit spacing of
the limit profile, refined by bisection (float first, then at the table's
working precision down to ``refine_tol``).  The reference profile for order
k is cos(pi x - theta) with slope envelope pi; the predicted zero lattice
is theta/pi + 1/2 + integers.
"""

import math
from dataclasses import dataclass
from typing import List, Optional

import gmpy2
import numpy as np

from ._backend import kernels
from .errors import InvalidParameterError, WindowTooLargeError

_TAIL_FRACTION = 1e-3
_TAIL_SAFETY = 2.0


@dataclass(frozen=True)
class ZeroSet:
    """Refined real zeros on [-W, W], each with a verified sign change."""

    zeros: np.ndarray
    k: int
    window_halfwidth: float
    refine_tol: float
    residuals: np.ndarray
    slopes: np.ndarray


@dataclass(frozen=True)
class SpacingReport:
    gaps: np.ndarray
    mean_gap: float
    median_gap: float
    max_abs_dev_from_1: float
    fractional_parts: np.ndarray
    empty: bool = False


@dataclass(frozen=True)
class CosineComparison:
    sup_error_f: float
    sup_error_fprime: float
    grid_step: float


@dataclass(frozen=True)
class MatchReport:
    """Correspondence between found zeros and the predicted lattice."""

    pairs: List[tuple]
    unmatched_found: List[float]
    unmatched_predicted: List[float]
    max_distance: float
    matched_fraction: float
    symmetric: bool
    tolerance: float


def _cos_tail(rho, r_max, n_terms=80):
    """sum_{r > r_max} rho^r / r! (rho = pi*W)."""
    total = 0.0
    term = rho ** (r_max + 1) / math.factorial(r_max + 1) \
        if r_max < 160 else math.exp((r_max + 1) * math.log(rho) - math.lgamma(r_max + 2))
    for i in range(n_terms):
        total += term
        term *= rho / (r_max + 2 + i)
        if term < 1e-300:
            break
    return total


def default_r_max(window_halfwidth):
    """Smallest r keeping the cosine Taylor tail on [-W, W] below 1e-6."""
    rho = math.pi * window_halfwidth
    r = 16
    while _cos_tail(rho, r) > 1e-6 and r < 2000:
        r += 1
    return r


def _tail_envelope(scaled, r_max):
    """Empirical amplitude of the trailing scaled coefficients against pi^r/r!."""
    env = 0.0
    for r in range(max(0, r_max - 4), r_max + 1):
        ref = math.exp(r * math.log(math.pi) - math.lgamma(r + 1))
        env = max(env, abs(scaled[r]) / ref)
    return env


def check_tail_bound(scaled, x):
    """Raise unless the truncated Taylor tail at x is below the contract bound."""
    r_max = len(scaled) - 1
    env = _tail_envelope(scaled, r_max)
    bound = _TAIL_SAFETY * env * _cos_tail(math.pi * abs(x), r_max)
    if bound >= _TAIL_FRACTION:
        raise WindowTooLargeError(
            f"Taylor tail bound {bound:.2e} at |x|={abs(x):.3g} exceeds "
            f"{_TAIL_FRACTION} of the amplitude; shrink the window or raise r_max")


def eval_fk(d, x, check_tail=True):
    """Value of the k-th derivative at x, divided by the amplitude.

    Horner evaluation at the table's working precision.  Raw-mode tables
    (no saddle supplied) return the unscaled value.
    """
    scaled = d.scaled_floats()
    if check_tail:
        check_tail_bound(scaled, x)
    with d.precision.context():
        xm = gmpy2.mpfr(float(x))
        acc = gmpy2.mpfr(0)
        for r in range(len(d.a) - 1, -1, -1):
            acc = acc * xm + d.a[r]
        return float(acc * gmpy2.exp(-d.log_amplitude))


def _mpfr_polyval(coeffs, x):
    acc = gmpy2.mpfr(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def find_real_zeros(d, window_halfwidth, grid_step=0.05, refine_tol=1e-9):
    """Sign-change scan plus bisection refinement on [-W, W].

    Grid nodes that hit a zero exactly are nudged by grid_step/7.  Each
    bracket is bisected in float64 down to ~1e-6, then at the table's
    precision down to refine_tol; the final residual is checked against
    slope * refine_tol.
    """
    if grid_step > 0.1:
        raise InvalidParameterError("grid_step must be <= 0.1 (unit zero spacing)")
    if refine_tol <= 0 or window_halfwidth <= 0:
        raise InvalidParameterError("window and refine_tol must be positive")
    scaled = d.scaled_floats()
    check_tail_bound(scaled, window_halfwidth)

    n_steps = int(round(2 * window_halfwidth / grid_step))
    grid = -window_halfwidth + grid_step * np.arange(n_steps + 1)
    vals = kernels.horner_many(scaled, grid)
    exact = np.nonzero(vals == 0.0)[0]
    if exact.size:
        grid = grid.copy()
        grid[exact] += grid_step / 7.0
        vals = kernels.horner_many(scaled, grid)

    sign = np.sign(vals)
    brackets = np.nonzero(sign[:-1] * sign[1:] < 0)[0]

    # scaled high-precision coefficients for the refinement stage
    with d.precision.context():
        inv_amp = gmpy2.exp(-d.log_amplitude)
        coeffs_mp = [c * inv_amp for c in d.a]
        deriv_mp = [coeffs_mp[r] * r for r in range(1, len(coeffs_mp))]

        zeros, residuals, slopes = [], [], []
        for i in brackets:
            a, b = float(grid[i]), float(grid[i + 1])
            fa = float(vals[i])
            while b - a > 1e-6:
                m = 0.5 * (a + b)
                fm = float(kernels.horner_many(scaled, np.array([m]))[0])
                if fa * fm <= 0:
                    b = m
                else:
                    a, fa = m, fm
            am, bm = gmpy2.mpfr(a), gmpy2.mpfr(b)
            fam = _mpfr_polyval(coeffs_mp, am)
            fbm = _mpfr_polyval(coeffs_mp, bm)
            if fam == 0:
                root = am
            elif fbm == 0:
                root = bm
            else:
                if fam * fbm > 0:
                    # float stage overshot past the crossing; rescan the cell
                    am, bm = gmpy2.mpfr(float(grid[i])), gmpy2.mpfr(float(grid[i + 1]))
                    fam = _mpfr_polyval(coeffs_mp, am)
                while bm - am > refine_tol:
                    mm = (am + bm) / 2
                    fmm = _mpfr_polyval(coeffs_mp, mm)
                    if fam * fmm <= 0:
                        bm = mm
                    else:
                        am, fam = mm, fmm
                root = (am + bm) / 2
            res = abs(_mpfr_polyval(coeffs_mp, root))
            slope = abs(_mpfr_polyval(deriv_mp, root))
            zeros.append(float(root))
            residuals.append(float(res))
            slopes.append(float(slope))

    return ZeroSet(zeros=np.asarray(zeros), k=d.k,
                   window_halfwidth=float(window_halfwidth),
                   refine_tol=float(refine_tol),
                   residuals=np.asarray(residuals), slopes=np.asarray(slopes))


def spacing_stats(zs):
    """Gap statistics and fractional parts of a zero set."""
    zeros = np.asarray(zs.zeros, dtype=float)
    if zeros.size < 2:
        return SpacingReport(gaps=np.empty(0), mean_gap=float("nan"),
                             median_gap=float("nan"),
                             max_abs_dev_from_1=float("nan"),
                             fractional_parts=np.mod(zeros, 1.0), empty=True)
    gaps = np.diff(zeros)
    return SpacingReport(gaps=gaps, mean_gap=float(np.mean(gaps)),
                         median_gap=float(np.median(gaps)),
                         max_abs_dev_from_1=float(np.max(np.abs(gaps - 1.0))),
                         fractional_parts=np.mod(zeros, 1.0))


def predicted_lattice(theta, window_halfwidth, margin=0.0):
    """Zeros of the cosine profile: theta/pi + 1/2 + integers, inside the window."""
    base = theta / math.pi + 0.5
    lo = -window_halfwidth + margin
    hi = window_halfwidth - margin
    m_lo = math.ceil(lo - base)
    m_hi = math.floor(hi - base)
    return base + np.arange(m_lo, m_hi + 1, dtype=float)


def match_zero_sets(found, theta, eps=0.05, c=0.5):
    """Two-sided correspondence between found zeros and the predicted lattice.

    Zeros inside the window shrunk by eps/c are matched to lattice points
    within distance eps/c; the pairing is mutual-nearest, and the report
    records whether it is symmetric (found->lattice equals lattice->found).
    """
    if not eps < c * c:
        raise InvalidParameterError(f"need eps < c^2 ({eps} >= {c * c})")
    tol = eps / c
    W = found.window_halfwidth
    zeros = np.asarray(found.zeros, dtype=float)
    lattice = predicted_lattice(theta, W)
    interior = zeros[(zeros >= -W + tol) & (zeros <= W - tol)]
    lattice_in = lattice[(lattice >= -W + tol) & (lattice <= W - tol)]

    def mutual_pairs(xs, ys):
        """(x, y) pairs where each is the other's nearest and |x-y| <= tol."""
        out = set()
        for x in xs:
            if ys.size == 0:
                break
            j = int(np.argmin(np.abs(ys - x)))
            if abs(ys[j] - x) <= tol and abs(xs - ys[j]).min() == abs(x - ys[j]):
                out.add((float(x), float(ys[j])))
        return out

    fwd = mutual_pairs(interior, lattice)
    bwd = {(x, y) for y, x in mutual_pairs(lattice_in, zeros)}
    # restrict both to pairs with both endpoints interior before comparing
    fwd_core = {(x, y) for x, y in fwd if -W + tol <= y <= W - tol}
    bwd_core = {(x, y) for x, y in bwd if -W + tol <= x <= W - tol}
    matched_x = {x for x, _ in fwd}
    matched_y = {y for _, y in bwd}
    unmatched_found = [float(x) for x in interior if float(x) not in matched_x]
    unmatched_pred = [float(y) for y in lattice_in if float(y) not in matched_y]
    max_d = max((abs(a - b) for a, b in fwd), default=0.0)
    frac = len(matched_x) / len(interior) if len(interior) else float("nan")
    return MatchReport(pairs=sorted(fwd), unmatched_found=unmatched_found,
                       unmatched_predicted=unmatched_pred,
                       max_distance=max_d, matched_fraction=frac,
                       symmetric=(fwd_core == bwd_core), tolerance=tol)


def cosine_compare(d, d_next, window_halfwidth, grid_step=0.01):
    """Sup-norm distance of the scaled derivative pair from the cosine profile.

    Both orders are scaled by the order-k amplitude; the order-(k+1)
    reference is -pi sin(pi x - theta).
    """
    if d_next.k != d.k + 1:
        raise InvalidParameterError("second table must be the next derivative order")
    if d.theta is None:
        raise InvalidParameterError("cosine comparison needs an amplitude-normalized table")
    ck = d.scaled_floats()
    cn = d_next.scaled_floats(log_amplitude=d.log_amplitude)
    check_tail_bound(ck, window_halfwidth)
    n_steps = int(round(2 * window_halfwidth / grid_step))
    grid = -window_halfwidth + grid_step * np.arange(n_steps + 1)
    fk = kernels.horner_many(ck, grid)
    fk1 = kernels.horner_many(cn, grid)
    ref = np.cos(math.pi * grid - d.theta)
    ref1 = -math.pi * np.sin(math.pi * grid - d.theta)
    return CosineComparison(sup_error_f=float(np.max(np.abs(fk - ref))),
                            sup_error_fprime=float(np.max(np.abs(fk1 - ref1))),
                            grid_step=float(grid_step))


def write_zeros_csv(rows, path, header=None):
    """CSV rows (replica_seed, k, index, zero, gap_after); header line first."""
    import json as _json
    lines = []
    if header is not None:
        lines.append("# " + _json.dumps(header, sort_keys=True))
    lines.append("replica_seed,k,index,zero,gap_after")
    for seed, k, zeros in rows:
        zeros = list(zeros)
        for i, z in enumerate(zeros):
            gap = zeros[i + 1] - z if i + 1 < len(zeros) else float("nan")
            lines.append(f"{seed},{k},{i},{z!r},{gap!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_fractional_csv(rows, path, header=None):
    """CSV rows (replica_seed, k, fractional_part) for the uniformity test."""
    import json as _json
    lines = []
    if header is not None:
        lines.append("# " + _json.dumps(header, sort_keys=True))
    lines.append("replica_seed,k,fractional_part")
    for seed, k, frac in rows:
        lines.append(f"{seed},{k},{frac!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
