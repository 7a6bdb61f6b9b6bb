"""Replica ensembles and the statistical tests over them.

Every ensemble is deterministic: replica r uses seed base_seed + r, and
aggregation is a fold over seed-sorted summaries, so results are identical
under any execution order or worker count.
"""

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import List, Optional

import numpy as np
from scipy import integrate, special, stats

from . import _backend
from ._backend import kernels
from .errors import InvalidParameterError, SaddleFailureError
from .precision import PrecisionConfig, default_bits, default_window
from .sampler import sample_poisson
from .saddle import find_saddle
from .series import coefficients_product, derivative_coefficients
from .zeros import (cosine_compare, default_r_max, find_real_zeros,
                    match_zero_sets, spacing_stats)

__version__ = "0.1.0"


# ----------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    """Resolved parameters of a replica ensemble."""

    k: int = 60
    replicas: int = 100
    base_seed: int = 0
    window_halfwidth: Optional[float] = None
    bits: Optional[int] = None
    delta: float = 0.4
    intensity: float = 1.0
    zero_window: float = 5.0
    cosine_window: float = 3.0
    grid_step: float = 0.05
    refine_tol: float = 1e-9
    r_max: Optional[int] = None
    nodes_per_arc: int = 512
    threads: int = 1
    failure_quota: float = 0.1
    e1_replicas: int = 10000
    e1_window: float = 10000.0
    w1_replicas: int = 10000
    w1_window: float = 1000.0
    include_distributional: bool = True
    output_dir: Optional[str] = None

    def resolved(self):
        cfg = asdict(self)
        cfg["window_halfwidth"] = (self.window_halfwidth
                                   if self.window_halfwidth is not None
                                   else default_window(self.k))
        cfg["bits"] = self.bits if self.bits is not None else default_bits(self.k)
        cfg["r_max"] = (self.r_max if self.r_max is not None
                        else default_r_max(self.zero_window))
        cfg["backend"] = _backend.BACKEND
        cfg["version"] = __version__
        return cfg

    def validate(self):
        if self.k < 1:
            raise InvalidParameterError(f"k must be >= 1, got {self.k}")
        if self.replicas < 1:
            raise InvalidParameterError("replicas must be >= 1")
        if not (0 < self.failure_quota < 1):
            raise InvalidParameterError("failure_quota must be in (0,1)")
        if self.threads < 1:
            raise InvalidParameterError("threads must be >= 1")
        r = self.resolved()
        if r["window_halfwidth"] <= 0 or r["bits"] < 64:
            raise InvalidParameterError("bad window/bits")
        return r


def config_hash(resolved):
    text = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:12]


# ----------------------------------------------------------------------
# per-replica pipeline


@dataclass
class ReplicaSummary:
    """Per-replica digest; everything JSON-serializable."""

    seed: int
    k: int
    ok: bool
    reason: str = ""
    sigma_re: float = float("nan")
    sigma_im: float = float("nan")
    residual: float = float("nan")
    iterations: int = 0
    normalized_offset: float = float("nan")
    localized: bool = False
    curvature_re: float = float("nan")
    curvature_im: float = float("nan")
    theta: float = float("nan")
    log_amplitude: float = float("nan")
    e_signs: List[int] = field(default_factory=list)
    e_signs_base: int = 0
    cosine_quantities: List[float] = field(default_factory=list)
    cosine_law_dev: float = float("nan")
    zero_count: int = 0
    max_gap_dev: float = float("nan")
    median_gap: float = float("nan")
    matched_fraction: float = float("nan")
    frac_nearest_zero: float = float("nan")
    sup_error_f: float = float("nan")
    sup_error_fprime: float = float("nan")

    def to_dict(self):
        return asdict(self)


def run_one_replica(cfg, seed):
    """Full pipeline for one seed; saddle failures are recorded, not raised."""
    k = cfg["k"]
    sample = sample_poisson(cfg["window_halfwidth"], cfg["intensity"], seed)
    try:
        sp = find_saddle(sample, k)
    except SaddleFailureError as exc:
        return ReplicaSummary(seed=seed, k=k, ok=False, reason=f"saddle: {exc}")
    p = PrecisionConfig(cfg["bits"])
    r_max = cfg["r_max"]
    table = coefficients_product(sample, k + 1 + r_max, p)
    d = derivative_coefficients(table, k, r_max, sigma=sp.sigma)
    d_next = derivative_coefficients(table, k + 1, r_max - 1)

    zs = find_real_zeros(d, cfg["zero_window"], cfg["grid_step"], cfg["refine_tol"])
    spacing = spacing_stats(zs)
    match = match_zero_sets(zs, d.theta)
    cosine = cosine_compare(d, d_next, cfg["cosine_window"])

    scaled = d.scaled_floats()
    quants, devs = [], []
    for r in range(0, min(6, r_max) + 1):
        q = scaled[r] * math.exp(math.lgamma(r + 1) - r * math.log(math.pi))
        quants.append(q)
        devs.append(abs(q - math.cos(d.theta - r * math.pi / 2)))

    j0 = max(0, k - 2)
    signs = [table.sign(j) for j in range(j0, min(k + 2, table.n_max) + 1)]

    frac = float("nan")
    if zs.zeros.size:
        nearest = zs.zeros[int(np.argmin(np.abs(zs.zeros)))]
        frac = float(np.mod(nearest, 1.0))

    curv = sp.sigma ** 2 * sp.second_derivative / k
    return ReplicaSummary(
        seed=seed, k=k, ok=True,
        sigma_re=sp.sigma.real, sigma_im=sp.sigma.imag,
        residual=sp.residual, iterations=sp.iterations,
        normalized_offset=sp.normalized_offset, localized=sp.localized,
        curvature_re=curv.real, curvature_im=curv.imag,
        theta=d.theta, log_amplitude=float(d.log_amplitude),
        e_signs=signs, e_signs_base=j0,
        cosine_quantities=quants, cosine_law_dev=max(devs),
        zero_count=int(zs.zeros.size),
        max_gap_dev=spacing.max_abs_dev_from_1,
        median_gap=spacing.median_gap,
        matched_fraction=match.matched_fraction,
        frac_nearest_zero=frac,
        sup_error_f=cosine.sup_error_f,
        sup_error_fprime=cosine.sup_error_fprime,
    )


def _worker(args):
    cfg, seed = args
    return run_one_replica(cfg, seed)


def run_replicas(config):
    """Deterministic ensemble: replica r uses seed base_seed + r."""
    cfg = config.validate()
    seeds = [config.base_seed + r for r in range(config.replicas)]
    if config.threads > 1:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            summaries = list(pool.map(_worker, [(cfg, s) for s in seeds], chunksize=4))
    else:
        summaries = [run_one_replica(cfg, s) for s in seeds]
    summaries.sort(key=lambda s: s.seed)
    return summaries


# ----------------------------------------------------------------------
# test results


@dataclass
class TestResult:
    name: str
    statistic: float
    threshold: float
    n_replicas: int
    passed: bool
    comparison: str = "<="          # how statistic relates to threshold on pass
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


# ----------------------------------------------------------------------
# distribution of the first coefficient


def collect_e1(replicas, window, base_seed=0, intensity=1.0):
    """First-coefficient draws: sum of -1/x over independent wide windows."""
    out = np.empty(replicas)
    for r in range(replicas):
        s = sample_poisson(window, intensity, base_seed + r)
        out[r] = kernels.neg_recip_sum(s.positions)
    return out


def cauchy_scale_oracle(window):
    """Scale of the limiting symmetric heavy-tailed law, from the
    characteristic function of the windowed sum.

    The log-characteristic function at t is
    2*[(cos(t*a) - 1)/a - t*(pi/2 - Si(t*a))] with a = 1/window; its negative
    at t = 1 is the scale.  Si is evaluated numerically.
    """
    a = 1.0 / window
    si, _ = special.sici(a)
    return -2.0 * ((math.cos(a) - 1.0) / a - (math.pi / 2.0 - si))


def fit_cauchy_scale(samples):
    """Median-absolute-value estimator (median of |X| equals the scale)."""
    return float(np.median(np.abs(samples)))


def test_e1_cauchy(e1_samples, significance=0.01):
    """KS test of the first-coefficient sample against a fitted Cauchy law."""
    e1_samples = np.asarray(e1_samples)
    if e1_samples.size < 1000:
        raise InvalidParameterError("need at least 1000 samples")
    scale = fit_cauchy_scale(e1_samples)
    res = stats.kstest(e1_samples, stats.cauchy(loc=0.0, scale=scale).cdf)
    return TestResult(name="e1_cauchy_ks", statistic=float(res.pvalue),
                      threshold=significance, n_replicas=int(e1_samples.size),
                      passed=bool(res.pvalue > significance), comparison=">",
                      details={"ks_statistic": float(res.statistic),
                               "fitted_scale": scale})


# ----------------------------------------------------------------------
# sign periodicity


def test_sign_periodicity(summaries, threshold=0.9):
    """Frequency of sign(e[k]) == -sign(e[k+2]) across replicas."""
    flips = []
    for s in summaries:
        if not s.ok or not s.e_signs:
            continue
        idx_k = s.k - s.e_signs_base
        idx_k2 = idx_k + 2
        if 0 <= idx_k < len(s.e_signs) and idx_k2 < len(s.e_signs):
            flips.append(s.e_signs[idx_k] == -s.e_signs[idx_k2])
    freq = float(np.mean(flips)) if flips else float("nan")
    return TestResult(name="sign_periodicity", statistic=freq, threshold=threshold,
                      n_replicas=len(flips), passed=bool(freq >= threshold),
                      comparison=">=", details={})


# ----------------------------------------------------------------------
# uniformity on the circle


def kuiper_statistic(values):
    """Circle-invariant span statistic D+ + D- against Uniform[0,1).

    Equals the supremum over rotations of the ordinary one-sample KS
    distance, which is why it is the right form for data with no
    distinguished origin.
    """
    u = np.sort(np.mod(np.asarray(values, dtype=float), 1.0))
    n = u.size
    if n == 0:
        raise InvalidParameterError("empty sample")
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - u)
    d_minus = np.max(u - (i - 1) / n)
    return float(d_plus + d_minus)


def kuiper_pvalue(v, n):
    """Asymptotic tail probability with the standard small-n modification."""
    t = v * (math.sqrt(n) + 0.155 + 0.24 / math.sqrt(n))
    if t < 0.4:
        return 1.0
    total = 0.0
    for j in range(1, 120):
        term = 2.0 * (4.0 * j * j * t * t - 1.0) * math.exp(-2.0 * j * j * t * t)
        total += term
        if abs(term) < 1e-12:
            break
    return float(min(1.0, max(0.0, total)))


def test_translate_uniformity(fractional_parts, significance=0.01):
    """Rotation-maximized KS test of pooled fractional parts vs Uniform[0,1)."""
    u = np.asarray(fractional_parts, dtype=float)
    u = u[np.isfinite(u)]
    if u.size < 1000:
        raise InvalidParameterError("need at least 1000 pooled fractional parts")
    v = kuiper_statistic(u)
    p = kuiper_pvalue(v, u.size)
    return TestResult(name="translate_uniformity_kuiper", statistic=p,
                      threshold=significance, n_replicas=int(u.size),
                      passed=bool(p > significance), comparison=">",
                      details={"kuiper_v": v})


# ----------------------------------------------------------------------
# windowed pole-sum statistics


def collect_power_sums(z, r, replicas, window, base_seed=0, intensity=1.0):
    """W = sum (z - x)^-r over independent windows, one value per replica."""
    out = np.empty(replicas, dtype=complex)
    for i in range(replicas):
        s = sample_poisson(window, intensity, base_seed + i)
        out[i] = kernels.inv_power_sum(s.positions, complex(z), r)
    return out


def windowed_mean_exact(z, r, window):
    """Exact finite-window expectation of sum (z - x)^-r (intensity 1)."""
    z = complex(z)
    if r == 1:
        return np.log((z + window) / (z - window))
    return ((z - window) ** (1 - r) - (z + window) ** (1 - r)) / (r - 1)


def windowed_variance_quadrature(z, r, window):
    """Numeric quadrature of |z - x|^(-2r) over the window (variance oracle)."""
    z = complex(z)

    def f(x):
        return abs(z - x) ** (-2 * r)

    val, _ = integrate.quad(f, -window, window, limit=200)
    return float(val)


@dataclass
class PoissonIntegralReport:
    z: complex
    r: int
    n: int
    window: float
    mean: complex
    mean_limit: complex
    variance: float
    variance_quadrature: float
    gamma_hat: float


def poisson_integral_stats(z, r, replicas, window, base_seed=0, intensity=1.0,
                           mean_band_sigmas=3.0, variance_rel_tol=0.10):
    """Mean/variance checks for the windowed pole sums.

    Returns (report, [mean TestResult, variance TestResult, compensated
    TestResult]).  The mean limit is -i*pi*sign(Im z) for r = 1 and 0 for
    r >= 2; the r = 1 variance limit is pi/|Im z|; the compensated-sum
    variance is compared against the quadrature of |z-x|^(-2r).
    """
    z = complex(z)
    if z.imag == 0:
        raise InvalidParameterError("Im z must be nonzero")
    ws = collect_power_sums(z, r, replicas, window, base_seed, intensity)
    n = ws.size
    mean = complex(np.mean(ws))
    centered = ws - mean
    variance = float(np.mean(np.abs(centered) ** 2))
    sem_re = float(np.std(ws.real, ddof=1) / math.sqrt(n))
    sem_im = float(np.std(ws.imag, ddof=1) / math.sqrt(n))

    limit = -1j * math.pi * np.sign(z.imag) if r == 1 else 0j
    zscore = max(abs(mean.real - limit.real) / sem_re,
                 abs(mean.imag - limit.imag) / sem_im)
    mean_res = TestResult(
        name=f"power_sum_mean_r{r}", statistic=float(zscore),
        threshold=mean_band_sigmas, n_replicas=n,
        passed=bool(zscore <= mean_band_sigmas), comparison="<=",
        details={"mean_re": mean.real, "mean_im": mean.imag,
                 "limit_im": limit.imag,
                 "window_mean_im": float(windowed_mean_exact(z, r, window).imag)})

    gamma_hat = variance * abs(z.imag) ** (2 * r - 1)
    if r == 1:
        target = math.pi / abs(z.imag)
        dev = abs(variance / target - 1.0)
        var_res = TestResult(
            name="power_sum_variance_r1", statistic=float(dev),
            threshold=variance_rel_tol, n_replicas=n,
            passed=bool(dev <= variance_rel_tol), comparison="<=",
            details={"variance": variance, "target": target})
    else:
        var_res = TestResult(
            name=f"power_sum_gamma_r{r}", statistic=gamma_hat,
            threshold=float("inf"), n_replicas=n, passed=True, comparison="<=",
            details={"variance": variance,
                     "note": "scale constant estimated, not asserted"})

    quad = windowed_variance_quadrature(z, r, window)
    comp_dev = abs(variance / quad - 1.0)
    comp_res = TestResult(
        name=f"compensated_variance_r{r}", statistic=float(comp_dev),
        threshold=variance_rel_tol, n_replicas=n,
        passed=bool(comp_dev <= variance_rel_tol), comparison="<=",
        details={"variance": variance, "quadrature": quad})

    report = PoissonIntegralReport(z=z, r=r, n=n, window=window, mean=mean,
                                   mean_limit=complex(limit), variance=variance,
                                   variance_quadrature=quad, gamma_hat=gamma_hat)
    return report, [mean_res, var_res, comp_res]


def fit_gamma_constant(r, heights, replicas, window, base_seed=0):
    """Estimate the variance scale constant for order r across heights.

    Returns (per-height estimates, max relative spread).  The constant is
    reported, not asserted; stability across heights checks the
    |Im z|^(2r-1) scaling law.
    """
    gammas = []
    for i, h in enumerate(heights):
        ws = collect_power_sums(1j * h, r, replicas, window, base_seed + i * replicas)
        var = float(np.mean(np.abs(ws - ws.mean()) ** 2))
        gammas.append(var * h ** (2 * r - 1))
    spread = max(gammas) / min(gammas) - 1.0
    return gammas, float(spread)


# ----------------------------------------------------------------------
# verify: ensemble plus the statistical test battery


def summaries_tests(summaries, cfg):
    """TestResults computed from a replica ensemble."""
    ok = [s for s in summaries if s.ok]
    n = len(summaries)
    results = []
    rate = len(ok) / n if n else 0.0
    results.append(TestResult(name="saddle_success_rate", statistic=rate,
                              threshold=0.95, n_replicas=n,
                              passed=bool(rate >= 0.95), comparison=">="))
    if ok:
        from .calibration import SADDLE_OFFSET_P95_MAX
        offs = np.array([s.normalized_offset for s in ok])
        p95 = float(np.quantile(offs, 0.95))
        results.append(TestResult(name="saddle_offset_p95", statistic=p95,
                                  threshold=SADDLE_OFFSET_P95_MAX, n_replicas=len(ok),
                                  passed=bool(p95 <= SADDLE_OFFSET_P95_MAX),
                                  comparison="<=",
                                  details={"median": float(np.median(offs))}))
        curv = np.array([abs(complex(s.curvature_re, s.curvature_im)) for s in ok])
        frac_band = float(np.mean((curv >= 0.5) & (curv <= 1.5)))
        results.append(TestResult(name="curvature_band", statistic=frac_band,
                                  threshold=0.9, n_replicas=len(ok),
                                  passed=bool(frac_band >= 0.9), comparison=">="))
        results.append(test_sign_periodicity(summaries))
        gap_devs = np.array([s.max_gap_dev for s in ok if math.isfinite(s.max_gap_dev)])
        med_gap_dev = float(np.median(gap_devs)) if gap_devs.size else float("nan")
        results.append(TestResult(name="spacing_max_gap_dev_median",
                                  statistic=med_gap_dev, threshold=0.1,
                                  n_replicas=int(gap_devs.size),
                                  passed=bool(med_gap_dev <= 0.1), comparison="<="))
        matched = np.array([s.matched_fraction for s in ok if math.isfinite(s.matched_fraction)])
        pooled = float(np.mean(matched)) if matched.size else float("nan")
        results.append(TestResult(name="lattice_matched_fraction",
                                  statistic=pooled, threshold=0.95,
                                  n_replicas=int(matched.size),
                                  passed=bool(pooled >= 0.95), comparison=">="))
        cos_dev = np.array([s.cosine_law_dev for s in ok])
        results.append(TestResult(name="cosine_law_dev_median",
                                  statistic=float(np.median(cos_dev)), threshold=0.1,
                                  n_replicas=len(ok),
                                  passed=bool(np.median(cos_dev) <= 0.1),
                                  comparison="<="))
        fracs = np.array([s.frac_nearest_zero for s in ok])
        fracs = fracs[np.isfinite(fracs)]
        if fracs.size >= 1000:
            results.append(test_translate_uniformity(fracs))
    return results


def verify_run(config):
    """Run the ensemble and the full test battery.

    Returns (summaries, test results, resolved config).
    """
    cfg = config.validate()
    summaries = run_replicas(config)
    results = summaries_tests(summaries, cfg)
    if config.include_distributional:
        e1 = collect_e1(config.e1_replicas, config.e1_window,
                        base_seed=config.base_seed + 10_000_000)
        res = test_e1_cauchy(e1)
        oracle = cauchy_scale_oracle(config.e1_window)
        res.details["oracle_scale"] = oracle
        res.details["scale_rel_dev"] = abs(res.details["fitted_scale"] / oracle - 1.0)
        results.append(res)
        _, w_tests = poisson_integral_stats(1j, 1, config.w1_replicas,
                                            config.w1_window,
                                            base_seed=config.base_seed + 20_000_000)
        results.extend(w_tests)
    return summaries, results, cfg


# ----------------------------------------------------------------------
# persistence


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def write_replicas_jsonl(summaries, cfg, path):
    lines = [json.dumps({"header": cfg}, sort_keys=True)]
    for s in summaries:
        lines.append(json.dumps(s.to_dict(), sort_keys=True))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_summary_json(results, cfg, path, extra=None):
    obj = {
        "config": cfg,
        "tests": [r.to_dict() for r in results],
    }
    if extra:
        obj.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(obj))
