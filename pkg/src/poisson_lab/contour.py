"""Cauchy coefficient integral over a six-arc circle decomposition.

The circle of radius |sigma| through the saddle is cut into a short
dominant arc around sigma, its conjugate, and the four leftover quadrant
pieces (split at the real axis).  Each arc integral is evaluated by
composite Gauss-Legendre panels with node doubling; integrands are
normalized by exp(-phase(sigma)) so nothing overflows, and the normalizer
is re-applied symbolically in log-complex form.

Coefficient recovery: the full-circle integral divided by 2*pi*i equals the
polynomial coefficient e[k+r] of the windowed product exactly (up to
quadrature error), since the function is entire apart from the z^-(k+r+1)
pole at the origin.
"""

import json
import math
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from ._backend import kernels
from .errors import InvalidParameterError
from .logcomplex import LogComplex
from .precision import PrecisionConfig
from .saddle import eval_phase

ARC_LABELS = ("dominant", "upper_right", "upper_left",
              "dominant_conj", "lower_right", "lower_left")

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class ContourSpec:
    """Geometry of the six-arc decomposition for one saddle."""

    radius: float
    beta: float                  # arg(sigma) - pi/2
    delta: float
    nodes_per_arc: int
    k: int
    sigma: complex
    half_angle: float            # k**-delta, possibly clamped at the axis
    clamped: bool
    phase_at_center: complex     # double-precision phase at sigma (normalizer)

    def arcs(self):
        """Polar-angle intervals, counterclockwise, partitioning the circle."""
        a0 = math.pi / 2 + self.beta     # polar angle of sigma
        a = self.half_angle
        return {
            "dominant": (a0 - a, a0 + a),
            "upper_left": (a0 + a, math.pi),
            "lower_left": (-math.pi, -a0 - a),
            "dominant_conj": (-a0 - a, -a0 + a),
            "lower_right": (-a0 + a, 0.0),
            "upper_right": (0.0, a0 - a),
        }


def build_contour(sp, delta=0.4, nodes_per_arc=512):
    """Lay out the arcs for a located saddle.

    delta must lie strictly inside (1/3, 1/2); the dominant half-angle is
    k**-delta, shrunk (and flagged) in the rare case it would reach the
    real axis.
    """
    if not (1.0 / 3.0 < delta < 0.5):
        raise InvalidParameterError(f"delta must be in (1/3, 1/2), got {delta}")
    if nodes_per_arc < 16:
        raise InvalidParameterError("nodes_per_arc must be >= 16")
    k = sp.k
    sigma = sp.sigma
    alpha0 = math.atan2(sigma.imag, sigma.real)
    half = k ** (-delta)
    limit = 0.95 * min(alpha0, math.pi - alpha0)
    clamped = half > limit
    if clamped:
        half = limit
    return ContourSpec(radius=abs(sigma), beta=alpha0 - math.pi / 2,
                       delta=delta, nodes_per_arc=int(nodes_per_arc), k=k,
                       sigma=sigma, half_angle=half, clamped=clamped,
                       phase_at_center=None)


def _phase_normalizer(s, spec):
    """Double-precision phase at sigma; adequate because it cancels exactly."""
    sigma = spec.sigma
    lf = complex(kernels.log_linear_sum(s.positions, sigma))
    return lf - spec.k * np.log(complex(sigma))


def _with_normalizer(s, spec):
    if spec.phase_at_center is None:
        from dataclasses import replace
        return replace(spec, phase_at_center=_phase_normalizer(s, spec))
    return spec


def _arc_quadrature(positions, k, r, R, t0, t1, phi0, panels):
    edges = np.linspace(t0, t1, panels + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1] - edges[0])
    thetas = (mids[:, None] + half * _GL_NODES[None, :]).ravel()
    weights = np.tile(_GL_WEIGHTS * half, panels)
    z = R * np.exp(1j * thetas)
    phase = kernels.log_f_nodes(positions, z) - k * np.log(z)
    integrand = np.exp(phase - phi0) * z ** (-r)
    return 1j * np.sum(integrand * weights)


@dataclass(frozen=True)
class ArcIntegral:
    label: str
    value: LogComplex            # true arc integral (normalizer re-applied)
    normalized: complex          # integral of exp(phase - phase(sigma)) z^-r i dtheta
    nodes: int
    converged: bool


def integrate_arc(s, k, r, spec, arc, p=PrecisionConfig(), rtol=1e-9, max_doublings=6):
    """One arc of the coefficient integral, with node-doubling control.

    Non-convergence of the doubling loop is reported on the result, not
    raised; bad arcs with vanishing integrands trip the absolute floor
    instead.
    """
    if arc not in ARC_LABELS:
        raise InvalidParameterError(f"unknown arc label {arc!r}")
    spec = _with_normalizer(s, spec)
    t0, t1 = spec.arcs()[arc]
    if t1 <= t0:
        return ArcIntegral(label=arc, value=LogComplex.zero(), normalized=0j,
                           nodes=0, converged=True)
    positions = s.positions
    atol = 1e-12 * spec.radius ** (-r) / math.sqrt(k)
    panels = max(2, spec.nodes_per_arc // 8)
    val = _arc_quadrature(positions, k, r, spec.radius, t0, t1,
                          spec.phase_at_center, panels)
    converged = False
    for _ in range(max_doublings):
        panels *= 2
        new = _arc_quadrature(positions, k, r, spec.radius, t0, t1,
                              spec.phase_at_center, panels)
        if abs(new - val) <= max(rtol * abs(new), atol):
            val = new
            converged = True
            break
        val = new
    value = LogComplex.exp_of(spec.phase_at_center) * LogComplex.from_complex(val)
    return ArcIntegral(label=arc, value=value, normalized=val,
                       nodes=panels * 8, converged=converged)


@dataclass(frozen=True)
class ContourResult:
    """Assembled six-arc coefficient estimate and its diagnostics."""

    k: int
    r: int
    spec: ContourSpec
    per_arc: Dict[str, LogComplex]
    per_arc_normalized: Dict[str, complex]
    total: LogComplex                     # e[k+r] estimate
    total_normalized: complex
    dominant_ratio: complex
    negligible_fractions: Dict[str, float]
    nodes: Dict[str, int]
    converged: Dict[str, bool]
    beta_event: bool                      # |beta| > half-angle/2 (rare; recorded)

    @property
    def imag_fraction(self):
        """|imaginary part| / |total| of the coefficient estimate."""
        return abs(math.sin(float(self.total.arg)))


def coefficient_via_contour(s, k, r, spec, p=PrecisionConfig()):
    """Full six-arc Cauchy integral for e[k+r] plus dominant-arc diagnostics."""
    if k + r > s.count:
        raise InvalidParameterError("k + r exceeds the polynomial degree")
    spec = _with_normalizer(s, spec)
    arcs = {}
    for label in ARC_LABELS:
        arcs[label] = integrate_arc(s, k, r, spec, label, p)
    total_norm = sum(a.normalized for a in arcs.values()) / (2j * math.pi)
    total = LogComplex.exp_of(spec.phase_at_center) * LogComplex.from_complex(total_norm)
    sigma = spec.sigma
    prediction_norm = 1j * math.sqrt(2 * math.pi / k) * sigma ** (-r)
    ratio = arcs["dominant"].normalized / prediction_norm
    scale = spec.radius ** (-r) / math.sqrt(k)
    fractions = {lab: abs(a.normalized) / scale for lab, a in arcs.items()}
    return ContourResult(
        k=k, r=r, spec=spec,
        per_arc={lab: a.value for lab, a in arcs.items()},
        per_arc_normalized={lab: a.normalized for lab, a in arcs.items()},
        total=total, total_normalized=total_norm,
        dominant_ratio=ratio, negligible_fractions=fractions,
        nodes={lab: a.nodes for lab, a in arcs.items()},
        converged={lab: a.converged for lab, a in arcs.items()},
        beta_event=bool(abs(spec.beta) > spec.half_angle / 2),
    )


def write_contour_csv(results, path, header=None):
    """CSV rows (k, r, arc, log10_abs, arg, nodes) with a JSON header line."""
    lines = []
    if header is not None:
        lines.append("# " + json.dumps(header, sort_keys=True))
    lines.append("k,r,arc,log10_abs,arg,nodes")
    for res in results:
        for lab in ARC_LABELS:
            lc = res.per_arc[lab]
            lines.append(f"{res.k},{res.r},{lab},{lc.log10_abs()!r},"
                         f"{float(lc.arg)!r},{res.nodes[lab]}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
