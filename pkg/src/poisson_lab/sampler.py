"""Unit-intensity Poisson point configurations on symmetric windows.

Samples are generated from a counter-based RNG (Philox keyed by the seed),
so replica ``r`` of an ensemble can use ``base_seed + r`` and regeneration
is bit-identical.  The count on ``[-M, M]`` is drawn Poisson(2*M*intensity),
then that many uniforms are sorted; counts on disjoint subintervals are then
Poisson with the right means and independent, conditionally uniform given
the count.

Shifted configurations keep the original abscissas plus a lazy ``offset``;
this makes shift-then-unshift bit-exact and keeps inter-point gaps exactly
unchanged, which re-materializing ``x + offset`` in doubles would not.
"""

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidParameterError, InvalidSampleError


@dataclass(frozen=True)
class PoissonSample:
    """Sorted point configuration on [-M, M] (plus an optional shift)."""

    points: np.ndarray
    window_halfwidth: float
    intensity: float = 1.0
    seed: int = 0
    offset: float = 0.0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if not np.all(np.isfinite(pts)):
            raise InvalidSampleError("sample points must be finite")
        if pts.size and (np.min(pts) < -self.window_halfwidth - 1e-12
                         or np.max(pts) > self.window_halfwidth + 1e-12):
            raise InvalidSampleError("points outside the stated window")
        if pts.size > 1 and not np.all(np.diff(pts) > 0):
            raise InvalidSampleError("points must be strictly increasing (duplicates rejected)")

    @property
    def count(self):
        return int(self.points.size)

    @property
    def positions(self):
        """Point locations including any shift."""
        if self.offset == 0.0:
            return self.points
        return self.points + self.offset

    @property
    def window(self):
        """(lo, hi) interval actually covered; asymmetric once shifted."""
        return (-self.window_halfwidth + self.offset,
                self.window_halfwidth + self.offset)

    def gaps(self):
        """Gaps between consecutive points; exactly shift-invariant."""
        return np.diff(self.points)

    def __eq__(self, other):
        if not isinstance(other, PoissonSample):
            return NotImplemented
        return (np.array_equal(self.points, other.points)
                and self.window_halfwidth == other.window_halfwidth
                and self.intensity == other.intensity
                and self.seed == other.seed
                and self.offset == other.offset)

    # -- serialization -------------------------------------------------
    def to_json(self):
        obj = {
            "seed": self.seed,
            "window_halfwidth": self.window_halfwidth,
            "intensity": self.intensity,
            "points": [float(x) for x in self.positions],
        }
        if self.offset != 0.0:
            obj["offset"] = self.offset
            obj["window"] = list(self.window)
        return json.dumps(obj)

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        offset = float(obj.get("offset", 0.0))
        pts = np.asarray(obj["points"], dtype=float)
        return cls(points=pts - offset if offset else pts,
                   window_halfwidth=float(obj["window_halfwidth"]),
                   intensity=float(obj["intensity"]),
                   seed=int(obj["seed"]),
                   offset=offset)


@dataclass(frozen=True)
class RescaledSample:
    """View of a base sample with positions x/scale carrying mass 1/scale."""

    base: PoissonSample
    scale: int

    @property
    def positions(self):
        return self.base.positions / self.scale

    @property
    def mass(self):
        return 1.0 / self.scale

    def measure(self, lo, hi):
        """Total mass assigned to [lo, hi]."""
        pos = self.base.positions
        n = int(np.count_nonzero((pos >= lo * self.scale) & (pos <= hi * self.scale)))
        return n / self.scale


def sample_poisson(window_halfwidth, intensity=1.0, seed=0):
    """Draw a unit-window Poisson configuration deterministically from a seed.

    Parameters
    ----------
    window_halfwidth : float
        Half-width M of the symmetric window [-M, M]; M = 0 gives an
        empty sample.
    intensity : float
        Expected number of points per unit length.
    seed : int
        Key for the counter-based generator; different seeds give
        independent streams.
    """
    if not (math.isfinite(window_halfwidth) and window_halfwidth >= 0):
        raise InvalidParameterError(f"window_halfwidth must be finite and >= 0, got {window_halfwidth}")
    if not (math.isfinite(intensity) and intensity > 0):
        raise InvalidParameterError(f"intensity must be finite and > 0, got {intensity}")
    gen = np.random.Generator(np.random.Philox(key=int(seed) & ((1 << 64) - 1)))
    n = int(gen.poisson(2.0 * window_halfwidth * intensity))
    pts = np.sort(gen.uniform(-window_halfwidth, window_halfwidth, n))
    return PoissonSample(points=pts, window_halfwidth=float(window_halfwidth),
                         intensity=float(intensity), seed=int(seed))


def from_points(points, seed=-1, intensity=1.0):
    """Explicit point list (debug mode); sorts and validates."""
    pts = np.sort(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise InvalidParameterError("explicit point list may not be empty")
    m = float(np.max(np.abs(pts)))
    return PoissonSample(points=pts, window_halfwidth=m, intensity=intensity, seed=seed)


def shift_sample(s, lam):
    """Move every point right by lam (the window shifts along)."""
    if not math.isfinite(lam):
        raise InvalidParameterError("shift must be finite")
    return replace(s, offset=s.offset + lam)


def rescale_sample(s, k):
    """View the configuration at spatial scale 1/k with per-point mass 1/k."""
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise InvalidParameterError(f"rescale factor must be an integer >= 1, got {k}")
    return RescaledSample(base=s, scale=int(k))


def extend_sample(s, new_halfwidth):
    """Extend the window, keeping the existing points (nested windows).

    The annulus points are drawn from a stream keyed on
    (seed, old width, new width), so the extension chain is deterministic.
    The shift offset must be zero.
    """
    if s.offset != 0.0:
        raise InvalidParameterError("cannot extend a shifted sample")
    if new_halfwidth <= s.window_halfwidth:
        raise InvalidParameterError("new window must be strictly larger")
    entropy = (int(s.seed) & ((1 << 64) - 1),
               int(round(s.window_halfwidth * 1024)),
               int(round(new_halfwidth * 1024)),
               0xA5)
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
    gap = new_halfwidth - s.window_halfwidth
    n_left = int(gen.poisson(gap * s.intensity))
    n_right = int(gen.poisson(gap * s.intensity))
    left = gen.uniform(-new_halfwidth, -s.window_halfwidth, n_left)
    right = gen.uniform(s.window_halfwidth, new_halfwidth, n_right)
    pts = np.sort(np.concatenate([left, s.points, right]))
    return PoissonSample(points=pts, window_halfwidth=float(new_halfwidth),
                         intensity=s.intensity, seed=s.seed)
