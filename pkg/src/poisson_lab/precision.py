"""Working-precision configuration for the high-precision paths."""

import math
from dataclasses import dataclass

import gmpy2

from .errors import InvalidParameterError


@dataclass(frozen=True)
class PrecisionConfig:
    """Mantissa bits for every high-precision real in a computation."""

    bits: int = 256

    def __post_init__(self):
        if self.bits < 64:
            raise InvalidParameterError(f"bits must be >= 64, got {self.bits}")

    def context(self):
        """gmpy2 context manager activating this precision."""
        return gmpy2.context(precision=self.bits)


def default_bits(k):
    """Default mantissa bits when a run targets derivative order k.

    Coefficients of order k span roughly k*log2(k) binary orders of
    magnitude, so the working precision grows with k; 256 bits is the floor.
    """
    k = max(int(k), 2)
    return max(256, math.ceil(1.6 * k * math.log2(k)))


def default_window(k):
    """Default half-width of the point window for derivative order k."""
    return float(max(10 * int(k), 500))
