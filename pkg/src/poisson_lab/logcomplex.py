"""Complex numbers in (log-magnitude, argument) form.

Taylor coefficients of high derivatives span thousands of binary orders of
magnitude, so products like ``k! * sigma**-k * f(sigma)`` cannot live in
doubles.  ``LogComplex`` stores ``log|w|`` (with ``-inf`` encoding zero) and
``arg w`` in (-pi, pi], and multiplies by adding logs.  Components may be
Python floats or ``gmpy2.mpfr`` values; arithmetic follows the operand types,
so the same class serves both the fast double path and full-precision checks.
"""

import cmath
import math

import gmpy2


def _is_mpfr(x):
    return isinstance(x, (gmpy2.mpfr, gmpy2.mpz, gmpy2.mpq))


def wrap_angle(a):
    """Reduce an angle to (-pi, pi], preserving float/mpfr type."""
    if _is_mpfr(a):
        tau = 2 * gmpy2.const_pi()
        r = gmpy2.remainder(a, tau)
        if r <= -tau / 2:
            r += tau
        elif r > tau / 2:
            r -= tau
        return r
    r = math.remainder(float(a), 2.0 * math.pi)
    if r <= -math.pi:
        r += 2.0 * math.pi
    return r


class LogComplex:
    """Immutable (log_mag, arg) representation of a complex number."""

    __slots__ = ("log_mag", "arg")

    def __init__(self, log_mag, arg):
        object.__setattr__(self, "log_mag", log_mag)
        object.__setattr__(self, "arg", wrap_angle(arg) if log_mag != float("-inf") else 0.0)

    def __setattr__(self, *_):
        raise AttributeError("LogComplex is immutable")

    # -- constructors ---------------------------------------------------
    @classmethod
    def zero(cls):
        return cls(float("-inf"), 0.0)

    @classmethod
    def one(cls):
        return cls(0.0, 0.0)

    @classmethod
    def from_complex(cls, w):
        w = complex(w)
        if w == 0:
            return cls.zero()
        return cls(math.log(abs(w)), cmath.phase(w))

    @classmethod
    def from_real(cls, x):
        """From a real value (float or mpfr), exact in its own precision."""
        if x == 0:
            return cls.zero()
        if _is_mpfr(x):
            return cls(gmpy2.log(abs(x)), gmpy2.const_pi() if x < 0 else gmpy2.mpfr(0))
        return cls(math.log(abs(float(x))), math.pi if x < 0 else 0.0)

    @classmethod
    def exp_of(cls, w):
        """exp(w) for complex w given as (Re, Im) -> (log_mag, arg)."""
        return cls(w.real, w.imag)

    # -- queries ----------------------------------------------------------
    @property
    def is_zero(self):
        return self.log_mag == float("-inf")

    def to_complex(self):
        """Materialize as complex128 (may overflow to inf or underflow to 0)."""
        if self.is_zero:
            return 0j
        m = math.exp(float(self.log_mag)) if float(self.log_mag) < 709.0 else math.inf
        return m * complex(math.cos(float(self.arg)), math.sin(float(self.arg)))

    def log10_abs(self):
        if self.is_zero:
            return float("-inf")
        return float(self.log_mag) / math.log(10.0)

    # -- arithmetic -------------------------------------------------------
    def __mul__(self, other):
        if self.is_zero or other.is_zero:
            return LogComplex.zero()
        return LogComplex(self.log_mag + other.log_mag, self.arg + other.arg)

    def __truediv__(self, other):
        if other.is_zero:
            raise ZeroDivisionError("division by LogComplex zero")
        if self.is_zero:
            return LogComplex.zero()
        return LogComplex(self.log_mag - other.log_mag, self.arg - other.arg)

    def __pow__(self, n):
        if not isinstance(n, int):
            raise TypeError("only integer powers are supported")
        if self.is_zero:
            if n <= 0:
                raise ZeroDivisionError("0 ** nonpositive")
            return LogComplex.zero()
        return LogComplex(n * self.log_mag, n * self.arg)

    def __neg__(self):
        if self.is_zero:
            return self
        pi = gmpy2.const_pi() if _is_mpfr(self.arg) else math.pi
        return LogComplex(self.log_mag, self.arg + pi)

    def conjugate(self):
        if self.is_zero:
            return self
        return LogComplex(self.log_mag, -self.arg)

    def relative_difference(self, other):
        """|self/other - 1| as a float; inf when other is zero and self is not."""
        if other.is_zero:
            return 0.0 if self.is_zero else math.inf
        if self.is_zero:
            return 1.0
        dm = float(self.log_mag - other.log_mag)
        da = float(wrap_angle(self.arg - other.arg))
        if dm > 200.0:
            return math.inf
        return abs(cmath.exp(complex(dm, da)) - 1.0)

    def __repr__(self):
        return f"LogComplex(log_mag={float(self.log_mag) if not self.is_zero else '-inf'}, arg={float(self.arg)})"
