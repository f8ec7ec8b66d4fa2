"""Arbitrary-precision scalars and the log-scaled representation.

``gmpy2.mpfr`` (and ``gmpy2.mpc`` for complex values) is the big-float type used
throughout the package.  Its exponent range (about 2**30 bits) is effectively
unbounded for the quantities handled here.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass

import gmpy2
from gmpy2 import mpc, mpfr

from .errors import DomainError

MIN_BITS = 64


@dataclass(frozen=True)
class Precision:
    """Working precision and the integration tolerance requested at that precision."""

    mantissa_bits: int = 256
    target_tol: float | None = None

    def __post_init__(self):
        if int(self.mantissa_bits) < MIN_BITS:
            raise DomainError(f"mantissa_bits must be >= {MIN_BITS}, got {self.mantissa_bits}")
        if self.target_tol is not None and not self.target_tol > 0:
            raise DomainError("target_tol must be positive")

    @property
    def tol(self):
        """Tolerance as a big float; defaults to 2**-(bits-16)."""
        with working(self):
            if self.target_tol is None:
                return mpfr(2) ** (16 - self.mantissa_bits)
            return mpfr(self.target_tol)

    def raised(self, factor=2):
        return Precision(int(self.mantissa_bits * factor), self.target_tol)

    @classmethod
    def for_order(cls, N, base=256, per_degree=3.5):
        """Policy for tables feeding an order-N Hankel factorization."""
        return cls(base + math.ceil(per_degree * N))


def working(prec):
    """Context manager setting the gmpy2 working precision (bits or Precision)."""
    bits = prec.mantissa_bits if isinstance(prec, Precision) else int(prec)
    return gmpy2.context(gmpy2.get_context(), precision=bits)


def as_bits(prec):
    if prec is None:
        return gmpy2.get_context().precision
    return prec.mantissa_bits if isinstance(prec, Precision) else int(prec)


def big(x, bits=None):
    """Convert int/float/str/Fraction/mpfr to mpfr at the current (or given) precision."""
    if bits is None:
        bits = gmpy2.get_context().precision
    if isinstance(x, str):
        return mpfr(x, bits, 0) if x.lower().startswith(("0x", "-0x")) else mpfr(x, bits)
    if hasattr(x, "numerator") and hasattr(x, "denominator") and not isinstance(x, (int, float)):
        return mpfr(gmpy2.mpq(x.numerator, x.denominator), bits)
    return mpfr(x, bits)


def bigc(x, bits=None):
    """Convert a (possibly complex) number to mpfr, or to mpc if it has an imaginary part."""
    if bits is None:
        bits = gmpy2.get_context().precision
    if isinstance(x, (complex, mpc)):
        if x.imag == 0:
            return big(x.real, bits)
        return mpc(x, bits)
    return big(x, bits)


def is_complex(x):
    return isinstance(x, (complex, mpc))


def _keep(x):
    """mpfr view of ``x`` that never rounds an existing mpfr to the ambient precision."""
    return x if isinstance(x, mpfr) else mpfr(x)


def to_decimal(x, digits=None):
    """Decimal string with enough digits to identify ``x`` at its precision."""
    x = _keep(x)
    if not gmpy2.is_finite(x):
        return str(x)
    if x == 0:
        return "0"
    if digits is None:
        digits = int(x.precision * 0.30103) + 2
    mant, exp, _ = x.digits(10, digits)
    sign = ""
    if mant.startswith("-"):
        sign, mant = "-", mant[1:]
    return f"{sign}{mant[0]}.{mant[1:]}e{exp - 1}"


def to_hex(x):
    """Exact hexadecimal float string (``0x1.8p+1`` style)."""
    return format(_keep(x), "a")


def from_hex(s, bits):
    return mpfr(s, bits, 0)


@dataclass(frozen=True)
class LogScaled:
    """A number stored as ``sign * exp(log_abs)``.

    ``sign`` is -1, 0 or +1 for real quantities and a unit-modulus complex phase
    for complex ones.  ``log_abs`` is ignored when ``sign == 0``.
    """

    sign: object
    log_abs: object

    @classmethod
    def from_value(cls, x):
        if x == 0:
            return cls(0, mpfr(0))
        if isinstance(x, mpc):
            r = abs(x)
            return cls(x / r, gmpy2.log(r))
        if isinstance(x, complex):
            r = abs(x)
            return cls(x / r, math.log(r))
        x = _keep(x)
        with gmpy2.context(gmpy2.get_context(), precision=max(x.precision, gmpy2.get_context().precision)):
            return cls(1 if x > 0 else -1, gmpy2.log(abs(x)))

    @classmethod
    def from_log(cls, log_value):
        """From a (complex) natural logarithm: value = exp(log_value)."""
        if isinstance(log_value, mpc):
            return cls(gmpy2.exp(mpc(0, log_value.imag)), log_value.real)
        return cls(1, _keep(log_value))

    @property
    def is_zero(self):
        return self.sign == 0

    def value(self):
        if self.sign == 0:
            return mpfr(0)
        return self.sign * gmpy2.exp(self.log_abs)

    def log(self):
        """Complex/real logarithm of the value (principal phase)."""
        if self.sign == 0:
            raise DomainError("log of zero")
        if self.sign == 1:
            return _keep(self.log_abs)
        if self.sign == -1:
            return mpc(self.log_abs, gmpy2.const_pi())
        sign = self.sign if isinstance(self.sign, mpc) else mpc(self.sign)
        return mpc(self.log_abs, gmpy2.phase(sign))

    def __mul__(self, other):
        if not isinstance(other, LogScaled):
            other = LogScaled.from_value(other)
        if self.sign == 0 or other.sign == 0:
            return LogScaled(0, mpfr(0))
        return LogScaled(self.sign * other.sign, self.log_abs + other.log_abs)

    def __truediv__(self, other):
        if not isinstance(other, LogScaled):
            other = LogScaled.from_value(other)
        if other.sign == 0:
            raise ZeroDivisionError("LogScaled division by zero")
        if self.sign == 0:
            return self
        sign = self.sign / other.sign if not isinstance(other.sign, int) else self.sign * other.sign
        return LogScaled(sign, self.log_abs - other.log_abs)

    def relative_difference(self, other):
        """|self - other| / |other| computed without leaving log space."""
        if other.sign == 0:
            raise ZeroDivisionError("relative difference against zero")
        if self.sign == 0:
            return mpfr(1)
        ratio = (self / other).value()
        return abs(ratio - 1)

    def to_json(self):
        s = self.sign
        if isinstance(s, int):
            sign = s
        else:
            s = s if isinstance(s, mpc) else mpc(s)
            sign = {"re": to_decimal(s.real), "im": to_decimal(s.imag)}
        return {"sign": sign, "log_abs": to_decimal(self.log_abs), "log_abs_hex": to_hex(self.log_abs)}

    @classmethod
    def from_json(cls, d, bits):
        sign = d["sign"]
        if isinstance(sign, dict):
            sign = mpc(big(sign["re"], bits), big(sign["im"], bits))
        log_abs = from_hex(d["log_abs_hex"], bits) if "log_abs_hex" in d else big(d["log_abs"], bits)
        return cls(sign, log_abs)


@contextlib.contextmanager
def at_least(bits):
    """Raise the working precision to at least ``bits`` inside the block."""
    cur = gmpy2.get_context().precision
    with gmpy2.context(gmpy2.get_context(), precision=max(cur, int(bits))):
        yield
