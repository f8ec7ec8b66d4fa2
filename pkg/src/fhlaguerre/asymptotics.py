"""Closed-form functions of the soft-edge Riemann-Hilbert analysis and the asymptotic predictions.

All square roots and powers use principal branches (arguments in (-pi, pi]).
Points on the branch cuts are rejected rather than assigned to a side; the
single exception is the negative real axis for the monic prediction, where the
whole product is analytic and every factor is taken as its limit from above.
"""

from __future__ import annotations

from dataclasses import dataclass

import gmpy2
from gmpy2 import mpc, mpfr

from .errors import DomainError
from .precision import LogScaled, big, bigc, working

F_RADIUS = 0.5


def _ctx_bits(prec):
    if prec is None:
        return gmpy2.get_context().precision
    return prec if isinstance(prec, int) else prec.mantissa_bits


def _on_real_segment(z, lo, hi):
    """True when z is real and lo <= z <= hi (hi may be None for +inf, lo None for -inf)."""
    if z.imag != 0:
        return False
    x = z.real
    return (lo is None or x >= lo) and (hi is None or x <= hi)


def _l_const():
    return -2 * (1 + 2 * gmpy2.log(mpfr(2)))


def l_constant(prec=None):
    """The Lagrange constant l = -2(1 + 2 ln 2)."""
    with working(_ctx_bits(prec)):
        return _l_const()


@dataclass(frozen=True)
class EdgeFrame:
    """Edge scaling: mu = 4n t with t = 1 + s 2^(-2/3) n^(-2/3)."""

    n: int
    s: float
    t: object
    mu: object

    @classmethod
    def from_ns(cls, n, s, prec=None):
        with working(_ctx_bits(prec)):
            t = 1 + big(s) * gmpy2.cbrt(mpfr(n) ** -2 / 4)
            return cls(int(n), s, t, 4 * n * t)


# -- scalar functions ----------------------------------------------------------


def phi(z, prec=None):
    """phi(z) = 2[sqrt(z(z-1)) - log(sqrt(z-1) + sqrt(z))], analytic off (-inf, 1]."""
    with working(_ctx_bits(prec)):
        z = mpc(z)
        if _on_real_segment(z, None, 1) and z.real != 1:
            raise DomainError("phi is cut along (-inf, 1]")
        return _phi(z)


def _phi(z):
    sz, sz1 = gmpy2.sqrt(z), gmpy2.sqrt(z - 1)
    return 2 * (sz * sz1 - gmpy2.log(sz1 + sz))


def g_fn(z, prec=None):
    """g(z) = 2z + l/2 - phi(z)."""
    with working(_ctx_bits(prec)):
        return 2 * mpc(z) + _l_const() / 2 - phi(z)


def szego_d(z, t, alpha, beta, prec=None):
    """Szego function d(z) = z^(a/2) (z-t)^b ((2z - t + 2 sqrt(z(z-t)))/t)^(-(a/2+b)).

    The last base is evaluated as 1 + (2w^2 + 2w sqrt(t + w^2))/t with
    w = sqrt(z - t), an exact rewriting free of cancellation near z = t.
    """
    with working(_ctx_bits(prec)):
        z, t = mpc(z), big(t)
        a, b = big(alpha), big(beta)
        if _on_real_segment(z, 0, t):
            raise DomainError("d(z) is cut along [0, t]")
        w = gmpy2.sqrt(z - t)
        base = 1 + (2 * w * w + 2 * w * gmpy2.sqrt(z)) / t
        return _cpow(z, a / 2) * _cpow(z - t, b) * _cpow(base, -(a / 2 + b))


def d_inf(t, alpha, beta, prec=None):
    """d(infinity) = (t/4)^(alpha/2 + beta)."""
    with working(_ctx_bits(prec)):
        return (big(t) / 4) ** (big(alpha) / 2 + big(beta))


def _cpow(x, e):
    if e == 0:
        return mpc(1)
    return mpc(x) ** e


def conformal_f(z, prec=None):
    """f(z) = ((3/2) phi(z))^(2/3), the branch analytic at 1 with f'(1) = 2^(2/3).

    Writing w = sqrt(z-1), (3/2)phi = 2 w^3 r(z) with r analytic and r(1) = 1, so
    f = 2^(2/3) (z-1) r^(2/3).  Guard bits absorb the cancellation in phi near 1.
    """
    bits = _ctx_bits(prec)
    z0 = mpc(z)
    if abs(z0 - 1) > F_RADIUS:
        raise DomainError(f"conformal map evaluated outside |z-1| <= {F_RADIUS}")
    if z0 == 1:
        return mpc(0)
    guard = int(-2 * gmpy2.log2(abs(z0 - 1))) + 16 if abs(z0 - 1) < 1 else 16
    with working(bits + guard):
        zz = mpc(z)
        w = gmpy2.sqrt(zz - 1)
        r = 3 * _phi(zz) / (4 * w**3)
        out = gmpy2.cbrt(mpfr(4)) * (zz - 1) * r ** (mpfr(2) / 3)
    with working(bits):
        return +out


def outer_N(z, t, alpha, beta, prec=None):
    """Outer parametrix N(z) = d(inf)^sigma3 N0(z) d(z)^-sigma3 as a 2x2 nested list."""
    with working(_ctx_bits(prec)):
        z, t = mpc(z), big(t)
        if _on_real_segment(z, 0, t):
            raise DomainError("N(z) is cut along [0, t]")
        rho = ((z - t) / z) ** (mpfr(1) / 4)
        p, q = (rho + 1 / rho) / 2, (rho - 1 / rho) / (2 * mpc(0, 1))
        d = szego_d(z, t, alpha, beta)
        di = d_inf(t, alpha, beta)
        return [[di * p / d, di * q * d], [-q / (di * d), p * d / di]]


def outer_N1(t, alpha, beta, prec=None):
    """Coefficient of 1/z in the large-z expansion of N(z)."""
    with working(_ctx_bits(prec)):
        t, a, b = big(t), big(alpha), big(beta)
        c = (t / 4) ** (a / 2 + b)
        i = mpc(0, 1)
        # -t sigma2 + (2b - a) t sigma3, over 4, conjugated by c^sigma3
        m11 = (2 * b - a) * t / 4
        m12 = -t * (-i) / 4
        m21 = -t * i / 4
        return [[mpc(m11), m12 * c * c], [m21 / (c * c), mpc(-m11)]]


def det2(m):
    return m[0][0] * m[1][1] - m[0][1] * m[1][0]


# -- predictions ---------------------------------------------------------------


def predict_recurrence(n, s, u, prec=None):
    """Leading-order recurrence coefficients (a_n, b_n) at the edge."""
    with working(_ctx_bits(prec)):
        n, u = mpfr(n), bigc(u)
        x = gmpy2.cbrt(n) ** -2
        c = gmpy2.cbrt(mpfr(2))
        return n * (2 - 2 * c * u * x), n * (1 - c * u * x)


def _gamma_bracket(n, alpha, beta, sigma, u, shift):
    x = gmpy2.cbrt(mpfr(n)) ** -1
    c = gmpy2.cbrt(mpfr(2))
    return 1 + sigma * x / c + (sigma**2 + 2 * (alpha + 2 * beta + shift) * u) * x * x / (c**5)


def gamma_brackets(n, alpha, beta, sigma, u, prec=None):
    """Bracketed series of gamma_{n-1} and gamma_n (without the common prefactor)."""
    with working(_ctx_bits(prec)):
        a, b, sg, uu = big(alpha), big(beta), bigc(sigma), bigc(u)
        return _gamma_bracket(n, a, b, sg, uu, -1), _gamma_bracket(n, a, b, sg, uu, 1)


def gamma_prefactor_log(n, alpha, beta, sign, prec=None):
    """log of n^(-n - alpha/2 - beta + sign/2) e^n / sqrt(2 pi)."""
    with working(_ctx_bits(prec)):
        n = mpfr(n)
        e = -n - big(alpha) / 2 - big(beta) + mpfr(sign) / 2
        return e * gmpy2.log(n) + n - gmpy2.log(2 * gmpy2.const_pi()) / 2


def predict_leading(n, s, alpha, beta, sigma, u, prec=None):
    """Predicted (gamma_{n-1}, gamma_n) as LogScaled values."""
    if int(n) < 1:
        raise DomainError("n must be >= 1")
    with working(_ctx_bits(prec)):
        b1, b2 = gamma_brackets(n, alpha, beta, sigma, u)
        g1 = LogScaled.from_log(gamma_prefactor_log(n, alpha, beta, 1)) * LogScaled.from_value(b1)
        g2 = LogScaled.from_log(gamma_prefactor_log(n, alpha, beta, -1)) * LogScaled.from_value(b2)
        return g1, g2


def monic_prefactor_log(n, z, alpha, beta, prec=None):
    """log of n^n e^{2n(z - sqrt(z(z-1)))} (sqrt z + sqrt(z-1))^{2n+alpha+2beta} / (2^{alpha+2beta} e^n)."""
    with working(_ctx_bits(prec)):
        z = mpc(z)
        n = mpfr(n)
        k = big(alpha) + 2 * big(beta)
        sz, sz1 = gmpy2.sqrt(z), gmpy2.sqrt(z - 1)
        return (
            n * gmpy2.log(n)
            + 2 * n * (z - sz * sz1)
            + (2 * n + k) * gmpy2.log(sz + sz1)
            - k * gmpy2.log(mpfr(2))
            - n
        )


def monic_series(n, z, s, alpha, beta, sigma, u, include_leading=True, prec=None):
    """Braced series multiplying the monic prefactor.

    ``include_leading`` adds the O(1) outer-parametrix term
    (sqrt z + sqrt(z-t))^(k+1) / (2 (sqrt z + sqrt(z-1))^k z^(1/4+alpha/2) (z-t)^(1/4+beta)),
    k = alpha + 2 beta, evaluated at t = 1 + s 2^(-2/3) n^(-2/3).
    """
    with working(_ctx_bits(prec)):
        z = mpc(z)
        a, b = big(alpha), big(beta)
        s, sg, uu = big(s), bigc(sigma), bigc(u)
        k = a + 2 * b
        x = gmpy2.cbrt(mpfr(n)) ** -1
        c = gmpy2.cbrt(mpfr(2))
        sz, sz1 = gmpy2.sqrt(z), gmpy2.sqrt(z - 1)
        zq = _cpow(z, mpfr(1) / 4 + a / 2)
        total = mpc(0)
        if include_leading:
            t = EdgeFrame.from_ns(n, s).t
            szt = gmpy2.sqrt(z - t)
            total += _cpow(sz + szt, k + 1) / (2 * _cpow(sz + sz1, k) * zq * _cpow(z - t, mpfr(1) / 4 + b))
        total += sg / (c**4 * zq * _cpow(z - 1, mpfr(3) / 4 + b)) * x
        t2 = (2 * sg**2 - 2 * uu - s) / (c**11 * (sz + sz1) * zq * _cpow(z - 1, mpfr(5) / 4 + b))
        t3 = k * (2 * uu + s) / (c**8 * zq * _cpow(z - 1, mpfr(3) / 4 + b))
        return total + (t2 + t3) * x * x


def predict_monic(n, z, s, alpha, beta, sigma, u, include_leading=True, prec=None):
    """Predicted pi_n(4nz) as a complex LogScaled value."""
    with working(_ctx_bits(prec)):
        z = mpc(z)
        if _distance_to_unit_segment(z) < mpfr("0.1"):
            raise DomainError("z must stay at distance >= 0.1 from [0, 1]")
        lp = monic_prefactor_log(n, z, alpha, beta)
        ser = monic_series(n, z, s, alpha, beta, sigma, u, include_leading)
        return LogScaled.from_log(lp) * LogScaled.from_value(ser)


def _distance_to_unit_segment(z):
    x = min(max(z.real, mpfr(0)), mpfr(1))
    return abs(z - x)


# -- residue constants ---------------------------------------------------------


@dataclass(frozen=True)
class KiConstants:
    k1: object
    k2: object
    k3: object
    k4: object
    k5: object

    def an_combination(self):
        """k1^2 + k1 k2 + 2 k3, which fixes the n^(-2/3) term of a_n / 4n."""
        return self.k1**2 + self.k1 * self.k2 + 2 * self.k3

    def bn_combination(self, t):
        """((2k3 + k1k2) t + k1^2) / 4, the n^(-2/3) term under the root in b_n / 4n."""
        return ((2 * self.k3 + self.k1 * self.k2) * t + self.k1**2) / 4


def ki_constants(sigma, u, s, alpha, beta, prec=None):
    """Leading-order residue constants k1..k5 as complex numbers."""
    with working(_ctx_bits(prec)):
        sg, uu, s = bigc(sigma), bigc(u), big(s)
        a, b = big(alpha), big(beta)
        i = mpc(0, 1)
        c = gmpy2.cbrt(mpfr(2))
        k1 = -i * sg / c
        k2 = i * s**2 / c**7
        k3 = mpc(4 * sg**2 - s**2 * sg - 4 * uu - 2 * s) / c**11
        k4 = mpc(s**2 * sg) / c**11
        k5 = -i * (a + 2 * b) * (uu + s / 2) / c**2
        return KiConstants(k1, k2, k3, k4, k5)
