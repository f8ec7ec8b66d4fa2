"""Gauss rules at arbitrary precision and a singularity-aware adaptive integrator.

Nodes are refined by Newton's method on the three-term recurrence of the
classical monic polynomials.  Seeds come from a double-precision eigenvalue
solve of the Jacobi matrix; the Newton sweep then ramps the working precision
up to the target so that only the last two sweeps run at full precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import gmpy2
import numpy as np
from gmpy2 import mpfr
from scipy.linalg import eigh_tridiagonal

from .errors import ConvergenceError, DomainError, ToleranceUnmet
from .precision import Precision, as_bits, big, working

GUARD_BITS = 24


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss rule on the reference domain of its kind.

    ``kind`` is ``"legendre"``, ``"jacobi"`` (weight (1-x)**p (1+x)**q on [-1, 1])
    or ``"laguerre"`` (weight y**p exp(-y) on [0, inf)).
    """

    nodes: tuple
    weights: tuple
    kind: str
    p: object = 0
    q: object = 0
    bits: int = 53
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __len__(self):
        return len(self.nodes)

    def apply(self, f):
        """Sum of weights * f(nodes), reduced left to right."""
        total = mpfr(0)
        for x, w in zip(self.nodes, self.weights):
            total += w * f(x)
        return total

    def on_interval(self, a, b):
        """Nodes and weights for ``int_a^b (b-x)**p (x-a)**q f(x) dx``."""
        if self.kind == "laguerre":
            raise DomainError("laguerre rules are mapped with shifted()")
        a, b = mpfr(a), mpfr(b)
        half = (b - a) / 2
        scale = half ** (1 + mpfr(self.p) + mpfr(self.q))
        xs = tuple(a + half * (1 + y) for y in self.nodes)
        ws = tuple(scale * w for w in self.weights)
        return xs, ws

    def shifted(self, a, rate=1):
        """Nodes and weights for ``int_a^inf (x-a)**p exp(-rate (x-a)) f(x) dx``."""
        if self.kind != "laguerre":
            raise DomainError("shifted() applies to laguerre rules only")
        a, rate = mpfr(a), mpfr(rate)
        scale = rate ** (-(1 + mpfr(self.p)))
        return tuple(a + y / rate for y in self.nodes), tuple(scale * w for w in self.weights)


# -- recurrence coefficients of the classical monic families ------------------


def jacobi_recurrence(m, p, q):
    """Monic Jacobi coefficients a_0..a_{m-1}, b_1^2..b_{m-1}^2 and the total mass."""
    p, q = mpfr(p), mpfr(q)
    a, b2 = [], []
    for k in range(m):
        s = 2 * k + p + q
        if k == 0:
            a.append((q - p) / (p + q + 2))
        else:
            a.append((q * q - p * p) / (s * (s + 2)))
        if k == 1:
            b2.append(4 * (1 + p) * (1 + q) / ((2 + p + q) ** 2 * (3 + p + q)))
        elif k > 1:
            b2.append(4 * k * (k + p) * (k + q) * (k + p + q) / (s * s * (s + 1) * (s - 1)))
    mu0 = 2 ** (p + q + 1) * gmpy2.gamma(p + 1) * gmpy2.gamma(q + 1) / gmpy2.gamma(p + q + 2)
    return a, b2, mu0


def laguerre_recurrence(m, p):
    p = mpfr(p)
    a = [2 * k + p + 1 for k in range(m)]
    b2 = [k * (k + p) for k in range(1, m)]
    return a, b2, gmpy2.gamma(p + 1)


def _monic_and_derivative(x, a, b2):
    """P_m(x), P_m'(x), P_{m-1}(x) by forward recurrence."""
    p_prev, p_cur = mpfr(0), mpfr(1)
    d_prev, d_cur = mpfr(0), mpfr(0)
    for k in range(len(a)):
        t = x - a[k]
        if k == 0:
            p_new = t * p_cur
            d_new = p_cur + t * d_cur
        else:
            p_new = t * p_cur - b2[k - 1] * p_prev
            d_new = p_cur + t * d_cur - b2[k - 1] * d_prev
        p_prev, p_cur = p_cur, p_new
        d_prev, d_cur = d_cur, d_new
    return p_cur, d_cur, p_prev


def _seed_nodes(a, b2):
    d = np.array([float(v) for v in a])
    if len(d) == 1:
        return d
    e = np.sqrt(np.array([float(v) for v in b2]))
    return np.sort(eigh_tridiagonal(d, e, eigvals_only=True))


def _precision_ramp(bits):
    ramp = []
    b = bits
    while b > 80:
        ramp.append(b)
        b = b // 2 + 8
    ramp.append(max(b, 64))
    return ramp[::-1]


def _newton_rule(m, coeff_fn, bits, kind, p, q):
    if m < 1:
        raise DomainError("number of nodes must be >= 1")
    work = bits + GUARD_BITS
    with working(work):
        a, b2, mu0 = coeff_fn()
        h_last = mu0
        for v in b2:
            h_last *= v
    seeds = _seed_nodes(a, b2)
    ramp = _precision_ramp(work)
    nodes, weights = [], []
    for x0 in seeds:
        x = mpfr(float(x0), work)
        for level in ramp:
            with working(level):
                pm, dm, _ = _monic_and_derivative(x, a, b2)
                x = x - pm / dm
        # verification sweep at full precision; a converged step is tiny enough
        # that the Christoffel number can be read off the same evaluation
        with working(work):
            tol = mpfr(2) ** (-(bits + GUARD_BITS // 2)) * max(abs(x), mpfr(1))
            for _ in range(6):
                pm, dm, pm1 = _monic_and_derivative(x, a, b2)
                dx = pm / dm
                x = x - dx
                if abs(dx) <= tol:
                    break
            else:
                raise ConvergenceError(
                    f"Newton refinement of {kind} node near {float(x0):.6g} did not converge at {bits} bits"
                )
            w = h_last / (pm1 * dm) if m > 1 else mu0
        nodes.append(x)
        weights.append(w)
    with working(bits):
        nodes = tuple(+x for x in nodes)
        weights = tuple(+w for w in weights)
    for i in range(1, m):
        if not nodes[i] > nodes[i - 1]:
            raise ConvergenceError(f"{kind} nodes not strictly increasing at index {i} ({bits} bits)")
    if any(not w > 0 for w in weights):
        raise ConvergenceError(f"non-positive {kind} weight ({bits} bits)")
    return QuadratureRule(nodes, weights, kind, p, q, bits)


def _check_exponent(name, v):
    if not v > -1:
        raise DomainError(f"{name} must be > -1, got {v}")


@lru_cache(maxsize=128)
def _legendre(m, bits):
    def coeffs():
        return jacobi_recurrence(m, 0, 0)

    return _newton_rule(m, coeffs, bits, "legendre", 0, 0)


@lru_cache(maxsize=256)
def _jacobi(m, p, q, bits):
    def coeffs():
        return jacobi_recurrence(m, big(p), big(q))

    return _newton_rule(m, coeffs, bits, "jacobi", p, q)


@lru_cache(maxsize=128)
def _laguerre(m, p, bits):
    def coeffs():
        return laguerre_recurrence(m, big(p))

    return _newton_rule(m, coeffs, bits, "laguerre", p, 0)


def gauss_legendre_rule(m, prec=None):
    """m-point Gauss-Legendre rule on [-1, 1]."""
    if m < 1:
        raise DomainError("m must be >= 1")
    return _legendre(int(m), as_bits(prec))


def gauss_jacobi_rule(m, p, q, prec=None):
    """m-point Gauss rule for the weight (1-x)**p (1+x)**q on [-1, 1]."""
    _check_exponent("p", p)
    _check_exponent("q", q)
    if m < 1:
        raise DomainError("m must be >= 1")
    if p == 0 and q == 0:
        return _legendre(int(m), as_bits(prec))
    return _jacobi(int(m), p, q, as_bits(prec))


def gauss_laguerre_rule(m, p=0, prec=None):
    """m-point generalized Gauss-Laguerre rule for y**p exp(-y) on [0, inf)."""
    _check_exponent("p", p)
    if m < 1:
        raise DomainError("m must be >= 1")
    return _laguerre(int(m), p, as_bits(prec))


# -- adaptive integration -----------------------------------------------------


@dataclass
class _Panel:
    lo: object
    hi: object  # None for a Laguerre tail
    left: object = 0
    right: object = 0
    value: object = None
    error: object = None


def _panel_sum(f, panel, m, bits, rate):
    if panel.hi is None:
        rule = gauss_laguerre_rule(m, panel.left, bits)
        xs, ws = rule.shifted(panel.lo, rate)
        total = mpfr(0)
        for x, w in zip(xs, ws):
            y = x - panel.lo
            g = f(x) * gmpy2.exp(rate * y)
            if panel.left != 0:
                g = g / y ** mpfr(panel.left)
            total += w * g
        return total
    rule = gauss_jacobi_rule(m, panel.right, panel.left, bits)
    xs, ws = rule.on_interval(panel.lo, panel.hi)
    total = mpfr(0)
    for x, w in zip(xs, ws):
        g = f(x)
        if panel.left != 0:
            g = g / (x - panel.lo) ** mpfr(panel.left)
        if panel.right != 0:
            g = g / (panel.hi - x) ** mpfr(panel.right)
        total += w * g
    return total


def _evaluate(f, panel, m, bits, rate):
    coarse = _panel_sum(f, panel, m, bits, rate)
    fine = _panel_sum(f, panel, 2 * m, bits, rate)
    panel.value = fine
    panel.error = abs(fine - coarse)


def integrate_adaptive(
    f,
    interval,
    singularity=None,
    tol=None,
    prec=None,
    m=12,
    max_panels=200,
    points=(),
    relative=False,
    rate=1,
):
    """Integrate ``f`` over ``interval = (a, b)``; ``b`` may be ``math.inf``.

    ``singularity = (left, right)`` declares endpoint behaviour ``(x-a)**left``
    and ``(b-x)**right`` of ``f``; endpoint panels divide it out and use the
    matching Jacobi rule.  On a semi-infinite interval the tail is a generalized
    Laguerre panel assuming decay like ``exp(-rate x)``.  Each panel is
    evaluated with ``m`` and ``2m`` points; their difference is the panel error.
    The panel with the largest error is bisected until the summed error is
    below ``tol`` (absolute, or relative to the result when ``relative``).

    Returns ``(value, error_estimate)``.  Raises ``ToleranceUnmet`` carrying the
    best estimate when ``max_panels`` is exhausted.
    """
    bits = as_bits(prec)
    if tol is None:
        tol = Precision(bits).tol if bits >= 64 else 2.0 ** (-bits + 8)
    left, right = singularity if singularity is not None else (0, 0)
    _check_exponent("left exponent", left)
    _check_exponent("right exponent", right)
    a, b = interval
    with working(bits):
        tol = mpfr(tol)
        a = mpfr(a)
        infinite = b is None or (isinstance(b, float) and math.isinf(b)) or (
            not isinstance(b, (int, float)) and gmpy2.is_infinite(mpfr(b))
        )
        if infinite and right != 0:
            raise DomainError("right-endpoint exponent is meaningless at infinity")
        breaks = sorted(mpfr(p) for p in points)
        if infinite:
            cuts = [a] + [p for p in breaks if p > a]
            panels = [_Panel(cuts[i], cuts[i + 1]) for i in range(len(cuts) - 1)]
            panels.append(_Panel(cuts[-1], None))
        else:
            b = mpfr(b)
            if not b > a:
                raise DomainError("interval must satisfy a < b")
            cuts = [a] + [p for p in breaks if a < p < b] + [b]
            panels = [_Panel(cuts[i], cuts[i + 1]) for i in range(len(cuts) - 1)]
            panels[-1].right = right
        panels[0].left = left

        for pnl in panels:
            _evaluate(f, pnl, m, bits, rate)

        while True:
            value = mpfr(0)
            error = mpfr(0)
            for pnl in panels:
                value += pnl.value
                error += pnl.error
            bound = tol * abs(value) if relative else tol
            if error <= bound:
                return value, error
            if len(panels) >= max_panels:
                raise ToleranceUnmet(
                    f"tolerance {float(tol):.3g} unmet after {len(panels)} panels "
                    f"(error estimate {float(error):.3g})",
                    best=value,
                    error=error,
                )
            worst = max(range(len(panels)), key=lambda i: panels[i].error)
            pnl = panels[worst]
            if pnl.hi is None:
                # peel a finite panel off the tail; its length grows with distance from a
                length = max(abs(pnl.lo - a), mpfr(1) / mpfr(rate))
                cut = pnl.lo + length
                new = [_Panel(pnl.lo, cut, left=pnl.left), _Panel(cut, None)]
            else:
                mid = (pnl.lo + pnl.hi) / 2
                new = [_Panel(pnl.lo, mid, left=pnl.left), _Panel(mid, pnl.hi, right=pnl.right)]
            for q in new:
                _evaluate(f, q, m, bits, rate)
            panels[worst : worst + 1] = new


def composite_rule(panels, bits):
    """Concatenate ``(nodes, weights)`` pairs into one node/weight list ordered by node."""
    xs, ws = [], []
    for nodes, weights in panels:
        xs.extend(nodes)
        ws.extend(weights)
    order = sorted(range(len(xs)), key=lambda i: xs[i])
    return [xs[i] for i in order], [ws[i] for i in order]


def suggested_order(length, degree, bits):
    """Gauss order resolving exp(-x) times a degree-``degree`` polynomial on a panel.

    Chebyshev coefficients of exp(-x) on a panel of half-length L decay like
    exp(-j**2 / (2L)), so about sqrt(2 L bits ln 2) extra degrees are needed.
    """
    half = max(float(length) / 2, 1.0)
    extra = math.sqrt(2 * half * bits * math.log(2))
    return int(math.ceil((degree + extra) / 2)) + 8
