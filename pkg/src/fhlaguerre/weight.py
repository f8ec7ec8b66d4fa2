"""The Laguerre weight with a root-type and jump-type singularity, and its moments.

    w(x) = x**alpha * exp(-x) * |x - mu|**(2 beta) * (1 if x <= mu else omega)

The weight splits into a piece on [0, mu] and a tail on (mu, inf); omega enters
linearly, so both pieces are integrated once and combined as
``body + omega * tail``.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpc, mpfr

from .errors import DomainError, ToleranceUnmet
from .precision import Precision, big, bigc, from_hex, to_decimal, to_hex, working
from .quadrature import gauss_jacobi_rule, gauss_laguerre_rule, suggested_order

RULE_GRANULARITY = 32
PIECE_CACHE_SIZE = 512
_piece_cache = OrderedDict()


def mu_from_ns(n, s, prec=None):
    """Singularity location mu = 4n + 4**(2/3) n**(1/3) s.

    Returned as a float when ``prec`` is None, otherwise as an mpfr at that precision.
    """
    if int(n) < 1:
        raise DomainError("n must be a positive integer")
    if prec is None:
        mu = 4 * n + 4 ** (2 / 3) * n ** (1 / 3) * s
    else:
        with working(prec):
            mu = 4 * mpfr(n) + gmpy2.cbrt(mpfr(16)) * gmpy2.cbrt(mpfr(n)) * big(s)
    if not mu > 0:
        raise DomainError(f"mu = 4n + 4^(2/3) n^(1/3) s is not positive for n={n}, s={s}")
    return mu


@dataclass(frozen=True)
class WeightParams:
    """Parameters of the weight; the edge is given either as ``mu`` or as ``(n, s)``."""

    alpha: float
    beta: float
    omega: complex | float = 1.0
    mu: float | None = None
    n: int | None = None
    s: float | None = None

    def __post_init__(self):
        if not self.alpha > -1:
            raise DomainError(f"alpha must be > -1, got {self.alpha}")
        if not self.beta > -0.5:
            raise DomainError(f"beta must be > -1/2, got {self.beta}")
        om = complex(self.omega)
        if om.imag == 0 and om.real <= 0 and not (om.real == 0 and self.allow_zero_omega):
            raise DomainError(f"omega must lie off (-inf, 0], got {self.omega}")
        if self.mu is None:
            if self.n is None or self.s is None:
                raise DomainError("give either mu or both n and s")
            mu_from_ns(self.n, self.s)
        elif not self.mu > 0:
            raise DomainError("mu must be positive")
        elif self.n is not None or self.s is not None:
            raise DomainError("give either mu or (n, s), not both")

    # omega = 0 (hard truncation at mu) is the boundary case used by the
    # Tracy-Widom comparison; it is admitted explicitly.
    allow_zero_omega = True

    @property
    def omega_is_real(self):
        return complex(self.omega).imag == 0

    @property
    def t(self):
        """mu / (4n) when the edge is given as (n, s)."""
        if self.n is None:
            return None
        return 1 + self.s * 2 ** (-2 / 3) * self.n ** (-2 / 3)

    def mu_big(self, bits):
        if self.mu is not None:
            return big(self.mu, bits)
        return mu_from_ns(self.n, self.s, bits)

    def omega_big(self, bits):
        return bigc(self.omega, bits)

    def to_json(self):
        om = complex(self.omega)
        d = {"alpha": self.alpha, "beta": self.beta, "omega": {"re": om.real, "im": om.imag}}
        if self.mu is not None:
            d["mu"] = self.mu
        else:
            d["n"] = self.n
            d["s"] = self.s
        return d

    @classmethod
    def from_json(cls, d):
        om = d["omega"]
        omega = complex(om["re"], om["im"]) if om["im"] != 0 else float(om["re"])
        return cls(d["alpha"], d["beta"], omega, mu=d.get("mu"), n=d.get("n"), s=d.get("s"))

    def key(self):
        """Canonical tuple for hashing and cache keys."""
        om = complex(self.omega)
        return (repr(float(self.alpha)), repr(float(self.beta)), repr(om.real), repr(om.imag),
                repr(self.mu), self.n, repr(self.s))


def weight_eval(x, params, prec=None):
    """w(x) for x > 0 (mpfr, or mpc for complex omega)."""
    bits = prec if isinstance(prec, int) else (prec.mantissa_bits if prec else gmpy2.get_context().precision)
    with working(bits):
        x = big(x)
        if not x > 0:
            raise DomainError("weight is defined for x > 0")
        mu = params.mu_big(bits)
        beta = big(params.beta)
        if x == mu and beta < 0:
            raise DomainError("weight is singular at x = mu for beta < 0")
        dist = abs(x - mu)
        root = mpfr(1) if beta == 0 else (mpfr(0) if dist == 0 else dist ** (2 * beta))
        val = x ** big(params.alpha) * gmpy2.exp(-x) * root
        if x > mu:
            val = params.omega_big(bits) * val
        return val


# -- discretization ------------------------------------------------------------


@dataclass
class Discretization:
    """Composite Gauss discretization of the two pieces of the weight.

    ``body`` and ``tail`` are lists of (node, weight) pairs such that
    ``sum w * f(x)`` approximates the integral of f against the respective piece
    for polynomials f up to the requested degree.
    """

    params: WeightParams
    bits: int
    degree: int
    body: list
    tail: list
    body_panels: list = field(default_factory=list)
    tail_order: int = 0

    def nodes_weights(self):
        """Merged nodes and (possibly complex) weights of w = body + omega * tail."""
        om = self.params.omega_big(self.bits)
        xs = [x for x, _ in self.body] + [x for x, _ in self.tail]
        with working(self.bits):
            ws = [w for _, w in self.body] + [om * w for _, w in self.tail]
        return xs, ws


def _power_sums(pairs, K):
    """sum w x**k for k = 0..K, accumulated node by node in a fixed order."""
    sums = [mpfr(0)] * (K + 1)
    for x, w in pairs:
        v = w
        for k in range(K + 1):
            sums[k] += v
            v *= x
    return sums


def _body_panel(lo, hi, mu, alpha, beta, m, bits):
    """(node, weight) pairs for one panel of int_lo^hi x^alpha |mu-x|^(2 beta) e^(-x) f(x) dx."""
    left = alpha if lo == 0 else mpfr(0)
    right = 2 * beta if hi == mu else mpfr(0)
    rule = gauss_jacobi_rule(m, _exp_key(right), _exp_key(left), bits)
    xs, ws = rule.on_interval(lo, hi)
    out = []
    for x, w in zip(xs, ws):
        g = gmpy2.exp(-x)
        if left == 0 and alpha != 0:
            g *= x ** alpha
        if right == 0 and beta != 0:
            g *= (mu - x) ** (2 * beta)
        out.append((x, w * g))
    return out


def _exp_key(v):
    """Hashable exponent for the rule cache (floats stay floats, zero collapses)."""
    f = float(v)
    return 0 if f == 0 else f


def _round_order(m):
    return int(math.ceil(m / RULE_GRANULARITY) * RULE_GRANULARITY)


def discretize(params, degree, prec, max_panels=8):
    """Build a discretization integrating x**k w(x), k <= degree, to ``prec.tol``.

    Body: one Jacobi panel on [0, mu] carrying x**alpha at 0 and (mu-x)**(2 beta)
    at mu, bisected while the m- and 2m-point results disagree.  Tail: a
    generalized Laguerre rule with exponent 2 beta, doubled until it agrees with
    its own 2m version.  Returns the discretization built from the 2m rules,
    together with per-degree error estimates for both pieces.
    """
    prec = prec if isinstance(prec, Precision) else Precision(int(prec))
    bits = prec.mantissa_bits
    K = int(degree)
    with working(bits):
        tol = prec.tol
        mu = params.mu_big(bits)
        alpha, beta = big(params.alpha), big(params.beta)

        # body on [0, mu]
        req_bits = max(int(-gmpy2.log2(tol)) + 8, 64)
        m = _round_order(suggested_order(mu, K, req_bits))
        panels = [(mpfr(0), mu)]
        while True:
            coarse_sums = [mpfr(0)] * (K + 1)
            fine_pairs, per_panel = [], []
            for lo, hi in panels:
                c = _power_sums(_body_panel(lo, hi, mu, alpha, beta, m, bits), K)
                fp = _body_panel(lo, hi, mu, alpha, beta, 2 * m, bits)
                f = _power_sums(fp, K)
                fine_pairs.extend(fp)
                per_panel.append([abs(a - b) for a, b in zip(f, c)])
                coarse_sums = [a + b for a, b in zip(coarse_sums, c)]
            body_sums = _power_sums(fine_pairs, K)
            body_err = [sum(col) for col in zip(*per_panel)]
            rel = [e / abs(v) for e, v in zip(body_err, body_sums)]
            if max(rel) <= tol:
                break
            if len(panels) >= max_panels:
                raise ToleranceUnmet(
                    f"moment quadrature on [0, mu] unmet: relative error {float(max(rel)):.3g} > {float(tol):.3g}",
                    best=body_sums,
                    error=body_err,
                )
            worst = max(range(len(panels)), key=lambda i: max(e / abs(v) for e, v in zip(per_panel[i], body_sums)))
            lo, hi = panels[worst]
            mid = (lo + hi) / 2
            panels[worst : worst + 1] = [(lo, mid), (mid, hi)]

        # tail on (mu, inf): int_0^inf (mu+y)^(k+alpha) y^(2 beta) e^(-y) dy * e^(-mu)
        mt = _round_order(K / 2 + 16)
        emu = gmpy2.exp(-mu)
        for _ in range(6):
            coarse = _tail_pairs(mt, mu, alpha, beta, emu, bits)
            fine = _tail_pairs(2 * mt, mu, alpha, beta, emu, bits)
            c = _power_sums(coarse, K)
            tail_sums = _power_sums(fine, K)
            tail_err = [abs(a - b) for a, b in zip(tail_sums, c)]
            if max(e / abs(v) for e, v in zip(tail_err, tail_sums)) <= tol:
                break
            mt *= 2
        else:
            raise ToleranceUnmet("moment quadrature on (mu, inf) unmet", best=tail_sums, error=tail_err)

    disc = Discretization(params, bits, K, fine_pairs, fine, body_panels=panels, tail_order=2 * mt)
    return disc, body_sums, body_err, tail_sums, tail_err


def _tail_pairs(m, mu, alpha, beta, emu, bits):
    rule = gauss_laguerre_rule(m, _exp_key(2 * beta), bits)
    out = []
    for y, w in zip(rule.nodes, rule.weights):
        x = mu + y
        g = emu if alpha == 0 else emu * x ** alpha
        out.append((x, w * g))
    return out


# -- moment tables -------------------------------------------------------------


@dataclass
class MomentTable:
    """Moments m_0..m_order of the weight with per-entry error estimates."""

    params: WeightParams
    order: int
    values: list
    errors: list
    bits: int
    body: list = field(default=None, repr=False)
    tail: list = field(default=None, repr=False)

    def __len__(self):
        return len(self.values)

    def with_omega(self, omega):
        """Same body/tail pieces recombined for another omega."""
        if self.body is None:
            raise ValueError("table does not carry its separate pieces")
        p = self.params
        params = WeightParams(p.alpha, p.beta, omega, mu=p.mu, n=p.n, s=p.s)
        return _combine(params, self.order, self.body, self.tail, self._body_err, self._tail_err, self.bits)

    def to_json(self):
        vals = []
        for k, (v, e) in enumerate(zip(self.values, self.errors)):
            re, im = (v.real, v.imag) if isinstance(v, mpc) else (v, mpfr(0))
            vals.append(
                {
                    "k": k,
                    "re": to_decimal(re),
                    "im": to_decimal(im),
                    "err": to_decimal(e, 6),
                    "re_hex": to_hex(re),
                    "im_hex": to_hex(im),
                }
            )
        return {"params": self.params.to_json(), "order": self.order, "precision_bits": self.bits, "values": vals}

    @classmethod
    def from_json(cls, d):
        bits = d["precision_bits"]
        values, errors = [], []
        with working(bits):
            for row in d["values"]:
                re = from_hex(row["re_hex"], bits) if "re_hex" in row else big(row["re"], bits)
                im = from_hex(row["im_hex"], bits) if "im_hex" in row else big(row["im"], bits)
                values.append(re if im == 0 else mpc(re, im))
                errors.append(big(row["err"], bits))
        return cls(WeightParams.from_json(d["params"]), d["order"], values, errors, bits)


def _combine(params, K, body, tail, body_err, tail_err, bits):
    with working(bits):
        om = params.omega_big(bits)
        values = [b + om * t for b, t in zip(body, tail)]
        errors = [eb + abs(om) * et for eb, et in zip(body_err, tail_err)]
    table = MomentTable(params, K, values, errors, bits, body, tail)
    table._body_err, table._tail_err = body_err, tail_err
    return table


def moments(params, max_order, prec):
    """Moment table m_0..m_{max_order} of the weight at the given precision."""
    if max_order < 0:
        raise DomainError("max_order must be >= 0")
    prec = prec if isinstance(prec, Precision) else Precision(int(prec))
    key = (params.key()[:2] + params.key()[4:], int(max_order), prec.mantissa_bits, prec.target_tol)
    if key in _piece_cache:
        _piece_cache.move_to_end(key)
        body, body_err, tail, tail_err = _piece_cache[key]
    else:
        _, body, body_err, tail, tail_err = discretize(params, max_order, prec)
        _piece_cache[key] = (body, body_err, tail, tail_err)
        if len(_piece_cache) > PIECE_CACHE_SIZE:
            _piece_cache.popitem(last=False)
    return _combine(params, int(max_order), body, tail, body_err, tail_err, prec.mantissa_bits)
