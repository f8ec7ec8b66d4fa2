"""Recurrence coefficients, leading coefficients and monic polynomial values.

Two independent routes produce a :class:`RecurrenceTable`:

* ``hankel``: the modified Chebyshev algorithm applied to ordinary moments, which
  is an O(N^2) triangular factorization of the Hankel matrix (m_{i+j}).  It is
  exponentially ill-conditioned, so it runs at the high precision chosen by
  :meth:`Precision.for_order` and checks itself by re-running on moments
  perturbed in their last 64 bits.
* ``stieltjes``: the discretized Stieltjes procedure on a composite Gauss grid,
  which is well conditioned and serves as the oracle for the first route.

The monic polynomials satisfy ``z pi_k = pi_{k+1} + a_k pi_k + b_k^2 pi_{k-1}``
and the orthonormal ones are ``p_k = gamma_k pi_k``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpc, mpfr

from .errors import DegenerateOrthogonality, DomainError, PrecisionExhausted
from .precision import LogScaled, Precision, big, bigc, from_hex, to_decimal, to_hex, working
from .weight import WeightParams, discretize, moments

PERTURB_BITS = 64
DEFAULT_RTOL = 2.0**-80


@dataclass
class RecurrenceTable:
    """a_0..a_{N-1}, b_1^2..b_N^2 and log gamma_0..log gamma_N for one weight."""

    params: WeightParams | None
    N: int
    a: list
    b2: list
    log_gamma: list
    route: str
    bits: int
    error: dict = field(default_factory=dict)

    @property
    def b(self):
        """Principal square roots b_1..b_N."""
        with working(self.bits):
            return [gmpy2.sqrt(v) for v in self.b2]

    @property
    def is_complex(self):
        return any(isinstance(v, mpc) for v in self.a + self.b2)

    def b2_at(self, k):
        """b_k^2 for 1 <= k <= N."""
        return self.b2[k - 1]

    def to_json(self):
        def pack(v):
            re, im = (v.real, v.imag) if isinstance(v, mpc) else (v, mpfr(0))
            return {"re": to_decimal(re), "im": to_decimal(im), "re_hex": to_hex(re), "im_hex": to_hex(im)}

        return {
            "params": self.params.to_json() if self.params else None,
            "N": self.N,
            "route": self.route,
            "precision_bits": self.bits,
            "a": [dict(k=k, **pack(v)) for k, v in enumerate(self.a)],
            "b2": [dict(k=k + 1, **pack(v)) for k, v in enumerate(self.b2)],
            "log_gamma": [dict(k=k, **g.to_json()) for k, g in enumerate(self.log_gamma)],
            "error": {k: to_decimal(v, 6) for k, v in self.error.items()},
        }

    @classmethod
    def from_json(cls, d):
        bits = d["precision_bits"]

        def unpack(row):
            re, im = from_hex(row["re_hex"], bits), from_hex(row["im_hex"], bits)
            return re if im == 0 else mpc(re, im)

        with working(bits):
            a = [unpack(r) for r in d["a"]]
            b2 = [unpack(r) for r in d["b2"]]
            lg = [LogScaled.from_json(r, bits) for r in d["log_gamma"]]
            err = {k: big(v, bits) for k, v in d.get("error", {}).items()}
        params = WeightParams.from_json(d["params"]) if d["params"] else None
        return cls(params, d["N"], a, b2, lg, d["route"], bits, err)

    def cache_key(self, policy="default"):
        return cache_key(self.params, self.N, policy, self.route)


def cache_key(params, N, policy, route):
    """Content hash of (params, N, precision policy, route)."""
    blob = json.dumps(
        {"params": params.key() if params else None, "N": N, "policy": str(policy), "route": route},
        sort_keys=True,
    )
    return hashlib.sha256(blob.encode()).hexdigest()


# -- Hankel route --------------------------------------------------------------


def _chebyshev(m, N, complex_case):
    """Chebyshev algorithm on moments m_0..m_{2N}.

    Returns (a, b2, h) with h_k = <pi_k, pi_k>.  Pivots are checked as they
    appear: non-positive in the real case means the precision is exhausted,
    exactly zero in the complex case means pi_k does not exist.
    """

    def check(k, h):
        if complex_case:
            if h == 0:
                raise DegenerateOrthogonality(k)
        elif not h > 0:
            raise PrecisionExhausted(f"Hankel pivot h_{k} <= 0; precision too low for N={N}")

    zero = mpc(0) if complex_case else mpfr(0)
    L = 2 * N
    prev = [zero] * (L + 1)
    cur = list(m[: L + 1])
    h = [cur[0]]
    check(0, cur[0])
    a = [cur[1] / cur[0]]
    b2 = []
    for k in range(1, N + 1):
        nxt = [zero] * (L + 1)
        bk = b2[-1] if b2 else zero
        ak = a[-1]
        for l in range(k, L - k + 1):
            nxt[l] = cur[l + 1] - ak * cur[l] - bk * prev[l]
        hk = nxt[k]
        check(k, hk)
        b2.append(hk / cur[k - 1])
        h.append(hk)
        if k < N:
            a.append(nxt[k + 1] / hk - cur[k] / cur[k - 1])
        prev, cur = cur, nxt
    return a, b2, h


def _log_gammas(m0, b2):
    """log gamma_n = -(log m_0 + sum_{k<=n} log b_k^2) / 2 as LogScaled values."""
    out = []
    acc = gmpy2.log(m0)
    out.append(LogScaled.from_log(-acc / 2))
    for v in b2:
        acc = acc + gmpy2.log(v)
        out.append(LogScaled.from_log(-acc / 2))
    return out


def _rel(x, y):
    return abs(x - y) / abs(x) if x != 0 else abs(y)


def recurrence_from_moments(mt, N, rtol=DEFAULT_RTOL):
    """Recurrence table of order N from a moment table of order >= 2N.

    The propagated rounding error is estimated by repeating the factorization
    on moments rounded to ``bits - 64`` and scaling the discrepancy back to
    the accuracy of the moments.  If the estimate for any coefficient exceeds
    ``rtol`` the precision is declared exhausted.

    Raises
    ------
    PrecisionExhausted
        Non-positive pivot (real positive weight) or estimated error above ``rtol``.
    DegenerateOrthogonality
        Exactly zero pivot for a complex weight.
    """
    N = int(N)
    if N < 1:
        raise DomainError("N must be >= 1")
    if mt.order < 2 * N:
        raise DomainError(f"moment table of order {mt.order} cannot give N={N} (needs {2 * N})")
    bits = mt.bits
    complex_case = any(isinstance(v, mpc) for v in mt.values)
    with working(bits):
        vals = [mpc(v) if complex_case else v for v in mt.values[: 2 * N + 1]]
        a, b2, _ = _chebyshev(vals, N, complex_case)

        low = bits - PERTURB_BITS
        if low >= 32:
            with working(low):
                rounded = [+v for v in vals]
            try:
                pa, pb2, _ = _chebyshev(rounded, N, complex_case)
            except (PrecisionExhausted, DegenerateOrthogonality):
                raise PrecisionExhausted(f"order-{N} factorization unstable at {bits} bits") from None
            moment_err = max(max(_rel(v, v + e) for v, e in zip(mt.values, mt.errors)), mpfr(2) ** -bits)
            scale = moment_err / mpfr(2) ** -low
            err_a = max(_rel(x, y) for x, y in zip(a, pa)) * scale
            err_b2 = max(_rel(x, y) for x, y in zip(b2, pb2)) * scale
            if max(err_a, err_b2) > rtol:
                raise PrecisionExhausted(
                    f"estimated recurrence error {float(max(err_a, err_b2)):.3g} exceeds {rtol:.3g} at {bits} bits"
                )
            error = {"a": err_a, "b2": err_b2}
        else:
            error = {}
        lg = _log_gammas(vals[0], b2)
    return RecurrenceTable(mt.params, N, a, b2, lg, "hankel", bits, error)


def recurrence(params, N, prec=None, route="hankel", retries=2, rtol=DEFAULT_RTOL):
    """Recurrence table for a weight, with the precision retry ladder.

    ``prec`` defaults to :meth:`Precision.for_order` for the Hankel route and to
    256 bits for the Stieltjes route.  On :class:`PrecisionExhausted` the
    precision doubles, at most ``retries`` times.
    """
    if route not in ("hankel", "stieltjes"):
        raise DomainError(f"unknown route {route!r}")
    if prec is None:
        prec = Precision.for_order(N) if route == "hankel" else Precision(256)
    elif not isinstance(prec, Precision):
        prec = Precision(int(prec))
    for attempt in range(retries + 1):
        try:
            if route == "hankel":
                return recurrence_from_moments(moments(params, 2 * N, prec), N, rtol=rtol)
            return recurrence_stieltjes(params, N, prec=prec)
        except PrecisionExhausted:
            if attempt == retries:
                raise
            prec = prec.raised(2)


# -- Stieltjes route -----------------------------------------------------------


def recurrence_stieltjes(params, N, grid=None, prec=None, ortho_tol=None):
    """Discretized Stieltjes procedure on a composite quadrature grid.

    Parameters
    ----------
    params : WeightParams
    N : int
    grid : tuple of (nodes, weights), optional
        Discrete measure; by default one integrating degree-4N polynomials
        against the weight is built with :func:`discretize`.
    prec : Precision, optional
        Working precision, 256 bits by default.
    ortho_tol : float, optional
        Bound on |<pi_k, pi_{k-2}>| / sqrt(|h_k h_{k-2}|); defaults to 2**(-bits/2).
    """
    N = int(N)
    if N < 1:
        raise DomainError("N must be >= 1")
    prec = prec if isinstance(prec, Precision) else Precision(int(prec or 256))
    bits = prec.mantissa_bits
    if grid is None:
        disc = discretize(params, 4 * N, prec)[0]
        xs, ws = disc.nodes_weights()
    else:
        xs, ws = grid
    complex_case = any(isinstance(w, mpc) for w in ws)
    with working(bits):
        tol = mpfr(ortho_tol) if ortho_tol is not None else mpfr(2) ** (-(bits // 2))
        xs = [big(x) for x in xs]
        ws = [bigc(w) for w in ws]
        prev2 = None
        prev = [mpfr(0)] * len(xs)
        cur = [mpfr(1)] * len(xs)
        h_prev = None
        h = [_dot(ws, cur, cur)]
        a, b2 = [], []
        for k in range(N + 1):
            hk = h[-1]
            if complex_case:
                if hk == 0:
                    raise DegenerateOrthogonality(k)
            elif not hk > 0:
                raise PrecisionExhausted(f"Stieltjes norm h_{k} <= 0")
            if k >= 2:
                cross = _dot(ws, cur, prev2)
                if abs(cross) / gmpy2.sqrt(abs(hk * h[-3])) > tol:
                    raise PrecisionExhausted(f"loss of orthogonality at degree {k}")
            if h_prev is not None:
                b2.append(hk / h_prev)
            if k == N:
                break
            ak = _dot(ws, [x * c for x, c in zip(xs, cur)], cur) / hk
            a.append(ak)
            bk = b2[-1] if b2 else 0
            nxt = [(x - ak) * c - bk * p for x, c, p in zip(xs, cur, prev)]
            prev2, prev, cur = prev, cur, nxt
            h_prev = hk
            h.append(_dot(ws, cur, cur))
        lg = _log_gammas(h[0], b2)
    return RecurrenceTable(params, N, a, b2, lg, "stieltjes", bits)


def _dot(ws, u, v):
    total = mpfr(0)
    for w, x, y in zip(ws, u, v):
        total += w * x * y
    return total


# -- evaluation ----------------------------------------------------------------


def eval_monic(rt, n, z):
    """pi_n(z) by the forward recurrence, rescaled every step, as a LogScaled."""
    n = int(n)
    if not 0 <= n <= rt.N:
        raise DomainError(f"degree {n} outside table range 0..{rt.N}")
    with working(rt.bits):
        z = bigc(z)
        log_scale = mpfr(0)
        prev, cur = mpfr(0), mpfr(1) + 0 * z
        for k in range(n):
            bk = rt.b2[k - 1] if k >= 1 else 0
            prev, cur = cur, (z - rt.a[k]) * cur - bk * prev
            size = max(abs(cur), abs(prev))
            if size == 0:
                return LogScaled(0, mpfr(0))
            log_scale += gmpy2.log(size)
            prev, cur = prev / size, cur / size
        if cur == 0:
            return LogScaled(0, mpfr(0))
        v = LogScaled.from_value(cur)
        return LogScaled(v.sign, v.log_abs + log_scale)


def gamma_log(rt, n):
    """log-scaled gamma_n, the leading coefficient of p_n."""
    n = int(n)
    if not 0 <= n <= rt.N:
        raise DomainError(f"degree {n} outside table range 0..{rt.N}")
    return rt.log_gamma[n]
