"""Painleve residuals, extraction of sigma(s) and u(s) from finite-n data, and the Airy-kernel oracle.

The extraction inverts the edge asymptotics of the recurrence and leading
coefficients: for each grid point s and each n of a ladder the recurrence table
at mu = 4n + 4^(2/3) n^(1/3) s gives

    u_hat(n, s)     = (2 - a_n / n) n^(2/3) / 2^(4/3)
    sigma_hat(n, s) = 2^(1/3) n^(1/3) (gamma_{n-1} sqrt(2 pi) n^(n + alpha/2 + beta - 1/2) e^(-n) - 1)

and the n -> infinity limits come from a least-squares fit in powers of n^(-1/3).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import gmpy2
import numpy as np
from scipy.special import airy as _scipy_airy
from scipy.special import roots_legendre

from .errors import DomainError, FHError
from .opoly import recurrence
from .precision import Precision, working
from .weight import WeightParams

DEFAULT_FIT_THRESHOLD = 5e-3


# -- residual operators --------------------------------------------------------


def sigma_pii_residual(s, sigma, dsigma, d2sigma, beta):
    """(s'')^2 + 4(s')^3 - 4 s (s')^2 + 4 s' sigma - (2 beta)^2 for the sigma-form equation."""
    return d2sigma**2 + 4 * dsigma**3 - 4 * s * dsigma**2 + 4 * dsigma * sigma - (2 * beta) ** 2


def p34_residual(s, u, du, d2u, beta):
    """u'' - (u')^2/(2u) - 4u^2 - 2su + (2 beta)^2/(2u) for the P34 equation."""
    if u == 0:
        raise DomainError("P34 residual is singular at u = 0")
    return d2u - du**2 / (2 * u) - 4 * u**2 - 2 * s * u + (2 * beta) ** 2 / (2 * u)


def grid_derivatives(values, h):
    """Central first and second differences at the interior points of a uniform grid."""
    v = np.asarray(values)
    if v.ndim != 1 or len(v) < 3:
        raise DomainError("need at least 3 grid values")
    if not h > 0:
        raise DomainError("grid spacing must be positive")
    first = (v[2:] - v[:-2]) / (2 * h)
    second = (v[2:] - 2 * v[1:-1] + v[:-2]) / h**2
    return first, second


def uniform_spacing(grid, rtol=1e-9):
    g = np.asarray(grid, dtype=float)
    if len(g) < 2:
        raise DomainError("grid needs at least 2 points")
    d = np.diff(g)
    if not np.all(d > 0):
        raise DomainError("grid must be strictly increasing")
    h = (g[-1] - g[0]) / (len(g) - 1)
    if np.max(np.abs(d - h)) > rtol * max(1.0, abs(h)):
        raise DomainError("grid spacing is not uniform")
    return float(h)


# -- finite-n estimators and the ladder fit ------------------------------------


def u_estimate(a_n, n):
    """(2 - a_n/n) n^(2/3) / 2^(4/3)."""
    return (2 - a_n / n) * gmpy2.cbrt(gmpy2.mpfr(n)) ** 2 / gmpy2.cbrt(gmpy2.mpfr(16))


def sigma_estimate(log_gamma_nm1, n, alpha, beta):
    """2^(1/3) n^(1/3) (bracket - 1), the bracket being gamma_{n-1} over its prefactor."""
    n_ = gmpy2.mpfr(n)
    log_bracket = (
        log_gamma_nm1
        + gmpy2.log(2 * gmpy2.const_pi()) / 2
        + (n_ + gmpy2.mpfr(alpha) / 2 + gmpy2.mpfr(beta) - gmpy2.mpfr(1) / 2) * gmpy2.log(n_)
        - n_
    )
    return gmpy2.cbrt(2 * n_) * gmpy2.expm1(log_bracket)


def ladder_fit(ns, values, terms=3):
    """Least-squares fit values ~ c0 + c1 n^(-1/3) + ... (``terms`` coefficients).

    Returns (coefficients, residual 2-norm).
    """
    ns = np.asarray(ns, dtype=float)
    y = np.asarray(values, dtype=float)
    if len(ns) < terms:
        raise DomainError(f"ladder of {len(ns)} entries cannot fit {terms} terms")
    A = np.vander(ns ** (-1.0 / 3.0), terms, increasing=True)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return coef, float(np.linalg.norm(A @ coef - y))


@dataclass
class PainleveSample:
    """Extracted sigma(s), u(s) on a uniform s-grid together with diagnostics."""

    alpha: float
    beta: float
    omega: float
    s_grid: list
    n_ladder: list
    sigma_hat: list
    u_hat: list
    m2_hat: list
    sigma_fit: list
    u_fit: list
    fit_residual: list
    raw: dict = field(default_factory=dict)
    res_sigma_pii: list = field(default_factory=list)
    res_p34: list = field(default_factory=list)
    u_plus_dsigma: list = field(default_factory=list)
    unreliable: bool = False
    fit_threshold: float = DEFAULT_FIT_THRESHOLD

    @property
    def h(self):
        return uniform_spacing(self.s_grid) if len(self.s_grid) > 1 else 0.0

    def max_u_plus_dsigma(self):
        vals = [abs(v) for v in self.u_plus_dsigma if v is not None]
        return max(vals) if vals else None

    def to_json(self):
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "omega": self.omega,
            "s_grid": list(self.s_grid),
            "n_ladder": list(self.n_ladder),
            "sigma_hat": list(self.sigma_hat),
            "u_hat": list(self.u_hat),
            "m2_hat": list(self.m2_hat),
            "sigma_fit": [list(c) for c in self.sigma_fit],
            "u_fit": [list(c) for c in self.u_fit],
            "fit_residual": list(self.fit_residual),
            "raw": {k: list(v) for k, v in self.raw.items()},
            "res_sigma_pii": list(self.res_sigma_pii),
            "res_p34": list(self.res_p34),
            "u_plus_dsigma": list(self.u_plus_dsigma),
            "unreliable": self.unreliable,
            "fit_threshold": self.fit_threshold,
        }

    @classmethod
    def from_json(cls, d):
        d = dict(d)
        d["raw"] = {k: list(v) for k, v in d.get("raw", {}).items()}
        return cls(**d)

    def to_csv(self):
        """CSV with columns s, sigma_hat, u_hat, m2_hat, res_sigma_pii, res_p34, fit_residual."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "sigma_hat", "u_hat", "m2_hat", "res_sigma_pii", "res_p34", "fit_residual"])
        for i, s in enumerate(self.s_grid):
            w.writerow(
                [
                    repr(float(s)),
                    repr(self.sigma_hat[i]),
                    repr(self.u_hat[i]),
                    repr(self.m2_hat[i]),
                    _csv_num(self.res_sigma_pii[i]),
                    _csv_num(self.res_p34[i]),
                    repr(self.fit_residual[i]),
                ]
            )
        return buf.getvalue()


def _csv_num(v):
    return "" if v is None else repr(float(v))


def residuals(s_grid, sigma, u, beta):
    """ODE residuals and u + sigma' at interior points (None at the two ends)."""
    n = len(s_grid)
    none = [None] * n
    if n < 3:
        return none, list(none), list(none)
    h = uniform_spacing(s_grid)
    ds, d2s = grid_derivatives(sigma, h)
    du, d2u = grid_derivatives(u, h)
    r1, r2, r3 = list(none), list(none), list(none)
    for i in range(1, n - 1):
        s = float(s_grid[i])
        r1[i] = float(sigma_pii_residual(s, sigma[i], ds[i - 1], d2s[i - 1], beta))
        r2[i] = float(p34_residual(s, u[i], du[i - 1], d2u[i - 1], beta)) if u[i] != 0 else math.inf
        r3[i] = float(u[i] + ds[i - 1])
    return r1, r2, r3


def finite_n_estimates(alpha, beta, omega, s, n, prec=None, tables=None):
    """(u_hat(n, s), sigma_hat(n, s)) from one recurrence table of order n + 1."""
    params = WeightParams(alpha, beta, omega, n=n, s=s)
    rt = recurrence(params, n + 1, prec)
    if tables is not None:
        tables[(s, n)] = rt
    with working(rt.bits):
        u = u_estimate(rt.a[n], n)
        sg = sigma_estimate(rt.log_gamma[n - 1].log_abs, n, alpha, beta)
    return float(u), float(sg)


def extract_painleve(alpha, beta, omega, s_grid, n_ladder, prec_policy=None, terms=3,
                     fit_threshold=DEFAULT_FIT_THRESHOLD, progress=None):
    """Extract sigma(s), u(s) on ``s_grid`` by extrapolating along ``n_ladder``.

    Parameters
    ----------
    prec_policy : callable, optional
        Maps an order N to a :class:`Precision`; defaults to ``Precision.for_order``.
    terms : int
        Number of coefficients in the fit u + c1 n^(-1/3) + c2 n^(-2/3) (+ ...).
    progress : callable, optional
        Called as ``progress(s, n, u_hat, sigma_hat)`` after each table.
    """
    ladder = sorted(int(n) for n in n_ladder)
    if len(ladder) < 3:
        raise DomainError("n ladder needs at least 3 entries")
    if len(set(ladder)) != len(ladder):
        raise DomainError("n ladder entries must be distinct")
    grid = [float(s) for s in s_grid]
    if len(grid) > 1:
        uniform_spacing(grid)
    policy = prec_policy or Precision.for_order
    sig, uu, sfit, ufit, fres = [], [], [], [], []
    raw = {"u_n": [], "sigma_n": []}
    for s in grid:
        un, sn = [], []
        for n in ladder:
            u_, s_ = finite_n_estimates(alpha, beta, omega, s, n, policy(n + 1))
            un.append(u_)
            sn.append(s_)
            if progress:
                progress(s, n, u_, s_)
        cu, ru = ladder_fit(ladder, un, terms)
        cs, rs = ladder_fit(ladder, sn, terms)
        uu.append(float(cu[0]))
        sig.append(float(cs[0]))
        ufit.append([float(c) for c in cu])
        sfit.append([float(c) for c in cs])
        fres.append(max(ru, rs))
        raw["u_n"].append(un)
        raw["sigma_n"].append(sn)
    r1, r2, r3 = residuals(grid, sig, uu, beta)
    return PainleveSample(
        alpha=float(alpha),
        beta=float(beta),
        omega=float(omega),
        s_grid=grid,
        n_ladder=ladder,
        sigma_hat=sig,
        u_hat=uu,
        m2_hat=[g - s * s / 4 for g, s in zip(sig, grid)],
        sigma_fit=sfit,
        u_fit=ufit,
        fit_residual=fres,
        raw=raw,
        res_sigma_pii=r1,
        res_p34=r2,
        u_plus_dsigma=r3,
        unreliable=max(fres) > fit_threshold,
        fit_threshold=fit_threshold,
    )


# -- Airy-kernel Fredholm oracle -----------------------------------------------


def airy(x):
    """(Ai(x), Ai'(x)) in double precision."""
    ai, aip, _, _ = _scipy_airy(x)
    return ai, aip


@dataclass(frozen=True)
class FredholmConfig:
    """Nystrom settings: Gauss-Legendre order m, map x = s + L(1+xi)/(1-xi), derivative step h_s."""

    m: int = 60
    L: float = 10.0
    h_s: float = 1e-3

    def __post_init__(self):
        if int(self.m) < 20:
            raise DomainError("Fredholm quadrature order must be >= 20")
        if not self.L > 0:
            raise DomainError("domain scale L must be positive")
        if not self.h_s > 0:
            raise DomainError("derivative step h_s must be positive")


def airy_kernel_matrix(x):
    ai, aip = airy(x)
    X, Y = np.meshgrid(x, x, indexing="ij")
    diff = X - Y
    np.fill_diagonal(diff, 1.0)
    K = (ai[:, None] * aip[None, :] - aip[:, None] * ai[None, :]) / diff
    np.fill_diagonal(K, aip**2 - x * ai**2)
    return K


def fredholm_det(s, omega, cfg=FredholmConfig()):
    """det(I - (1 - omega) K_Ai) on (s, inf) by Nystrom discretization."""
    if not 0 <= omega <= 1:
        raise DomainError("Fredholm oracle supports omega in [0, 1]")
    lam = 1.0 - omega
    if lam == 0:
        return 1.0
    xi, w = roots_legendre(cfg.m)
    x = s + cfg.L * (1 + xi) / (1 - xi)
    wx = w * 2 * cfg.L / (1 - xi) ** 2
    sw = np.sqrt(wx)
    A = np.eye(cfg.m) - lam * sw[:, None] * airy_kernel_matrix(x) * sw[None, :]
    sign, logdet = np.linalg.slogdet(A)
    if sign <= 0:
        raise FHError(f"Nystrom determinant not positive at s={s}")
    return math.exp(logdet)


def fredholm_logdet(s, omega, cfg=FredholmConfig()):
    return math.log(fredholm_det(s, omega, cfg))


def fredholm_sigma(s, omega, cfg=FredholmConfig()):
    """sigma(s) = d/ds log det(I - (1 - omega) K_Ai) by a central difference of step h_s."""
    if omega == 1:
        return 0.0
    h = cfg.h_s
    return (fredholm_logdet(s + h, omega, cfg) - fredholm_logdet(s - h, omega, cfg)) / (2 * h)


def fredholm_u(s, omega, cfg=FredholmConfig()):
    """u(s) = -sigma'(s), from a second central difference of the log-determinant."""
    if omega == 1:
        return 0.0
    h = cfg.h_s
    f = [fredholm_logdet(s + k * h, omega, cfg) for k in (-1, 0, 1)]
    return -(f[2] - 2 * f[1] + f[0]) / h**2
