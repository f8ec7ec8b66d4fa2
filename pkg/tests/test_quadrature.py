import math

import gmpy2
import mpmath as mp
import pytest
from gmpy2 import mpfr

from fhlaguerre import quadrature
from fhlaguerre.errors import DomainError, ToleranceUnmet
from fhlaguerre.precision import Precision, working
from fhlaguerre.quadrature import (
    gauss_jacobi_rule,
    gauss_laguerre_rule,
    gauss_legendre_rule,
    integrate_adaptive,
)

P = Precision(128)


def close(x, y, rel=mpfr(2) ** -120):
    return abs(mpfr(x) - mpfr(y)) <= rel * max(abs(mpfr(y)), mpfr(1))


def test_legendre_small_rules():
    r1 = gauss_legendre_rule(1, P)
    assert r1.nodes == (0,) or r1.nodes[0] == 0
    assert close(r1.weights[0], 2)
    r2 = gauss_legendre_rule(2, P)
    with working(128):
        s3 = 1 / gmpy2.sqrt(mpfr(3))
    assert close(r2.nodes[0], -s3) and close(r2.nodes[1], s3)
    assert close(r2.weights[0], 1) and close(r2.weights[1], 1)
    with working(128):
        assert close(r2.apply(lambda x: x * x), mpfr(2) / 3)


def test_jacobi_reduces_to_legendre_and_m1_case():
    a = gauss_jacobi_rule(7, 0, 0, P)
    b = gauss_legendre_rule(7, P)
    assert a.nodes == b.nodes and a.weights == b.weights
    r = gauss_jacobi_rule(1, 0, 1, P)
    with working(128):
        assert close(r.nodes[0], mpfr(1) / 3)
    assert close(r.weights[0], 2)


def test_jacobi_against_adaptive_oracle():
    """m=3, p=0.5, q=-0.25: x^4 against (1-x)^p (1+x)^q."""
    p, q = 0.5, -0.25
    r = gauss_jacobi_rule(3, p, q, P)
    with working(128):
        got = r.apply(lambda x: x**4)
        ref, err = integrate_adaptive(
            lambda x: x**4 * (1 - x) ** mpfr(p) * (1 + x) ** mpfr(q),
            (-1, 1),
            singularity=(q, p),
            tol=mpfr(2) ** -100,
            prec=P,
        )
    assert abs(got - ref) <= mpfr(2) ** -100


def test_laguerre_small_rules():
    r = gauss_laguerre_rule(1, 0, P)
    assert close(r.nodes[0], 1) and close(r.weights[0], 1)
    r = gauss_laguerre_rule(1, 0.5, P)
    with working(128):
        assert close(r.nodes[0], mpfr(1.5))
        assert close(r.weights[0], gmpy2.gamma(mpfr(1.5)))
        assert close(gauss_laguerre_rule(5, 0, P).apply(lambda y: y**3), 6)


@pytest.mark.parametrize("p,q", [(0, 0), (0.5, -0.25), (-0.5, 1.3), (2.0, 0.7)])
def test_jacobi_polynomial_exactness(p, q):
    """Every degree d <= 2m-1 matches the analytic moment to 10 ulp relative.

    The monomials ((1+x)/2)^d keep every moment positive:
    int (1-x)^p (1+x)^q ((1+x)/2)^d dx = 2^(p+q+1) B(d+q+1, p+1).
    """
    m, bits = 9, 160
    r = gauss_jacobi_rule(m, p, q, bits)
    mp.mp.prec = bits + 40
    for d in range(2 * m):
        exact = mp.mpf(2) ** (mp.mpf(p) + mp.mpf(q) + 1) * mp.beta(d + mp.mpf(q) + 1, mp.mpf(p) + 1)
        with working(bits):
            got = r.apply(lambda x: ((1 + x) / 2) ** d)
        assert abs(mp.mpf(got) / exact - 1) <= 10 * mp.mpf(2) ** -bits


@pytest.mark.parametrize("p", [0, 0.5, -0.4])
def test_laguerre_polynomial_exactness(p):
    m, bits = 8, 160
    r = gauss_laguerre_rule(m, p, bits)
    for d in range(2 * m):
        with working(bits + 20):
            exact = gmpy2.gamma(d + mpfr(p) + 1)
        with working(bits):
            got = r.apply(lambda y: y**d)
        assert abs(got / exact - 1) <= 10 * mpfr(2) ** -bits


def test_node_interlacing():
    for m in (5, 12):
        a = gauss_jacobi_rule(m, 0.3, -0.2, P).nodes
        b = gauss_jacobi_rule(m + 1, 0.3, -0.2, P).nodes
        assert all(b[i] < a[i] < b[i + 1] for i in range(m))
        a = gauss_laguerre_rule(m, 0.5, P).nodes
        b = gauss_laguerre_rule(m + 1, 0.5, P).nodes
        assert all(b[i] < a[i] < b[i + 1] for i in range(m))


def test_rules_are_deterministic():
    a = gauss_jacobi_rule(17, 0.25, 0.75, 200)
    quadrature._jacobi.cache_clear()
    b = gauss_jacobi_rule(17, 0.25, 0.75, 200)
    assert a.nodes == b.nodes and a.weights == b.weights


def test_domain_errors():
    with pytest.raises(DomainError):
        gauss_jacobi_rule(3, -1, 0, P)
    with pytest.raises(DomainError):
        gauss_laguerre_rule(3, -1.5, P)
    with pytest.raises(DomainError):
        gauss_legendre_rule(0, P)


def test_adaptive_examples():
    with working(128):
        v, e = integrate_adaptive(lambda x: 1 / gmpy2.sqrt(x), (0, 1), singularity=(-0.5, 0), prec=P)
        assert close(v, 2, mpfr(2) ** -100) and e <= P.tol
        v, e = integrate_adaptive(gmpy2.sin, (0, gmpy2.const_pi()), prec=P)
        assert close(v, 2, mpfr(2) ** -100)
        v, e = integrate_adaptive(lambda x: x**3 * gmpy2.exp(-x), (0, math.inf), prec=P)
        assert close(v, 6, mpfr(2) ** -100)


def test_adaptive_error_bound_is_honest():
    with working(128):
        v, e = integrate_adaptive(lambda x: gmpy2.exp(x) * gmpy2.sqrt(x), (0, 2), singularity=(0.5, 0),
                                  tol=mpfr(2) ** -90, prec=P)
    mp.mp.prec = 200
    exact = mp.quad(lambda x: mp.exp(x) * mp.sqrt(x), [0, 2])
    assert abs(mp.mpf(str(v)) - exact) <= mp.mpf(str(e)) + mp.mpf(2) ** -110


def test_adaptive_tolerance_unmet_carries_best():
    with pytest.raises(ToleranceUnmet) as info:
        integrate_adaptive(lambda x: abs(x - mpfr(1) / 3), (0, 1), tol=mpfr(2) ** -120, prec=P, m=4, max_panels=3)
    assert info.value.best is not None and info.value.error is not None
