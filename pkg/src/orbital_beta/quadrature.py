"""Brute-force quadrature of unnormalized orbital densities for small N.

Every axis is integrated with QUADPACK's algebraic-weight rule so the
|t - a|^(theta - 1) endpoint factors are handled exactly.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from .core import OrderedTuple, PreconditionError, check_theta, log_corner_kernel

_OPTS = dict(epsabs=0.0, limit=200)


def orbital_mass(a, theta: float, epsrel: float = 1e-10) -> float:
    """Integral of the unnormalized orbital density over the polytope, N in {2, 3}."""
    theta = check_theta(theta)
    a = OrderedTuple(getattr(a, "values", a)).values
    N = a.size
    tm1 = theta - 1.0
    if N == 2:
        val, _ = integrate.quad(lambda x: 1.0, a[1], a[0], weight="alg", wvar=(tm1, tm1), epsrel=epsrel, **_OPTS)
        return val
    if N != 3:
        raise PreconditionError("quadrature oracle supports N in {2, 3}")
    a1, a2, a3 = a

    def level1(x1, x2):
        if x1 <= x2:
            return 0.0
        v, _ = integrate.quad(lambda z: 1.0, x2, x1, weight="alg", wvar=(tm1, tm1), epsrel=epsrel, **_OPTS)
        return v * (x1 - x2) ** (2 - 2 * theta)

    def over_x2(x1):
        f = lambda x2: level1(x1, x2) * (x1 - a3) ** tm1 * (a1 - x2) ** tm1
        v, _ = integrate.quad(f, a3, a2, weight="alg", wvar=(tm1, tm1), epsrel=epsrel * 10, **_OPTS)
        return v

    val, _ = integrate.quad(over_x2, a2, a1, weight="alg", wvar=(tm1, tm1), epsrel=epsrel * 100, **_OPTS)
    return val


def _inside(x: float, lo: float, hi: float) -> float:
    # QUADPACK's weighted rules sample the endpoints themselves
    return min(max(x, np.nextafter(lo, hi)), np.nextafter(hi, lo))


def corner_kernel_mass(a, theta: float, epsrel: float = 1e-9) -> float:
    """Integral of exp(log_corner_kernel(a, x)) over x interlacing a, for len(a) in {2, 3}.

    The algebraic weight is divided out of the kernel at each node, so the
    result tests the kernel's normalizing constant.
    """
    a = OrderedTuple(getattr(a, "values", a)).values
    tm1 = theta - 1.0
    if a.size == 2:
        def f(x):
            x = _inside(x, a[1], a[0])
            return math.exp(log_corner_kernel(a, [x], theta) - tm1 * (math.log(a[0] - x) + math.log(x - a[1])))
        v, _ = integrate.quad(f, a[1], a[0], weight="alg", wvar=(tm1, tm1), epsrel=epsrel, **_OPTS)
        return v
    if a.size != 3:
        raise PreconditionError("kernel oracle supports len(a) in {2, 3}")

    def inner(x1):
        x1 = _inside(x1, a[1], a[0])

        def f(x2):
            x2 = _inside(x2, a[2], a[1])
            w = tm1 * sum(map(math.log, (x1 - a[1], a[0] - x1, x2 - a[2], a[1] - x2)))
            return math.exp(log_corner_kernel(a, [x1, x2], theta) - w)
        v, _ = integrate.quad(f, a[2], a[1], weight="alg", wvar=(tm1, tm1), epsrel=epsrel, **_OPTS)
        return v

    v, _ = integrate.quad(inner, a[1], a[0], weight="alg", wvar=(tm1, tm1), epsrel=epsrel * 10, **_OPTS)
    return v
