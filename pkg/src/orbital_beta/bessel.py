"""Evaluators for the multivariate Bessel function B_a(y_1, ..., y_m, 0, ..., 0; theta).

B_a(y) is the expectation over the orbital beta triangle with top ``a`` of
exp(sum_k y_k (|a^(k)| - |a^(k-1)|)), |a^(k)| being the sum of level k.
Three routes are provided: direct quadrature of that expectation (N <= 3),
Monte Carlo over sampled triangles, and a contour integral for a single
nonzero argument. The theta = 0 permutation sum is included as a further
closed form.
"""
from __future__ import annotations

import cmath
import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.optimize import brentq
from scipy.special import betaln, gammaln, hyp1f1, roots_jacobi

from .core import (
    DomainError,
    MCEstimate,
    NumericError,
    OrderedTuple,
    PreconditionError,
    check_theta,
    log_orbital_normalization,
)
from .sampling import SamplerConfig, level_sums, make_rng, sample_orbital_levels

_QUAD = dict(epsabs=0.0, epsrel=1e-12, limit=400)


def _labels(a) -> np.ndarray:
    return OrderedTuple(getattr(a, "values", a)).values.astype(float)


def _args(y, N: int) -> np.ndarray:
    y = np.atleast_1d(np.asarray(y, dtype=complex))
    if y.size > N:
        raise DomainError("more arguments than labels", reason="arity")
    return np.concatenate([y, np.zeros(N - y.size, dtype=complex)])


def _cquad(f, lo, hi, real: bool = False, **kw) -> tuple[complex, float]:
    """Adaptive quadrature of a complex integrand, real and imaginary parts separately."""
    opts = dict(_QUAD)
    opts.update(kw)
    # QUADPACK's roundoff warning is redundant: its error estimate is returned
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        re, er = integrate.quad(lambda t: f(t).real, lo, hi, **opts)
        if real:
            return complex(re), er
        im, ei = integrate.quad(lambda t: f(t).imag, lo, hi, **opts)
    return complex(re, im), math.hypot(er, ei)


# ---------------------------------------------------------------------------
# quadrature oracle


def _jacobi_rule(theta: float, nodes: int):
    # nodes/weights on (0, 1) for the weight u^(theta-1) (1-u)^(theta-1), normalized to sum 1
    x, w = roots_jacobi(nodes, theta - 1.0, theta - 1.0)
    return 0.5 * (1.0 + x), w / w.sum()


def _beta_mgf(c: np.ndarray, lo: np.ndarray, hi: np.ndarray, theta: float, nodes: int = 48) -> np.ndarray:
    """E exp(c X) for X = lo + (hi - lo) * Beta(theta, theta), vectorized over arrays."""
    u, w = _jacobi_rule(theta, nodes)
    x = lo[..., None] + (hi - lo)[..., None] * u
    return np.exp(c[..., None] * x) @ w


def bessel_quadrature_small(a, y, theta: float) -> complex:
    """Deterministic quadrature of the triangle expectation for N <= 3.

    Endpoint singularities |t - a_s|^(theta - 1) are integrated exactly by
    QUADPACK's algebraic-weight rule; at N = 3 the innermost (level-1)
    integral is a Beta-weighted exponential, done by Gauss-Jacobi quadrature.
    """
    theta = check_theta(theta)
    a = _labels(a)
    N = a.size
    if N > 3:
        raise PreconditionError("the quadrature oracle supports N <= 3")
    yy = _args(y, N)
    if N == 1:
        return complex(cmath.exp(a[0] * yy[0]))
    if np.all(yy == 0):
        return 1.0 + 0j
    real = bool(np.all(yy.imag == 0))
    if N == 2:
        # level 1 is a2 + (a1 - a2) Beta(theta, theta); exponent y1 x + y2 (a1 + a2 - x)
        c = yy[0] - yy[1]
        base = yy[1] * (a[0] + a[1])
        lognorm = betaln(theta, theta) + (2 * theta - 1) * math.log(a[0] - a[1])
        f = lambda x: np.exp(base + c * x - lognorm)
        val, _ = _cquad(f, a[1], a[0], real, weight="alg", wvar=(theta - 1, theta - 1))
        return val
    a1, a2, a3 = a
    total = a.sum()
    c1 = yy[0] - yy[1]
    lognorm = log_orbital_normalization(a, theta)
    tm1 = theta - 1.0
    # inner integral over level 1 in (x2, x1):
    #   B(theta, theta) (x1 - x2)^(2 theta - 1) E exp(c1 X)
    lb = betaln(theta, theta)

    def level2(x1, x2):
        # (x1 - x2)^(2 - 2 theta) times the (x1 - x2)^(2 theta - 1) from the inner integral
        gap = x1 - x2
        if gap <= 0:
            return 0j
        inner = _beta_mgf(np.asarray(c1), np.asarray(x2), np.asarray(x1), theta)
        logw = lb + tm1 * (math.log(x1 - a3) + math.log(a1 - x2))
        expo = yy[1] * (x1 + x2) + yy[2] * (total - x1 - x2)
        return gap * complex(inner) * cmath.exp(expo + logw - lognorm)

    def outer(x1):
        v, _ = _cquad(lambda x2: level2(x1, x2), a3, a2, real, weight="alg", wvar=(tm1, tm1), epsrel=1e-11)
        return v

    val, _ = _cquad(outer, a2, a1, real, weight="alg", wvar=(tm1, tm1), epsrel=1e-10)
    return val


# ---------------------------------------------------------------------------
# Monte Carlo


def bessel_mc(a, y, theta: float, cfg: SamplerConfig | None = None,
              rng: np.random.Generator | None = None, draws: int = 10_000) -> MCEstimate:
    """Monte Carlo mean of exp(sum_k y_k (|a^(k)| - |a^(k-1)|)) over sampled triangles.

    Only the bottom max(m, 1) levels are sampled.
    """
    theta = check_theta(theta)
    cfg = cfg or SamplerConfig()
    rng = rng or make_rng(cfg.seed)
    a = _labels(a)
    N = a.size
    y = np.atleast_1d(np.asarray(y, dtype=complex))
    m = y.size
    if m > N:
        raise DomainError("more arguments than labels", reason="arity")
    if N == 1:
        v = cmath.exp(a[0] * y[0])
        return MCEstimate(v, 0.0, draws)
    depth = min(max(m, 1), N - 1)
    packed = sample_orbital_levels(a, depth, theta, cfg, rng, draws=draws)
    sums = level_sums(packed, depth)
    if m == N:
        sums = np.concatenate([sums, np.full((draws, 1), a.sum())], axis=1)
    incr = np.diff(np.concatenate([np.zeros((draws, 1)), sums[:, :m]], axis=1), axis=1)
    vals = np.exp(incr @ y)
    if np.all(y.imag == 0):
        vals = vals.real
    return MCEstimate.from_values(vals)


# ---------------------------------------------------------------------------
# contour integral, single nonzero argument


@dataclass(frozen=True)
class ContourSpec:
    """Vertical-line contour settings.

    ``M`` is where the line crosses the real axis (right of all labels when
    Re y > 0, left of them when Re y < 0); ``None`` picks the real saddle.
    ``T`` truncates |s| along the line; ``None`` chooses it from the tail bound.
    ``rule`` is ``adaptive`` (QUADPACK, plus Fourier-integral tails when the
    bound demands) or ``fixed_gauss`` (Gauss-Legendre with ``nodes`` points).
    """

    M: float | None = None
    T: float | None = None
    nodes: int = 400
    rule: str = "adaptive"

    def __post_init__(self):
        if self.rule not in ("adaptive", "fixed_gauss"):
            raise ValueError("rule must be 'adaptive' or 'fixed_gauss'")
        if self.T is not None and not self.T > 0:
            raise ValueError("T must be positive")
        if self.nodes < 2:
            raise ValueError("nodes must be at least 2")


@dataclass(frozen=True)
class ContourResult:
    log_value: complex
    rel_error: float
    M: float
    T: float
    tail_bound: float

    @property
    def value(self) -> complex:
        return cmath.exp(self.log_value)


_TAIL_TARGET = 1e-10


def _saddle(c_shift: np.ndarray, theta: float, Y: float) -> float:
    """Offset x > 0 with theta * sum 1/(x + c_shift) = Y, where c_shift >= 0."""
    f = lambda x: theta * np.sum(1.0 / (x + c_shift)) - Y
    lo = 1e-300
    hi = max(theta * c_shift.size / Y, 1e-12)
    while f(hi) > 0:
        hi *= 2
    if f(lo) < 0:
        return lo
    return brentq(f, lo, hi, xtol=1e-15, rtol=1e-14, maxiter=500)


def contour_log_bessel_m1(a, y: complex, theta: float, contour: ContourSpec | None = None) -> ContourResult:
    """log B_a(y, 0, ..., 0) from the contour integral, with an error estimate.

    The contour is the straight line z = M + sigma * d * s, s real, with
    sigma = sign(Re y) and d = i * conj(Y)/|Y| for Y = sigma * y, so the
    exponential factor is a pure oscillation exp(i |Y| s). Its tail beyond
    |s| > T is bounded using |z - a_i| >= |s| cos(arg Y).
    """
    theta = check_theta(theta)
    contour = contour or ContourSpec()
    a = _labels(a)
    N = a.size
    y = complex(y)
    if N * theta <= 1:
        raise PreconditionError("the line contour needs N * theta > 1")
    if y.real == 0:
        raise PreconditionError("Re y = 0 is not covered by the contour formulas; use Monte Carlo")
    sigma = 1.0 if y.real > 0 else -1.0
    Y = sigma * y
    absY = abs(Y)
    phi = cmath.phase(Y)
    d = 1j * (Y.conjugate() / absY)
    edge = a[0] if sigma > 0 else a[-1]
    shift = sigma * (edge - a)          # >= 0
    if contour.M is None:
        off = _saddle(shift, theta, absY)
        M = edge + sigma * off
    else:
        M = float(contour.M)
        if not sigma * (M - edge) > 0:
            raise PreconditionError("M must lie outside [a_N, a_1] on the side given by sign(Re y)")
    c = sigma * (M - a)
    if np.any(c <= 0):
        raise PreconditionError("M too close to the labels")
    Ntheta = N * theta
    logc_sum = float(np.sum(np.log(c)))
    width = 1.0 / math.sqrt(theta * float(np.sum(1.0 / c ** 2)))

    def h(s):
        s = np.asarray(s, dtype=float)
        return np.exp(-theta * np.sum(np.log1p(np.multiply.outer(s, d / c)), axis=-1))

    def g(s):
        return np.exp(1j * absY * np.asarray(s)) * h(s)

    def log_tail(T):
        # log of 2 * prod c^theta * (T cos phi)^(-N theta) * T / (N theta - 1)
        return (math.log(2.0) + theta * logc_sum - Ntheta * math.log(T * math.cos(phi))
                + math.log(T) - math.log(Ntheta - 1.0))

    gauss_mass = math.sqrt(2 * math.pi) * width  # rough size of the core integral
    if contour.T is not None:
        T = float(contour.T)
    else:
        target = math.log(_TAIL_TARGET * gauss_mass)
        # solve log_tail(T) = target: linear in log T
        const = math.log(2.0) + theta * logc_sum - Ntheta * math.log(math.cos(phi)) - math.log(Ntheta - 1.0)
        logT = (const - target) / (Ntheta - 1.0)
        T = min(max(math.exp(logT), 40.0 * width), 2000.0 * width)

    if contour.rule == "fixed_gauss":
        xs, ws = np.polynomial.legendre.leggauss(contour.nodes)
        core = complex(np.sum(ws * g(T * xs)) * T)
        core_err = 0.0
        tail = math.exp(log_tail(T))
        tails = 0j
        tail_err = tail
    else:
        core, core_err = _cquad(lambda s: complex(g(s)), -T, T, epsrel=1e-13, limit=2000,
                                epsabs=1e-15 * gauss_mass)
        tail = math.exp(log_tail(T))
        tails = 0j
        tail_err = tail
        if tail > _TAIL_TARGET * abs(core):
            tails, tail_err = _fourier_tails(h, absY, T)
    integral = core + tails
    if integral == 0:
        raise DomainError("contour integral vanished", reason="numeric")
    log_val = (gammaln(Ntheta) - (Ntheta - 1.0) * cmath.log(Y) + y * M - theta * logc_sum
               + cmath.log(d / (2j * math.pi)) + cmath.log(integral))
    # rounding of the large log-space terms that nearly cancel in log_val
    terms = (gammaln(Ntheta), (Ntheta - 1.0) * abs(cmath.log(Y)), abs(y * M), theta * float(np.sum(np.abs(np.log(c)))))
    rounding = 4 * np.finfo(float).eps * sum(abs(t) for t in terms)
    rel = (core_err + tail_err) / abs(integral) + rounding
    return ContourResult(complex(log_val), float(rel), float(M), float(T), float(tail))


def _fourier_tails(h, omega: float, T: float) -> tuple[complex, float]:
    """Integral of exp(i omega s) h(s) over |s| > T by QUADPACK's Fourier rule."""
    total = 0j
    err = 0.0
    for sgn in (1.0, -1.0):
        # s = sgn * t, t in [T, inf): exp(i omega sgn t) h(sgn t)
        hr = lambda t: complex(h(sgn * t)).real
        hi = lambda t: complex(h(sgn * t)).imag
        cr, e1 = integrate.quad(hr, T, np.inf, weight="cos", wvar=omega, limlst=200)
        sr, e2 = integrate.quad(hr, T, np.inf, weight="sin", wvar=omega, limlst=200)
        ci, e3 = integrate.quad(hi, T, np.inf, weight="cos", wvar=omega, limlst=200)
        si, e4 = integrate.quad(hi, T, np.inf, weight="sin", wvar=omega, limlst=200)
        # (cos + i sgn sin)(hr + i hi)
        total += complex(cr - sgn * si, ci + sgn * sr)
        err += e1 + e2 + e3 + e4
    return total, err


def bessel_contour_m1(a, y: complex, theta: float, contour: ContourSpec | None = None,
                      max_rel_error: float = 1e-6) -> complex:
    """B_a(y, 0, ..., 0) by the contour integral (needs N theta > 1 and Re y != 0).

    Raises NumericError when the error estimate exceeds ``max_rel_error``,
    which happens for complex y once cancellation along the line dominates.
    """
    res = contour_log_bessel_m1(a, y, theta, contour)
    if not res.rel_error <= max_rel_error:
        raise NumericError(f"contour error estimate {res.rel_error:.3g} exceeds {max_rel_error:.3g}")
    return res.value


# ---------------------------------------------------------------------------
# closed forms and identities


def bessel_theta0(a, y) -> complex:
    """(1/N!) sum over permutations of exp(sum_i a_i y_sigma(i)), for N <= 8."""
    a = np.asarray(a, dtype=complex).reshape(-1)
    y = np.asarray(y, dtype=complex).reshape(-1)
    N = a.size
    if y.size > N:
        raise DomainError("more arguments than labels", reason="arity")
    y = np.concatenate([y, np.zeros(N - y.size, dtype=complex)])
    if N > 8:
        raise PreconditionError("the permutation sum is limited to N <= 8")
    perms = np.array(list(itertools.permutations(range(N))))
    expo = y[perms] @ a
    shift = expo.real.max()
    return complex(np.exp(shift) * np.mean(np.exp(expo - shift)))


def bessel_n2_closed(a, y, theta: float):
    """N = 2 in closed form: exp(y1 a2 + y2 a1) 1F1(theta; 2 theta; (y1 - y2)(a1 - a2)).

    Real arguments only. ``a`` may be an array of label pairs with shape
    (..., 2), giving one value per pair.
    """
    a = np.asarray(getattr(a, "values", a), dtype=float)
    if a.shape[-1:] != (2,):
        raise DomainError("need label pairs", reason="arity")
    a1, a2 = a[..., 0], a[..., 1]
    if not np.all(a1 > a2):
        raise DomainError("label pairs must be strictly decreasing", reason="ordering")
    y1, y2 = np.asarray(y, dtype=float)
    return np.exp(y1 * a2 + y2 * a1) * hyp1f1(theta, 2 * theta, (y1 - y2) * (a1 - a2))


def recentre_labels(a) -> tuple[OrderedTuple, float]:
    """Shift labels to have zero sum; returns (b, r) with b = a - r and r = |a| / N."""
    vals = _labels(a)
    r = float(np.sum(vals) / vals.size)
    b = vals - r
    # one pass of compensation keeps the residual sum at rounding level
    b = b - np.sum(b) / b.size
    return OrderedTuple(b), r


# ---------------------------------------------------------------------------
# Pieri-type identity, one extra argument


@dataclass(frozen=True)
class PieriResult:
    lhs: float
    rhs: float
    rhs_stderr: float

    def __iter__(self):
        yield self.lhs
        yield self.rhs


def _bessel_one(a: np.ndarray, u: float, theta: float) -> float:
    if a.size <= 3:
        return bessel_quadrature_small(a, [u], theta).real
    return bessel_contour_m1(a, u, theta).real


def pieri_check_m1(a, y1: float, y: float, theta: float, inner: str = "auto",
                   cfg: SamplerConfig | None = None, rng: np.random.Generator | None = None,
                   draws: int = 20_000, nodes: int = 40) -> PieriResult:
    """Both sides of the product formula B(-y1) B(-y) = C * integral over z in [0, y].

    The integrand is G(z) F(z)^(theta(N-1)-1) B(-(y1+z), -(y-z)) z^(theta-1)
    with G = (y1 - y + 2z)(y1 - y + z)^(theta-1) and F = (1 - z/y)(1 + z/y1).
    ``inner`` evaluates the two-argument function with the quadrature oracle
    (``oracle``, N <= 3) or by Monte Carlo (``mc``), in which case every
    sampled triangle gets its own z-integral by Gauss-Jacobi quadrature, so
    the reported stderr covers the whole right-hand side.
    """
    theta = check_theta(theta)
    a = _labels(a)
    N = a.size
    y1 = float(y1)
    y = float(y)
    if not (y1 > y > 0):
        raise DomainError("need y1 > y > 0", reason="pieri_constraint")
    if N < 2:
        raise DomainError("need N >= 2", reason="arity")
    if inner == "auto":
        inner = "oracle" if N <= 3 else "mc"
    p = theta * (N - 1) - 1.0
    logC = gammaln(N * theta) - gammaln((N - 1) * theta) - gammaln(theta) - theta * math.log(y) - theta * math.log(y1)
    lhs = _bessel_one(a, -y1, theta) * _bessel_one(a, -y, theta)

    def smooth(z):
        # everything except the weight z^(theta-1) (y - z)^p
        G = (y1 - y + 2 * z) * (y1 - y + z) ** (theta - 1)
        return G * (1 + z / y1) ** p * y ** (-p)

    if inner == "oracle":
        if N > 3:
            raise PreconditionError("the oracle inner evaluator supports N <= 3")
        f = lambda z: smooth(z) * bessel_quadrature_small(a, [-(y1 + z), -(y - z)], theta).real
        val, _ = integrate.quad(f, 0.0, y, weight="alg", wvar=(theta - 1, p), epsabs=0, epsrel=1e-11, limit=200)
        return PieriResult(float(lhs), float(math.exp(logC) * val), 0.0)
    if inner != "mc":
        raise ValueError("inner must be 'oracle', 'mc' or 'auto'")
    cfg = cfg or SamplerConfig()
    rng = rng or make_rng(cfg.seed)
    # Gauss-Jacobi rule for z^(theta-1) (y-z)^p on [0, y]
    x, w = roots_jacobi(nodes, p, theta - 1.0)
    z = 0.5 * y * (1.0 + x)
    wz = w * (0.5 * y) ** (theta + p)
    packed = sample_orbital_levels(a, min(2, N - 1), theta, cfg, rng, draws=draws)
    sums = level_sums(packed, min(2, N - 1))
    L1 = sums[:, 0]
    L2 = sums[:, 1] if N > 2 else np.full(draws, a.sum())
    # B(u1, u2) integrand per draw: exp(u1 L1 + u2 (L2 - L1)), u1 = -(y1+z), u2 = -(y-z)
    expo = -np.outer(L1, y1 + z) - np.outer(L2 - L1, y - z)
    per_draw = np.exp(expo) @ (wz * smooth(z)) * math.exp(logC)
    est = MCEstimate.from_values(per_draw)
    return PieriResult(float(lhs), float(est.mean), est.stderr)
