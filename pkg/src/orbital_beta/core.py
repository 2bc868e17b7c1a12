"""Domain types and exact log-densities for orbital beta processes and Gaussian beta ensembles.

Conventions: tuples are stored decreasing, ``theta`` is the inverse-temperature
parameter (beta = 2 * theta), and every density is evaluated in log space with
``scipy.special.gammaln`` so nothing overflows at large ``N * theta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln

# Relative gap below which a top level counts as degenerate.
DEGENERATE_GAP = 1e-13
# Relative slack allowed on interlacing gaps of data read back from files.
FILE_TOLERANCE = 1e-12


class DomainError(ValueError):
    """Input lies outside the support of a density (or violates a type invariant)."""

    def __init__(self, message: str, reason: str = "domain", indices: Sequence = ()):
        super().__init__(message)
        self.reason = reason
        self.indices = [list(map(int, ix)) if isinstance(ix, (tuple, list)) else int(ix) for ix in indices]


class PreconditionError(ValueError):
    """An evaluator was called outside the parameter range where it is valid."""

    reason = "precondition"


class NumericError(RuntimeError):
    """A numerical routine failed to converge."""


def check_theta(theta: float, allow_zero: bool = False) -> float:
    theta = float(theta)
    if not math.isfinite(theta) or theta < 0 or (theta == 0 and not allow_zero):
        raise DomainError(f"theta must be positive and finite, got {theta!r}", reason="bad_theta")
    return theta


def _as_vector(values) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    if arr.size == 0:
        raise DomainError("empty tuple", reason="empty")
    if not np.all(np.isfinite(arr)):
        raise DomainError("non-finite entry", reason="non_finite")
    return arr


@dataclass(frozen=True)
class OrderedTuple:
    """A decreasing real tuple; ``strict`` means a_1 > a_2 > ..., ``weak`` allows ties."""

    values: np.ndarray
    ordering: str = "strict"

    def __post_init__(self):
        arr = _as_vector(self.values)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        if self.ordering not in ("strict", "weak"):
            raise DomainError(f"unknown ordering {self.ordering!r}", reason="bad_ordering")
        d = np.diff(arr)
        bad = np.nonzero(d >= 0 if self.ordering == "strict" else d > 0)[0]
        if bad.size:
            raise DomainError("tuple is not decreasing", reason="ordering_violation",
                              indices=[(int(i), int(i) + 1) for i in bad])

    @property
    def N(self) -> int:
        return self.values.size

    @property
    def total(self) -> float:
        """Sum of the entries, written |a| in the formulas."""
        return float(np.sum(self.values))

    def __len__(self) -> int:
        return self.values.size


def interlacing_violations(lower: np.ndarray, upper: np.ndarray, rtol: float = 0.0) -> list:
    """Indices i where upper[i] > lower[i] > upper[i+1] fails.

    ``rtol`` widens each inequality by a relative amount of the local scale.
    """
    hi, lo = upper[:-1], upper[1:]
    slack = rtol * np.maximum(np.maximum(np.abs(lo), np.abs(hi)), hi - lo)
    ok = (lower < hi + slack) & (lower > lo - slack)
    return [int(i) for i in np.nonzero(~ok)[0]]


@dataclass(frozen=True)
class InterlacingArray:
    """Levels 1..m of an interlacing triangle, level k holding k decreasing reals.

    ``top`` optionally holds a conditioning level above level m. ``rtol`` is zero
    for objects built in memory and ``FILE_TOLERANCE`` for deserialized ones.
    """

    levels: tuple
    top: np.ndarray | None = None
    rtol: float = field(default=0.0, compare=False)

    def __post_init__(self):
        levels = tuple(_as_vector(lv) for lv in self.levels)
        for k, lv in enumerate(levels, start=1):
            if lv.size != k:
                raise DomainError(f"level {k} has {lv.size} entries", reason="level_size", indices=[k])
            lv.setflags(write=False)
        object.__setattr__(self, "levels", levels)
        top = None if self.top is None else _as_vector(self.top)
        if top is not None:
            top.setflags(write=False)
        object.__setattr__(self, "top", top)
        stack = list(levels) + ([top] if top is not None else [])
        bad = []
        for k in range(len(stack)):
            d = np.diff(stack[k])
            tol = self.rtol * np.maximum(np.abs(stack[k][:-1]), np.abs(stack[k][1:]))
            for i in np.nonzero(d >= tol)[0]:
                bad.append((k + 1, int(i)))
        for k in range(len(stack) - 1):
            for i in interlacing_violations(stack[k], stack[k + 1], self.rtol):
                bad.append((k + 1, i))
        if top is not None and levels and top.size != levels[-1].size + 1:
            raise DomainError("top must have one more entry than level m", reason="level_size")
        if bad:
            raise DomainError("levels do not interlace strictly", reason="interlacing_violation", indices=bad)

    @property
    def depth(self) -> int:
        return len(self.levels)

    def level_sums(self) -> np.ndarray:
        return np.array([lv.sum() for lv in self.levels])


@dataclass(frozen=True)
class EmpiricalMeasure:
    """A finitely supported probability measure on [-support_bound, support_bound]."""

    x: np.ndarray
    w: np.ndarray
    support_bound: float

    def __post_init__(self):
        x = _as_vector(self.x)
        w = _as_vector(self.w)
        if x.shape != w.shape:
            raise DomainError("atoms and weights differ in length", reason="shape")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise DomainError("weights must be positive and sum to 1", reason="weights")
        s = float(self.support_bound)
        if not s > 0 or np.any(np.abs(x) > s):
            raise DomainError("atom outside the support bound", reason="support")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "support_bound", s)

    @classmethod
    def from_labels(cls, a, support_bound: float | None = None) -> "EmpiricalMeasure":
        """The measure with atoms a_i / N and weights 1 / N."""
        a = _as_vector(getattr(a, "values", a))
        t = a / a.size
        s = float(np.max(np.abs(t))) if support_bound is None else support_bound
        return cls(t, np.full(a.size, 1.0 / a.size), s if s > 0 else 1.0)

    def moment(self, k: int) -> float:
        return float(np.dot(self.w, self.x ** k))

    @property
    def mean(self) -> float:
        return float(np.dot(self.w, self.x))

    @property
    def variance(self) -> float:
        m = self.mean
        return max(float(np.dot(self.w, (self.x - m) ** 2)), 0.0)


def measure_stats(mu: EmpiricalMeasure) -> tuple[float, float, Callable[[int], float]]:
    """Mean, variance and a moment accessor."""
    return mu.mean, mu.variance, mu.moment


@dataclass(frozen=True)
class MCEstimate:
    mean: complex | float
    stderr: float
    n: int

    @classmethod
    def from_values(cls, values) -> "MCEstimate":
        v = np.asarray(values)
        n = v.size
        if n < 2:
            raise ValueError("need at least two draws")
        mean = v.mean()
        sd = np.sqrt(np.sum(np.abs(v - mean) ** 2) / (n - 1))
        if not np.iscomplexobj(v):
            mean = float(mean)
        else:
            mean = complex(mean)
        return cls(mean, float(sd / math.sqrt(n)), int(n))

    def zscore(self, target) -> float:
        diff = abs(self.mean - target)
        return diff / self.stderr if self.stderr > 0 else (0.0 if diff == 0 else math.inf)


# ---------------------------------------------------------------------------
# helpers

def _values(obj) -> np.ndarray:
    return _as_vector(getattr(obj, "values", obj))


def _log_vandermonde(x: np.ndarray) -> float:
    if x.size < 2:
        return 0.0
    d = x[:, None] - x[None, :]
    iu = np.triu_indices(x.size, 1)
    return float(np.sum(np.log(np.abs(d[iu]))))


def _log_cross(upper: np.ndarray, lower: np.ndarray) -> float:
    return float(np.sum(np.log(np.abs(upper[:, None] - lower[None, :]))))


def _fail(strict: bool, err: DomainError) -> float:
    if strict:
        raise err
    return -math.inf


def _check_stack(stack: list, strict: bool):
    """Validate consecutive levels (sizes n, n+1, ...) for strict interlacing; returns an error or None."""
    bad = []
    for k, lv in enumerate(stack):
        bad += [(k, int(i)) for i in np.nonzero(np.diff(lv) >= 0)[0]]
    for k in range(len(stack) - 1):
        if stack[k + 1].size != stack[k].size + 1:
            return DomainError("consecutive levels must differ in size by one", reason="level_size", indices=[k])
        bad += [(k, i) for i in interlacing_violations(stack[k], stack[k + 1])]
    if bad:
        return DomainError("levels do not interlace strictly", reason="interlacing_violation", indices=bad)
    return None


def _level_term(lower: np.ndarray, upper: np.ndarray, theta: float) -> float:
    """(2 - 2 theta) log V(lower) + (theta - 1) log prod |upper - lower|."""
    out = 0.0
    if theta != 1.0:
        out += (2.0 - 2.0 * theta) * _log_vandermonde(lower)
        out += (theta - 1.0) * _log_cross(upper, lower)
    return out


def _check_degenerate(a: np.ndarray):
    if a.size < 2:
        return
    scale = max(float(np.max(np.abs(a))), float(a[0] - a[-1]))
    gaps = -np.diff(a)
    bad = np.nonzero(gaps < DEGENERATE_GAP * scale)[0]
    if bad.size:
        raise DomainError("top level has near-equal entries", reason="degenerate_top",
                          indices=[(int(i), int(i) + 1) for i in bad])


# ---------------------------------------------------------------------------
# normalizations

def log_orbital_normalization(a, theta: float) -> float:
    """log of Gamma(theta)^{N(N+1)/2} / prod_k Gamma(k theta) * prod_{i<j} (a_i - a_j)^{2 theta - 1}."""
    theta = check_theta(theta)
    a = OrderedTuple(_values(a)).values
    _check_degenerate(a)
    N = a.size
    k = np.arange(1, N + 1)
    const = N * (N + 1) / 2 * gammaln(theta) - float(np.sum(gammaln(k * theta)))
    return float(const + (2.0 * theta - 1.0) * _log_vandermonde(a))


def log_gbe_normalization(m: int, theta: float) -> float:
    """log of the integral of prod |x_i - x_j|^{2 theta} exp(-theta |x|^2 / 2) over the Weyl chamber."""
    theta = check_theta(theta)
    j = np.arange(1, m + 1)
    return float(
        -gammaln(m + 1)
        + (-m / 2 - theta * m * (m - 1) / 2) * math.log(theta)
        + m / 2 * math.log(2 * math.pi)
        + np.sum(gammaln(1 + j * theta)) - m * gammaln(1 + theta)
    )


def log_gbe_corners_normalization(m: int, theta: float) -> float:
    theta = check_theta(theta)
    k = np.arange(1, m + 1)
    return float(m * (m + 1) / 2 * gammaln(theta) - np.sum(gammaln(k * theta))
                 + log_gbe_normalization(m, theta))


# ---------------------------------------------------------------------------
# densities

def log_orbital_density(triangle: InterlacingArray, theta: float) -> float:
    """Normalized log-density of a full triangle under the orbital beta process with top ``triangle.top``."""
    theta = check_theta(theta)
    if triangle.top is None or triangle.top.size != triangle.depth + 1:
        raise DomainError("need the full triangle under a top level of length depth + 1", reason="depth")
    a = triangle.top
    levels = list(triangle.levels)
    out = 0.0
    for k in range(len(levels)):
        upper = levels[k + 1] if k + 1 < len(levels) else a
        out += _level_term(levels[k], upper, theta)
    return out - log_orbital_normalization(a, theta)


def log_orbital_density_raw(levels: Sequence, top, theta: float, strict: bool = True) -> float:
    """Same as :func:`log_orbital_density` for unvalidated arrays; violations give -inf or raise."""
    stack = [_as_vector(lv) for lv in levels] + [_values(top)]
    err = _check_stack(stack, strict)
    if err is not None:
        return _fail(strict, err)
    return log_orbital_density(InterlacingArray(tuple(stack[:-1]), top=stack[-1]), theta)


def log_gbe_density(x, theta: float) -> float:
    """Normalized log-density of the rank-m Gaussian beta ensemble on the Weyl chamber."""
    theta = check_theta(theta)
    x = OrderedTuple(_values(x), ordering="weak").values
    if x.size > 1 and np.any(np.diff(x) == 0):
        return -math.inf
    return float(2 * theta * _log_vandermonde(x) - theta * np.dot(x, x) / 2
                 - log_gbe_normalization(x.size, theta))


def log_gbe_corners_density(triangle: InterlacingArray, theta: float) -> float:
    """Normalized log-density of the m-level Gaussian beta corners process."""
    theta = check_theta(theta)
    if triangle.top is not None:
        raise DomainError("corners process takes no top level", reason="depth")
    levels = list(triangle.levels)
    m = len(levels)
    xm = levels[-1]
    out = _log_vandermonde(xm) - theta * float(np.dot(xm, xm)) / 2
    for k in range(m - 1):
        out += _level_term(levels[k], levels[k + 1], theta)
    return out - log_gbe_corners_normalization(m, theta)


def log_corner_kernel(a, x, theta: float, strict: bool = True) -> float:
    """log density of level n given level n+1 = ``a`` (the one-step Markov kernel).

    Gamma((n+1) theta) / Gamma(theta)^{n+1} * prod (a_i - a_j)^{1 - 2 theta}
    * prod (x_i - x_j) * prod |a_s - x_r|^{theta - 1}.
    """
    theta = check_theta(theta)
    a = _values(a)
    x = _values(x)
    if a.size != x.size + 1:
        raise DomainError("level sizes must differ by one", reason="level_size")
    err = _check_stack([x, a], strict)
    if err is not None:
        return _fail(strict, err)
    n = x.size
    out = gammaln((n + 1) * theta) - (n + 1) * gammaln(theta)
    out += (1.0 - 2.0 * theta) * _log_vandermonde(a)
    out += _log_vandermonde(x)
    if theta != 1.0:
        out += (theta - 1.0) * _log_cross(a, x)
    return float(out)


def log_theta_gibbs_conditional(levels: Sequence, given, theta: float, strict: bool = True) -> float:
    """log density of levels 1..n conditioned on level n+1 = ``given``."""
    theta = check_theta(theta)
    lv = [_as_vector(v) for v in levels]
    a = _values(given)
    err = _check_stack(lv + [a], strict)
    if err is not None:
        return _fail(strict, err)
    n = len(lv)
    if a.size != n + 1:
        raise DomainError("given level must have n + 1 entries", reason="level_size")
    k = np.arange(1, n + 2)
    out = float(np.sum(gammaln(k * theta)) - (n + 1) * (n + 2) / 2 * gammaln(theta))
    out += (1.0 - 2.0 * theta) * _log_vandermonde(a)
    for j in range(n):
        upper = lv[j + 1] if j + 1 < n else a
        out += _level_term(lv[j], upper, theta)
    return out
