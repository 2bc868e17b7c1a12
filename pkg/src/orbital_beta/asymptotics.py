"""Regular sequences, the steepest-descent Bessel approximation and the two large-N experiments."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from .bessel import bessel_mc, contour_log_bessel_m1, recentre_labels
from .core import DomainError, EmpiricalMeasure, MCEstimate, NumericError, OrderedTuple, PreconditionError, check_theta
from .sampling import (
    SamplerConfig,
    make_rng,
    packed_size,
    sample_gbe,
    sample_gbe_corners,
    sample_orbital_levels,
    sample_orbital_levels_from_tops,
)

# named quantile maps on (0, 1): (Q, support bound, exact mean, exact variance)
QUANTILES = {
    "uniform": (lambda u: 2.0 * u - 1.0, 1.0, 0.0, 1.0 / 3.0),
    "two_atom": (lambda u: np.where(u <= 0.5, -1.0, 1.0), 1.0, 0.0, 1.0),
    "point": (lambda u: np.zeros_like(u), 1.0, 0.0, 0.0),
}

KS_ALPHA = 0.01
MOMENT_SIGMAS = 3.0


@dataclass(frozen=True)
class RegularSequenceSpec:
    """Limit measure and size ladder.

    The limit is either a named quantile map (``quantile``) or a finite
    ``measure`` whose generalized inverse CDF is used.
    """

    quantile: str | None = "uniform"
    measure: EmpiricalMeasure | None = None
    sizes: tuple = (50, 100, 200, 400)
    tie_eps: float = 1e-9

    def __post_init__(self):
        if (self.quantile is None) == (self.measure is None):
            raise DomainError("give exactly one of quantile or measure", reason="sequence_spec")
        if self.quantile is not None and self.quantile not in QUANTILES:
            raise DomainError(f"unknown quantile map {self.quantile!r}", reason="sequence_spec")
        object.__setattr__(self, "sizes", tuple(int(n) for n in self.sizes))
        if any(n < 2 for n in self.sizes):
            raise DomainError("sizes must be at least 2", reason="sequence_spec")

    def Q(self, u: np.ndarray) -> np.ndarray:
        if self.quantile is not None:
            return np.asarray(QUANTILES[self.quantile][0](np.asarray(u, dtype=float)), dtype=float)
        order = np.argsort(self.measure.x)
        xs = self.measure.x[order]
        cdf = np.cumsum(self.measure.w[order])
        idx = np.searchsorted(cdf, np.asarray(u) - 1e-15, side="left")
        return xs[np.minimum(idx, xs.size - 1)]

    @property
    def support_bound(self) -> float:
        return QUANTILES[self.quantile][1] if self.quantile else self.measure.support_bound

    @property
    def mean(self) -> float:
        return QUANTILES[self.quantile][2] if self.quantile else self.measure.mean

    @property
    def variance(self) -> float:
        return QUANTILES[self.quantile][3] if self.quantile else self.measure.variance

    def to_dict(self) -> dict:
        d = {"sizes": list(self.sizes), "tie_eps": self.tie_eps}
        if self.quantile is not None:
            d["quantile"] = self.quantile
        else:
            d["measure"] = {"atoms": [{"x": float(x), "w": float(w)} for x, w in zip(self.measure.x, self.measure.w)],
                            "support_bound": self.measure.support_bound}
        return d


@dataclass
class ExperimentReport:
    """Outcome of one experiment: a table of rows, summary statistics and the verdict."""

    name: str
    params: dict
    rows: list = field(default_factory=list)
    statistics: dict = field(default_factory=dict)
    passed: bool = False

    def to_dict(self) -> dict:
        return {"name": self.name, "params": self.params, "rows": self.rows,
                "statistics": self.statistics, "passed": bool(self.passed)}


def build_regular_sequence(spec: RegularSequenceSpec, N: int) -> tuple[OrderedTuple, EmpiricalMeasure, dict]:
    """a(N)_i = N Q((i - 1/2)/N), sorted decreasingly, with ties split by i * eps_N.

    Returns the tuple, its empirical measure and a record holding eps_N,
    whether ties were split and the constant C = max |a(N)_i| / N.
    """
    if N < 2:
        raise DomainError("N must be at least 2", reason="size")
    u = (np.arange(1, N + 1) - 0.5) / N
    q = spec.Q(u)
    if not np.all(np.isfinite(q)):
        raise DomainError("quantile map is unbounded", reason="quantile")
    if np.any(np.diff(q) < 0):
        raise DomainError("quantile map is not monotone", reason="quantile")
    if np.any(np.abs(q) > spec.support_bound * (1 + 1e-12)):
        raise DomainError("quantile map leaves the support bound", reason="quantile")
    a = (N * q)[::-1]
    eps = spec.tie_eps * N
    tied = bool(np.any(np.diff(a) >= 0))
    if tied:
        a = a - eps * np.arange(1, N + 1)
    tup = OrderedTuple(a)
    mu = EmpiricalMeasure.from_labels(tup, support_bound=max(spec.support_bound, float(np.max(np.abs(a))) / N))
    record = {"eps": eps if tied else 0.0, "ties_split": tied, "C": float(np.max(np.abs(a)) / N)}
    return tup, mu, record


def moment_gaps(spec: RegularSequenceSpec, orders: int = 4) -> dict:
    """|m_k(mu_N) - m_k(mu)| for k = 1..orders at the largest size, the limit moments from the quantile map."""
    N = max(spec.sizes)
    _, mu, _ = build_regular_sequence(spec, N)
    # limit moments by midpoint rule on a fine quantile grid
    u = (np.arange(1, 200_001) - 0.5) / 200_000
    q = spec.Q(u)
    return {k: abs(mu.moment(k) - float(np.mean(q ** k))) for k in range(1, orders + 1)}


# ---------------------------------------------------------------------------
# steepest descent


def critical_point(muN: EmpiricalMeasure, y: float, theta: float, N: int) -> float:
    """Unique z0 > max atom solving y / (theta sqrt N) = sum_i w_i / (z0 - t_i)."""
    theta = check_theta(theta)
    if not y > 0:
        raise PreconditionError("critical point needs y > 0; use the mirror labels for y < 0")
    t, w = muN.x, muN.w
    target = y / (theta * math.sqrt(N))
    top = float(t.max())
    f = lambda z: float(np.sum(w / (z - t))) - target
    # f(z) <= 1/(z - top) - target, so the root lies below top + 1/target
    hi = top + 1.0 / target
    lo = top + max((hi - top) * 1e-16, 4 * np.finfo(float).eps * abs(top))
    if f(hi) > 0 or f(lo) < 0:
        raise NumericError(f"critical point not bracketed in [{lo}, {hi}]")
    z, res = optimize.brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500, full_output=True)
    if not res.converged:
        raise NumericError(f"bisection failed in [{lo}, {hi}]")
    for _ in range(3):
        d = z - t
        g = float(np.sum(w / d)) - target
        dg = -float(np.sum(w / d ** 2))
        step = g / dg
        if not lo < z - step < hi:
            break
        z -= step
        if abs(step) <= 1e-16 * abs(z):
            break
    return float(z)


@dataclass(frozen=True)
class SteepestDiagnostics:
    z0: float
    neg_w2: float
    residual: float


def bessel_steepest_m1(a, y: float, theta: float) -> tuple[float, SteepestDiagnostics]:
    """Saddle-point value of log B_a(y / sqrt N, 0, ..., 0) for centred labels a.

    The large-N formula uses H(z) = y z / sqrt N - w(z) with
    w(z) = theta * mean_i log(z - a_i / N), evaluated at its real critical
    point, and Stirling's form of Gamma(theta N).
    """
    theta = check_theta(theta)
    a = OrderedTuple(getattr(a, "values", a))
    N = a.N
    if N * theta <= 1:
        raise PreconditionError("needs N * theta > 1")
    mu = EmpiricalMeasure.from_labels(a)
    z0 = critical_point(mu, y, theta, N)
    t, wts = mu.x, mu.w
    d = z0 - t
    w0 = theta * float(np.sum(wts * np.log(d)))
    neg_w2 = theta * float(np.sum(wts / d ** 2))
    H = y * z0 / math.sqrt(N) - w0
    tN = theta * N
    log_val = ((tN - 0.5) * math.log(theta) + 0.5 * (tN - 1) * math.log(N) - tN + N * H
               - (tN - 1) * math.log(y) - 0.5 * math.log(neg_w2))
    resid = abs(y / (theta * math.sqrt(N)) - float(np.sum(wts / d)))
    return log_val, SteepestDiagnostics(z0, neg_w2, resid)


# ---------------------------------------------------------------------------
# experiments


def _centered_log_bessel(a: OrderedTuple, y: np.ndarray, theta: float, m: int,
                         cfg: SamplerConfig, rng, draws: int) -> tuple[float, float]:
    """log of B_a(y / sqrt N) exp(-sqrt N E[mu_N] sum y) and its uncertainty.

    The uncertainty is the log-scale Monte Carlo standard error for m >= 2
    and the contour error estimate for m = 1.
    """
    N = a.N
    b, _ = recentre_labels(a)
    ys = y / math.sqrt(N)
    if m == 1:
        res = contour_log_bessel_m1(b, complex(ys[0]), theta)
        return float(res.log_value.real), res.rel_error
    est = bessel_mc(b, ys, theta, cfg, rng, draws=draws)
    return math.log(est.mean), est.stderr / est.mean


def verify_bessel_asymptotics(spec: RegularSequenceSpec, y, m: int, theta: float,
                              cfg: SamplerConfig | None = None, tol: float = 0.02,
                              draws: int = 20_000) -> ExperimentReport:
    """Ladder of Delta(N) = |observed centred log B - Var[mu] sum y^2 / (2 theta)|.

    Passes when Delta decreases along the sizes and the last one is below
    ``tol``. A rise in Delta smaller than three times the combined
    uncertainty of the neighbouring rows (Monte Carlo stderr for m >= 2,
    contour error estimate for m = 1) is not counted as a violation.
    """
    theta = check_theta(theta)
    cfg = cfg or SamplerConfig()
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.size != m:
        raise DomainError("need exactly m arguments", reason="arity")
    rng = make_rng(cfg.seed)
    pred = spec.variance * float(np.sum(y ** 2)) / (2 * theta)
    rows = []
    for N in spec.sizes:
        a, mu, rec = build_regular_sequence(spec, N)
        obs, se = _centered_log_bessel(a, y, theta, m, cfg, rng, draws)
        row = {"N": N, "observed": obs, "predicted": pred, "delta": abs(obs - pred), "stderr": se}
        if m == 1 and N * theta > 1:
            b, _ = recentre_labels(a)
            steep, _ = bessel_steepest_m1(b, float(y[0]), theta)
            row["steepest"] = steep
        rows.append(row)
    deltas = [r["delta"] for r in rows]
    monotone = all(d2 < d1 + 3 * math.hypot(r1["stderr"], r2["stderr"])
                   for d1, d2, r1, r2 in zip(deltas, deltas[1:], rows, rows[1:]))
    final_ok = deltas[-1] < tol + 3 * rows[-1]["stderr"]
    return ExperimentReport(
        name="bessel_asymptotics",
        params={"sequence": spec.to_dict(), "y": y.tolist(), "m": m, "theta": theta, "tol": tol,
                "draws": draws, "sampler": cfg.to_dict()},
        rows=rows,
        statistics={"monotone": monotone, "final_delta": deltas[-1]},
        passed=bool(monotone and final_ok),
    )


def _moment_row(x: np.ndarray, ref: np.ndarray, k: int) -> dict:
    a, b = x ** k, ref ** k
    se = math.sqrt(a.var(ddof=1) / a.size + b.var(ddof=1) / b.size)
    return {"k": k, "observed": float(a.mean()), "predicted": float(b.mean()),
            "delta": float(abs(a.mean() - b.mean())), "stderr": se,
            "z": float((a.mean() - b.mean()) / se)}


def _compare(sample: np.ndarray, ref: np.ndarray, m: int) -> dict:
    ks = []
    for j in range(packed_size(m)):
        r = stats.ks_2samp(sample[:, j], ref[:, j])
        ks.append({"coordinate": j, "statistic": float(r.statistic), "pvalue": float(r.pvalue)})
    # largest particle of the deepest retained level
    lead = packed_size(m - 1)
    moments = [_moment_row(sample[:, lead], ref[:, lead], k) for k in range(1, 5)]
    ok = all(r["pvalue"] > KS_ALPHA for r in ks) and all(abs(r["z"]) <= MOMENT_SIGMAS for r in moments)
    return {"ks": ks, "moments": moments, "passed": bool(ok)}


def verify_universality(spec: RegularSequenceSpec, N: int, m: int, theta: float, draws: int,
                        cfg: SamplerConfig | None = None, null: bool = False,
                        ref_draws: int | None = None) -> ExperimentReport:
    """Compare rescaled bottom levels with the Gaussian beta corners process.

    Bottom levels are rescaled as (x - N E[mu_N]) / sqrt(N Var), with Var
    either the limit variance (decides the verdict) or Var[mu_N] (reported).
    With ``null=True`` the top level is itself a Gaussian beta ensemble of
    rank N, so its corners are exactly the reference law and no rescaling is
    applied.
    """
    theta = check_theta(theta)
    cfg = cfg or SamplerConfig()
    if not 1 <= m <= min(4, N - 1):
        raise DomainError("need 1 <= m <= min(4, N - 1)", reason="depth")
    seeds = np.random.SeedSequence(cfg.seed).spawn(2)
    rng = np.random.Generator(np.random.PCG64(seeds[0]))
    rng_ref = np.random.Generator(np.random.PCG64(seeds[1]))
    ref = sample_gbe_corners(m, theta, cfg, rng_ref, draws=ref_draws or draws)
    params = {"N": N, "m": m, "theta": theta, "draws": draws, "ref_draws": ref_draws or draws,
              "null": null, "sampler": cfg.to_dict()}
    if null:
        tops = sample_gbe(N, theta, cfg, rng, draws=draws)
        sample = sample_orbital_levels_from_tops(tops, m, theta, rng)
        res = _compare(sample, ref, m)
        return ExperimentReport("universality_null", params, rows=[res], statistics=res, passed=res["passed"])
    params["sequence"] = spec.to_dict()
    a, mu, rec = build_regular_sequence(spec, N)
    raw = sample_orbital_levels(a, m, theta, cfg, rng, draws=draws)
    centre = N * mu.mean
    rows = []
    verdict = None
    for label, var in (("limit_variance", spec.variance), ("empirical_variance", mu.variance)):
        if not var > 0:
            raise DomainError("degenerate limit measure has no fluctuations to compare", reason="variance")
        sample = (raw - centre) / math.sqrt(N * var)
        res = _compare(sample, ref, m)
        res["scaling"] = label
        res["variance"] = var
        rows.append(res)
        if verdict is None:
            verdict = res["passed"]
    return ExperimentReport("universality", params, rows=rows,
                            statistics={"tie_record": rec, "centre": centre}, passed=bool(verdict))


def tower_check(a, y: float, theta: float, cfg: SamplerConfig | None = None, draws: int = 20_000):
    """E exp(y a^(1)_1) by sampling the bottom particle, against B_a(y, 0, ..., 0) from the contour.

    Returns (MCEstimate, contour value).
    """
    cfg = cfg or SamplerConfig()
    rng = make_rng(cfg.seed)
    a = OrderedTuple(getattr(a, "values", a))
    x = sample_orbital_levels(a, 1, theta, cfg, rng, draws=draws)[:, 0]
    est = MCEstimate.from_values(np.exp(y * x))
    ref = contour_log_bessel_m1(a, y, theta).value.real
    return est, ref
