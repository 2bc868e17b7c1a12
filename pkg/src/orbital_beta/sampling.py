"""Samplers for orbital beta triangles, Gaussian beta ensembles and their corners.

Batched samplers return packed arrays of shape (draws, m(m+1)/2) holding
levels 1..m bottom-up: column k(k-1)/2 + i is entry i of level k. Use
:func:`unpack` to split a row into levels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal

from . import _kernels
from .core import DomainError, InterlacingArray, OrderedTuple, PreconditionError, check_theta

PROPOSALS = ("dixon_anderson", "gibbs_inverse_cdf", "slice")
GBE_METHODS = ("tridiagonal", "mcmc")
# draws per batch handed to the compiled descent (bounds memory for the gamma table)
_CHUNK = 256


@dataclass(frozen=True)
class SamplerConfig:
    """Sampler settings.

    ``proposal`` selects the one-step kernel sampler: ``dixon_anderson`` is
    exact; the two MCMC options run ``burn_in`` sweeps per step.
    ``gbe_method`` picks the top-level sampler for Gaussian ensembles.
    """

    seed: int = 0
    chains: int = 1
    burn_in: int = 500
    thinning: int = 10
    proposal: str = "dixon_anderson"
    quadrature_nodes: int = 64
    gbe_method: str = "tridiagonal"

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.chains < 1 or self.thinning < 1 or self.burn_in < 0 or self.quadrature_nodes < 2:
            raise ValueError("chains, thinning >= 1, burn_in >= 0, quadrature_nodes >= 2")
        if self.proposal not in PROPOSALS:
            raise ValueError(f"proposal must be one of {PROPOSALS}")
        if self.gbe_method not in GBE_METHODS:
            raise ValueError(f"gbe_method must be one of {GBE_METHODS}")

    def to_dict(self) -> dict:
        return asdict(self)


def chain_rngs(seed: int, chains: int) -> list[np.random.Generator]:
    """Independent per-chain generators; stream i does not depend on ``chains``."""
    children = np.random.SeedSequence(int(seed)).spawn(chains)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def make_rng(seed: int) -> np.random.Generator:
    return chain_rngs(seed, 1)[0]


def _split(draws: int, chains: int) -> list[int]:
    base, extra = divmod(draws, chains)
    return [base + (i < extra) for i in range(chains)]


def packed_size(m: int) -> int:
    return m * (m + 1) // 2


def unpack(row: np.ndarray, m: int) -> list[np.ndarray]:
    return [row[k * (k - 1) // 2: k * (k + 1) // 2] for k in range(1, m + 1)]


def level_sums(packed: np.ndarray, m: int) -> np.ndarray:
    """Per-draw sums of levels 1..m, shape (draws, m)."""
    return np.stack([packed[:, k * (k - 1) // 2: k * (k + 1) // 2].sum(axis=1) for k in range(1, m + 1)], axis=1)


def _top_values(a) -> np.ndarray:
    vals = OrderedTuple(getattr(a, "values", a)).values
    if vals.size < 2:
        raise DomainError("top level needs at least two entries", reason="level_size")
    return np.ascontiguousarray(vals, dtype=float)


def _numba_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2 ** 31 - 1))


# ---------------------------------------------------------------------------
# one step


def _mcmc_step(a: np.ndarray, theta: float, cfg: SamplerConfig, rng: np.random.Generator,
               x: np.ndarray | None, sweeps: int) -> np.ndarray:
    x = 0.5 * (a[:-1] + a[1:]) if x is None else x.copy()
    seed = _numba_seed(rng)
    if cfg.proposal == "gibbs_inverse_cdf":
        return _kernels.gibbs_sweeps(x, a, theta, sweeps, cfg.quadrature_nodes, seed)
    return _kernels.slice_sweeps(x, a, theta, sweeps, seed)


def sample_corner_step(a, theta: float, cfg: SamplerConfig, rng: np.random.Generator,
                       size: int | None = None):
    """Draw level n from the one-step kernel given level n+1 = ``a``.

    n = 1 uses the exact Beta(theta, theta) reduction. For larger n the
    ``dixon_anderson`` proposal is exact and the MCMC proposals return states
    of a single chain after ``burn_in`` sweeps, ``thinning`` sweeps apart.
    """
    theta = check_theta(theta)
    a = _top_values(a)
    n = a.size - 1
    count = 1 if size is None else int(size)
    if n == 1:
        u = rng.beta(theta, theta, size=count)
        out = (a[1] + (a[0] - a[1]) * u).reshape(count, 1)
        bad = ~((out[:, 0] > a[1]) & (out[:, 0] < a[0]))
        out[bad, 0] = np.clip(out[bad, 0], np.nextafter(a[1], np.inf), np.nextafter(a[0], -np.inf))
    elif cfg.proposal == "dixon_anderson":
        gam = rng.standard_gamma(theta, size=(count, n + 1))
        out = np.empty((count, n))
        for d in range(count):
            _kernels.corner_step(a, gam[d], out[d])
    else:
        out = np.empty((count, n))
        x = _mcmc_step(a, theta, cfg, rng, None, cfg.burn_in)
        for d in range(count):
            if d:
                x = _mcmc_step(a, theta, cfg, rng, x, cfg.thinning)
            out[d] = x
    if size is None:
        return OrderedTuple(out[0])
    return out


# ---------------------------------------------------------------------------
# orbital triangles


def _descend_exact(a: np.ndarray, m: int, theta: float, draws: int, rng: np.random.Generator) -> np.ndarray:
    N = a.size
    width = N * (N + 1) // 2 - 1
    out = np.empty((draws, packed_size(m)))
    for start in range(0, draws, _CHUNK):
        stop = min(draws, start + _CHUNK)
        gam = rng.standard_gamma(theta, size=(stop - start, width))
        _kernels.descend_batch(a, gam, m, out[start:stop])
    return out


def _descend_mcmc(a: np.ndarray, m: int, theta: float, draws: int, cfg: SamplerConfig,
                  rng: np.random.Generator) -> np.ndarray:
    out = np.empty((draws, packed_size(m)))
    for d in range(draws):
        cur = a
        for n in range(a.size - 1, 0, -1):
            if n == 1:
                cur = sample_corner_step(cur, theta, cfg, rng, size=1)[0]
            else:
                cur = _mcmc_step(cur, theta, cfg, rng, None, cfg.burn_in)
            if n <= m:
                out[d, n * (n - 1) // 2: n * (n + 1) // 2] = cur
    return out


def sample_uniform_triangle(a, rng: np.random.Generator, draws: int, max_batches: int = 10_000) -> np.ndarray:
    """Exact theta = 1 sampler: uniform points of the interlacing polytope by box rejection.

    Entry i of level k lies in (a_{i+N-k}, a_i); candidates uniform on that box
    are kept when they interlace. Acceptance decays quickly with N, so this is
    meant for N <= 6. Returns all N-1 levels packed.
    """
    a = _top_values(a)
    N = a.size
    if N > 6:
        raise PreconditionError("box rejection is limited to N <= 6")
    lo = np.concatenate([a[N - k: N] for k in range(1, N)])
    hi = np.concatenate([a[0: k] for k in range(1, N)])
    out = []
    got = 0
    batch = 4096
    for _ in range(max_batches):
        cand = lo + (hi - lo) * rng.random((batch, lo.size))
        ok = np.ones(batch, dtype=bool)
        for k in range(1, N):
            lower = cand[:, k * (k - 1) // 2: k * (k + 1) // 2]
            upper = a[None, :] if k == N - 1 else cand[:, k * (k + 1) // 2: (k + 1) * (k + 2) // 2]
            ok &= np.all((lower < upper[:, :-1]) & (lower > upper[:, 1:]), axis=1)
        acc = cand[ok]
        out.append(acc)
        got += acc.shape[0]
        if got >= draws:
            return np.concatenate(out)[:draws]
    raise PreconditionError("box rejection did not produce enough draws")


def sample_orbital_levels(a, m: int, theta: float, cfg: SamplerConfig, rng: np.random.Generator,
                          draws: int | None = None, path: str = "kernel"):
    """Bottom ``m`` levels of the orbital beta process with top level ``a``.

    Levels N-1, ..., 1 are drawn downward one kernel step at a time.
    ``path="uniform"`` uses the exact theta = 1 box-rejection sampler for the
    full triangle instead (N <= 6). With ``draws=None`` a single
    :class:`InterlacingArray` is returned, otherwise a packed array.
    """
    theta = check_theta(theta)
    a = _top_values(a)
    N = a.size
    if not 1 <= m <= N - 1:
        raise DomainError(f"m must lie in [1, {N - 1}]", reason="depth")
    count = 1 if draws is None else int(draws)
    if path == "uniform":
        if theta != 1.0:
            raise PreconditionError("the uniform path exists only for theta = 1")
        full = sample_uniform_triangle(a, rng, count)
        packed = full[:, :packed_size(m)]
    elif path != "kernel":
        raise ValueError(f"unknown path {path!r}")
    elif cfg.proposal == "dixon_anderson":
        packed = _descend_exact(a, m, theta, count, rng)
    else:
        packed = _descend_mcmc(a, m, theta, count, cfg, rng)
    if draws is None:
        levels = unpack(packed[0], m)
        return InterlacingArray(tuple(levels), top=a if m == N - 1 else None)
    return packed


def sample_orbital_levels_from_tops(tops: np.ndarray, m: int, theta: float, rng: np.random.Generator) -> np.ndarray:
    """Exact bottom-level draws, one per row of ``tops`` (each row strictly decreasing)."""
    theta = check_theta(theta)
    tops = np.ascontiguousarray(tops, dtype=float)
    draws, N = tops.shape
    if np.any(np.diff(tops, axis=1) >= 0):
        raise DomainError("every top level must be strictly decreasing", reason="ordering_violation")
    width = N * (N + 1) // 2 - 1
    out = np.empty((draws, packed_size(m)))
    for start in range(0, draws, _CHUNK):
        stop = min(draws, start + _CHUNK)
        gam = rng.standard_gamma(theta, size=(stop - start, width))
        _kernels.descend_from_tops(tops[start:stop], gam, m, out[start:stop])
    return out


# ---------------------------------------------------------------------------
# Gaussian beta ensembles


def _gbe_tridiagonal(m: int, theta: float, draws: int, rng: np.random.Generator) -> np.ndarray:
    # Symmetric tridiagonal model with beta = 2 theta; eigenvalues lambda have
    # density prop. to |V(lambda)|^beta exp(-|lambda|^2 / 2), so x = lambda / sqrt(theta).
    beta = 2.0 * theta
    diag = rng.normal(0.0, math.sqrt(2.0), size=(draws, m)) / math.sqrt(2.0)
    dof = beta * np.arange(m - 1, 0, -1)
    off = np.sqrt(rng.chisquare(np.broadcast_to(dof, (draws, m - 1)))) / math.sqrt(2.0)
    if m <= 24:
        mats = np.zeros((draws, m, m))
        idx = np.arange(m)
        mats[:, idx, idx] = diag
        mats[:, idx[:-1], idx[1:]] = off
        mats[:, idx[1:], idx[:-1]] = off
        lam = np.linalg.eigvalsh(mats)
    else:
        lam = np.empty((draws, m))
        for d in range(draws):
            lam[d] = eigvalsh_tridiagonal(diag[d], off[d], lapack_driver="stemr")
    return np.ascontiguousarray(lam[:, ::-1] / math.sqrt(theta))


def _gbe_mcmc(m: int, theta: float, draws: int, cfg: SamplerConfig, rng: np.random.Generator) -> np.ndarray:
    out = np.empty((draws, m))
    pos = 0
    base = int(rng.integers(0, 2 ** 63))
    for rng, count in zip(chain_rngs(base, cfg.chains), _split(draws, cfg.chains)):
        if count == 0:
            continue
        # start near the semicircle quantiles
        q = (np.arange(m, 0, -1) - 0.5) / m
        x = np.sort(2.0 * math.sqrt(m / theta) * np.sin(math.pi * (q - 0.5)) * 0.9 + 1e-3 * rng.standard_normal(m))[::-1]
        x = np.ascontiguousarray(x)
        kept = _kernels.gbe_slice_chain(x, theta, cfg.burn_in, cfg.thinning, count,
                                        _numba_seed(rng), out[pos:pos + count])
        if kept != count:
            raise RuntimeError("chain stored the wrong number of states")
        pos += count
    return out


def sample_gbe(m: int, theta: float, cfg: SamplerConfig, rng: np.random.Generator,
               draws: int | None = None, method: str | None = None):
    """Draws from the rank-m Gaussian beta ensemble, sorted decreasingly.

    m = 1 is an exact Gaussian with variance 1/theta. Otherwise ``method``
    (default ``cfg.gbe_method``) is ``tridiagonal`` or the ``mcmc`` reference,
    which splits the draws over ``cfg.chains`` independent chains.
    """
    theta = check_theta(theta)
    if m < 1:
        raise DomainError("m must be positive", reason="depth")
    count = 1 if draws is None else int(draws)
    method = method or cfg.gbe_method
    if m == 1:
        out = rng.standard_normal((count, 1)) / math.sqrt(theta)
    elif method == "tridiagonal":
        out = _gbe_tridiagonal(m, theta, count, rng)
    elif method == "mcmc":
        out = _gbe_mcmc(m, theta, count, cfg, rng)
    else:
        raise ValueError(f"unknown method {method!r}")
    if draws is None:
        return OrderedTuple(out[0], ordering="weak")
    return out


def sample_gbe_corners(m: int, theta: float, cfg: SamplerConfig, rng: np.random.Generator,
                       draws: int | None = None):
    """Gaussian beta corners process: top level from :func:`sample_gbe`, lower levels by kernel steps."""
    theta = check_theta(theta)
    count = 1 if draws is None else int(draws)
    top = sample_gbe(m, theta, cfg, rng, draws=count)
    packed = np.empty((count, packed_size(m)))
    packed[:, packed_size(m - 1):] = top
    if m > 1:
        if cfg.proposal == "dixon_anderson":
            packed[:, :packed_size(m - 1)] = sample_orbital_levels_from_tops(top, m - 1, theta, rng)
        else:
            for d in range(count):
                packed[d, :packed_size(m - 1)] = _descend_mcmc(top[d], m - 1, theta, 1, cfg, rng)[0]
    if draws is None:
        return InterlacingArray(tuple(unpack(packed[0], m)))
    return packed
