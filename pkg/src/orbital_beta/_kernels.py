"""Compiled inner loops for the samplers.

The exact one-step sampler draws w ~ Dirichlet(theta, ..., theta) and returns the
n roots of  f(t) = sum_j w_j / (t - a_j),  one in each gap (a_{k+1}, a_k).
Roots are found by a safeguarded two-pole rational model iteration. Poles far
from the current gap enter through a Taylor expansion about the gap midpoint
that is built once per root; its remainder is bounded, and roots where the
bound is too loose are finished with exact sums.
"""
from __future__ import annotations

import numpy as np
import numba

_FM = {"reassoc", "contract", "nsz"}
_K = 8          # Taylor order for far poles
_L = 10         # poles on each side summed exactly
_RTOL = 1e-12   # accepted truncation-induced displacement, relative to |t - pole|


@numba.njit(cache=True)
def _model_step(s, d1, d2, x, e1, e2, lo, hi):
    # Fit Q/(x+e1) + S/(x+e2) + C to the value and one-sided slopes, return its root.
    u1 = x + e1
    u2 = x + e2
    Q = d1 * u1 * u1
    S = d2 * u2 * u2
    C = s - d1 * u1 - d2 * u2
    qb = C * (e1 + e2) + Q + S
    qc = Q * e2 + S * e1
    if C == 0.0:
        return -qc / qb
    disc = qb * qb - 4.0 * C * qc
    if disc < 0.0:
        disc = 0.0
    sq = np.sqrt(disc)
    q = -0.5 * (qb + sq) if qb >= 0 else -0.5 * (qb - sq)
    r1 = q / C
    if lo < r1 < hi:
        return r1
    if q != 0.0:
        return qc / q
    return r1


@numba.njit(cache=True, fastmath=_FM, error_model="numpy")
def _far(a, w, c, j0, j1, coef):
    c0 = 0.0; c1 = 0.0; c2 = 0.0; c3 = 0.0; c4 = 0.0
    c5 = 0.0; c6 = 0.0; c7 = 0.0; c8 = 0.0; c9 = 0.0
    for j in range(j0, j1):
        r = 1.0 / (c - a[j])
        t = w[j] * r
        c0 += t; t = t * r; c1 += t; t = t * r; c2 += t; t = t * r; c3 += t; t = t * r
        c4 += t; t = t * r; c5 += t; t = t * r; c6 += t; t = t * r; c7 += t; t = t * r
        c8 += t; t = t * r; c9 += t
    coef[0] = c0; coef[1] = -c1; coef[2] = c2; coef[3] = -c3; coef[4] = c4
    coef[5] = -c5; coef[6] = c6; coef[7] = -c7; coef[8] = c8
    coef[9] = abs(c9)


@numba.njit(cache=True, fastmath=_FM, error_model="numpy")
def _near(a, w, p, x, j0, j1):
    s = 0.0
    d = 0.0
    for j in range(j0, j1):
        r = 1.0 / ((p - a[j]) + x)
        wr = w[j] * r
        s += wr
        d += wr * r
    return s, d


@numba.njit(cache=True)
def _poly(coef, tau):
    v = 0.0
    dv = 0.0
    for i in range(_K, -1, -1):
        dv = dv * tau + v
        v = v * tau + coef[i]
    return v, dv


@numba.njit(cache=True)
def secular_roots(a, w, out):
    """Roots of sum_j w_j / (t - a_j) for decreasing ``a`` and positive ``w``.

    Writes out[k] in (a[k+1], a[k]) and returns the number of roots that
    needed exact-sum refinement.
    """
    n = a.shape[0] - 1
    cl = np.zeros(_K + 2)
    cr = np.zeros(_K + 2)
    nfb = 0
    for k in range(n):
        ak = a[k]
        ak1 = a[k + 1]
        g = ak - ak1
        c = 0.5 * (ak + ak1)
        jl = max(0, k - _L + 1)
        jr = min(n + 1, k + _L + 1)
        dl = np.inf
        dr = np.inf
        if jl > 0:
            _far(a, w, c, 0, jl, cl)
            dl = a[jl - 1] - c
        if jr <= n:
            _far(a, w, c, jr, n + 1, cr)
            dr = c - a[jr]
        fast = jl > 0 or jr <= n
        # start from the two-pole root, anchored at the nearer pole
        wk = w[k]
        wk1 = w[k + 1]
        if wk <= wk1:
            p = ak; x = -g * wk / (wk + wk1); lo = -g; hi = 0.0; e1 = 0.0; e2 = g
        else:
            p = ak1; x = g * wk1 / (wk + wk1); lo = 0.0; hi = g; e1 = -g; e2 = 0.0
        for _ in range(500):
            s1, d1 = _near(a, w, p, x, jl, k + 1)
            s2, d2 = _near(a, w, p, x, k + 1, jr)
            s = s1 + s2
            if fast:
                tau = x + (p - c)
                if jl > 0:
                    v, dv = _poly(cl, tau)
                    s += v
                    d1 -= dv
                if jr <= n:
                    v, dv = _poly(cr, tau)
                    s += v
                    d2 -= dv
            if s > 0.0:
                lo = x
            else:
                hi = x
            xn = _model_step(s, d1, d2, x, e1, e2, lo, hi)
            done = abs(xn - x) <= 1e-7 * abs(x)
            if not done and not (lo < xn < hi):
                xn = 0.5 * (lo + hi)
                done = hi - lo <= 4e-16 * abs(xn)
            x = xn
            if done:
                if not fast:
                    break
                tau = abs(x + (p - c))
                bnd = 0.0
                if jl > 0:
                    bnd += cl[_K + 1] * tau ** (_K + 1) / (1.0 - tau / dl)
                if jr <= n:
                    bnd += cr[_K + 1] * tau ** (_K + 1) / (1.0 - tau / dr)
                if bnd <= _RTOL * abs(x) * (d1 + d2):
                    break
                fast = False
                nfb += 1
                jl = 0
                jr = n + 1
                if p == ak:
                    lo = -g; hi = 0.0
                else:
                    lo = 0.0; hi = g
                continue
            if p == ak and x < -0.5 * g:
                p = ak1; x = x + g; e1 = -g; e2 = 0.0; lo = lo + g; hi = min(hi + g, g)
            elif p == ak1 and x > 0.5 * g:
                p = ak; x = x - g; e1 = 0.0; e2 = g; lo = max(lo - g, -g); hi = hi - g
        t = p + x
        # keep strict interlacing when the root sits within an ulp of a pole
        if t >= ak:
            t = np.nextafter(ak, -np.inf)
        if t <= ak1:
            t = np.nextafter(ak1, np.inf)
        out[k] = t
    return nfb


@numba.njit(cache=True)
def corner_step(a, gam, out):
    """One exact step: normalize the gamma draws into Dirichlet weights and solve."""
    w = gam / gam.sum()
    if a.shape[0] == 2:
        # closed form: the root is the weighted mean
        out[0] = w[1] * a[0] + w[0] * a[1]
        if not (a[1] < out[0] < a[0]):
            out[0] = min(max(out[0], np.nextafter(a[1], np.inf)), np.nextafter(a[0], -np.inf))
        return 0
    return secular_roots(a, w, out)


@numba.njit(cache=True)
def _descend_one(top, gam, m, out, buf, nxt):
    N = top.shape[0]
    nfb = 0
    cur = buf
    cur[:N] = top
    off = 0
    for n in range(N - 1, 0, -1):
        nfb += corner_step(cur[:n + 1], gam[off:off + n + 1], nxt[:n])
        off += n + 1
        if n <= m:
            base = n * (n - 1) // 2
            out[base:base + n] = nxt[:n]
        cur, nxt = nxt, cur
    return nfb


@numba.njit(cache=True)
def descend_batch(a, gam, m, out):
    """Sample bottom levels for a batch of draws under one top level.

    ``gam`` has shape (draws, N(N+1)/2 - 1): the gamma variates for levels
    N-1, N-2, ..., 1 in that order. ``out`` has shape (draws, m(m+1)/2) and
    receives levels 1..m packed bottom-up. Returns the refinement count.
    """
    N = a.shape[0]
    buf = np.empty(N)
    nxt = np.empty(N)
    nfb = 0
    for d in range(gam.shape[0]):
        nfb += _descend_one(a, gam[d], m, out[d], buf, nxt)
    return nfb


@numba.njit(cache=True)
def descend_from_tops(tops, gam, m, out):
    """Like :func:`descend_batch` with a separate top level per draw (rows of ``tops``)."""
    N = tops.shape[1]
    buf = np.empty(N)
    nxt = np.empty(N)
    nfb = 0
    for d in range(tops.shape[0]):
        nfb += _descend_one(tops[d], gam[d], m, out[d], buf, nxt)
    return nfb


# ---------------------------------------------------------------------------
# single-coordinate MCMC for the one-step kernel
#
# The full conditional of x_r on (a_{r+1}, a_r) is
#   prod_{i != r} |x_r - x_i| * prod_s |a_s - x_r|^{theta - 1}.
# Both samplers work in u with x = mid + half * sin(u), which turns the
# endpoint power singularities into u^{2 theta - 1} behaviour.


@numba.njit(cache=True)
def _cond_logpdf_u(u, r, x, a, theta, mid, half):
    s = np.sin(u)
    xv = mid + half * s
    lp = np.log(np.cos(u))
    for i in range(x.shape[0]):
        if i != r:
            lp += np.log(abs(xv - x[i]))
    if theta != 1.0:
        acc = 0.0
        for j in range(a.shape[0]):
            if j == r:
                acc += np.log(half * (1.0 - s))
            elif j == r + 1:
                acc += np.log(half * (1.0 + s))
            else:
                acc += np.log(abs(a[j] - xv))
        lp += (theta - 1.0) * acc
    return lp


@numba.njit(cache=True)
def gibbs_sweeps(x, a, theta, sweeps, nodes, seed):
    """Metropolized inverse-CDF Gibbs sweeps.

    Each coordinate proposes from a piecewise-constant fit of its full
    conditional on ``nodes`` equal cells in u, then accepts with the
    independence Metropolis ratio, so the kernel is left exactly invariant.
    """
    np.random.seed(seed)
    n = x.shape[0]
    h = np.pi / nodes
    logp = np.empty(nodes)
    cdf = np.empty(nodes)
    for _ in range(sweeps):
        for r in range(n):
            mid = 0.5 * (a[r] + a[r + 1])
            half = 0.5 * (a[r] - a[r + 1])
            mx = -np.inf
            for c in range(nodes):
                logp[c] = _cond_logpdf_u(-0.5 * np.pi + (c + 0.5) * h, r, x, a, theta, mid, half)
                if logp[c] > mx:
                    mx = logp[c]
            tot = 0.0
            for c in range(nodes):
                tot += np.exp(logp[c] - mx)
                cdf[c] = tot
            # current state
            u0 = np.arcsin(min(max((x[r] - mid) / half, -1.0), 1.0))
            c0 = min(int((u0 + 0.5 * np.pi) / h), nodes - 1)
            # proposal
            v = np.random.random() * tot
            c1 = np.searchsorted(cdf, v)
            if c1 >= nodes:
                c1 = nodes - 1
            u1 = -0.5 * np.pi + (c1 + np.random.random()) * h
            if not (-0.5 * np.pi < u1 < 0.5 * np.pi):
                continue
            l0 = _cond_logpdf_u(u0, r, x, a, theta, mid, half)
            l1 = _cond_logpdf_u(u1, r, x, a, theta, mid, half)
            logr = (l1 - logp[c1]) - (l0 - logp[c0])
            if np.log(np.random.random()) < logr:
                xn = mid + half * np.sin(u1)
                if a[r + 1] < xn < a[r]:
                    x[r] = xn
    return x


@numba.njit(cache=True)
def slice_sweeps(x, a, theta, sweeps, seed):
    """Univariate slice sampling in u with shrinkage from the full bracket."""
    np.random.seed(seed)
    n = x.shape[0]
    for _ in range(sweeps):
        for r in range(n):
            mid = 0.5 * (a[r] + a[r + 1])
            half = 0.5 * (a[r] - a[r + 1])
            u0 = np.arcsin(min(max((x[r] - mid) / half, -1.0), 1.0))
            if not (-0.5 * np.pi < u0 < 0.5 * np.pi):
                u0 = 0.0
            level = _cond_logpdf_u(u0, r, x, a, theta, mid, half) + np.log(np.random.random())
            lo = -0.5 * np.pi
            hi = 0.5 * np.pi
            for _ in range(200):
                u1 = lo + (hi - lo) * np.random.random()
                if not (-0.5 * np.pi < u1 < 0.5 * np.pi):
                    continue
                if _cond_logpdf_u(u1, r, x, a, theta, mid, half) > level:
                    xn = mid + half * np.sin(u1)
                    if a[r + 1] < xn < a[r]:
                        x[r] = xn
                    break
                if u1 < u0:
                    lo = u1
                else:
                    hi = u1
    return x


# ---------------------------------------------------------------------------
# Gaussian beta ensemble by single-coordinate slice sampling on the chamber


@numba.njit(cache=True)
def _gbe_cond(v, r, x, theta):
    lp = -0.5 * theta * v * v
    for i in range(x.shape[0]):
        if i != r:
            lp += 2.0 * theta * np.log(abs(v - x[i]))
    return lp


@numba.njit(cache=True)
def gbe_slice_chain(x, theta, burn_in, thinning, draws, seed, out):
    """Run one chain on the ordered chamber and store ``draws`` thinned states."""
    np.random.seed(seed)
    m = x.shape[0]
    width = 1.0 / np.sqrt(theta)
    total = burn_in + draws * thinning
    kept = 0
    for sweep in range(total):
        for r in range(m):
            upper = x[r - 1] if r > 0 else np.inf
            lower = x[r + 1] if r + 1 < m else -np.inf
            x0 = x[r]
            level = _gbe_cond(x0, r, x, theta) + np.log(np.random.random())
            lo = x0 - width * np.random.random()
            hi = lo + width
            while lo > lower and _gbe_cond(lo, r, x, theta) > level:
                lo -= width
            while hi < upper and _gbe_cond(hi, r, x, theta) > level:
                hi += width
            if lo < lower:
                lo = lower
            if hi > upper:
                hi = upper
            for _ in range(200):
                v = lo + (hi - lo) * np.random.random()
                if not (lower < v < upper):
                    continue
                if _gbe_cond(v, r, x, theta) > level:
                    x[r] = v
                    break
                if v < x0:
                    lo = v
                else:
                    hi = v
        if sweep >= burn_in and (sweep - burn_in + 1) % thinning == 0:
            out[kept, :] = x
            kept += 1
    return kept
