"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line."""
import itertools
import math
import time

import numpy as np
from scipy.special import hyp1f1

from orbital_beta.asymptotics import (
    RegularSequenceSpec,
    bessel_steepest_m1,
    build_regular_sequence,
    tower_check,
    verify_bessel_asymptotics,
    verify_universality,
)
from orbital_beta.bessel import (
    bessel_contour_m1,
    bessel_mc,
    bessel_n2_closed,
    bessel_quadrature_small,
    bessel_theta0,
    pieri_check_m1,
    recentre_labels,
)
from orbital_beta.cli import main
from orbital_beta.core import InterlacingArray, log_corner_kernel, log_orbital_density, log_orbital_normalization
from orbital_beta.quadrature import orbital_mass
from orbital_beta.sampling import SamplerConfig, make_rng, sample_gbe


def _random_triangle(rng, N):
    top = np.sort(rng.uniform(-3, 3, N))[::-1]
    levels = [top]
    for _ in range(N - 1):
        up = levels[-1]
        levels.append(up[1:] + (up[:-1] - up[1:]) * rng.uniform(0.05, 0.95, up.size - 1))
    return top, levels[:0:-1]


def test_01_normalization(announce):
    t0 = time.perf_counter()
    errs = {}
    for th in (0.5, 1.0, 2.0, 3.7):
        quad = orbital_mass([1.0, 0.0], th)
        errs[(2, th)] = abs(quad / math.exp(log_orbital_normalization([1.0, 0.0], th)) - 1)
    pi_err = abs(orbital_mass([1.0, 0.0], 0.5) / math.pi - 1)
    a3 = [2.0, 0.7, -1.0]
    for th in (0.5, 1.0, 2.0, 3.7):
        errs[(3, th)] = abs(orbital_mass(a3, th) / math.exp(log_orbital_normalization(a3, th)) - 1)
    elapsed = time.perf_counter() - t0
    ok = (all(e < 1e-6 for (n, _), e in errs.items() if n == 2) and pi_err < 1e-6
          and all(e < 1e-3 for (n, _), e in errs.items() if n == 3) and elapsed < 10)
    announce(1, ok, f"max N=2 rel err {max(e for (n, _), e in errs.items() if n == 2):.1e}, "
                    f"pi err {pi_err:.1e}, max N=3 rel err {max(e for (n, _), e in errs.items() if n == 3):.1e}, "
                    f"{elapsed:.2f}s")
    assert ok


def test_02_gibbs_factorization(announce):
    rng = np.random.default_rng(2)
    cases = [(int(rng.integers(2, 7)), float(rng.choice([0.5, 1.0, 2.0]))) for _ in range(100)]
    triangles = [(_random_triangle(rng, N), th) for N, th in cases]
    t0 = time.perf_counter()
    worst = 0.0
    for (top, levels), th in triangles:
        full = log_orbital_density(InterlacingArray(tuple(levels), top=top), th)
        chain = list(levels) + [top]
        steps = sum(log_corner_kernel(chain[k + 1], chain[k], th) for k in range(len(chain) - 1))
        worst = max(worst, abs(full - steps) / max(1.0, abs(full)))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-10 and elapsed < 1
    announce(2, ok, f"100 triangles, max rel diff {worst:.1e}, {elapsed:.2f}s")
    assert ok


def test_03_cross_evaluator(announce):
    t0 = time.perf_counter()
    worst = 0.0
    for a in ([1.0, -0.4], [1.2, 0.3, -0.9]):
        for y, th in itertools.product((-1.5, 0.4, 2.0), (0.6, 1.0, 2.5)):
            ref = bessel_quadrature_small(a, [y], th).real
            worst = max(worst, abs(bessel_contour_m1(a, y, th).real / ref - 1))
    zs = []
    for N in (20, 50):
        a = np.linspace(1.0, -1.0, N) * 2
        est = bessel_mc(a, [0.8], 1.5, rng=make_rng(N), draws=20_000)
        zs.append((est.mean - bessel_contour_m1(a, 0.8, 1.5).real) / est.stderr)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-6 and all(abs(z) <= 3 for z in zs) and elapsed < 120
    announce(3, ok, f"contour vs oracle max rel err {worst:.1e}; MC z-scores "
                    f"{', '.join(f'{z:+.2f}' for z in zs)} at N=20,50; {elapsed:.1f}s")
    assert ok


def test_04_identity_suite(announce):
    rng = np.random.default_rng(4)
    fails = []
    for trial in range(5):
        N = int(rng.integers(2, 7))
        a = np.sort(rng.uniform(-2, 2, N))[::-1]
        th = float(rng.uniform(0.5, 3.0))
        th_c = max(th, 1.5 / N)
        # modulus bound at imaginary arguments
        est = bessel_mc(a, 1j * rng.uniform(-3, 3, 2), th, rng=make_rng(100 + trial), draws=5000)
        if not abs(est.mean) <= 1 + 3 * est.stderr:
            fails.append(("modulus", trial))
        y, r, c = float(rng.uniform(0.2, 2.0)) * rng.choice([-1, 1]), float(rng.uniform(-1, 1)), float(rng.uniform(0.5, 3))
        base = bessel_contour_m1(a, y, th_c)
        if abs(bessel_contour_m1(a + r, y, th_c) - math.exp(r * y) * base) > 1e-8 * abs(base):
            fails.append(("shift", trial))
        if abs(bessel_contour_m1(c * a, y, th_c) - bessel_contour_m1(a, c * y, th_c)) > 1e-8 * abs(base):
            fails.append(("scale", trial))
        zero = [bessel_mc(a, np.zeros(2), th, rng=make_rng(0), draws=10).mean, bessel_theta0(a, np.zeros(N)),
                bessel_quadrature_small(a[:3], np.zeros(min(N, 3)), th)]
        if any(z != 1 for z in zero):
            fails.append(("zero", trial))
        k = min(N, 3)
        yv = rng.uniform(-1.5, 1.5, k)
        vals = [bessel_quadrature_small(a[:k], list(p), th) for p in itertools.permutations(yv)]
        if max(abs(v - vals[0]) for v in vals) > 1e-10 * abs(vals[0]):
            fails.append(("symmetry", trial))
    ok = not fails
    announce(4, ok, f"modulus, shift, scale, zero, symmetry over 5 random inputs; failures {fails or 'none'}")
    assert ok


def test_05_pieri(announce):
    t0 = time.perf_counter()
    det = pieri_check_m1([1.0, 0.0], 1.0, 0.5, 1.0)
    rel = abs(det.rhs / det.lhs - 1)
    mc = pieri_check_m1([1.0, 0.2, -0.5], 1.0, 0.5, 0.5, inner="mc", rng=make_rng(5), draws=20_000)
    z = (mc.rhs - mc.lhs) / mc.rhs_stderr
    elapsed = time.perf_counter() - t0
    ok = rel < 1e-6 and abs(z) <= 3 and elapsed < 60
    announce(5, ok, f"N=2 rel err {rel:.1e}; N=3 MC z-score {z:+.2f}; {elapsed:.1f}s")
    assert ok


def test_06_observable_identity(announce):
    t0 = time.perf_counter()
    a, _, _ = build_regular_sequence(RegularSequenceSpec(), 50)
    zs = {}
    for i, (th, y) in enumerate(itertools.product((0.5, 1.0, 2.0), (0.1, 0.3))):
        est, ref = tower_check(a, y, th, SamplerConfig(seed=60 + i), draws=10_000)
        zs[(th, y)] = (est.mean - ref) / est.stderr
    elapsed = time.perf_counter() - t0
    ok = all(abs(z) <= 3 for z in zs.values()) and elapsed < 60
    announce(6, ok, "z-scores " + ", ".join(f"th={th},y={y}: {z:+.2f}" for (th, y), z in zs.items())
             + f"; {elapsed:.1f}s")
    assert ok


def test_07_macdonald_mehta(announce):
    t0 = time.perf_counter()
    cfg = SamplerConfig()
    zs = {}
    for i, th in enumerate((0.5, 1.0, 2.0)):
        rng = make_rng(70 + i)
        x1 = sample_gbe(1, th, cfg, rng, draws=40_000)[:, 0]
        v1 = np.exp(0.5 * x1)
        zs[(1, th)] = (v1.mean() - math.exp(0.25 / (2 * th))) / (v1.std(ddof=1) / math.sqrt(v1.size))
        x2 = sample_gbe(2, th, cfg, rng, draws=40_000)
        y = (0.6, -0.3)
        v2 = bessel_n2_closed(x2, y, th)
        zs[(2, th)] = (v2.mean() - math.exp(0.45 / (2 * th))) / (v2.std(ddof=1) / math.sqrt(v2.size))
    elapsed = time.perf_counter() - t0
    ok = all(abs(z) <= 3 for z in zs.values()) and elapsed < 60
    announce(7, ok, "z-scores " + ", ".join(f"m={m},th={th}: {z:+.2f}" for (m, th), z in zs.items())
             + f"; {elapsed:.1f}s")
    assert ok


def test_08_asymptotics_ladder(announce):
    t0 = time.perf_counter()
    rep = verify_bessel_asymptotics(RegularSequenceSpec(quantile="two_atom"), [1.0], 1, 1.0, tol=0.02)
    deltas = [r["delta"] for r in rep.rows]
    elapsed = time.perf_counter() - t0
    ok = all(d2 < d1 for d1, d2 in zip(deltas, deltas[1:])) and deltas[-1] < 0.02 and rep.passed and elapsed < 120
    announce(8, ok, "Delta(N) " + ", ".join(f"{r['N']}: {r['delta']:.4f}" for r in rep.rows) + f"; {elapsed:.1f}s")
    assert ok


def test_09_steepest_descent(announce):
    t0 = time.perf_counter()
    errs = []
    for N in (100, 200, 400):
        a, _, _ = build_regular_sequence(RegularSequenceSpec(), N)
        b, _ = recentre_labels(a)
        log_s, _ = bessel_steepest_m1(b, 1.0, 1.0)
        ref = bessel_contour_m1(b, 1.0 / math.sqrt(N), 1.0).real
        errs.append(abs(math.exp(log_s) / ref - 1))
    elapsed = time.perf_counter() - t0
    ok = errs[0] > errs[1] > errs[2] and errs[2] < 0.05 and elapsed < 30
    announce(9, ok, f"rel err {', '.join(f'{e:.1e}' for e in errs)} at N=100,200,400; {elapsed:.1f}s")
    assert ok


def test_10_universality(announce):
    t0 = time.perf_counter()
    spec = RegularSequenceSpec()
    cfg = SamplerConfig(seed=0)
    parts = []
    ok = True
    for th in (0.5, 1.0, 2.0):
        rep = verify_universality(spec, 200, 2, th, 10_000, cfg)
        null = verify_universality(spec, 50, 2, th, 10_000, cfg, null=True)
        main_row = rep.rows[0]
        pmin = min(r["pvalue"] for r in main_row["ks"])
        zmax = max(abs(r["z"]) for r in main_row["moments"])
        parts.append(f"th={th}: {'pass' if rep.passed else 'FAIL'} (min KS p {pmin:.3f}, max |z| {zmax:.2f}), "
                     f"null {'pass' if null.passed else 'FAIL'}")
        ok &= rep.passed and null.passed
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 600
    announce(10, ok, "; ".join(parts) + f"; {elapsed:.0f}s")
    assert ok


def test_11_replay_determinism(announce, tmp_path, capsys):
    runs = {
        "sample": ["sample", "orbital", "--a", "2,1,0,-1", "--theta", "0.5", "--draws", "200"],
        "normalization": ["verify", "normalization", "--N", "3", "--theta", "2"],
        "pieri": ["verify", "pieri", "--a", "1,0.2,-0.5", "--y1", "1", "--y", "0.5", "--theta", "0.5",
                  "--inner", "mc", "--draws", "2000"],
        "asymptotics": ["verify", "asymptotics", "--quantile", "two_atom", "--sizes", "20,40"],
        "asymptotics_mc": ["verify", "asymptotics", "--y", "1,0.5", "--theta", "0.5", "--sizes", "10,20",
                           "--draws", "2000"],
        "universality": ["verify", "universality", "--N", "40", "--m", "2", "--draws", "500"],
        "universality_null": ["verify", "universality", "--null", "--N", "20", "--m", "2", "--draws", "500"],
    }
    outcome = {}
    for name, argv in runs.items():
        out = tmp_path / name
        main(argv + ["--seed", "5", "--out", str(out)])
        capsys.readouterr()
        code = main(["replay", str(out / "manifest.json")])
        text, _ = capsys.readouterr()
        outcome[name] = code == 0 and "DIFFERS" not in text and "identical" in text
    ok = all(outcome.values())
    announce(11, ok, ", ".join(f"{k}: {'identical' if v else 'DIFFERS'}" for k, v in outcome.items()))
    assert ok
