"""Contour evaluator against the quadrature oracle (N <= 3) and against Monte Carlo (larger N)."""
import argparse
import itertools

import numpy as np

from orbital_beta.bessel import bessel_contour_m1, bessel_mc, bessel_quadrature_small
from orbital_beta.sampling import make_rng


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--ys", type=lambda t: [float(v) for v in t.split(",")], default=[-1.5, 0.4, 2.0])
    p.add_argument("--thetas", type=lambda t: [float(v) for v in t.split(",")], default=[0.6, 1.0, 2.5])
    p.add_argument("--mc-sizes", type=lambda t: [int(v) for v in t.split(",")], default=[20, 50, 100])
    p.add_argument("--draws", type=int, default=20_000)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    print("contour vs oracle")
    for a in ([1.0, -0.4], [1.2, 0.3, -0.9]):
        for y, th in itertools.product(args.ys, args.thetas):
            ref = bessel_quadrature_small(a, [y], th).real
            val = bessel_contour_m1(a, y, th).real
            print(f"  N={len(a)} y={y:+.2f} theta={th:.2f}  oracle={ref:.12g}  rel err={abs(val / ref - 1):.1e}")

    print("contour vs Monte Carlo")
    rng = make_rng(args.seed)
    for N, y, th in itertools.product(args.mc_sizes, args.ys, args.thetas):
        a = np.linspace(2.0, -2.0, N)
        est = bessel_mc(a, [y], th, rng=rng, draws=args.draws)
        ref = bessel_contour_m1(a, y, th).real
        print(f"  N={N} y={y:+.2f} theta={th:.2f}  contour={ref:.8g}  z={(est.mean - ref) / est.stderr:+.2f}")


if __name__ == "__main__":
    main()
