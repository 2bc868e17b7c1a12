"""Relative error of the steepest-descent approximation against the contour integral as N grows."""
import argparse
import math

from orbital_beta.asymptotics import QUANTILES, RegularSequenceSpec, bessel_steepest_m1, build_regular_sequence
from orbital_beta.bessel import bessel_contour_m1, recentre_labels


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--quantile", choices=tuple(QUANTILES), default="uniform")
    p.add_argument("--sizes", type=lambda t: [int(v) for v in t.split(",")], default=[25, 50, 100, 200, 400, 800, 1600])
    p.add_argument("--y", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=1.0)
    args = p.parse_args()

    spec = RegularSequenceSpec(quantile=args.quantile, sizes=tuple(args.sizes))
    print(f"{'N':>6} {'log steepest':>14} {'log contour':>14} {'rel err':>10} {'z0':>10}")
    for N in spec.sizes:
        a, _, _ = build_regular_sequence(spec, N)
        b, _ = recentre_labels(a)
        log_s, diag = bessel_steepest_m1(b, args.y, args.theta)
        log_c = math.log(bessel_contour_m1(b, args.y / math.sqrt(N), args.theta).real)
        print(f"{N:>6} {log_s:14.8f} {log_c:14.8f} {abs(math.expm1(log_s - log_c)):10.2e} {diag.z0:10.4f}")


if __name__ == "__main__":
    main()
