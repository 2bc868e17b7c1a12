"""Centred log-Bessel deviation Delta(N) along a size ladder, with the steepest-descent column for m = 1."""
import argparse
import json
import time

from orbital_beta.asymptotics import QUANTILES, RegularSequenceSpec, verify_bessel_asymptotics
from orbital_beta.sampling import SamplerConfig
from orbital_beta.serialize import report_json


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--quantile", choices=tuple(QUANTILES), default="two_atom")
    p.add_argument("--sizes", type=lambda t: [int(v) for v in t.split(",")], default=[50, 100, 200, 400, 800])
    p.add_argument("--y", type=lambda t: [float(v) for v in t.split(",")], default=[1.0])
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=0.02)
    p.add_argument("--draws", type=int, default=20_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the report JSON here")
    args = p.parse_args()

    spec = RegularSequenceSpec(quantile=args.quantile, sizes=tuple(args.sizes))
    t0 = time.perf_counter()
    rep = verify_bessel_asymptotics(spec, args.y, len(args.y), args.theta, SamplerConfig(seed=args.seed),
                                    tol=args.tol, draws=args.draws)
    print(f"{'N':>6} {'observed':>12} {'predicted':>12} {'delta':>10} {'stderr':>10} {'steepest':>12}")
    for r in rep.rows:
        steep = f"{r['steepest']:12.6f}" if "steepest" in r else " " * 12
        print(f"{r['N']:>6} {r['observed']:12.6f} {r['predicted']:12.6f} {r['delta']:10.2e} {r['stderr']:10.1e} {steep}")
    print(json.dumps({"passed": rep.passed, "seconds": round(time.perf_counter() - t0, 2)}))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(report_json(rep))


if __name__ == "__main__":
    main()
