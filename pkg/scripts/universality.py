"""Bottom levels of the orbital process against the Gaussian beta corners process, for several theta."""
import argparse
import json
import time

from orbital_beta.asymptotics import QUANTILES, RegularSequenceSpec, verify_universality
from orbital_beta.sampling import SamplerConfig


def summarize(rep) -> dict:
    row = rep.rows[0]
    return {"passed": rep.passed,
            "ks_pvalues": [round(r["pvalue"], 4) for r in row["ks"]],
            "moment_z": [round(r["z"], 2) for r in row["moments"]]}


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--N", type=int, default=200)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--thetas", type=lambda t: [float(v) for v in t.split(",")], default=[0.5, 1.0, 2.0])
    p.add_argument("--draws", type=int, default=10_000)
    p.add_argument("--quantile", choices=tuple(QUANTILES), default="uniform")
    p.add_argument("--null-N", type=int, default=50, help="rank of the Gaussian top level in the null test")
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    spec = RegularSequenceSpec(quantile=args.quantile)
    cfg = SamplerConfig(seed=args.seed)
    for th in args.thetas:
        t0 = time.perf_counter()
        rep = verify_universality(spec, args.N, args.m, th, args.draws, cfg)
        null = verify_universality(spec, args.null_N, args.m, th, args.draws, cfg, null=True)
        print(json.dumps({"theta": th, "main": summarize(rep), "null": summarize(null),
                          "seconds": round(time.perf_counter() - t0, 1)}))


if __name__ == "__main__":
    main()
