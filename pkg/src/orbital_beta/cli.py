"""Command-line entry point: density, sample, bessel, verify and replay.

Exit codes: 0 ok, 1 parse error, 2 domain error, 3 precondition not met,
4 a declared check failed.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import serialize as ser
from .asymptotics import (
    QUANTILES,
    ExperimentReport,
    RegularSequenceSpec,
    bessel_steepest_m1,
    verify_bessel_asymptotics,
    verify_universality,
)
from .bessel import (
    bessel_contour_m1,
    bessel_mc,
    bessel_quadrature_small,
    bessel_theta0,
    pieri_check_m1,
    recentre_labels,
)
from .core import (
    DomainError,
    InterlacingArray,
    NumericError,
    OrderedTuple,
    PreconditionError,
    log_corner_kernel,
    log_gbe_corners_density,
    log_gbe_density,
    log_orbital_density,
    log_orbital_normalization,
)
from .quadrature import orbital_mass
from .sampling import (
    PROPOSALS,
    SamplerConfig,
    make_rng,
    sample_corner_step,
    sample_gbe,
    sample_gbe_corners,
    sample_orbital_levels,
)

EXIT_OK, EXIT_PARSE, EXIT_DOMAIN, EXIT_PRECONDITION, EXIT_CHECK = 0, 1, 2, 3, 4
SEED_ENV = "ORBITAL_BETA_SEED"
METHODS = ("oracle", "mc", "contour", "steepest", "theta0")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(json.dumps({"error": "parse", "reason": message}), file=sys.stderr)
        raise SystemExit(EXIT_PARSE)


def _floats(text: str) -> list:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _complexes(text: str) -> list:
    try:
        return [complex(t.replace(" ", "")) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _ints(text: str) -> list:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(EXIT_PARSE)


def _fmt(v) -> str:
    if isinstance(v, complex):
        return repr(v.real) if v.imag == 0 else f"{v.real!r}{v.imag:+r}j"
    return repr(float(v))


def _sampler(args) -> SamplerConfig:
    return SamplerConfig(seed=args.seed, chains=args.chains, burn_in=args.burn_in,
                         thinning=args.thinning, proposal=args.proposal)


def _add_sampler_args(p):
    p.add_argument("--seed", type=int, default=None, help=f"default: ${SEED_ENV} or 0")
    p.add_argument("--chains", type=int, default=1)
    p.add_argument("--burn-in", type=int, default=500)
    p.add_argument("--thinning", type=int, default=10)
    p.add_argument("--proposal", choices=PROPOSALS, default="dixon_anderson")


# ---------------------------------------------------------------------------
# density


def _density_inputs(args) -> list:
    path = Path(args.input)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ser.ParseError(str(exc)) from exc
    if path.suffix == ".csv":
        top = None if args.top is None else OrderedTuple(args.top).values
        return ser.draws_to_arrays(ser.parse_draws_csv(text), top=top)
    return [ser.loads(text)]


def cmd_density(args) -> int:
    for obj in _density_inputs(args):
        if args.kind == "orbital":
            if not isinstance(obj, InterlacingArray):
                raise ser.ParseError("orbital density needs an interlacing record with a top level")
            val = log_orbital_density(obj, args.theta)
        elif args.kind == "gbe":
            x = obj.levels[-1] if isinstance(obj, InterlacingArray) else obj.values
            val = log_gbe_density(OrderedTuple(x, ordering="weak"), args.theta)
        elif args.kind == "gbe-corners":
            if isinstance(obj, OrderedTuple):
                obj = InterlacingArray((obj.values,)) if obj.N == 1 else None
            if obj is None:
                raise ser.ParseError("gbe-corners density needs an interlacing record")
            val = log_gbe_corners_density(obj, args.theta)
        else:  # kernel: level m given the top level
            if not isinstance(obj, InterlacingArray) or obj.top is None:
                raise ser.ParseError("kernel density needs an interlacing record with a top level")
            val = log_corner_kernel(obj.top, obj.levels[-1], args.theta)
        print(_fmt(val))
    return EXIT_OK


# ---------------------------------------------------------------------------
# sample


def cmd_sample(args) -> int:
    cfg = _sampler(args)
    rng = make_rng(cfg.seed)
    theta = args.theta
    if args.kind == "orbital":
        a = OrderedTuple(args.a)
        m = args.m if args.m is not None else a.N - 1
        packed = sample_orbital_levels(a, m, theta, cfg, rng, draws=args.draws, path=args.path)
        text = ser.draws_to_csv(packed, m)
    elif args.kind == "corner-step":
        a = OrderedTuple(args.a)
        n = a.N - 1
        x = sample_corner_step(a, theta, cfg, rng, size=args.draws)
        packed = np.zeros((args.draws, n * (n + 1) // 2))
        packed[:, n * (n - 1) // 2:] = x
        text = ser.draws_to_csv(packed, n, levels=(n,))
    elif args.kind == "gbe":
        m = args.m or 1
        x = sample_gbe(m, theta, cfg, rng, draws=args.draws)
        packed = np.zeros((args.draws, m * (m + 1) // 2))
        packed[:, m * (m - 1) // 2:] = x
        text = ser.draws_to_csv(packed, m, levels=(m,))
    else:
        m = args.m or 1
        text = ser.draws_to_csv(sample_gbe_corners(m, theta, cfg, rng, draws=args.draws), m)
    return _emit(args, text, "draws.csv", {"sampler": cfg.to_dict(), "layout": {"chains": cfg.chains}})


# ---------------------------------------------------------------------------
# bessel


def _bessel_value(method: str, a, y: list, theta: float, args):
    """(value, stderr) for one method."""
    if method == "theta0":
        return bessel_theta0(a, y), 0.0
    a = OrderedTuple(a)
    if method == "oracle":
        return bessel_quadrature_small(a, y, theta), 0.0
    if method == "mc":
        est = bessel_mc(a, y, theta, _sampler(args), make_rng(args.seed), draws=args.draws)
        return est.mean, est.stderr
    if len(y) > 1 and any(v != 0 for v in y[1:]):
        raise PreconditionError(f"{method} handles one nonzero argument")
    if method == "contour":
        return bessel_contour_m1(a, y[0], theta), 0.0
    # steepest: the large-N formula evaluates B_a(y / sqrt N); rescale the argument and recentre
    yv = y[0]
    if yv.imag != 0 or yv.real <= 0:
        raise PreconditionError("steepest descent needs real y > 0")
    b, r = recentre_labels(a)
    logv, _ = bessel_steepest_m1(b, yv.real * math.sqrt(a.N), theta)
    return complex(math.exp(logv + r * yv.real)), 0.0


def cmd_bessel(args) -> int:
    y = args.y
    methods = args.check if args.check else [args.method]
    results = {}
    for meth in methods:
        results[meth] = _bessel_value(meth, args.a, y, args.theta, args)
    for meth, (val, se) in results.items():
        line = f"{meth} {_fmt(val)}"
        if meth == "mc":
            line += f" stderr={se!r}"
        print(line)
    if len(methods) < 2:
        return EXIT_OK
    ok = True
    ref_m = methods[0]
    for meth in methods[1:]:
        (v0, s0), (v1, s1) = results[ref_m], results[meth]
        diff = abs(complex(v0) - complex(v1))
        se = math.hypot(s0, s1)
        tol = 3 * se if se > 0 else args.rtol * max(abs(v0), abs(v1))
        good = diff <= tol
        ok &= good
        print(f"delta {ref_m},{meth} {diff!r} tol={tol!r} {'ok' if good else 'FAIL'}")
    return EXIT_OK if ok else EXIT_CHECK


# ---------------------------------------------------------------------------
# verify


def _spec_from_args(args) -> RegularSequenceSpec:
    if args.measure:
        mu = ser.read_json(args.measure)
        return RegularSequenceSpec(quantile=None, measure=mu, sizes=tuple(args.sizes))
    return RegularSequenceSpec(quantile=args.quantile, sizes=tuple(args.sizes))


def _verify_rows(report) -> list:
    if report.name == "bessel_asymptotics":
        return report.rows
    rows = []
    for r in report.rows:
        for mom in r["moments"]:
            rows.append({"N": report.params["N"], "observed": mom["observed"], "predicted": mom["predicted"],
                         "delta": mom["delta"], "stderr": mom["stderr"]})
    return rows


def cmd_verify(args) -> int:
    kind = args.what
    cfg = _sampler(args)
    if kind == "asymptotics":
        rep = verify_bessel_asymptotics(_spec_from_args(args), args.y, len(args.y), args.theta, cfg,
                                        tol=args.tol, draws=args.draws)
        rows = _verify_rows(rep)
    elif kind == "universality":
        spec = _spec_from_args(args)
        rep = verify_universality(spec, args.N, args.m, args.theta, args.draws, cfg, null=args.null)
        rows = _verify_rows(rep)
    elif kind == "pieri":
        res = pieri_check_m1(args.a, args.y1, args.y[0], args.theta, inner=args.inner, cfg=cfg,
                             rng=make_rng(cfg.seed), draws=args.draws)
        delta = abs(res.lhs - res.rhs)
        tol = 3 * res.rhs_stderr if res.rhs_stderr > 0 else args.rtol * abs(res.lhs)
        rows = [{"N": len(args.a), "observed": res.rhs, "predicted": res.lhs, "delta": delta,
                 "stderr": res.rhs_stderr}]
        rep = ExperimentReport("pieri", {"a": list(args.a), "y1": args.y1, "y": args.y[0], "theta": args.theta,
                                         "inner": args.inner, "draws": args.draws, "sampler": cfg.to_dict()},
                               rows=rows, statistics={"tolerance": tol}, passed=delta <= tol)
    else:
        a = args.a if args.a else [float(args.N - 1 - i) for i in range(args.N)]
        quad = orbital_mass(a, args.theta)
        closed = math.exp(log_orbital_normalization(a, args.theta))
        delta = abs(quad / closed - 1.0)
        tol = 1e-6 if len(a) == 2 else 1e-3
        rows = [{"N": len(a), "observed": quad, "predicted": closed, "delta": delta, "stderr": 0.0}]
        rep = ExperimentReport("normalization", {"a": list(a), "theta": args.theta}, rows=rows,
                               statistics={"tolerance": tol}, passed=delta < tol)
    print(json.dumps({"experiment": rep.name, "passed": bool(rep.passed)}))
    files = {"report.json": ser.report_json(rep), "report.csv": ser.table_csv(rows)}
    code = _emit_many(args, files, {"sampler": cfg.to_dict()})
    if code != EXIT_OK:
        return code
    return EXIT_OK if rep.passed else EXIT_CHECK


# ---------------------------------------------------------------------------
# outputs, manifests and replay


def _emit(args, text: str, name: str, config: dict) -> int:
    if args.out is None:
        sys.stdout.write(text)
        return EXIT_OK
    return _emit_many(args, {name: text}, config)


def _emit_many(args, files: dict, config: dict) -> int:
    """Write ``files`` into the directory ``args.out`` together with manifest.json."""
    if args.out is None:
        return EXIT_OK
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, text in files.items():
        (out / name).write_text(text)
        paths.append(out / name)
    argv = list(args._argv)
    i = argv.index("--out")
    argv = argv[:i] + argv[i + 2:]
    # the resolved seed makes the manifest independent of the environment
    if "--seed" not in argv and hasattr(args, "seed"):
        argv += ["--seed", str(args.seed)]
    ser.write_manifest(out / "manifest.json", argv, config, paths, time.perf_counter() - args._t0)
    return EXIT_OK


def cmd_replay(args) -> int:
    man = ser.read_manifest(args.manifest)
    if man["version"] != __version__:
        print(json.dumps({"warning": "version differs", "manifest": man["version"], "library": __version__}),
              file=sys.stderr)
    with tempfile.TemporaryDirectory() as tmp:
        target = Path(tmp) / "run"
        code = main(list(man["argv"]) + ["--out", str(target)])
        if code not in (EXIT_OK, EXIT_CHECK):
            return code
        same = True
        for name, digest in sorted(man["outputs"].items()):
            p = target / name
            match = p.exists() and ser.sha256(p) == digest
            same &= match
            print(f"{name} {'identical' if match else 'DIFFERS'}")
    return EXIT_OK if same else EXIT_CHECK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="orbital-beta", description="Orbital beta processes, Gaussian beta corners and Bessel functions.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("density", help="log-density of a JSON record or every draw of a CSV file")
    d.add_argument("kind", choices=("orbital", "gbe", "gbe-corners", "kernel"))
    d.add_argument("--input", required=True)
    d.add_argument("--theta", type=float, required=True)
    d.add_argument("--top", type=_floats, default=None, help="top level for CSV draws")
    d.set_defaults(func=cmd_density)

    s = sub.add_parser("sample", help="draws as CSV rows draw_id,level,index,value")
    s.add_argument("kind", choices=("orbital", "corner-step", "gbe", "gbe-corners"))
    s.add_argument("--a", type=_floats)
    s.add_argument("--m", type=int)
    s.add_argument("--theta", type=float, required=True)
    s.add_argument("--draws", type=int, default=1000)
    s.add_argument("--path", choices=("kernel", "uniform"), default="kernel")
    s.add_argument("--out", help="output directory (default: CSV to stdout)")
    _add_sampler_args(s)
    s.set_defaults(func=cmd_sample)

    b = sub.add_parser("bessel", help="evaluate B_a(y, 0, ..., 0)")
    b.add_argument("--method", choices=METHODS, default="oracle")
    b.add_argument("--check", type=lambda t: [x for x in t.split(",") if x], default=None,
                   help="comma-separated methods to compare")
    b.add_argument("--a", type=_floats, required=True)
    b.add_argument("--y", type=_complexes, required=True)
    b.add_argument("--theta", type=float, default=1.0)
    b.add_argument("--draws", type=int, default=20000)
    b.add_argument("--rtol", type=float, default=1e-6)
    _add_sampler_args(b)
    b.set_defaults(func=cmd_bessel)

    v = sub.add_parser("verify", help="run an experiment and write report.json, report.csv, manifest.json")
    v.add_argument("what", choices=("asymptotics", "universality", "pieri", "normalization"))
    v.add_argument("--theta", type=float, default=1.0)
    v.add_argument("--quantile", choices=tuple(QUANTILES), default="uniform")
    v.add_argument("--measure", help="JSON measure record used instead of --quantile")
    v.add_argument("--sizes", type=_ints, default=[50, 100, 200, 400])
    v.add_argument("--y", type=_floats, default=[1.0])
    v.add_argument("--y1", type=float, default=1.0)
    v.add_argument("--tol", type=float, default=0.02)
    v.add_argument("--N", type=int, default=2)
    v.add_argument("--m", type=int, default=1)
    v.add_argument("--a", type=_floats)
    v.add_argument("--inner", choices=("auto", "oracle", "mc"), default="auto")
    v.add_argument("--draws", type=int, default=10000)
    v.add_argument("--null", action="store_true", help="universality with a Gaussian top level")
    v.add_argument("--rtol", type=float, default=1e-6)
    v.add_argument("--out", help="output directory")
    _add_sampler_args(v)
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("replay", help="rerun from a manifest and compare output digests")
    r.add_argument("manifest")
    r.set_defaults(func=cmd_replay)
    return p


def _error(kind: str, reason: str, message: str, indices=None):
    rec = {"error": kind, "reason": reason, "message": message}
    if indices:
        rec["indices"] = indices
    print(json.dumps(rec), file=sys.stderr)


def main(argv: list | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args._argv = argv
    args._t0 = time.perf_counter()
    if hasattr(args, "seed") and args.seed is None:
        args.seed = _default_seed()
    try:
        return args.func(args)
    except ser.ParseError as exc:
        _error("parse", "parse", str(exc))
        return EXIT_PARSE
    except PreconditionError as exc:
        _error("precondition", "precondition", str(exc))
        return EXIT_PRECONDITION
    except DomainError as exc:
        _error("domain", exc.reason, str(exc), exc.indices)
        return EXIT_DOMAIN
    except NumericError as exc:
        _error("numeric", "numeric", str(exc))
        return EXIT_CHECK
    except (ValueError, TypeError) as exc:
        _error("parse", "invalid_argument", str(exc))
        return EXIT_PARSE


if __name__ == "__main__":
    raise SystemExit(main())
