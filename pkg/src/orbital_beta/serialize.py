"""JSON and CSV formats for the domain types, reports and run manifests.

Floats are written with ``repr``, the shortest decimal string that parses
back to the same double, so every round trip is exact.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path

import numpy as np

from . import __version__
from .core import FILE_TOLERANCE, DomainError, EmpiricalMeasure, InterlacingArray, OrderedTuple
from .sampling import unpack


class ParseError(ValueError):
    """Malformed input file or value."""


def _floats(seq) -> list:
    return [float(v) for v in np.asarray(seq, dtype=float).reshape(-1)]


def to_json_obj(obj) -> dict:
    if isinstance(obj, OrderedTuple):
        return {"ordered_tuple": {"values": _floats(obj.values), "ordering": obj.ordering}}
    if isinstance(obj, InterlacingArray):
        d = {"levels": [_floats(lv) for lv in obj.levels]}
        if obj.top is not None:
            d["top"] = _floats(obj.top)
        return {"interlacing": d}
    if isinstance(obj, EmpiricalMeasure):
        return {"measure": {"atoms": [{"x": float(x), "w": float(w)} for x, w in zip(obj.x, obj.w)],
                            "support_bound": float(obj.support_bound)}}
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def from_json_obj(d: dict):
    """Inverse of :func:`to_json_obj`; interlacing data is checked with the file tolerance."""
    if not isinstance(d, dict) or len(d) != 1:
        raise ParseError("expected an object with exactly one of ordered_tuple, interlacing, measure")
    (kind, body), = d.items()
    try:
        if kind == "ordered_tuple":
            return OrderedTuple(_num_list(body["values"]), ordering=body.get("ordering", "strict"))
        if kind == "interlacing":
            levels = tuple(_num_list(lv) for lv in body["levels"])
            top = body.get("top")
            return InterlacingArray(levels, top=None if top is None else _num_list(top), rtol=FILE_TOLERANCE)
        if kind == "measure":
            atoms = body["atoms"]
            return EmpiricalMeasure([_num(a["x"]) for a in atoms], [_num(a["w"]) for a in atoms],
                                    _num(body["support_bound"]))
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed {kind} record: {exc}") from exc
    raise ParseError(f"unknown record type {kind!r}")


def _num(v) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"expected a number, got {v!r}")
    return float(v)


def _num_list(v) -> list:
    if not isinstance(v, list):
        raise ParseError(f"expected a list of numbers, got {v!r}")
    return [_num(x) for x in v]


def dumps(obj) -> str:
    return json.dumps(to_json_obj(obj))


def loads(text: str):
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(str(exc)) from exc
    return from_json_obj(d)


def read_json(path) -> object:
    return loads(Path(path).read_text())


# ---------------------------------------------------------------------------
# draws as CSV

CSV_HEADER = ("draw_id", "level", "index", "value")


def draws_to_csv(packed: np.ndarray, m: int, levels: tuple | None = None) -> str:
    """Rows ``draw_id,level,index,value`` for packed draws (levels and indices 1-based).

    ``levels`` restricts output to the given level numbers.
    """
    buf = io.StringIO()
    buf.write(",".join(CSV_HEADER) + "\n")
    keep = set(levels) if levels is not None else None
    for d, row in enumerate(np.asarray(packed, dtype=float)):
        for k, lv in enumerate(unpack(row, m), start=1):
            if keep is not None and k not in keep:
                continue
            for i, v in enumerate(lv, start=1):
                buf.write(f"{d},{k},{i},{float(v)!r}\n")
    return buf.getvalue()


def parse_draws_csv(text: str) -> dict:
    """Map draw_id -> {level: array}, each level in index order."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if tuple(header or ()) != CSV_HEADER:
        raise ParseError(f"expected header {','.join(CSV_HEADER)}")
    out: dict = {}
    for lineno, rec in enumerate(reader, start=2):
        if len(rec) != 4:
            raise ParseError(f"line {lineno}: expected 4 fields")
        try:
            d, k, i, v = int(rec[0]), int(rec[1]), int(rec[2]), float(rec[3])
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc
        out.setdefault(d, {}).setdefault(k, {})[i] = v
    return {d: {k: np.array([lv[i] for i in sorted(lv)]) for k, lv in sorted(levels.items())}
            for d, levels in sorted(out.items())}


def draws_to_arrays(parsed: dict, top=None) -> list:
    """InterlacingArray per draw from :func:`parse_draws_csv` output (levels must start at 1)."""
    arrays = []
    for d, levels in parsed.items():
        ks = sorted(levels)
        if ks != list(range(1, len(ks) + 1)):
            raise DomainError(f"draw {d} does not hold levels 1..m", reason="level_size", indices=[d])
        arrays.append(InterlacingArray(tuple(levels[k] for k in ks), top=top, rtol=FILE_TOLERANCE))
    return arrays


# ---------------------------------------------------------------------------
# reports and manifests


def report_json(report) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"


def table_csv(rows: list) -> str:
    """Plot-ready table with columns N, observed, predicted, delta, stderr."""
    buf = io.StringIO()
    buf.write("N,observed,predicted,delta,stderr\n")
    for r in rows:
        buf.write(",".join(repr(r[c]) if isinstance(r[c], float) else str(r[c])
                           for c in ("N", "observed", "predicted", "delta", "stderr")) + "\n")
    return buf.getvalue()


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(path, argv: list, config: dict, outputs: list, runtime: float) -> dict:
    """Manifest echoing the full argument list, resolved config, library version and output digests."""
    outs = {Path(p).name: sha256(p) for p in outputs}
    manifest = {"version": __version__, "argv": list(argv), "config": config,
                "outputs": outs, "runtime_seconds": runtime}
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def read_manifest(path) -> dict:
    try:
        m = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read manifest: {exc}") from exc
    for key in ("version", "argv", "config", "outputs"):
        if key not in m:
            raise ParseError(f"manifest lacks {key!r}")
    return m
