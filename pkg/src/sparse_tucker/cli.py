"""Command-line front end: ``generate``, ``recover`` and ``bench``.

Exit codes: 0 success, 1 I/O failure, 2 invalid arguments,
3 size-guard refusal, 4 numerical failure.

Bench CSV columns (schema version 1), one row per (J, method), rows in
ascending J then method name::

    schema_version,J,I,method,replicates,support_size,seed,
    err_mean,err_std,time_mean,time_std,f1_mean

``J`` and ``I`` are the per-mode sizes (the sweep uses equal sizes on every
mode). With ``--deterministic`` (the default) the two time columns are left
empty so the file depends only on the seed and flags; pass
``--timings-out`` to get the timings in a separate CSV, or
``--no-deterministic`` to fill them in place.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .exceptions import NumericalError, SizeGuardError
from .fista import RecoveryConfig
from .pipeline import METHODS, recover
from .synthetic import ExperimentSpec, load_instance, make_instance, run_experiment, save_instance, score

SCHEMA_VERSION = 1
CSV_COLUMNS = (
    "schema_version", "J", "I", "method", "replicates", "support_size", "seed",
    "err_mean", "err_std", "time_mean", "time_std", "f1_mean",
)
TIMING_COLUMNS = ("J", "I", "method", "replicate", "wall_time_s")

EXIT_OK, EXIT_IO, EXIT_ARGS, EXIT_GUARD, EXIT_NUMERIC = 0, 1, 2, 3, 4

_CFG_KEYS = {f.name for f in fields(RecoveryConfig)} | {"lambda"}
_SPEC_KEYS = {f.name for f in fields(ExperimentSpec)}


class UsageError(ValueError):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _name_list(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def load_config(path: Optional[str]) -> tuple[dict, dict]:
    """Split a flat JSON file into (recovery keys, experiment keys)."""
    if path is None:
        return {}, {}
    values = json.loads(Path(path).read_text())
    if not isinstance(values, dict):
        raise UsageError("config file must hold a flat JSON object")
    unknown = set(values) - _CFG_KEYS - _SPEC_KEYS
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    cfg = {k: v for k, v in values.items() if k in _CFG_KEYS}
    spec = {k: v for k, v in values.items() if k in _SPEC_KEYS}
    return cfg, spec


def _recovery_config(args, file_values: dict) -> RecoveryConfig:
    values = dict(file_values)
    if "lambda" in values:
        values["lam"] = values.pop("lambda")
    for key in ("lam", "tol", "R", "max_iters"):
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    return RecoveryConfig.from_dict(values)


def _spec(args, file_values: dict, **overrides) -> ExperimentSpec:
    values = dict(file_values)
    for flag, key in (("J", "J"), ("I", "I"), ("k", "support_size"), ("seed", "seed"),
                      ("replicates", "replicates"), ("convention", "convention")):
        v = getattr(args, flag, None)
        if v is not None:
            values[key] = v
    values.update(overrides)
    return ExperimentSpec(**values)


def cmd_generate(args) -> int:
    cfg_values, spec_values = load_config(args.config)
    spec = _spec(args, spec_values)
    inst = make_instance(spec, args.replicate)
    for path in save_instance(inst, args.out):
        print(path)
    return EXIT_OK


def cmd_recover(args) -> int:
    cfg_values, _ = load_config(args.config)
    cfg = _recovery_config(args, cfg_values)
    inst = load_instance(args.instance)
    result = recover(inst.Y, inst.factors, cfg, method=args.method)
    report = {
        "schema_version": SCHEMA_VERSION,
        "method": args.method,
        "config": cfg.to_dict(),
        "stage_times": dict(result.wall_times),
        "iterations": dict(result.iterations),
        "support": result.support.to_list(),
    }
    if inst.X is not None:
        report["metrics"] = asdict(score(inst, result, args.method))
    else:
        report["metrics"] = {"method": args.method, "support_size": len(result.support),
                             "wall_time_s": result.total_time}
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def bench_sizes(J_list: Sequence[int], ratio: float, I_list: Optional[Sequence[int]]):
    """``(J, I)`` pairs; ``I`` rounds ``ratio * J`` half up unless given."""
    if I_list is not None:
        if len(I_list) != len(J_list):
            raise UsageError("--I needs one value per --J-list entry")
        return list(zip(J_list, I_list))
    if not 0 < ratio <= 1:
        raise UsageError("--ratio must lie in (0, 1]")
    return [(J, max(1, math.floor(ratio * J + 0.5))) for J in J_list]


def _stats(values) -> tuple[float, float]:
    a = np.asarray(values, dtype=float)
    return float(a.mean()), float(a.std())


def cmd_bench(args) -> int:
    cfg_values, spec_values = load_config(args.config)
    cfg = _recovery_config(args, cfg_values)
    methods = sorted(args.methods)
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise UsageError(f"unknown method(s): {bad}; choose from {list(METHODS)}")
    pairs = sorted(bench_sizes(sorted(set(args.J_list)), args.ratio, args.I))
    specs = [_spec(args, spec_values, J=J, I=I) for J, I in pairs]

    out = open(args.out, "w", newline="") if args.out else sys.stdout
    timing = open(args.timings_out, "w", newline="") if args.timings_out else None
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        twriter = None
        if timing is not None:
            twriter = csv.writer(timing, lineterminator="\n")
            twriter.writerow(TIMING_COLUMNS)
        for spec, (J, I) in zip(specs, pairs):
            rows = run_experiment(spec, methods, cfg, workers=args.threads)
            rows.sort(key=lambda r: (r.method, r.replicate))
            for method in methods:
                cell = [r for r in rows if r.method == method]
                err_mean, err_std = _stats([r.frob_error for r in cell])
                time_mean, time_std = _stats([r.wall_time_s for r in cell])
                f1_mean, _ = _stats([r.support_f1 for r in cell])
                if args.deterministic:
                    time_mean = time_std = ""
                writer.writerow([SCHEMA_VERSION, J, I, method, spec.replicates,
                                 spec.support_size, spec.seed, err_mean, err_std,
                                 time_mean, time_std, f1_mean])
                if twriter is not None:
                    for r in cell:
                        twriter.writerow([J, I, method, r.replicate, r.wall_time_s])
            out.flush()
            if timing is not None:
                timing.flush()
    finally:
        if out is not sys.stdout:
            out.close()
        if timing is not None:
            timing.close()
    return EXIT_OK


def read_bench_csv(path) -> list[dict]:
    """Parse a bench CSV back into typed rows."""
    ints = {"schema_version", "J", "I", "replicates", "support_size", "seed"}
    rows = []
    with open(path, newline="") as fh:
        for raw in csv.DictReader(fh):
            row = {}
            for key, value in raw.items():
                if key == "method":
                    row[key] = value
                elif key in ints:
                    row[key] = int(value)
                else:
                    row[key] = float(value) if value != "" else None
            rows.append(row)
    return rows


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat JSON file of RecoveryConfig/ExperimentSpec keys")
    p.add_argument("--seed", type=int, help="experiment seed")
    p.add_argument("--deterministic", action=argparse.BooleanOptionalAction, default=True,
                   help="keep outputs byte-stable (default on)")
    p.add_argument("--threads", type=int, default=1, help="worker processes for replicates")


def _add_recovery_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lam", type=float, help="lambda (gradient step is 1/L, threshold 1/(lambda L))")
    p.add_argument("--tol", type=float)
    p.add_argument("--R", type=float, help="pruning window; 'inf' disables pruning")
    p.add_argument("--max-iters", dest="max_iters", type=int)


def _add_spec_flags(p: argparse.ArgumentParser, sizes: bool = True) -> None:
    if sizes:
        p.add_argument("--J", type=_int_list, help="mode sizes of the core, e.g. 8,8,8 or 8")
        p.add_argument("--I", type=_int_list, help="mode sizes of the observation")
    p.add_argument("--k", type=int, help="support size")
    p.add_argument("--convention", choices=("stddev", "variance"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparse-tucker",
                                     description="Sparse Tucker core recovery tools")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic instance as DTF-1 files")
    _add_common(g)
    _add_spec_flags(g)
    g.add_argument("--replicate", type=int, default=0)
    g.add_argument("-o", "--out", required=True, help="output directory")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("recover", help="recover the core of a stored instance")
    _add_common(r)
    _add_recovery_flags(r)
    r.add_argument("instance", help="instance directory written by generate")
    r.add_argument("--method", choices=METHODS, default="four_stage")
    r.add_argument("-o", "--out", help="report path (default stdout)")
    r.set_defaults(func=cmd_recover)

    b = sub.add_parser("bench", help="sweep J and tabulate error, time and support F1")
    _add_common(b)
    _add_recovery_flags(b)
    _add_spec_flags(b, sizes=False)
    b.add_argument("--J-list", dest="J_list", type=_int_list, required=True)
    b.add_argument("--I", type=_int_list, help="explicit I per J (overrides --ratio)")
    b.add_argument("--ratio", type=float, default=0.68)
    b.add_argument("--replicates", type=int, default=20)
    b.add_argument("--methods", type=_name_list, default=["fista", "four_stage"])
    b.add_argument("-o", "--out", help="CSV path (default stdout)")
    b.add_argument("--timings-out", help="per-replicate wall times CSV")
    b.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "J", None) is not None and isinstance(args.J, list):
        args.J = tuple(args.J)
    if args.command != "bench" and getattr(args, "I", None) is not None:
        args.I = tuple(args.I)
    if args.threads < 1:
        parser.error("--threads must be positive")
    try:
        return args.func(args)
    except SizeGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, TypeError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
