"""Command-line front end.

Exit codes: 0 success, 2 usage or parse error, 3 numerical failure,
4 model precondition failure.
"""

from __future__ import annotations

import argparse
import itertools
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import gam as gam_mod
from . import pkan as pkan_mod
from .envelope import build_envelope, concave_envelope
from .errors import DimensionMismatch, NotMonotone, OutOfDomain, ParseError, PkanRelaxError
from .jsonio import csv_text, dumps, fmt, write_atomic
from .oracles import gam_grid_min, multistart_min
from .poly import DEFAULT_TOL, Interval, Polynomial
from .solver import DEFAULT_FEAS_TOL, DEFAULT_MAX_ITERS, relative_gap, solve_relaxation

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_NUMERIC = 3
EXIT_MODEL = 4

GAP_HEADER = (
    "index",
    "layers",
    "width",
    "inputs",
    "degree",
    "seed",
    "f_relax",
    "f_upper",
    "relative_gap",
    "iterations",
    "status",
)
TIMING_HEADER = ("index", "construct_seconds", "solve_seconds")


class UsageError(Exception):
    pass


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, (ParseError, UsageError, OSError)):
        return EXIT_PARSE
    if isinstance(exc, (NotMonotone, DimensionMismatch, OutOfDomain)):
        return EXIT_MODEL
    return EXIT_NUMERIC


def _positive(name):
    def conv(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number") from None
        if not (v > 0 and math.isfinite(v)):
            raise argparse.ArgumentTypeError(f"{name} must be positive")
        return v

    return conv


def _check_out(path: str | None) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    parent = p.parent if str(p.parent) else Path(".")
    if parent.exists() and not parent.is_dir():
        raise UsageError(f"output parent {parent} is not a directory")
    if p.is_dir():
        raise UsageError(f"output path {p} is a directory")
    return p


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


# --------------------------------------------------------------------------
# envelope


def cmd_envelope(args) -> int:
    p = Polynomial.from_text(args.coeffs)
    lo, hi = args.interval
    if not lo < hi:
        raise UsageError(f"interval needs LO < HI, got [{lo}, {hi}]")
    out = _check_out(args.out)
    iv = Interval(lo, hi)
    env = build_envelope(p, iv, args.tol)
    cav = concave_envelope(p, iv, args.tol)
    bts = env.bitangents
    if not bts:
        print("0 bitangents; envelope = p")
    else:
        print(f"{len(bts)} bitangent{'s' if len(bts) != 1 else ''}")
        for b in bts:
            print(
                f"slope {b.slope:.6f} intercept {b.intercept:.6f} "
                f"touches {b.left_touch:.6f} {b.right_touch:.6f}"
            )
    doc = {
        "interval": [lo, hi],
        "coeffs": list(p.coeffs),
        "bitangents": [
            {"slope": b.slope, "intercept": b.intercept, "touch": [b.left_touch, b.right_touch]} for b in bts
        ],
        "convex": env.to_dict(),
        "concave": cav.to_dict(),
    }
    if out is not None:
        write_atomic(out, dumps(doc) + "\n")
        if args.samples:
            xs = np.linspace(lo, hi, args.samples)
            rows = zip(xs, p(xs), env.evaluate(xs), cav.evaluate(xs))
            write_atomic(out.with_suffix(".csv"), csv_text(("x", "p", "env", "concave_env"), rows))
    return EXIT_OK


# --------------------------------------------------------------------------
# pkan


def _grid(args):
    return list(itertools.product(args.layers, args.width, args.inputs, args.degree))


def _instance_name(arch, seed) -> str:
    L, w, n, d = arch
    return f"pkan_L{L}_w{w}_n{n}_d{d}_s{seed}.json"


def cmd_pkan_gen(args) -> int:
    out = Path(args.out or ".")
    if out.exists() and not out.is_dir():
        raise UsageError(f"{out} is not a directory")
    out.mkdir(parents=True, exist_ok=True)
    count = 0
    for arch in _grid(args):
        for k in range(args.count):
            seed = args.seed + k
            net = pkan_mod.generate_random(*arch, seed)
            write_atomic(out / _instance_name(arch, seed), pkan_mod.serialize(net))
            count += 1
    print(f"wrote {count} instances to {out}")
    return EXIT_OK


def cmd_pkan_relax(args) -> int:
    out = _check_out(args.out)
    net = pkan_mod.deserialize(_read(args.model))
    rp = pkan_mod.build_relaxation(net, args.tol)
    rep = solve_relaxation(rp, args.feas_tol, args.max_iters)
    print(
        f"lower_bound {fmt(rep.lower_bound)} status {rep.status} "
        f"iterations {rep.iterations} max_violation {rep.max_violation:.3e}"
    )
    if out is not None:
        write_atomic(out, dumps(rep.to_dict()) + "\n")
    return EXIT_OK if rep.status != "infeasible_master" else EXIT_NUMERIC


def _gap_instance(job):
    index, arch, seed, tol, feas_tol, max_iters, samples = job
    row = {"index": index, "arch": arch, "seed": seed}
    try:
        net = pkan_mod.generate_random(*arch, seed)
        t0 = time.monotonic()
        rp = pkan_mod.build_relaxation(net, tol)
        t1 = time.monotonic()
        rep = solve_relaxation(rp, feas_tol, max_iters)
        t2 = time.monotonic()
        f_upper, _ = multistart_min(net, samples, seed)
        row.update(
            f_relax=rep.lower_bound,
            f_upper=f_upper,
            gap=relative_gap(rep.lower_bound, f_upper),
            iterations=rep.iterations,
            status=rep.status,
            construct=t1 - t0,
            solve=t2 - t1,
        )
    except (PkanRelaxError, ArithmeticError) as exc:
        row.update(
            f_relax=math.nan,
            f_upper=math.nan,
            gap=math.nan,
            iterations=0,
            status=f"error:{type(exc).__name__}",
            construct=math.nan,
            solve=math.nan,
        )
    return row


def run_gap(args) -> list[dict]:
    jobs = []
    for arch in _grid(args):
        for k in range(args.count):
            jobs.append((len(jobs), arch, args.seed + k, args.tol, args.feas_tol, args.max_iters, args.samples))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_gap_instance, jobs))
    else:
        rows = [_gap_instance(j) for j in jobs]
    rows.sort(key=lambda r: r["index"])
    return rows


def cmd_pkan_gap(args) -> int:
    out = _check_out(args.out)
    rows = run_gap(args)
    table = [
        (r["index"], *r["arch"], r["seed"], r["f_relax"], r["f_upper"], r["gap"], r["iterations"], r["status"])
        for r in rows
    ]
    times = [(r["index"], r["construct"], r["solve"]) for r in rows]
    text = csv_text(GAP_HEADER, table)
    if out is None:
        sys.stdout.write(text)
    else:
        write_atomic(out, text)
        write_atomic(out.with_name(out.stem + ".timing.csv"), csv_text(TIMING_HEADER, times))
        bad = sum(1 for r in rows if r["status"] != "optimal")
        print(f"{len(rows)} instances, {bad} not optimal; table in {out}")
    return EXIT_OK


# --------------------------------------------------------------------------
# gam


def cmd_gam_check(args) -> int:
    g = gam_mod.loads(_read(args.model))
    rel = gam_mod.GAMRelaxation.build(g, args.tol)
    value, x = rel.minimize(args.tol)
    grid_value, _ = gam_grid_min(g, args.samples)
    diff = abs(value - grid_value)
    ok = diff <= 1e-5 * (1.0 + abs(grid_value))
    print(f"relaxation min {fmt(value)}")
    print(f"grid min {fmt(grid_value)}")
    print(f"difference {diff:.3e}")
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_NUMERIC


# --------------------------------------------------------------------------
# parser


def _interval_arg(parser):
    parser.add_argument("--interval", nargs=2, type=float, metavar=("LO", "HI"), required=True)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pkanrelax", description="Polynomial envelopes and network relaxations.")
    sub = ap.add_subparsers(dest="command", required=True)

    env = sub.add_parser("envelope", help="convex and concave envelope of one polynomial")
    env.add_argument("--coeffs", required=True, help="ascending coefficients, comma separated")
    _interval_arg(env)
    env.add_argument("--tol", type=_positive("--tol"), default=DEFAULT_TOL)
    env.add_argument("--out", help="envelope JSON path")
    env.add_argument("--samples", type=int, default=0, help="also write this many CSV samples next to --out")
    env.set_defaults(func=cmd_envelope)

    pk = sub.add_parser("pkan", help="random networks, relaxations and gap batches")
    pks = pk.add_subparsers(dest="action", required=True)

    def arch(p, default):
        p.add_argument("--layers", type=int, nargs="+", default=[default])
        p.add_argument("--width", type=int, nargs="+", default=[default])
        p.add_argument("--inputs", type=int, nargs="+", default=[default])
        p.add_argument("--degree", type=int, nargs="+", default=[default])
        p.add_argument("--count", type=int, default=50)
        p.add_argument("--seed", type=int, default=0)

    def solve_opts(p):
        p.add_argument("--tol", type=_positive("--tol"), default=DEFAULT_TOL)
        p.add_argument("--feas-tol", type=_positive("--feas-tol"), default=DEFAULT_FEAS_TOL)
        p.add_argument("--max-iters", type=int, default=DEFAULT_MAX_ITERS)

    gen = pks.add_parser("gen", help="write random instances for an architecture grid")
    arch(gen, 4)
    gen.add_argument("--out", help="output directory")
    gen.set_defaults(func=cmd_pkan_gen)

    rel = pks.add_parser("relax", help="solve the relaxation of one instance")
    rel.add_argument("model", help="instance JSON")
    solve_opts(rel)
    rel.add_argument("--out", help="report JSON path")
    rel.set_defaults(func=cmd_pkan_relax)

    gap = pks.add_parser("gap", help="relaxation bound versus multistart value over a batch")
    arch(gap, 4)
    solve_opts(gap)
    gap.add_argument("--samples", type=int, default=2000)
    gap.add_argument("--jobs", type=int, default=1)
    gap.add_argument("--out", help="CSV path; timings go to a sibling .timing.csv")
    gap.set_defaults(func=cmd_pkan_gap)

    gm = sub.add_parser("gam", help="monotone polynomial GAM checks")
    gms = gm.add_subparsers(dest="action", required=True)
    chk = gms.add_parser("check", help="compare the relaxation minimum with a grid search")
    chk.add_argument("model", help="MPGAM JSON")
    chk.add_argument("--tol", type=_positive("--tol"), default=DEFAULT_TOL)
    chk.add_argument("--samples", type=int, default=200, help="grid points per axis")
    chk.set_defaults(func=cmd_gam_check)
    return ap


def _validate(args) -> None:
    for name in ("count", "samples", "jobs", "max_iters"):
        v = getattr(args, name, None)
        if v is not None and v < (0 if name == "samples" and args.command == "envelope" else 1):
            raise UsageError(f"--{name.replace('_', '-')} out of range: {v}")
    for name in ("layers", "width", "inputs", "degree"):
        v = getattr(args, name, None)
        if v is not None and any(k < 1 for k in v):
            raise UsageError(f"--{name} values must be positive")
    if getattr(args, "samples", None) == 1 and args.command == "envelope":
        raise UsageError("--samples needs at least 2 points")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _validate(args)
        return args.func(args)
    except NotMonotone as exc:
        loc = "" if exc.location is None else f" at {exc.location:.17g}"
        print(f"error: {exc}{loc}", file=sys.stderr)
        return EXIT_MODEL
    except (PkanRelaxError, UsageError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
