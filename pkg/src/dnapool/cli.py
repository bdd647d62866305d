"""Command-line interface: ``dnapool write | read | stats | cost | primers``.

Exit codes: 0 ok, 1 other pipeline error, 2 usage, 3 not found,
4 incomplete read, 5 corrupt pool, 6 primers exhausted.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import analytics, codec, methods, poolsim, primers, tools
from .errors import (
    CorruptPool,
    DnaPoolError,
    FidNotFound,
    HeaderMismatch,
    MissingAddress,
    PrimerExhausted,
    ToolNotFound,
)

EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_NOT_FOUND, EXIT_INCOMPLETE, EXIT_CORRUPT, EXIT_PRIMERS = range(7)


class UsageError(Exception):
    pass


def default_pool_dir() -> Path:
    return Path(os.environ.get("DNAPOOL_HOME", "dnapool-pool"))


def _pool_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--pool", type=Path, default=None,
                   help="pool directory (default: $DNAPOOL_HOME or ./dnapool-pool)")


def _constraints(args) -> primers.PrimerConstraints:
    try:
        return primers.PrimerConstraints(gc_min=args.gc_min, gc_max=args.gc_max,
                                         max_homopolymer=args.max_homopolymer,
                                         min_hamming=args.min_hamming, length=args.length)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _add_constraint_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gc-min", type=float, default=0.40)
    p.add_argument("--gc-max", type=float, default=0.65)
    p.add_argument("--max-homopolymer", type=int, default=4)
    p.add_argument("--min-hamming", type=int, default=8)
    p.add_argument("--length", type=int, default=20)


# -- write ------------------------------------------------------------------

def _parse_tools(specs: list[str]) -> dict[str, list[str]]:
    out: dict[str, list[str]] = {}
    for spec in specs:
        name, sep, files = spec.partition("=")
        if not sep or not name or not files:
            raise UsageError(f"--tool expects NAME=file[,file...], got {spec!r}")
        out.setdefault(name, []).extend(f for f in files.split(",") if f)
    return out


def cmd_write(args) -> int:
    try:
        method = methods.MethodKind.parse(args.method)
        profile = codec.get_profile(args.codec)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    assignments = _parse_tools(args.tool)
    tool_of: dict[str, str] = {}
    for name, files in assignments.items():
        if name not in tools.DEFAULT_REGISTRY.tools:
            raise UsageError(f"unknown tool {name!r}; registered: {tools.DEFAULT_REGISTRY.names()}")
        for f in files:
            if f in tool_of:
                raise UsageError(f"{f} is assigned to both {tool_of[f]} and {name}")
            tool_of[f] = name
    paths = list(dict.fromkeys(list(args.inputs) + list(tool_of)))
    if not paths:
        raise UsageError("no input files")
    files = []
    for p in paths:
        data = Path(p).read_bytes()
        files.append(methods.SourceFile(Path(p).name, data, tool_of.get(p)))
    specs = [methods.ToolSpec(n, tools.tool_blob(n, args.tool_blob_size)) for n in assignments]
    if args.primers:
        library = primers.PrimerLibrary.load(args.primers)
    else:
        library = primers.PrimerLibrary()
        primers.extend_library(library, len(files) + len(assignments), seed=args.seed, universal=True)
    layout = codec.FragmentLayout(args.ls, args.lp)
    plan = methods.plan(method, files, specs, layout, profile, library, first_fid=args.first_fid)
    streams = methods.materialize_streams(plan)
    pool, manifest = poolsim.pool_write(plan, args.pool or default_pool_dir(), append=args.append)
    for ms in streams:
        name = plan.entry(ms.fid).name if ms.kind == "data" else next(
            t.name for t in plan.tools if t.fid == ms.fid)
        print(f"{ms.fid}\t{ms.kind}\t{name}\t{len(ms.fragments)} fragments\t{ms.bases} bases")
    print(f"total\t{pool.total_bases} bases\t{len(pool.fragments)} fragments")
    return EXIT_OK


# -- read -------------------------------------------------------------------

def cmd_read(args) -> int:
    pool, manifest = poolsim.pool_load(args.pool or default_pool_dir())
    res = poolsim.random_read(pool, manifest, args.file, seed=args.seed, dropout_rate=args.dropout)
    entry = manifest.find(args.file)
    if args.out:
        Path(args.out).write_bytes(res.data)
    digest = hashlib.sha256(res.data).hexdigest()
    print(f"fid={entry.fid} name={entry.name} bytes={len(res.data)} sha256={digest}")
    print(f"rounds={res.rounds_used} reads={res.reads} bases_sequenced={res.bases}")
    return EXIT_OK


# -- stats ------------------------------------------------------------------

def cmd_stats(args) -> int:
    pool, manifest = poolsim.pool_load(args.pool or default_pool_dir())
    stats = poolsim.pool_stats(pool, manifest)
    print(stats.report())
    if not manifest.data():
        return EXIT_OK
    print(f"ideal_ratio={float(poolsim.density_vs_ideal(stats, pool, manifest)):.6f}")
    groups = poolsim.manifest_cost_groups(pool.header, manifest, args.geometry)
    variants = ["verbatim", "corrected"] if stats.method == "1-mci" else ["verbatim"]
    for v in variants:
        print(analytics.audit_pool(stats, groups, variant=v).summary())
    return EXIT_OK


# -- cost -------------------------------------------------------------------

def _grid(start: Fraction, stop: Fraction, step: Fraction) -> list[Fraction]:
    if step <= 0:
        raise UsageError("--step must be positive")
    out, v = [], start
    while v <= stop:
        out.append(v)
        v += step
    if not out:
        raise UsageError(f"empty range: --from {start} --to {stop}")
    return out


def cmd_cost(args) -> int:
    units = args.units
    try:
        size = lambda s: analytics.parse_size(s, units)
        params = analytics.CostModelParams(
            n=args.n, s_d=size(args.s_d), r_c=Fraction(args.r_c), s_h=size(args.s_h),
            s_t=size(args.s_t), l_s=args.ls, l_p=args.lp, a=Fraction(args.a))
        lo = size(args.start) if args.vary == "s_o" else Fraction(args.start)
        hi = size(args.stop) if args.vary == "s_o" else Fraction(args.stop)
        step = (size(args.step) if args.vary == "s_o" else Fraction(args.step)) if args.step else None
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(str(exc)) from None
    if step is None:
        step = Fraction(1) if args.vary != "s_o" else max(Fraction(1), (hi - lo) / 10)
    rows = analytics.sweep(params, args.vary, _grid(lo, hi, step))
    text = analytics.to_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- primers ----------------------------------------------------------------

def cmd_primers(args) -> int:
    if args.primers_cmd == "fixtures":
        sys.stdout.write(primers.load_fixture_primers().dumps())
        return EXIT_OK
    c = _constraints(args)
    if args.primers_cmd == "gen":
        lib = primers.PrimerLibrary(min_pairwise_hamming=c.min_hamming)
        primers.extend_library(lib, args.count, c, seed=args.seed, universal=args.universal)
        text = lib.dumps()
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    lib = primers.PrimerLibrary.load(args.file, min_pairwise_hamming=c.min_hamming)
    bad = 0
    for p in lib.pairs + ([lib.universal] if lib.universal else []):
        for primer in (p.fwd, p.rev):
            problems = primers.validate_primer(primer, c)
            bad += bool(problems)
            print(f"{p.label}\t{primer.role.value}\t{primer.seq}\t{'ok' if not problems else '; '.join(problems)}")
    for v in lib.violations():
        bad += 1
        print(f"separation\t{v}")
    return EXIT_OK if not bad else EXIT_ERROR


# -- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dnapool", description="Self-contained DNA storage simulator.")
    sub = ap.add_subparsers(dest="command", required=True)

    w = sub.add_parser("write", help="compress, plan, materialize and write a pool")
    w.add_argument("inputs", nargs="*", help="files stored without a tool (unless named in --tool)")
    w.add_argument("--method", required=True, help="1-1cs, m-1ci or 1-mci")
    w.add_argument("--tool", action="append", default=[], metavar="NAME=FILE[,FILE]",
                   help="compress the listed files with a registered tool")
    w.add_argument("--codec", default="rot3")
    w.add_argument("--ls", type=int, default=220)
    w.add_argument("--lp", type=int, default=20)
    w.add_argument("--seed", type=int, default=0, help="seed for generated primers")
    w.add_argument("--primers", type=Path, help="primer library file (default: generated)")
    w.add_argument("--tool-blob-size", type=int, default=None)
    w.add_argument("--first-fid", type=int, default=1)
    w.add_argument("--append", action="store_true")
    _pool_arg(w)
    w.set_defaults(func=cmd_write)

    r = sub.add_parser("read", help="random-access read of one file")
    r.add_argument("file", help="FID or file name")
    r.add_argument("--out", type=Path)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--dropout", type=float, default=0.0)
    _pool_arg(r)
    r.set_defaults(func=cmd_read)

    s = sub.add_parser("stats", help="pool statistics and analytic audit")
    s.add_argument("--geometry", choices=["pool", "nominal"], default="pool")
    _pool_arg(s)
    s.set_defaults(func=cmd_stats)

    c = sub.add_parser("cost", help="cost-model sweep as CSV")
    c.add_argument("--vary", choices=["n", "ratio", "s_o"], required=True)
    c.add_argument("--from", dest="start", required=True)
    c.add_argument("--to", dest="stop", required=True)
    c.add_argument("--step")
    c.add_argument("--n", type=int, default=3)
    c.add_argument("--s-d", default="100000")
    c.add_argument("--r-c", default="0.34")
    c.add_argument("--s-h", default="10")
    c.add_argument("--s-t", default="2010")
    c.add_argument("--ls", type=int, default=400)
    c.add_argument("--lp", type=int, default=20)
    c.add_argument("--a", default="5/8")
    c.add_argument("--units", choices=["binary", "decimal"], default="binary")
    c.add_argument("--out", type=Path)
    c.set_defaults(func=cmd_cost)

    p = sub.add_parser("primers", help="generate, validate or list primers")
    psub = p.add_subparsers(dest="primers_cmd", required=True)
    g = psub.add_parser("gen")
    g.add_argument("--count", type=int, default=8)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--universal", action="store_true")
    g.add_argument("--out", type=Path)
    _add_constraint_flags(g)
    v = psub.add_parser("validate")
    v.add_argument("file", type=Path)
    _add_constraint_flags(v)
    psub.add_parser("fixtures")
    p.set_defaults(func=cmd_primers)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"dnapool: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FidNotFound, ToolNotFound) as exc:
        print(f"dnapool: not found: {exc}", file=sys.stderr)
        return EXIT_NOT_FOUND
    except MissingAddress as exc:
        print(f"dnapool: incomplete read, missing addresses {list(exc.missing)}", file=sys.stderr)
        return EXIT_INCOMPLETE
    except (CorruptPool, HeaderMismatch) as exc:
        print(f"dnapool: corrupt pool: {exc}", file=sys.stderr)
        return EXIT_CORRUPT
    except PrimerExhausted as exc:
        print(f"dnapool: primers exhausted: {exc}", file=sys.stderr)
        return EXIT_PRIMERS
    except FileNotFoundError as exc:
        print(f"dnapool: not found: {exc}", file=sys.stderr)
        return EXIT_NOT_FOUND
    except (DnaPoolError, ValueError) as exc:
        print(f"dnapool: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
