"""Command-line entry point: ``lowfat <command> ...``."""
from __future__ import annotations

import argparse
import sys

from . import bench, selftest
from .apps.tree234 import MODES as TREE_MODES
from .errors import LowFatError
from .heap import Allocator
from .layout import MAX_U64, SizeConfig, load_config
from .query import Query


def _address(text):
    try:
        a = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a hex or decimal address: {text!r}") from None
    if not 0 <= a <= MAX_U64:
        raise argparse.ArgumentTypeError(f"address out of 64-bit range: {text!r}")
    return a


def _positive(text):
    try:
        n = int(float(text)) if "e" in text.lower() else int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return n


def build_parser():
    p = argparse.ArgumentParser(prog="lowfat", description="Low-fat allocator runtime and benchmarks.")
    p.add_argument("--config", help="size configuration file (default: built-in 32GB/61-class layout)")
    p.add_argument("--csv", help="append benchmark rows to this CSV file")
    p.add_argument("--seed", type=int, default=1, help="random seed (default 1)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("inspect", help="print the query API's view of an address")
    s.add_argument("address", type=_address)

    s = sub.add_parser("bench-tree", help="2-3-4 tree search benchmark")
    s.add_argument("--n", type=_positive, default=100_000)
    s.add_argument("--mode", choices=TREE_MODES, help="default: all modes plus ratios")

    s = sub.add_parser("bench-vector", help="vector construct/access benchmark")
    s.add_argument("--n", type=_positive, default=1_000_000)
    s.add_argument("--mode", choices=bench.VECTOR_MODES, help="default: all modes plus ratios")
    s.add_argument("--phase", choices=bench.VECTOR_PHASES, help="default: both phases")

    s = sub.add_parser("bench-alloc", help="malloc/free churn throughput")
    s.add_argument("--ops", type=_positive, default=1_000_000)
    s.add_argument("--size-mix", choices=sorted(bench.SIZE_MIXES), default="mixed")

    s = sub.add_parser("gc-demo", help="collect a generated object graph")
    s.add_argument("--shape", default="list-100", help="list|tree|cycle, optionally -N (default list-100)")

    sub.add_parser("selftest", help="run the built-in invariant checks")
    return p


def inspect(q: Query, a: int, out=print):
    out(f"address      {a:#x}")
    out(f"index        {q.index(a)}")
    out(f"size         {q.size(a)}" + ("  (non-fat)" if not q.is_ptr(a) else ""))
    out(f"base         {q.base(a):#x}")
    out(f"base_div     {q.base_div(a):#x}")
    out(f"base_magic   {q.base_magic(a):#x}")
    out(f"base_mask    {q.base_mask(a):#x}")
    out(f"offset       {q.offset(a)}")
    out(f"usable_size  {q.usable_size(a)}")
    out(f"is_ptr       {q.is_ptr(a)}")
    out(f"is_heap_ptr  {q.is_heap_ptr(a)}")
    out(f"is_stack_ptr {q.is_stack_ptr(a)}")
    out(f"is_global_ptr {q.is_global_ptr(a)}")


def _emit(results, args, out):
    text = bench.write_csv(results, args.csv)
    if args.csv is None:
        out(text.rstrip("\n"))
    else:
        for r in results:
            out(",".join(map(str, r.row())))


def main(argv=None, out=print) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config) if args.config else SizeConfig.default()
        if args.command == "inspect":
            inspect(Query.from_config(config), args.address, out)
            return 0
        if args.command == "selftest":
            return 0 if selftest.run(config, args.seed, out) else 1
        with Allocator(config) as alloc:
            return _run(alloc, args, out)
    except LowFatError as e:
        out(f"error: {e}")
        return 2


def _run(alloc, args, out):
    if args.command == "bench-tree":
        modes = [args.mode] if args.mode else list(TREE_MODES)
        results = [bench.bench_tree(alloc, args.n, m, args.seed) for m in modes]
        _emit(results, args, out)
        out("hits: " + ", ".join(f"{r.mode}={r.answer}" for r in results))
        for line in bench.ratio_report(results, bench.PUBLISHED_TREE_RATIOS):
            out(line)
        return 0 if len({r.answer for r in results}) == 1 else 1
    if args.command == "bench-vector":
        modes = [args.mode] if args.mode else list(bench.VECTOR_MODES)
        phases = [args.phase] if args.phase else list(bench.VECTOR_PHASES)
        results = [bench.bench_vector(alloc, args.n, m, ph) for ph in phases for m in modes]
        _emit(results, args, out)
        out("sums: " + ", ".join(f"{r.name}/{r.mode}={r.answer}" for r in results))
        out("handle words: lowfat 1, fat 3 (plus a 1-word reference to the fat triple)")
        for line in bench.ratio_report(results, bench.PUBLISHED_VECTOR_RATIOS):
            out(line)
        return 0 if len({r.answer for r in results}) == 1 else 1
    if args.command == "bench-alloc":
        r = bench.bench_alloc(alloc, args.ops, args.size_mix, args.seed)
        _emit([r], args, out)
        out(f"throughput: {r.N / r.seconds:,.0f} ops/s" if r.seconds else "throughput: n/a")
        return 0
    if args.command == "gc-demo":
        kept, dropped = bench.gc_demo(alloc, args.shape)
        out(f"shape {args.shape}: freed {kept} while rooted, freed {dropped} after dropping the root")
        return 0
    raise AssertionError(args.command)


if __name__ == "__main__":
    sys.exit(main())
