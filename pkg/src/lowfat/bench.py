"""Microbenchmarks: 2-3-4 tree search, vector construction/access, allocator churn.

Timings cover only the measured phase; setup (tree building, vector
construction for the access phase) is excluded.  Every other CSV field is
deterministic for a given seed.
"""
from __future__ import annotations

import csv
import io
import random
import time
from dataclasses import astuple, dataclass
from pathlib import Path

from .apps.tree234 import MODES as TREE_MODES, Tree234
from .apps.vector import FatVector, LowFatVectorType
from .collector import Collector
from .errors import InvalidArgument
from .heap import Allocator

CSV_HEADER = ("name", "mode", "N", "seconds", "peak_bytes")

VECTOR_MODES = ("fat", "lowfat", "lowfat-pow2")
VECTOR_PHASES = ("construct", "access")
SIZE_MIXES = {
    "small": [(1, 128)],
    "mixed": [(1, 256)] * 6 + [(257, 4096)] * 3 + [(4097, 65536)],
    "large": [(4097, 1 << 20)],
}
GC_SHAPES = ("list", "tree", "cycle")

# Reference figures from the published evaluation (ratios, machine independent-ish).
PUBLISHED_TREE_RATIOS = {"size/tag": 0.80, "extended/tag": 1.27}
PUBLISHED_VECTOR_RATIOS = {
    "construct lowfat/fat": 2.0,
    "construct lowfat-pow2/fat": 1.33,
    "access lowfat/fat": 1.2,
    "access lowfat-pow2/fat": 1.2,
}


@dataclass
class BenchResult:
    name: str
    mode: str
    N: int
    seconds: float
    peak_bytes: int
    answer: int = 0  # logical result (hits, sums, freed counts); not written to CSV

    def row(self):
        return astuple(self)[:len(CSV_HEADER)]


def write_csv(results, path=None):
    """Append rows to ``path`` (header written for new files); returns CSV text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    new = path is None or not Path(path).exists() or Path(path).stat().st_size == 0
    if new:
        w.writerow(CSV_HEADER)
    for r in results:
        name, mode, n, secs, peak = r.row()
        w.writerow((name, mode, n, f"{secs:.6f}", peak))
    text = buf.getvalue()
    if path is not None:
        with open(path, "a", newline="") as f:
            f.write(text)
    return text


def _fresh(alloc):
    alloc.peak_bytes = alloc.live_bytes


def _keys(n, seed):
    keys = list(range(1, n + 1))
    random.Random(seed).shuffle(keys)
    return keys


def bench_tree(alloc: Allocator, n: int, mode: str, seed: int = 0) -> BenchResult:
    if n < 1:
        raise InvalidArgument("N must be at least 1")
    if mode not in TREE_MODES:
        raise InvalidArgument(f"unknown tree mode {mode!r}")
    _fresh(alloc)
    tree = Tree234(alloc, mode)
    keys = _keys(n, seed)
    for k in keys:
        tree.insert(k)
    contains = tree.__contains__
    t0 = time.perf_counter()
    hits = 0
    for k in keys:
        if contains(k):
            hits += 1
    secs = time.perf_counter() - t0
    peak = alloc.peak_bytes
    tree.free_all()
    return BenchResult("tree", mode, n, secs, peak, hits)


def _build_vector(alloc, n, mode):
    if mode == "fat":
        v = FatVector(alloc, 8)
        push = v.push
        for x in range(1, n + 1):
            push(x)
        return v, None
    vt = LowFatVectorType(alloc, 8, pow2=(mode == "lowfat-pow2"))
    h = vt.new()
    push = vt.push
    for x in range(1, n + 1):
        h = push(h, x)
    return h, vt


def _vector_sum(v, vt):
    # element-wise, like a loop over v[i]; a bulk read would hide the per-access cost
    if vt is None:
        get = v.get
        return sum(get(i) for i in range(v.pos))
    get = vt.get
    return sum(get(v, i) for i in range(vt.pos(v)))


def bench_vector(alloc: Allocator, n: int, mode: str, phase: str) -> BenchResult:
    if n < 1:
        raise InvalidArgument("N must be at least 1")
    if mode not in VECTOR_MODES or phase not in VECTOR_PHASES:
        raise InvalidArgument(f"unknown vector mode/phase {mode!r}/{phase!r}")
    _fresh(alloc)
    if phase == "construct":
        t0 = time.perf_counter()
        v, vt = _build_vector(alloc, n, mode)
        secs = time.perf_counter() - t0
        total = v.sum() if vt is None else vt.sum(v)
    else:
        v, vt = _build_vector(alloc, n, mode)
        t0 = time.perf_counter()
        total = _vector_sum(v, vt)
        secs = time.perf_counter() - t0
    peak = alloc.peak_bytes
    v.free() if vt is None else vt.free(v)
    return BenchResult(f"vector-{phase}", mode, n, secs, peak, total)


def bench_alloc(alloc: Allocator, ops: int, size_mix: str = "mixed", seed: int = 0,
                max_live: int = 4096) -> BenchResult:
    """Randomised malloc/free churn with a bounded live set."""
    if ops < 1:
        raise InvalidArgument("ops must be at least 1")
    if size_mix not in SIZE_MIXES:
        raise InvalidArgument(f"unknown size mix {size_mix!r}")
    rng = random.Random(seed)
    ranges = SIZE_MIXES[size_mix]
    plan = []
    live = 0
    for _ in range(ops):
        if live and (live >= max_live or rng.random() < 0.5):
            plan.append(-rng.randrange(live) - 1)
            live -= 1
        else:
            lo, hi = rng.choice(ranges)
            plan.append(rng.randint(lo, hi))
            live += 1
    _fresh(alloc)
    objs = []
    malloc, free = alloc.malloc, alloc.free
    t0 = time.perf_counter()
    for p in plan:
        if p > 0:
            objs.append(malloc(p))
        else:
            j = -p - 1
            objs[j], objs[-1] = objs[-1], objs[j]
            free(objs.pop())
    secs = time.perf_counter() - t0
    peak = alloc.peak_bytes
    for a in objs:
        free(a)
    return BenchResult("alloc", size_mix, ops, secs, peak, len(objs))


def parse_shape(shape: str):
    kind, _, n = shape.partition("-")
    if kind not in GC_SHAPES:
        raise InvalidArgument(f"unknown shape {shape!r}; expected one of {', '.join(GC_SHAPES)}[-N]")
    try:
        n = int(n) if n else 100
    except ValueError:
        raise InvalidArgument(f"bad node count in shape {shape!r}") from None
    if n < 1:
        raise InvalidArgument("shape needs at least one node")
    return kind, n


def build_graph(alloc, kind: str, n: int):
    """Allocate ``n`` two-word nodes wired as a list, binary tree or cycle.

    Returns (root address, node addresses).  Pointer words only ever hold
    node bases or 0, so the heap has no accidental address patterns.
    """
    nodes = [alloc.malloc(16) for _ in range(n)]
    mem = alloc.memory
    for j, a in enumerate(nodes):
        if kind == "list":
            links = (nodes[j + 1] if j + 1 < n else 0, 0)
        elif kind == "cycle":
            links = (nodes[(j + 1) % n], 0)
        else:
            links = tuple(nodes[c] if c < n else 0 for c in (2 * j + 1, 2 * j + 2))
        mem.write_word(a, links[0])
        mem.write_word(a + 8, links[1])
    return nodes[0], nodes


def gc_demo(alloc: Allocator, shape: str) -> tuple[int, int]:
    """Build a graph, collect while rooted, then drop the root and collect again."""
    kind, n = parse_shape(shape)
    root, _ = build_graph(alloc, kind, n)
    gc = Collector(alloc)
    gc.roots.add(root)
    kept = gc.collect()
    gc.roots.discard(root)
    dropped = gc.collect()
    return kept, dropped


def ratio_report(results, published):
    """Lines comparing measured timing ratios against the published ones."""
    by = {(r.name, r.mode): r.seconds for r in results}
    lines = []
    for label, ref in published.items():
        if label.startswith(("construct", "access")):
            phase, pair = label.split(" ")
            num, den = pair.split("/")
            key = f"vector-{phase}"
            a, b = by.get((key, num)), by.get((key, den))
        else:
            num, den = label.split("/")
            a, b = by.get(("tree", num)), by.get(("tree", den))
        if a is None or not b:
            continue
        lines.append(f"{label:28s} measured {a / b:5.2f}x   published ~{ref:.2f}x")
    return lines
