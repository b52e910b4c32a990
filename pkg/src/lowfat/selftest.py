"""Built-in invariant checks run by the ``selftest`` command.

Each check returns ``(ok, detail)``.  They run against a simulated copy of
the given configuration so nothing here depends on real reservations.
"""
from __future__ import annotations

import random
from dataclasses import replace

from .apps.bounds import is_oob
from .apps.meta import meta_alloc, meta_get
from .apps.tree234 import MODES, Tree234
from .apps.typed import ext_tag_get, ext_tag_set, ext_untag
from .apps.vector import FatVector, LowFatVectorType
from .bench import build_graph
from .collector import Collector
from .heap import Allocator
from .layout import Mode, SizeConfig, alloc_size_for, validate_config
from .stack_global import StackMachine, global_register


def check_config(config, alloc, rng):
    v = validate_config(config)
    return not v, f"{len(config.sizes)} classes, {len(v)} violations"


def check_magic(config, alloc, rng, samples=200_000):
    bad = 0
    R, M = alloc.region_size, alloc.M
    for _ in range(samples):
        i = rng.randint(1, M)
        s = alloc.tables.sizes[i]
        a = rng.randrange(i * R, (i + 1) * R)
        if a % s < alloc.tables.thresholds[i]:
            bad += alloc.base_magic(a) != alloc.base_div(a)
    for i in range(1, M + 1):
        top = (i + 1) * R
        s, lim = alloc.tables.sizes[i], alloc.tables.thresholds[i]
        for a in range(top - 1024, top):
            if a % s < lim:
                bad += alloc.base_magic(a) != alloc.base_div(a)
    return bad == 0, f"{bad} mismatches"


def _heap_span(alloc):
    return alloc.regions[1].limit - alloc.regions[1].start


def _roomy(alloc, slots):
    """Largest class whose heap sub-region holds at least ``slots`` objects."""
    span = _heap_span(alloc)
    return max((s for s in alloc.tables.sizes[1:] if span // s >= slots), default=16)


def check_heap(config, alloc, rng, ops=20_000):
    live = []
    ops = min(ops, _heap_span(alloc) // 32)
    big = min(20000, _roomy(alloc, ops // 4))
    for _ in range(ops):
        if live and rng.random() < 0.45:
            j = rng.randrange(len(live))
            live[j], live[-1] = live[-1], live[j]
            alloc.free(live.pop()[0])
        else:
            n = rng.choice((rng.randint(1, min(512, big)), rng.randint(1, big)))
            live.append((alloc.malloc(n), n))
    bad = 0
    spans = []
    for a, n in live:
        i, s = alloc_size_for(n, alloc.tables)
        bad += alloc.offset(a) != 0 or alloc.index(a) != i or not alloc.is_heap_ptr(a)
        spans.append((a, a + s))
    spans.sort()
    bad += sum(1 for x, y in zip(spans, spans[1:]) if x[1] > y[0])
    for a, _ in live:
        alloc.free(a)
    return bad == 0, f"{len(live)} live objects checked, {bad} violations"


def _object_ok(alloc, a, s):
    return (alloc.base(a) == a and alloc.size(a) == s and alloc.offset(a + s - 1) == s - 1
            and alloc.usable_size(a + s - 1) == 1 and alloc.base_div(a + s // 2) == a)


def check_uniformity(config, alloc, rng):
    sm = StackMachine(alloc)
    bad = 0
    top = max(alloc.tables.sizes[i] for i in alloc.tables.pow2_indices())
    for n in (x for x in (1, 16, 24, 100, 1000, 5000) if x <= top):
        for a in (alloc.malloc(n), sm.stack_alloc(n), global_register(alloc, n)):
            bad += not _object_ok(alloc, a, alloc.size(a))
    return bad == 0, f"{bad} violations"


def check_oob(config, alloc, rng):
    bad = 0
    for size in range(1, 65):
        for access in range(1, 9):
            for p in range(-8, size + 8):
                inside = all(0 <= p + k < size for k in range(access))
                bad += is_oob(p, 0, size, access) == inside
    return bad == 0, f"{bad} disagreements"


def check_collector(config, alloc, rng):
    bad = 0
    for kind in ("list", "tree", "cycle"):
        root, nodes = build_graph(alloc, kind, 500)
        gc = Collector(alloc)
        gc.roots.add(root)
        bad += gc.collect() != 0
        gc.roots.clear()
        bad += gc.collect() != len(nodes)
    return bad == 0, f"{bad} wrong freed counts"


def check_meta(config, alloc, rng):
    bad = 0
    for s in (x for x in (16, 48, 272, 1040, 4096) if x <= config.sizes[-1]):
        p = meta_alloc(alloc, s - 8, 0xC0FFEE ^ s)
        bad += sum(meta_get(alloc, p + k) != 0xC0FFEE ^ s for k in range(s - 8))
        alloc.free(p - 8)
    return bad == 0, f"{bad} wrong reads"


def check_tags(config, alloc, rng):
    bad = 0
    for s in (x for x in (16, 48, 4096) if x <= config.sizes[-1]):
        a = alloc.malloc(s)
        for t in range(s):
            ta = ext_tag_set(alloc, a, t)
            bad += ext_tag_get(alloc, ta) != t or ext_untag(alloc, ta) != a
        alloc.free(a)
    return bad == 0, f"{bad} round-trip failures"


def check_vectors(config, alloc, rng):
    fat = FatVector(alloc)
    vt = LowFatVectorType(alloc)
    v = vt.new()
    # the fat and low-fat copies plus one growth step must fit in the largest class
    for _ in range(min(3000, _roomy(alloc, 4) // 16)):
        x = rng.getrandbits(64)
        fat.push(x)
        v = vt.push(v, x)
    ok = fat.to_list() == vt.to_list(v) and fat.storage_words() - vt.storage_words(v) == 3
    fat.free()
    vt.free(v)
    return ok, "contents and storage match" if ok else "mismatch"


def check_tree(config, alloc, rng, n=5000):
    n = min(n, _roomy(alloc, 1) // 64 // 3)
    keys = rng.sample(range(1, 4 * n), n)
    probes = rng.sample(range(0, 4 * n + 10), n)
    answers = []
    for mode in MODES:
        t = Tree234(alloc, mode)
        for k in keys:
            t.insert(k)
        answers.append([p in t for p in probes])
        t.free_all()
    ok = answers[0] == answers[1] == answers[2] and sum(answers[0]) == len(set(keys) & set(probes))
    return ok, f"{n} keys, modes agree" if ok else "modes disagree"


CHECKS = [
    ("config", check_config),
    ("fixed-point base", check_magic),
    ("heap region/alignment", check_heap),
    ("uniformity", check_uniformity),
    ("isOOB oracle", check_oob),
    ("collector", check_collector),
    ("metadata", check_meta),
    ("extended tags", check_tags),
    ("vectors", check_vectors),
    ("2-3-4 tree modes", check_tree),
]


def run(config: SizeConfig, seed: int = 0, out=print) -> bool:
    sim = replace(config, mode=Mode.SIMULATED)
    ok_all = True
    for name, fn in CHECKS:
        rng = random.Random(seed)
        alloc = Allocator(sim).reserve()
        try:
            ok, detail = fn(config, alloc, rng)
        except Exception as e:  # a crashing check is a failing check
            ok, detail = False, f"{type(e).__name__}: {e}"
        finally:
            alloc.close()
        ok_all &= ok
        out(f"{'PASS' if ok else 'FAIL'}  {name:24s} {detail}")
    return ok_all
