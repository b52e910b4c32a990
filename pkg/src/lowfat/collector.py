"""Conservative mark-sweep collection over the low-fat heap.

Marking treats every word as a candidate address: the query API maps any
interior address straight to its object's base, and one mark bit per slot
per region records visited objects.  Marking uses an explicit worklist so
long chains cannot exhaust the Python stack.
"""
from __future__ import annotations

from contextlib import ExitStack
from dataclasses import dataclass, field

from .errors import InvalidArgument

WORD = 8


class MarkBitmap:
    """One bit per allocation slot of each region's heap sub-region.

    Per-region bit arrays are created on first touch and sized to the
    region's used slots, growing if the bump cursor has since moved.
    """

    def __init__(self, alloc):
        self.alloc = alloc
        self.bits = {}

    def slot(self, base: int) -> int:
        r = self.alloc.regions[base >> self.alloc.shift]
        return (base - r.start) // r.size

    def _array(self, i, slot):
        arr = self.bits.get(i)
        need = (max(self.alloc.regions[i].used_slots, slot + 1) + 7) >> 3
        if arr is None:
            arr = self.bits[i] = bytearray(need)
        elif len(arr) < need:
            arr.extend(bytes(need - len(arr)))
        return arr

    def set_mark(self, base: int) -> bool:
        """Set the bit for ``base``; return whether it was already set."""
        i = base >> self.alloc.shift
        r = self.alloc.regions[i]
        slot = (base - r.start) // r.size
        arr = self.bits.get(i)
        if arr is None or (slot >> 3) >= len(arr):
            arr = self._array(i, slot)
        bit = 1 << (slot & 7)
        old = arr[slot >> 3] & bit
        arr[slot >> 3] |= bit
        return bool(old)

    def is_marked(self, base: int) -> bool:
        i = base >> self.alloc.shift
        arr = self.bits.get(i)
        slot = self.slot(base)
        return arr is not None and (slot >> 3) < len(arr) and bool(arr[slot >> 3] & (1 << (slot & 7)))

    def count(self) -> int:
        return sum(bin(b).count("1") for arr in self.bits.values() for b in arr)

    def clear(self):
        self.bits.clear()


@dataclass
class RootSet:
    """Word-aligned address ranges scanned conservatively, plus single values."""

    ranges: list = field(default_factory=list)
    values: set = field(default_factory=set)

    def add_range(self, start: int, end: int):
        if start % WORD or end % WORD or end < start:
            raise InvalidArgument(f"root range [{start:#x}, {end:#x}) is not word aligned")
        self.ranges.append((start, end))

    def remove_range(self, start: int, end: int):
        self.ranges.remove((start, end))

    def add(self, value: int):
        self.values.add(value)

    def discard(self, value: int):
        self.values.discard(value)

    def clear(self):
        self.ranges.clear()
        self.values.clear()


class Collector:
    def __init__(self, alloc, roots: RootSet | None = None):
        self.alloc = alloc
        self.roots = roots if roots is not None else RootSet()
        self.marks = MarkBitmap(alloc)
        self._free = None
        self.cycles = 0

    # --- cycle state -------------------------------------------------------

    def _begin(self):
        if self._free is not None:
            return
        # free-list membership, one bit per slot, so freed slots are never marked
        self._free = {}
        for r in self.alloc.regions[1:]:
            if len(r):
                arr = bytearray((r.used_slots + 7) >> 3)
                for a in r.free_entries():
                    s = (a - r.start) // r.size
                    arr[s >> 3] |= 1 << (s & 7)
                self._free[r.index] = arr

    def reset(self):
        self.marks.clear()
        self._free = None

    def set_mark(self, base: int) -> bool:
        return self.marks.set_mark(base)

    def is_marked(self, base: int) -> bool:
        return self.marks.is_marked(base)

    # --- marking -------------------------------------------------------------

    def mark_from(self, value: int) -> None:
        self._begin()
        alloc = self.alloc
        shift, M = alloc.shift, alloc.M
        regions = alloc.regions
        base_of = alloc.base
        words = alloc.memory.words
        free = self._free
        set_mark = self.marks.set_mark
        work = [value]
        pop, extend = work.pop, work.extend
        while work:
            v = pop()
            i = v >> shift
            if not 0 < i <= M:
                continue
            r = regions[i]
            if not r.start <= v < r.bump:
                continue
            b = base_of(v)
            if b >= r.bump:
                continue
            fb = free.get(i)
            if fb is not None:
                slot = (b - r.start) // r.size
                if fb[slot >> 3] & (1 << (slot & 7)):
                    continue
            if set_mark(b):
                continue
            extend(w for w in words(b, r.size) if w >> shift)

    def mark_roots(self, roots: RootSet | None = None) -> None:
        roots = roots if roots is not None else self.roots
        words = self.alloc.memory.words
        for v in roots.values:
            self.mark_from(v)
        for lo, hi in roots.ranges:
            for w in words(lo, hi - lo):
                if w:
                    self.mark_from(w)

    # --- sweeping ------------------------------------------------------------

    def sweep(self) -> int:
        self._begin()
        freed = 0
        for r in self.alloc.regions[1:]:
            n = r.used_slots
            if not n:
                continue
            marks = self.marks.bits.get(r.index, b"")
            free = self._free.get(r.index, b"")
            for j in range((n + 7) >> 3):
                keep = (marks[j] if j < len(marks) else 0) | (free[j] if j < len(free) else 0)
                if keep == 0xFF:
                    continue
                for k in range(8):
                    slot = (j << 3) | k
                    if slot >= n:
                        break
                    if not keep & (1 << k):
                        self.alloc._release_slot(r, r.start + slot * r.size)
                        freed += 1
        return freed

    def collect(self, roots: RootSet | None = None) -> int:
        """Stop-the-world mark and sweep; returns the number of objects freed."""
        with ExitStack() as stack:
            for r in self.alloc.regions[1:]:
                stack.enter_context(r.lock)
            try:
                self._begin()
                self.mark_roots(roots)
                freed = self.sweep()
            finally:
                self.reset()
        self.cycles += 1
        return freed

    # --- automatic triggering -------------------------------------------------

    def attach(self, threshold_bytes: int) -> None:
        """Collect automatically after ``threshold_bytes`` of new allocation."""
        if threshold_bytes <= 0:
            raise InvalidArgument("collection threshold must be positive")
        self.alloc.gc_threshold = threshold_bytes
        self.alloc.gc_hook = self.collect

    def detach(self) -> None:
        self.alloc.gc_hook = None
