"""Free-list heap allocator over the heap sub-regions.

Each region owns a LIFO free list and a bump cursor splitting its heap
sub-region into used and unused space.  Objects carry no header: the
region index gives the size and size-alignment gives the base.  Freed
neighbours are never merged.
"""
from __future__ import annotations

import threading

from .errors import InvalidArgument, InvalidFree, NonFatFallback, OutOfMemory, ReservationError
from .layout import (LARGE_CLASS, Mode, SizeConfig, alloc_size_for, build_tables, is_pow2,
                     pow2_size_for, subregion_layout)
from .memory import make_memory
from .query import Query


class HeapRegionState:
    """Free list plus bump cursor for one region's heap sub-region.

    With ``memory`` given, the free list is threaded through the first word
    of each freed object; otherwise it is a side list.
    """

    __slots__ = ("index", "size", "start", "limit", "bump", "lock",
                 "_side", "_head", "_count", "_mem")

    def __init__(self, index, size, start, limit, memory=None):
        self.index = index
        self.size = size
        self.start = start
        self.limit = limit
        self.bump = start
        self.lock = threading.Lock()
        self._mem = memory
        self._side = [] if memory is None else None
        self._head = 0
        self._count = 0

    @property
    def intrusive(self):
        return self._mem is not None

    def push(self, a):
        if self._mem is None:
            self._side.append(a)
        else:
            self._mem.write_word(a, self._head)
            self._head = a
        self._count += 1

    def pop(self):
        if not self._count:
            return 0
        self._count -= 1
        if self._mem is None:
            return self._side.pop()
        a = self._head
        self._head = self._mem.read_word(a)
        return a

    def free_entries(self):
        """Free addresses, most recently freed first."""
        if self._mem is None:
            return self._side[::-1]
        out, a = [], self._head
        for _ in range(self._count):
            out.append(a)
            a = self._mem.read_word(a)
        return out

    def __len__(self):
        return self._count

    @property
    def used_slots(self):
        return (self.bump - self.start) // self.size


class Allocator(Query):
    """An allocator handle: the standard malloc API plus the query API.

    ``config.mode`` selects real reservations or simulated bookkeeping.
    Call ``reserve()`` once before allocating (``reserve(config)`` at module
    level does both); ``close()`` releases real reservations.
    """

    def __init__(self, config: SizeConfig, intrusive=None):
        super().__init__(build_tables(config), subregion_layout(config))
        self.config = config
        self.mode = config.mode
        self.memory = None
        self.regions = [None]
        self._intrusive = (config.mode is Mode.REAL) if intrusive is None else intrusive
        self.live_bytes = 0
        self.peak_bytes = 0
        self.stack_slots_claimed = 0
        self.global_cursors = {}
        self.gc_hook = None
        self.gc_threshold = 0
        self._since_gc = 0
        self._platform_lock = threading.Lock()

    # --- lifecycle ---------------------------------------------------------

    def reserve(self):
        if self.memory is not None:
            raise ReservationError("allocator regions are already reserved")
        self.memory = make_memory(self.mode.value, self.region_size, self.M)
        mem = self.memory if self._intrusive else None
        for i in range(1, self.M + 1):
            sp = self.layout.heap[i]
            self.regions.append(HeapRegionState(i, self._sizes[i], sp.start, sp.end, mem))
        return self

    @property
    def reserved(self):
        return self.memory is not None

    def close(self):
        if self.memory is not None:
            self.memory.close()
            self.memory = None
            self.regions = [None]

    def __enter__(self):
        if self.memory is None:
            self.reserve()
        return self

    def __exit__(self, *exc):
        self.close()

    def _require(self):
        if self.memory is None:
            raise ReservationError("allocator used before reserve()")

    # --- allocation ----------------------------------------------------------

    def _take(self, i):
        r = self.regions[i]
        with r.lock:
            a = r.pop()
            if a:
                return a, True
            a = r.bump
            if a + r.size > r.limit:
                raise OutOfMemory(f"heap sub-region of region #{i} ({r.size}B) exhausted")
            r.bump = a + r.size
            return a, False

    def _account(self, s):
        self.live_bytes += s
        if self.live_bytes > self.peak_bytes:
            self.peak_bytes = self.live_bytes
        self._since_gc += s

    def _maybe_collect(self):
        # runs before the new object exists, so it cannot be swept unrooted
        if self.gc_hook is not None and self._since_gc >= self.gc_threshold:
            self._since_gc = 0
            self.gc_hook()

    def _platform(self, n, align=16):
        with self._platform_lock:
            a = self.memory.platform_alloc(n, align)
        self._account(self.memory.platform_size(a))
        return a

    def malloc(self, n: int) -> int:
        self._require()
        self._maybe_collect()
        try:
            i, s = alloc_size_for(max(n, 1), self.tables)
        except NonFatFallback:
            return self._platform(n)
        a, _ = self._take(i)
        self._account(s)
        return a

    def calloc(self, k: int, n: int) -> int:
        self._require()
        self._maybe_collect()
        total = k * n
        try:
            i, s = alloc_size_for(max(total, 1), self.tables)
        except NonFatFallback:
            return self._platform(total)  # fresh pages are zero
        a, recycled = self._take(i)
        if recycled:
            self.memory.zero(a, s)
        self._account(s)
        return a

    def memalign(self, align: int, n: int) -> int:
        self._require()
        self._maybe_collect()
        if not is_pow2(align):
            raise InvalidArgument(f"alignment {align} is not a power of two")
        pow2 = [self._sizes[i] for i in self.tables.pow2_indices()]
        if align > pow2[-1]:
            raise InvalidArgument(f"alignment {align} exceeds the largest power-of-two class")
        try:
            i, s = pow2_size_for(max(n, 1), self.tables, align)
        except NonFatFallback:
            return self._platform(n, align)
        a, _ = self._take(i)
        self._account(s)
        return a

    def free(self, a: int) -> None:
        self._require()
        if a == 0:
            return
        i = a >> self.shift
        if 0 < i <= self.M:
            r = self.regions[i]
            if not (r.start <= a < r.limit):
                raise InvalidFree(a, "non-heap")
            if self.offset(a) != 0:
                raise InvalidFree(a, "interior")
            with r.lock:
                if a >= r.bump:
                    raise InvalidFree(a, "unknown")
                self._release_slot(r, a)
            return
        n = self.memory.platform_size(a)
        if n is None:
            raise InvalidFree(a, "unknown")
        with self._platform_lock:
            self.memory.platform_free(a)
        self.live_bytes -= n

    def _release_slot(self, r, a):
        # caller holds r.lock
        if r.size >= LARGE_CLASS:
            self.memory.release(a, r.size)
        r.push(a)
        self.live_bytes -= r.size

    def realloc(self, a: int, n: int) -> int:
        self._require()
        if a == 0:
            return self.malloc(n)
        if n == 0:
            self.free(a)
            return 0
        if self.is_ptr(a):
            if not self.is_heap_ptr(a):
                raise InvalidFree(a, "non-heap")
            if self.offset(a) != 0:
                raise InvalidFree(a, "interior")
            old = self.size(a)
            try:
                i, _ = alloc_size_for(n, self.tables)
                if i == a >> self.shift:
                    return a
            except NonFatFallback:
                pass
        else:
            old = self.memory.platform_size(a)
            if old is None:
                raise InvalidFree(a, "unknown")
            if n <= old and n > old // 2:
                return a
        b = self.malloc(n)
        self.memory.write(b, self.memory.read(a, min(old, n)))
        self.free(a)
        return b

    # --- introspection -----------------------------------------------------

    def live_objects(self):
        """Base addresses of every allocated heap object (slow; for checks)."""
        out = []
        for r in self.regions[1:]:
            free = set(r.free_entries())
            out.extend(a for a in range(r.start, r.bump, r.size) if a not in free)
        return out


def reserve(config: SizeConfig, intrusive=None) -> Allocator:
    """Create an allocator for ``config`` and reserve its regions."""
    return Allocator(config, intrusive).reserve()
