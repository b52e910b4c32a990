"""Low-fat stack and global objects without compiler support.

A ``StackMachine`` models a program stack: allocation rounds the request up
to a power-of-two class, aligns and decrements a simulated stack pointer,
then maps that pointer linearly into the class's stack sub-region.  Globals
are bump-allocated once from the global sub-regions and never freed.
"""
from __future__ import annotations

from .errors import GlobalExhausted, InvalidArgument, NonFatFallback, StackExhausted, StackMisuse
from .layout import MB, pow2_size_for

# Simulated stack areas live at this address; it is aligned far beyond any
# area size so masking sp aligns the mapped address too.
STACK_AREA_BASE = 0x7F0000000000
DEFAULT_STACK_SIZE = 8 * MB


class StackMachine:
    """One execution context's stack.

    Each machine claims a disjoint ``area_size`` slice of every stack
    sub-region, so several machines can coexist on one allocator.
    """

    def __init__(self, alloc, area_size=None):
        if alloc.memory is None:
            alloc.reserve()
        span = alloc.region_size // 4
        if area_size is None:
            area_size = min(DEFAULT_STACK_SIZE, span)
        if area_size & (area_size - 1) or area_size < 16:
            raise InvalidArgument(f"stack area size {area_size} is not a power of two")
        slot = alloc.stack_slots_claimed
        if (slot + 1) * area_size > span:
            raise StackExhausted("no stack sub-region space left for another stack")
        alloc.stack_slots_claimed += 1
        self.alloc = alloc
        self.area_size = area_size
        self.area_base = STACK_AREA_BASE + slot * area_size
        self.area_top = self.area_base + area_size
        self.sp = self.area_top
        self.frames = []

    def stack_alloc(self, n: int) -> int:
        if n < 1:
            raise InvalidArgument(f"stack allocation of {n} bytes")
        try:
            i, s = pow2_size_for(max(n, 16), self.alloc.tables)
        except NonFatFallback:
            raise InvalidArgument(f"{n} bytes exceeds the largest power-of-two class") from None
        sp = (self.sp & ~(s - 1)) - s
        if sp < self.area_base:
            raise StackExhausted(f"stack of {self.area_size} bytes exhausted by a {s}-byte object")
        self.sp = sp
        return sp - STACK_AREA_BASE + self.alloc.layout.stack[i].start

    def frame_enter(self) -> None:
        self.frames.append(self.sp)

    def frame_exit(self) -> None:
        if not self.frames:
            raise StackMisuse("frame_exit without a matching frame_enter")
        self.sp = self.frames.pop()

    def __enter__(self):
        self.frame_enter()
        return self

    def __exit__(self, *exc):
        self.frame_exit()


def global_register(alloc, n: int) -> int:
    """Statically place an ``n``-byte global in its power-of-two class."""
    if alloc.memory is None:
        alloc.reserve()
    if n < 1:
        raise InvalidArgument(f"global of {n} bytes")
    try:
        i, s = pow2_size_for(max(n, 16), alloc.tables)
    except NonFatFallback:
        raise GlobalExhausted(f"global of {n} bytes exceeds every power-of-two class") from None
    span = alloc.layout.glob[i]
    a = alloc.global_cursors.get(i, span.start)
    if a + s > span.end:
        raise GlobalExhausted(f"global sub-region of region #{i} exhausted", region_index=i)
    alloc.global_cursors[i] = a + s
    return a
