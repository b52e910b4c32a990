"""Bounds checking and free-API checks."""
from __future__ import annotations

from ..errors import BoundsError, InvalidFree


def is_oob(p: int, base: int, size: int, access: int = 1) -> bool:
    """True if ``access`` bytes at ``p`` are not all inside [base, base + size)."""
    return p < base or p > base + size - access


def checked_memcpy_auto(alloc, dst: int, src: int, n: int) -> None:
    """Byte copy with a bounds check on both derived addresses per iteration."""
    dst_base, dst_size = alloc.base(dst), alloc.size(dst)
    src_base, src_size = alloc.base(src), alloc.size(src)
    mem = alloc.memory
    for i in range(n):
        d, s = dst + i, src + i
        if is_oob(d, dst_base, dst_size, 1):
            raise BoundsError("dst", i)
        if is_oob(s, src_base, src_size, 1):
            raise BoundsError("src", i)
        mem.write(d, mem.read(s, 1))


def checked_memcpy_opt(alloc, dst: int, src: int, n: int) -> None:
    """Copy with one usable-size check per operand, hoisted out of the loop."""
    if n > alloc.usable_size(dst):
        raise BoundsError("dst", alloc.usable_size(dst),
                          f"copy of {n} bytes overflows dst ({alloc.usable_size(dst)} usable)")
    if n > alloc.usable_size(src):
        raise BoundsError("src", alloc.usable_size(src),
                          f"copy of {n} bytes overflows src ({alloc.usable_size(src)} usable)")
    if n:
        alloc.memory.write(dst, alloc.memory.read(src, n))


def checked_free(alloc, a: int) -> None:
    """Free only heap base addresses; stack, global and interior frees raise."""
    if not alloc.is_heap_ptr(a):
        raise InvalidFree(a, "non-heap")
    if alloc.offset(a):
        raise InvalidFree(a, "interior")
    alloc.free(a)
