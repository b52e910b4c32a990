"""Typed addresses: size-typed dispatch and classic/extended tagging."""
from __future__ import annotations

from ..errors import InvalidTag, UntypedAddress

TAG_BITS = 4
TAG_MASK = (1 << TAG_BITS) - 1


def type_index(alloc, a: int) -> int:
    """Region index of ``a``, which doubles as a dynamic type for size-typed objects."""
    if not alloc.is_ptr(a):
        raise UntypedAddress(f"{a:#x} is not low-fat")
    return a >> alloc.shift


# classic tags fold a 4-bit value into the alignment bits

def tag_set(a: int, t: int) -> int:
    if not 0 <= t <= TAG_MASK:
        raise InvalidTag(f"tag {t} does not fit in {TAG_BITS} bits")
    if a & TAG_MASK:
        raise InvalidTag(f"{a:#x} is not 16-byte aligned")
    return a | t


def tag_get(ta: int) -> int:
    return ta & TAG_MASK


def untag(ta: int) -> int:
    return ta & ~TAG_MASK


# extended tags use the whole in-object offset, so any t in [0, size) fits

def ext_tag_set(alloc, a: int, t: int) -> int:
    if not alloc.is_ptr(a) or alloc.offset(a):
        raise InvalidTag(f"{a:#x} is not a low-fat base address")
    if not 0 <= t < alloc.size(a):
        raise InvalidTag(f"tag {t} outside [0, {alloc.size(a)})")
    return a + t


def ext_tag_get(alloc, ta: int) -> int:
    return alloc.offset(ta)


def ext_untag(alloc, ta: int) -> int:
    return alloc.base(ta)
