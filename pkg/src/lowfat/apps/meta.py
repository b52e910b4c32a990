"""Hidden per-object metadata stored in the word at the allocation base."""
from __future__ import annotations

from ..errors import NoMetadata
from ..stack_global import global_register

META_SIZE = 8


def meta_alloc(alloc, n: int, meta: int) -> int:
    ptr = alloc.malloc(n + META_SIZE)
    if not alloc.is_ptr(ptr):
        alloc.free(ptr)
        raise NoMetadata(f"{n}-byte object would not be low-fat")
    alloc.memory.write_word(ptr, meta)
    return ptr + META_SIZE


def meta_stack_alloc(machine, n: int, meta: int) -> int:
    ptr = machine.stack_alloc(n + META_SIZE)
    machine.alloc.memory.write_word(ptr, meta)
    return ptr + META_SIZE


def meta_global_register(alloc, n: int, meta: int) -> int:
    ptr = global_register(alloc, n + META_SIZE)
    alloc.memory.write_word(ptr, meta)
    return ptr + META_SIZE


def meta_get(alloc, p: int) -> int:
    """Metadata of the object containing ``p`` (any interior address works)."""
    if not alloc.is_ptr(p):
        raise NoMetadata(f"{p:#x} is not a low-fat address")
    return alloc.memory.read_word(alloc.base(p))
