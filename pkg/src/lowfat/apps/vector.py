"""Low-fat vectors: one address encodes data, length and position.

For a handle ``v``: ``data = base(v)``, ``len = size(v) // item_size`` and
``pos = offset(v) // item_size``.  The handle always stays inside its
object, so the array is grown as soon as ``pos`` reaches ``len``.
``FatVector`` is the conventional (len, pos, data) triple, kept for
comparison and as a test oracle.
"""
from __future__ import annotations

from ..errors import BoundsError, InvalidArgument
from ..layout import is_pow2

_FORMATS = {1: "B", 2: "H", 4: "I", 8: "Q"}


class _Items:
    def __init__(self, alloc, item_size, pow2):
        if item_size not in _FORMATS:
            raise InvalidArgument(f"item size must be one of {sorted(_FORMATS)}, got {item_size}")
        self.alloc = alloc
        self.item_size = item_size
        self.fmt = _FORMATS[item_size]
        self.pow2 = pow2
        sizes = alloc.tables.sizes[1:]
        self.classes = [s for s in sizes if is_pow2(s)] if pow2 else list(sizes)

    def initial_class(self):
        return next(c for c in self.classes if c >= self.item_size)

    def grown_class(self, cur_size, length):
        for c in self.classes:
            if c > cur_size and c // self.item_size > length:
                return c
        raise BoundsError("vector", length, "vector cannot grow past the largest size class")

    def write(self, a, x):
        if self.item_size == 8:
            self.alloc.memory.write_word(a, x)
        else:
            self.alloc.memory.write(a, (x & ((1 << (8 * self.item_size)) - 1)).to_bytes(self.item_size, "little"))

    def read(self, a):
        if self.item_size == 8:
            return self.alloc.memory.read_word(a)
        return int.from_bytes(self.alloc.memory.read(a, self.item_size), "little")

    def total(self, data, count):
        if not count:
            return 0
        return sum(memoryview(self.alloc.memory.read(data, count * self.item_size)).cast(self.fmt))

    def items(self, data, count):
        if not count:
            return []
        return memoryview(self.alloc.memory.read(data, count * self.item_size)).cast(self.fmt).tolist()


class LowFatVectorType(_Items):
    """Operations on low-fat vectors of one item size; vectors are plain ints."""

    handle_words = 1

    def __init__(self, alloc, item_size=8, pow2=False):
        super().__init__(alloc, item_size, pow2)

    def new(self) -> int:
        v = self.alloc.malloc(self.initial_class())
        if not self.alloc.is_ptr(v):
            raise InvalidArgument("vector storage is not low-fat")
        return v

    def len(self, v: int) -> int:
        return self.alloc.size(v) // self.item_size

    def pos(self, v: int) -> int:
        return self.alloc.offset(v) // self.item_size

    def data(self, v: int) -> int:
        return self.alloc.base(v)

    def push(self, v: int, x: int) -> int:
        alloc = self.alloc
        item = self.item_size
        self.write(v, x)
        v += item
        base = alloc.base(v - item)
        size = alloc.size(base)
        length = size // item
        pos = (v - base) // item
        if pos < length:
            return v
        new = alloc.malloc(self.grown_class(size, length))
        alloc.memory.write(new, alloc.memory.read(base, pos * item))
        alloc.free(base)
        return new + pos * item

    def get(self, v: int, i: int) -> int:
        if not 0 <= i < self.pos(v):
            raise BoundsError("vector", i, f"index {i} outside [0, {self.pos(v)})")
        return self.read(self.alloc.base(v) + i * self.item_size)

    def sum(self, v: int) -> int:
        return self.total(self.alloc.base(v), self.pos(v))

    def to_list(self, v: int) -> list:
        return self.items(self.alloc.base(v), self.pos(v))

    def free(self, v: int) -> None:
        self.alloc.free(self.alloc.base(v))

    def storage_words(self, v: int) -> int:
        """Words held: the handle itself plus the data array."""
        return self.handle_words + self.alloc.size(v) // 8


class FatVector(_Items):
    """Explicit (len, pos, data) vector using the same growth policy."""

    handle_words = 3

    def __init__(self, alloc, item_size=8, pow2=False):
        super().__init__(alloc, item_size, pow2)
        self.data = alloc.malloc(self.initial_class())
        self.len = alloc.size(self.data) // item_size
        self.pos = 0

    def push(self, x: int) -> None:
        item = self.item_size
        self.write(self.data + self.pos * item, x)
        self.pos += 1
        if self.pos == self.len:
            cap = self.grown_class(self.alloc.size(self.data), self.len)
            new = self.alloc.malloc(cap)
            self.alloc.memory.write(new, self.alloc.memory.read(self.data, self.pos * item))
            self.alloc.free(self.data)
            self.data = new
            self.len = self.alloc.size(new) // item

    def get(self, i: int) -> int:
        if not 0 <= i < self.pos:
            raise BoundsError("vector", i, f"index {i} outside [0, {self.pos})")
        return self.read(self.data + i * self.item_size)

    def sum(self) -> int:
        return self.total(self.data, self.pos)

    def to_list(self) -> list:
        return self.items(self.data, self.pos)

    def free(self) -> None:
        self.alloc.free(self.data)

    def storage_words(self) -> int:
        """Words held: a reference to the triple, the triple, and the data array."""
        return 1 + self.handle_words + self.alloc.size(self.data) // 8
