"""Constant-time queries on arbitrary addresses.

Every operation here is a pure function of the immutable tables and the
sub-region layout, and is total over 64-bit inputs: non-fat addresses get
``size == MAX_U64`` and ``base == 0``.
"""
from __future__ import annotations

from .layout import MAX_U64, RegionTables, SizeConfig, SubRegionLayout, build_tables, subregion_layout


class Query:
    def __init__(self, tables: RegionTables, layout: SubRegionLayout):
        self.tables = tables
        self.layout = layout
        self.M = tables.M
        self.region_size = tables.region_size
        self.shift = tables.region_shift
        self.radix = tables.radix
        self._sizes = tables.sizes
        self._magics = tables.magics
        self._masks = tables.masks
        self._lo = self.region_size
        self._hi = (self.M + 1) * self.region_size
        self._heap = [(sp.start, sp.end) if sp else (0, 0) for sp in layout.heap]
        self._stack = [(sp.start, sp.end) if sp else (0, 0) for sp in layout.stack]
        self._glob = [(sp.start, sp.end) if sp else (0, 0) for sp in layout.glob]

    @classmethod
    def from_config(cls, config: SizeConfig) -> "Query":
        return cls(build_tables(config), subregion_layout(config))

    def index(self, a: int) -> int:
        return a >> self.shift

    def size(self, a: int) -> int:
        i = a >> self.shift
        if 0 < i <= self.M:
            return self._sizes[i]
        return MAX_U64

    def base_div(self, a: int) -> int:
        i = a >> self.shift
        if 0 < i <= self.M:
            s = self._sizes[i]
            return a - a % s
        return 0

    def base_magic(self, a: int) -> int:
        i = a >> self.shift
        if 0 < i <= self.M:
            return ((a * self._magics[i]) >> self.radix) * self._sizes[i]
        return 0

    def base_mask(self, a: int) -> int:
        """``a`` with its in-object bits cleared; 0 in non-power-of-two regions."""
        i = a >> self.shift
        if 0 < i <= self.M:
            return a & self._masks[i]
        return 0

    base = base_magic

    def offset(self, a: int) -> int:
        return a - self.base_magic(a)

    def usable_size(self, a: int) -> int:
        i = a >> self.shift
        if 0 < i <= self.M:
            s = self._sizes[i]
            return s - (a - ((a * self._magics[i]) >> self.radix) * s)
        return MAX_U64 - a

    def is_ptr(self, a: int) -> bool:
        return self._lo <= a < self._hi

    def is_heap_ptr(self, a: int) -> bool:
        i = a >> self.shift
        if 0 < i <= self.M:
            lo, hi = self._heap[i]
            return lo <= a < hi
        return False

    def is_stack_ptr(self, a: int) -> bool:
        i = a >> self.shift
        if 0 < i <= self.M:
            lo, hi = self._stack[i]
            return lo <= a < hi
        return False

    def is_global_ptr(self, a: int) -> bool:
        i = a >> self.shift
        if 0 < i <= self.M:
            lo, hi = self._glob[i]
            return lo <= a < hi
        return False

    def kind(self, a: int) -> str:
        if self.is_heap_ptr(a):
            return "heap"
        if self.is_stack_ptr(a):
            return "stack"
        if self.is_global_ptr(a):
            return "global"
        return "lowfat-gap" if self.is_ptr(a) else "non-fat"
