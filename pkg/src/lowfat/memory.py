"""Backing memory for the low-fat regions.

``SimulatedMemory`` keeps a sparse table of committed 4KB pages so the full
address layout can be modelled without reserving anything.
``RealMemory`` reserves every region at its absolute address with
``mmap(MAP_NORESERVE | MAP_FIXED_NOREPLACE)`` and reads/writes through
memoryviews.  Both refuse accesses outside the regions and the
platform-fallback blocks, so a stray address raises instead of crashing.
"""
from __future__ import annotations

import ctypes
import ctypes.util
import mmap
import os
from bisect import bisect_right

from .errors import MemoryFault, OutOfMemory, ReservationError
from .layout import round_up

PAGE = 4096
PAGE_SHIFT = 12

_MAP_NORESERVE = getattr(mmap, "MAP_NORESERVE", 0x4000)
_MAP_FIXED_NOREPLACE = 0x100000
_MADV_DONTNEED = getattr(mmap, "MADV_DONTNEED", 4)


class _Blocks:
    """Sorted non-overlapping [start, end) platform-fallback blocks."""

    def __init__(self):
        self.starts = []
        self.info = {}

    def add(self, start, length, payload=None):
        i = bisect_right(self.starts, start)
        self.starts.insert(i, start)
        self.info[start] = (length, payload)

    def remove(self, start):
        length, payload = self.info.pop(start)
        self.starts.remove(start)
        return length, payload

    def find(self, a, n=1):
        i = bisect_right(self.starts, a) - 1
        if i < 0:
            return None
        s = self.starts[i]
        length, payload = self.info[s]
        if a + n <= s + length:
            return s, length, payload
        return None


class Memory:
    """Shared address checks; subclasses provide the byte store."""

    mode = None

    def __init__(self, region_size: int, M: int):
        self.region_size = region_size
        self.M = M
        self.shift = region_size.bit_length() - 1
        self.lo = region_size
        self.hi = (M + 1) * region_size
        self.blocks = _Blocks()

    def _check(self, a, n):
        if self.lo <= a and a + n <= self.hi:
            return
        if self.blocks.find(a, n) is None:
            raise MemoryFault(a, n)

    def platform_size(self, a):
        """Length of the fallback block starting exactly at ``a``, else None."""
        info = self.blocks.info.get(a)
        return None if info is None else info[0]

    # word helpers shared by both stores
    def read_word(self, a: int) -> int:
        return int.from_bytes(self.read(a, 8), "little")

    def write_word(self, a: int, v: int) -> None:
        self.write(a, (v & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little"))

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class SimulatedMemory(Memory):
    mode = "simulated"

    def __init__(self, region_size: int, M: int):
        super().__init__(region_size, M)
        self.pages = {}
        self.peak_pages = 0
        self._platform_next = round_up(self.hi, 1 << 20)

    @property
    def committed_bytes(self):
        return len(self.pages) * PAGE

    def _page(self, p):
        pg = self.pages.get(p)
        if pg is None:
            pg = memoryview(bytearray(PAGE))
            self.pages[p] = pg
            if len(self.pages) > self.peak_pages:
                self.peak_pages = len(self.pages)
        return pg

    def read_word(self, a):
        if a & 7:
            return super().read_word(a)
        if not (self.lo <= a and a + 8 <= self.hi):
            self._check(a, 8)
        pg = self.pages.get(a >> PAGE_SHIFT)
        if pg is None:
            return 0
        return int.from_bytes(pg[a & 4095:(a & 4095) + 8], "little")

    def write_word(self, a, v):
        if a & 7:
            return super().write_word(a, v)
        if not (self.lo <= a and a + 8 <= self.hi):
            self._check(a, 8)
        off = a & 4095
        self._page(a >> PAGE_SHIFT)[off:off + 8] = (v & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")

    def read(self, a, n):
        self._check(a, n)
        out = bytearray()
        while n > 0:
            off = a & 4095
            k = min(n, PAGE - off)
            pg = self.pages.get(a >> PAGE_SHIFT)
            out += bytes(k) if pg is None else pg[off:off + k]
            a += k
            n -= k
        return bytes(out)

    def write(self, a, data):
        n = len(data)
        self._check(a, n)
        data = memoryview(bytes(data))
        i = 0
        while i < n:
            off = a & 4095
            k = min(n - i, PAGE - off)
            self._page(a >> PAGE_SHIFT)[off:off + k] = data[i:i + k]
            a += k
            i += k

    def zero(self, a, n):
        self._check(a, n)
        end = a + n
        while a < end:
            off = a & 4095
            k = min(end - a, PAGE - off)
            pg = self.pages.get(a >> PAGE_SHIFT)
            if pg is not None:
                if k == PAGE:
                    del self.pages[a >> PAGE_SHIFT]
                else:
                    pg[off:off + k] = bytes(k)
            a += k

    def words(self, a, nbytes):
        """All 8-byte words in [a, a + nbytes); ``a`` must be word aligned."""
        off = a & 4095
        if off + nbytes <= PAGE and self.lo <= a and a + nbytes <= self.hi:
            pg = self.pages.get(a >> PAGE_SHIFT)
            if pg is None:
                return [0] * (nbytes >> 3)
            return pg[off:off + nbytes].cast("Q").tolist()
        self._check(a, nbytes)
        out = []
        end = a + nbytes
        while a < end:
            off = a & 4095
            k = min(end - a, PAGE - off)
            pg = self.pages.get(a >> PAGE_SHIFT)
            if pg is None:
                out.extend([0] * (k >> 3))
            else:
                out.extend(pg[off:off + k].cast("Q").tolist())
            a += k
        return out

    def release(self, a, n):
        """Drop whole pages in [a, a + n); they read back as zero."""
        p = (a + PAGE - 1) >> PAGE_SHIFT
        last = (a + n) >> PAGE_SHIFT
        if last - p > len(self.pages):
            for q in [q for q in self.pages if p <= q < last]:
                del self.pages[q]
        else:
            for q in range(p, last):
                self.pages.pop(q, None)

    def platform_alloc(self, n, align=16):
        a = round_up(self._platform_next, max(align, PAGE))
        length = round_up(max(n, 1), PAGE)
        if a + length > 1 << 64:
            raise OutOfMemory(f"platform area exhausted for {n} bytes")
        self._platform_next = a + length
        self.blocks.add(a, length)
        return a

    def platform_free(self, a):
        length, _ = self.blocks.remove(a)
        self.release(a, length)


def _libc():
    lib = ctypes.CDLL(ctypes.util.find_library("c") or None, use_errno=True)
    lib.mmap.restype = ctypes.c_void_p
    lib.mmap.argtypes = [ctypes.c_void_p, ctypes.c_size_t, ctypes.c_int, ctypes.c_int,
                         ctypes.c_int, ctypes.c_long]
    lib.munmap.restype = ctypes.c_int
    lib.munmap.argtypes = [ctypes.c_void_p, ctypes.c_size_t]
    lib.madvise.restype = ctypes.c_int
    lib.madvise.argtypes = [ctypes.c_void_p, ctypes.c_size_t, ctypes.c_int]
    return lib


_MAP_FAILED = ctypes.c_void_p(-1).value


class RealMemory(Memory):
    mode = "real"

    def __init__(self, region_size: int, M: int):
        super().__init__(region_size, M)
        if region_size < PAGE:
            raise ReservationError(f"region size {region_size} is smaller than a page")
        self._libc = _libc()
        self._views = [None] * (M + 1)
        self._words = [None] * (M + 1)
        self._reserved = []
        prot = mmap.PROT_READ | mmap.PROT_WRITE
        flags = mmap.MAP_PRIVATE | mmap.MAP_ANONYMOUS | _MAP_NORESERVE | _MAP_FIXED_NOREPLACE
        for i in range(1, M + 1):
            want = i * region_size
            got = self._libc.mmap(want, region_size, prot, flags, -1, 0)
            if got != want:
                err = ctypes.get_errno()
                if got not in (None, _MAP_FAILED):
                    self._libc.munmap(got, region_size)
                self.close()
                raise ReservationError(
                    f"cannot reserve region #{i} at {want:#x}: {os.strerror(err) if err else 'address taken'}",
                    region_index=i)
            self._reserved.append(want)
            buf = (ctypes.c_char * region_size).from_address(want)
            self._views[i] = memoryview(buf).cast("B")
            self._words[i] = self._views[i].cast("Q")

    def close(self):
        for i in range(len(self._views)):
            if self._words[i] is not None:
                self._words[i].release()
                self._views[i].release()
                self._words[i] = self._views[i] = None
        for a in self._reserved:
            self._libc.munmap(a, self.region_size)
        self._reserved = []
        for s in list(self.blocks.starts):
            self.platform_free(s)

    def _view(self, a, n):
        i = a >> self.shift
        if 0 < i <= self.M and (a + n - 1) >> self.shift == i:
            return self._views[i], a - i * self.region_size
        hit = self.blocks.find(a, n)
        if hit is None:
            raise MemoryFault(a, n)
        start, _, payload = hit
        return payload[0], a - start

    def read_word(self, a):
        i = a >> self.shift
        if not a & 7 and 0 < i <= self.M and self._words[i] is not None:
            return self._words[i][(a - i * self.region_size) >> 3]
        v, off = self._view(a, 8)
        return int.from_bytes(v[off:off + 8], "little")

    def write_word(self, a, val):
        i = a >> self.shift
        if not a & 7 and 0 < i <= self.M and self._words[i] is not None:
            self._words[i][(a - i * self.region_size) >> 3] = val & 0xFFFFFFFFFFFFFFFF
            return
        v, off = self._view(a, 8)
        v[off:off + 8] = (val & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")

    def read(self, a, n):
        if n == 0:
            return b""
        v, off = self._view(a, n)
        return bytes(v[off:off + n])

    def write(self, a, data):
        n = len(data)
        if n == 0:
            return
        v, off = self._view(a, n)
        v[off:off + n] = data

    def zero(self, a, n):
        if n == 0:
            return
        self._view(a, n)
        ctypes.memset(a, 0, n)

    def words(self, a, nbytes):
        i = a >> self.shift
        if 0 < i <= self.M and (a + nbytes - 1) >> self.shift == i and not a & 7:
            off = (a - i * self.region_size) >> 3
            return self._words[i][off:off + (nbytes >> 3)].tolist()
        if nbytes == 0:
            return []
        v, off = self._view(a, nbytes)
        return v[off:off + nbytes].cast("Q").tolist()

    def release(self, a, n):
        lo = round_up(a, PAGE)
        hi = (a + n) & ~(PAGE - 1)
        if hi > lo:
            self._view(lo, hi - lo)
            self._libc.madvise(lo, hi - lo, _MADV_DONTNEED)

    def platform_alloc(self, n, align=16):
        length = round_up(max(n, 1), PAGE)
        extra = max(align, PAGE) - PAGE
        prot = mmap.PROT_READ | mmap.PROT_WRITE
        got = self._libc.mmap(None, length + extra, prot,
                             mmap.MAP_PRIVATE | mmap.MAP_ANONYMOUS | _MAP_NORESERVE, -1, 0)
        if got in (None, _MAP_FAILED):
            raise OutOfMemory(f"platform allocation of {n} bytes failed")
        a = round_up(got, max(align, PAGE))
        view = memoryview((ctypes.c_char * length).from_address(a)).cast("B")
        self.blocks.add(a, length, (view, got, length + extra))
        return a

    def platform_free(self, a):
        length, (view, mapped, mapped_len) = self.blocks.remove(a)
        view.release()
        self._libc.munmap(mapped, mapped_len)

    @property
    def committed_bytes(self):
        return None


def make_memory(mode: str, region_size: int, M: int) -> Memory:
    if mode == "real":
        return RealMemory(region_size, M)
    return SimulatedMemory(region_size, M)
