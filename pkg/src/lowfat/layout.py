"""Size configuration, region geometry and the derived lookup tables.

A region is a ``region_size``-byte slab of address space.  Region ``i``
(1 <= i <= M) serves objects of exactly ``sizes[i]`` bytes; region 0 and
everything above region M is "non-fat".  Each low-fat region is split into
heap, stack and global sub-regions.
"""
from __future__ import annotations

import enum
from bisect import bisect_left
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, InvalidArgument, NonFatFallback

MAX_U64 = (1 << 64) - 1
WORD = 8
KB = 1 << 10
MB = 1 << 20
GB = 1 << 30

# Multi-page classes from this size up must be powers of two.
LARGE_CLASS = 16 * KB

DEFAULT_REGION_SIZE = 32 * GB
DEFAULT_SIZES = (
    16, 32, 48, 64, 80, 96, 112, 128, 144, 160, 192, 224, 256,
    272, 320, 384, 448, 512, 528, 640, 768, 896, 1024,
    1040, 1280, 1536, 1792, 2048, 2064, 2560, 3072, 3584, 4096,
    4112, 5120, 6144, 7168, 8192, 8208, 10240, 12288,
    16 * KB, 32 * KB, 64 * KB, 128 * KB, 256 * KB, 512 * KB, 1 * MB,
    2 * MB, 4 * MB, 8 * MB, 16 * MB, 32 * MB, 64 * MB, 128 * MB,
    256 * MB, 512 * MB, 1 * GB, 2 * GB, 4 * GB, 8 * GB,
)


class Mode(enum.Enum):
    REAL = "real"
    SIMULATED = "simulated"


def is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def next_pow2(n: int) -> int:
    return 1 if n <= 1 else 1 << (n - 1).bit_length()


def round_up(n: int, k: int) -> int:
    return -(-n // k) * k


@dataclass(frozen=True)
class SizeConfig:
    region_size: int = DEFAULT_REGION_SIZE
    sizes: tuple = DEFAULT_SIZES
    mode: Mode = Mode.REAL

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(self.sizes))

    @property
    def M(self) -> int:
        return len(self.sizes)

    @classmethod
    def default(cls, mode: Mode = Mode.REAL) -> "SizeConfig":
        return cls(DEFAULT_REGION_SIZE, DEFAULT_SIZES, mode)


@dataclass(frozen=True)
class Violation:
    rule: str
    size: int
    message: str

    def __str__(self):
        return f"[{self.rule}] {self.message}"


def validate_config(config: SizeConfig) -> list[Violation]:
    """Return every broken rule of ``config``; an empty list means valid."""
    out = []
    R = config.region_size
    if not is_pow2(R):
        out.append(Violation("region", R, f"region size {R} is not a power of two"))
    sizes = config.sizes
    if not sizes:
        out.append(Violation("ordering", 0, "size sequence is empty"))
        return out
    for prev, cur in zip(sizes, sizes[1:]):
        if cur <= prev:
            out.append(Violation("ordering", cur, f"{cur} does not exceed its predecessor {prev}"))
    for s in sizes:
        if s <= 0 or s % 16:
            out.append(Violation("multiple-of-16", s, f"{s} is not a multiple of 16"))
        if s >= LARGE_CLASS and not is_pow2(s):
            out.append(Violation("large-pow2", s, f"{s} is a multi-page size but not a power of two"))
    # the power-of-two chain must reach a class covering the largest size
    top = max(sizes)
    present = set(sizes)
    p = 16
    while p <= max(next_pow2(top), 16):
        if p not in present:
            out.append(Violation("pow2-chain", p,
                                 f"missing power of two {p} (sequence max {top})"))
        p <<= 1
    if top > R // 4:
        out.append(Violation("bound", top, f"{top} exceeds a quarter of the region size {R}"))
    if (len(sizes) + 1) * R > 1 << 64:
        out.append(Violation("bound", R, "regions do not fit in a 64-bit address space"))
    return out


@dataclass(frozen=True)
class Span:
    start: int
    end: int

    def __contains__(self, a):
        return self.start <= a < self.end

    def __len__(self):
        return self.end - self.start


@dataclass(frozen=True)
class SubRegionLayout:
    """Per region index: heap, stack and global spans (index 0 unused)."""

    heap: tuple
    stack: tuple
    glob: tuple


def subregion_layout(config: SizeConfig) -> SubRegionLayout:
    R = config.region_size
    heap, stack, glob = [None], [None], [None]
    for i, s in enumerate(config.sizes, 1):
        lo = i * R
        cuts = (lo, lo + R // 2, lo + 3 * R // 4, lo + R)
        heap.append(Span(round_up(cuts[0], s), cuts[1]))
        stack.append(Span(round_up(cuts[1], s), cuts[2]))
        glob.append(Span(round_up(cuts[2], s), cuts[3]))
    return SubRegionLayout(tuple(heap), tuple(stack), tuple(glob))


def magic_for(size: int, radix: int = 64) -> int:
    return (1 << radix) // size + 1


def first_bad_offset(base: int, size: int, magic: int, radix: int = 64) -> int:
    """Smallest offset r in [0, size) at which the fixed-point base of
    ``base + r`` differs from ``base``; ``size`` if there is none.

    The fixed-point quotient is non-decreasing in r, so the good offsets
    form a prefix and a binary search finds its end.
    """
    q = base // size

    def good(r):
        return ((base + r) * magic) >> radix == q

    if good(size - 1):
        return size
    lo, hi = 0, size - 1  # good(lo) holds, good(hi) fails
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if good(mid):
            lo = mid
        else:
            hi = mid
    return hi


@dataclass(frozen=True)
class RegionTables:
    region_size: int
    sizes: tuple
    masks: tuple
    magics: tuple
    thresholds: tuple
    radix: int = 64
    _small: tuple = field(default=(), repr=False, compare=False)

    @property
    def M(self) -> int:
        return len(self.sizes) - 1

    @property
    def region_shift(self) -> int:
        return self.region_size.bit_length() - 1

    # Indices past M are answered as non-fat without materialising entries.
    def size_at(self, i: int) -> int:
        return self.sizes[i] if 0 < i <= self.M else MAX_U64

    def mask_at(self, i: int) -> int:
        return self.masks[i] if 0 < i <= self.M else 0

    def magic_at(self, i: int) -> int:
        return self.magics[i] if 0 < i <= self.M else 0

    def threshold_at(self, i: int) -> int:
        return self.thresholds[i] if 0 < i <= self.M else 0

    def pow2_indices(self) -> list[int]:
        return [i for i in range(1, self.M + 1) if is_pow2(self.sizes[i])]


_SMALL_LIMIT = 16 * KB


def build_tables(config: SizeConfig, radix: int = 64) -> RegionTables:
    violations = validate_config(config)
    if violations:
        raise ConfigError("invalid size configuration: " + "; ".join(map(str, violations)),
                          violations)
    R = config.region_size
    sizes = (MAX_U64,) + config.sizes
    masks = [0]
    magics = [0]
    thresholds = [0]
    for i, s in enumerate(config.sizes, 1):
        masks.append(MAX_U64 ^ (s - 1) if is_pow2(s) else 0)
        m = magic_for(s, radix)
        magics.append(m)
        # the topmost full slot of the region has the largest fixed-point error
        top = ((i + 1) * R // s) * s - s
        thresholds.append(first_bad_offset(top, s, m, radix))
    small = [0] * (_SMALL_LIMIT // 16 + 1)
    j = 1
    for k in range(1, len(small)):
        while j <= len(config.sizes) and sizes[j] < k * 16:
            j += 1
        small[k] = j
    return RegionTables(R, sizes, tuple(masks), tuple(magics), tuple(thresholds), radix,
                        tuple(small))


def alloc_size_for(request: int, tables: RegionTables) -> tuple[int, int]:
    """Map a request to ``(region index, allocation size)``.

    Requests that could reach a fixed-point error zone of their natural
    region are promoted to the next region.  Raises ``NonFatFallback`` when
    no region can hold the request.
    """
    if request < 1:
        raise InvalidArgument(f"request must be at least 1 byte, got {request}")
    M = tables.M
    if request <= _SMALL_LIMIT:
        i = tables._small[(request + 15) >> 4]
    else:
        i = bisect_left(tables.sizes, request, 1, M + 1)
    while i <= M and request > tables.thresholds[i]:
        i += 1
    if i > M:
        raise NonFatFallback(request)
    return i, tables.sizes[i]


def pow2_size_for(request: int, tables: RegionTables, min_size: int = 0) -> tuple[int, int]:
    """Like ``alloc_size_for`` but restricted to power-of-two classes.

    ``min_size`` raises the class floor (for alignment) without counting
    toward the promotion check, which only the ``request`` bytes need.
    """
    if request < 1:
        raise InvalidArgument(f"request must be at least 1 byte, got {request}")
    for i in tables.pow2_indices():
        if tables.sizes[i] >= max(request, min_size) and tables.thresholds[i] >= request:
            return i, tables.sizes[i]
    raise NonFatFallback(request)


# --- config files ------------------------------------------------------------

def parse_config(text: str) -> SizeConfig:
    """Parse ``region_size=<bytes>`` / ``mode=<real|simulated>`` / one size per line."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if len(lines) < 2:
        raise ConfigError("config needs region_size and mode lines")
    key, _, value = lines[0].partition("=")
    if key.strip() != "region_size":
        raise ConfigError(f"line 1 must be region_size=<bytes>, got {lines[0]!r}")
    try:
        region_size = int(value.strip(), 0)
    except ValueError:
        raise ConfigError(f"bad region size {value!r}") from None
    key, _, value = lines[1].partition("=")
    if key.strip() != "mode":
        raise ConfigError(f"line 2 must be mode=real|simulated, got {lines[1]!r}")
    try:
        mode = Mode(value.strip().lower())
    except ValueError:
        raise ConfigError(f"unknown mode {value.strip()!r}") from None
    try:
        sizes = tuple(int(ln, 0) for ln in lines[2:])
    except ValueError as e:
        raise ConfigError(f"bad size line: {e}") from None
    return SizeConfig(region_size, sizes, mode)


def format_config(config: SizeConfig) -> str:
    out = [f"region_size={config.region_size}", f"mode={config.mode.value}"]
    out += [str(s) for s in config.sizes]
    return "\n".join(out) + "\n"


def load_config(path) -> SizeConfig:
    return parse_config(Path(path).read_text())


DEFAULT_CONFIG_TEXT = format_config(SizeConfig.default())
