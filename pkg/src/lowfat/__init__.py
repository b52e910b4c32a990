"""Low-fat memory allocator runtime with an extended allocation API."""
from .errors import (BoundsError, ConfigError, GlobalExhausted, InvalidArgument, InvalidFree,
                     InvalidTag, LowFatError, MemoryFault, NoMetadata, NonFatFallback, OutOfMemory,
                     ReservationError, StackExhausted, StackMisuse, UntypedAddress)
from .layout import (DEFAULT_REGION_SIZE, DEFAULT_SIZES, MAX_U64, Mode, RegionTables, SizeConfig,
                     SubRegionLayout, alloc_size_for, build_tables, load_config, parse_config,
                     subregion_layout, validate_config)
from .query import Query
from .heap import Allocator, HeapRegionState, reserve
from .stack_global import StackMachine, global_register
from .collector import Collector, MarkBitmap, RootSet

__version__ = "0.1.0"

__all__ = [
    "Allocator",
    "BoundsError",
    "Collector",
    "ConfigError",
    "DEFAULT_REGION_SIZE",
    "DEFAULT_SIZES",
    "GlobalExhausted",
    "HeapRegionState",
    "InvalidArgument",
    "InvalidFree",
    "InvalidTag",
    "LowFatError",
    "MAX_U64",
    "MarkBitmap",
    "MemoryFault",
    "Mode",
    "NoMetadata",
    "NonFatFallback",
    "OutOfMemory",
    "Query",
    "RegionTables",
    "ReservationError",
    "RootSet",
    "SizeConfig",
    "StackExhausted",
    "StackMachine",
    "StackMisuse",
    "SubRegionLayout",
    "UntypedAddress",
    "alloc_size_for",
    "build_tables",
    "global_register",
    "load_config",
    "parse_config",
    "reserve",
    "subregion_layout",
    "validate_config",
]
