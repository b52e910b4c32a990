"""Exception hierarchy for the low-fat runtime."""


class LowFatError(Exception):
    pass


class ConfigError(LowFatError, ValueError):
    """A size configuration failed validation or could not be parsed."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class NonFatFallback(LowFatError):
    """The request exceeds every size class; the platform allocator must serve it."""

    def __init__(self, request):
        super().__init__(f"request of {request} bytes exceeds the largest size class")
        self.request = request


class ReservationError(LowFatError):
    """Startup failure while reserving or laying out region memory."""

    def __init__(self, message, region_index=None):
        super().__init__(message)
        self.region_index = region_index


class GlobalExhausted(ReservationError):
    pass


class OutOfMemory(LowFatError, MemoryError):
    pass


class StackExhausted(OutOfMemory):
    pass


class StackMisuse(LowFatError):
    pass


class InvalidArgument(LowFatError, ValueError):
    pass


class InvalidFree(LowFatError):
    """Raised for frees of non-heap or interior addresses.

    ``kind`` is one of ``"non-heap"``, ``"interior"`` or ``"unknown"``.
    """

    def __init__(self, address, kind):
        super().__init__(f"invalid free of {address:#x} ({kind})")
        self.address = address
        self.kind = kind


class MemoryFault(LowFatError):
    """Access outside any reserved or platform-allocated memory."""

    def __init__(self, address, length):
        super().__init__(f"access of {length} bytes at {address:#x} is outside mapped memory")
        self.address = address
        self.length = length


class BoundsError(LowFatError):
    def __init__(self, operand, offset, message=None):
        super().__init__(message or f"out-of-bounds access on {operand} at offset {offset}")
        self.operand = operand
        self.offset = offset


class NoMetadata(LowFatError):
    pass


class UntypedAddress(LowFatError):
    pass


class InvalidTag(LowFatError, ValueError):
    pass
