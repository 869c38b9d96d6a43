"""Exception hierarchy.

Everything raised on bad data or a bad file derives from :class:`BlockCompError`
so callers (and the CLI) can tell data errors apart from programming errors.
Configuration problems additionally derive from :class:`ValueError`.
"""

from __future__ import annotations


class BlockCompError(Exception):
    """Base class for all library errors."""


class ConfigError(BlockCompError, ValueError):
    """An illegal combination of parameters."""


class NotPowerOfTwo(ConfigError):
    pass


class NonDivisibleDims(ConfigError):
    pass


class PlanMismatch(ConfigError):
    pass


class LengthTooSmall(ConfigError):
    pass


class SizeMismatch(BlockCompError):
    pass


class NonFiniteValue(BlockCompError):
    def __init__(self, index: int):
        super().__init__(f"non-finite value at linear index {index}")
        self.index = index


class DimMismatch(BlockCompError, ValueError):
    pass


class DegenerateRange(BlockCompError, ValueError):
    pass


class CorruptPayload(BlockCompError):
    pass


class MaskStreamMismatch(CorruptPayload):
    pass


class CorruptStream(BlockCompError):
    pass


class CorruptContainer(BlockCompError):
    pass


class BadMagic(CorruptContainer):
    pass


class VersionUnsupported(CorruptContainer):
    pass


class TruncatedFile(CorruptContainer):
    pass


class CrcMismatch(CorruptContainer):
    def __init__(self, chunk: int | None):
        where = "header" if chunk is None else f"chunk {chunk}"
        super().__init__(f"CRC mismatch in {where}")
        self.chunk = chunk


class BlockOutOfRange(BlockCompError, IndexError):
    pass


class BubbleOutOfDomain(BlockCompError, ValueError):
    pass
