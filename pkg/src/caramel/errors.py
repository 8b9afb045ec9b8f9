"""Exception hierarchy shared by every layer of the package."""


class CaramelError(Exception):
    pass


class DuplicateKeyError(CaramelError, ValueError):
    """Two build keys are identical or collide on their 128-bit fingerprint."""

    def __init__(self, first, second, message=None):
        self.first = first
        self.second = second
        super().__init__(message or f"duplicate fingerprint for keys {first!r} and {second!r}")


class DuplicateInRowError(CaramelError, ValueError):
    def __init__(self, row, value):
        self.row = row
        self.value = value
        super().__init__(f"row {row} contains value {value!r} more than once")


class ConstructionFailedError(CaramelError, RuntimeError):
    pass


class VariableRangeError(CaramelError, IndexError):
    pass


class UnsupportedCardinalityError(CaramelError, ValueError):
    pass


class UnknownSymbolError(CaramelError, KeyError):
    pass


class CorruptStreamError(CaramelError, ValueError):
    pass


class CorruptIndexError(CaramelError, ValueError):
    """Base class for anything wrong with a serialized or in-memory index."""


class IndexCorruptionError(CorruptIndexError):
    """A lookup decoded garbage: the solution bits or codebook are damaged."""


class BadMagicError(CorruptIndexError):
    pass


class VersionMismatchError(CorruptIndexError):
    pass


class TruncatedStreamError(CorruptIndexError):
    pass


class ChecksumMismatchError(CorruptIndexError):
    pass


class ColumnOutOfRangeError(CaramelError, IndexError):
    pass
