"""Exception types raised across the package."""


class BSTreeError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(BSTreeError, ValueError):
    """Invalid parameter combination."""


class ShapeError(BSTreeError, ValueError):
    """Input of the wrong length or alphabet."""


class StreamOrderError(BSTreeError, ValueError):
    """A stream point arrived with a sequence number not above the previous one."""


class StreamParseError(BSTreeError, ValueError):
    def __init__(self, path, lineno, message):
        self.path = path
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


class RangeViolation(BSTreeError, ValueError):
    """A word was offered to an MBR whose range does not contain it."""


class DuplicateRangeError(BSTreeError, KeyError):
    """An MBR range is already present in the tree."""


class WindowEvicted(BSTreeError, KeyError):
    """The archive no longer holds the requested window."""


class DataError(BSTreeError, ValueError):
    """Dataset unusable for the requested experiment (too short, unreadable)."""
