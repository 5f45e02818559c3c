"""Exception hierarchy.

Every error raised by the library derives from :class:`OcspError`, which is a
``ValueError`` so callers that only care about bad input can catch that.
"""


class OcspError(ValueError):
    pass


class DuplicateEntries(OcspError):
    pass


class ArityMismatch(OcspError):
    pass


class IndexOutOfRange(OcspError):
    pass


class EmptyInstance(OcspError):
    pass


class InvalidAlphabet(OcspError):
    pass


class LengthMismatch(OcspError):
    pass


class BlockTooSmall(OcspError):
    pass


class AlphabetTooSmall(OcspError):
    pass


class TooLarge(OcspError):
    pass


class ExactModeTooLarge(TooLarge):
    pass


class TooManyEdges(OcspError):
    pass


class OutOfRange(OcspError):
    pass


class EmptyStream(OcspError):
    pass


class StateBoundExceeded(OcspError):
    pass


class InvalidEpsilon(OcspError):
    pass


class InvalidParameters(OcspError):
    pass
