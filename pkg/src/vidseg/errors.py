"""Typed error hierarchy.

Every failure mode the engine can hit maps to one exception class; the CLI
prints the class name on stderr so callers can dispatch on it without parsing
messages.
"""


class VidsegError(Exception):
    """Base class for all engine errors."""


# array container / manifest
class UnsupportedDtype(VidsegError):
    pass


class BadMagic(VidsegError):
    pass


class HeaderParse(VidsegError):
    pass


class TruncatedData(VidsegError):
    pass


class MissingFile(VidsegError):
    pass


class ManifestParse(VidsegError):
    pass


class InconsistentChannels(VidsegError):
    pass


# shared shape / value errors
class ShapeMismatch(VidsegError):
    pass


class ChannelMismatch(VidsegError):
    pass


class MissingBlock(VidsegError):
    pass


# clustering
class TooFewPoints(VidsegError):
    pass


class NonFiniteInput(VidsegError):
    pass


# context model
class LabelOutOfRange(VidsegError):
    pass


class EmptyBatch(VidsegError):
    pass


# refinement
class ZeroVector(VidsegError):
    pass


class EmptyList(VidsegError):
    pass


# modulation
class SOutOfRange(VidsegError):
    pass


class InvalidSchedule(VidsegError):
    pass


class InvalidTarget(VidsegError):
    pass


# metrics
class NoValidPixels(VidsegError):
    pass


class WindowTooLong(VidsegError):
    pass


# synthetic generator / IO
class IoError(VidsegError):
    pass


# external backbone protocol
class MalformedRequest(VidsegError):
    pass


class BackboneUnavailable(VidsegError):
    pass
