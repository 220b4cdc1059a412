"""Exception hierarchy shared by every hkpc module."""


class HkpcError(Exception):
    """Base class for all errors raised by hkpc."""


class DomainError(HkpcError, ValueError):
    """An argument lies outside the domain of an operation."""


class StructuralError(HkpcError, ValueError):
    """Shapes, counts or dimensions of the inputs disagree."""


class TruncatedStreamError(HkpcError):
    """A bit or byte stream ended before the decoder was done with it."""


class CorruptStreamError(HkpcError):
    """A payload or container failed an integrity or consistency check."""


class UnsupportedFormatError(HkpcError):
    """Bad magic number or unknown format version."""


class ParseError(HkpcError, ValueError):
    """Malformed text or media input (sidecar, CSV, Y4M, PGM)."""


class GeneratorError(HkpcError):
    """An external generator or mask command failed or misbehaved."""


class KeyCodecError(HkpcError):
    """The external key-frame encoder or decoder failed."""
