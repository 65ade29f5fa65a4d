"""Exception hierarchy shared by the codec, the bitstream layer and the CLI."""


class CodecError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(CodecError, ValueError):
    """A buffer has the wrong length or holds unusable values."""


class NumericOverflowError(CodecError, ArithmeticError):
    """A filter produced a non-finite value (unstable filter misuse)."""


class LspConversionError(CodecError):
    """Root finding did not locate every line spectral frequency."""


class MalformedFrameError(CodecError):
    """Frame parameters contain an index outside its legal range."""


class TruncatedFrameError(CodecError):
    """A packed frame is shorter than its mode requires."""


class ContainerError(CodecError):
    """A container file is corrupt, truncated or not a container at all."""

    def __init__(self, message, frame_index=None):
        if frame_index is not None:
            message = f"{message} (frame {frame_index})"
        super().__init__(message)
        self.frame_index = frame_index


class NotAContainerError(ContainerError):
    """Magic bytes or version do not match."""
