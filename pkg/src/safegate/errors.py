"""Exception types shared across the package."""


class SafegateError(Exception):
    """Base class for all package-specific errors."""


class SequenceTooLong(SafegateError):
    """Token sequence exceeds the encoder's sequence capacity."""


class ZeroVector(SafegateError):
    """A vector with (near-)zero norm was passed where a direction is required."""


class TransportError(SafegateError):
    """Network-level failure talking to a remote encoder."""


class ProtocolViolation(SafegateError):
    """Remote encoder response does not satisfy the wire protocol."""


class BadDims(SafegateError):
    """Recognizer layer sizes violate the progressive-reduction rule."""


class DimMismatch(SafegateError):
    """Vector or matrix dimensions are inconsistent."""


class EmptyBatch(SafegateError):
    """An empty batch was passed to a loss or gradient computation."""


class SingleClassDataset(SafegateError):
    """Training data contains only one label class."""


class EmptyPrompt(SafegateError):
    """The prompt has no content tokens to operate on."""


class TooLarge(SafegateError):
    """Input is too large for exhaustive enumeration."""


class TooFewSamples(SafegateError):
    """Not enough samples for a statistically defined quantity."""


class NoAttention(SafegateError):
    """The encoder result carries no attention tensor."""


class BadKeywordIndex(SafegateError):
    """A keyword index falls outside the prompt's content range."""


class FormatError(SafegateError):
    """A persisted file is corrupt or has an unsupported layout."""


class ParseError(SafegateError):
    """A corpus file is structurally unreadable (e.g. bad CSV header)."""


class TooSmall(SafegateError):
    """A dataset split would leave an empty stratum."""


class DatasetBuildError(SafegateError):
    """Encoding a corpus record failed; message carries the record index."""
