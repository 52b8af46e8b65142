"""Exception and warning taxonomy shared across the toolkit."""


class EditForgeError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(EditForgeError):
    """Invalid configuration value or unusable flag combination."""


# audio io
class UnsupportedFormat(EditForgeError):
    """WAV encoding or channel layout outside the supported set."""


class CorruptFile(EditForgeError):
    """Container that cannot be parsed (bad magic, truncated chunks)."""


class IoFailure(EditForgeError):
    """OS-level read/write failure."""


class EmptyClip(EditForgeError):
    """Operation that needs samples received an empty clip."""


class OutOfRange(EditForgeError):
    """Window or offset outside the clip it addresses."""


# mixing
class WindowTooLong(EditForgeError):
    """Requested window exceeds the background duration."""


class DegenerateEvent(EditForgeError):
    """Event clip is effectively silent; peak gain is undefined."""


class DegenerateBackground(EditForgeError):
    """Background clip is effectively silent; peak gain is undefined."""


class RateMismatch(EditForgeError):
    """Clips with different sample rates cannot be mixed directly."""


# captions
class EmptyPrompt(EditForgeError):
    """Caption rendering requires non-empty component prompts."""


# dataset pipeline
class DurationMismatch(EditForgeError):
    """Replacement clip duration is incompatible with the event clip."""


class EventTooLong(EditForgeError):
    """Event clip is longer than the background it should be placed into."""


class IncompleteTuple(EditForgeError):
    """Tuple record is missing fields needed for triplet expansion."""


class SchemaViolation(EditForgeError):
    """Manifest line that does not match the expected record schema."""


# scoring
class OutOfRangeScore(EditForgeError):
    """Score outside the 1..5 scale."""


class DuplicateId(EditForgeError):
    """Two score rows share a triplet id."""


class TransportFailure(EditForgeError):
    """Remote scorer unreachable after the retry budget."""


class ProtocolViolation(EditForgeError):
    """Remote scorer response that breaks the wire contract."""


class ScoreJoinError(EditForgeError):
    """Score/triplet join with unmatched ids on either side."""

    def __init__(self, missing: set, unmatched: set):
        self.missing = frozenset(missing)
        self.unmatched = frozenset(unmatched)
        super().__init__(
            f"unscored triplet ids: {sorted(missing)!r}; "
            f"scores without triplets: {sorted(unmatched)!r}"
        )


# filtering
class EmptyPool(EditForgeError):
    """Filter stage applied to an empty record pool."""


# metrics
class LengthMismatch(EditForgeError):
    """Paired columns of different length."""


class ZeroVariance(EditForgeError):
    """Correlation undefined because a column is constant."""


class AllTied(EditForgeError):
    """Kendall tau undefined because one column is entirely tied."""


class TooFewSystems(EditForgeError):
    """System-level aggregation needs at least two systems."""


class InsufficientSamples(EditForgeError):
    """Too few embedding rows for a full-rank covariance estimate."""


class NumericalFailure(EditForgeError):
    """Eigensolver did not converge."""


class ShapeMismatch(EditForgeError):
    """Paired matrices with different shapes."""


class ZeroVector(EditForgeError):
    """Cosine similarity of a zero-norm vector."""


class ClipWarning(UserWarning):
    """Out-of-range samples were saturated during a pcm16 write."""


class UnderfilledWarning(UserWarning):
    """A top-k selection had fewer candidates than k."""
