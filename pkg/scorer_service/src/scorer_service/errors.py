"""Service-side error taxonomy."""


class ScorerServiceError(Exception):
    """Base class for scorer service errors."""


class UndecodableAudio(ScorerServiceError):
    """Audio payload that is neither a readable file nor base64 WAV bytes."""


class EncoderFailure(ScorerServiceError):
    """The embedding encoder could not process an input."""


class EmptyDataset(ScorerServiceError):
    """Training requested on zero pairs."""


class NonFiniteLoss(ScorerServiceError):
    """Training loss became NaN or infinite."""


class ModelNotLoaded(ScorerServiceError):
    """Prediction requested before all three heads were loaded."""


class BindFailure(ScorerServiceError):
    """The service could not bind its listen address."""
