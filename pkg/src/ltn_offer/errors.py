"""Exception taxonomy for the package.

Every error raised by library code derives from LtnOfferError so callers
(and the CLI) can separate our failures from genuine bugs. ConfigError is
reserved for usage/configuration problems and maps to CLI exit code 2;
everything else maps to exit code 1.
"""


class LtnOfferError(Exception):
    """Base class for all package errors."""


class ConfigError(LtnOfferError):
    """Invalid configuration or command usage."""


class CorpusError(LtnOfferError):
    """Malformed corpus file or document."""


class DomainError(LtnOfferError):
    """Fuzzy truth value outside [0, 1] beyond tolerance."""


class TransportError(LtnOfferError):
    """Network-level failure talking to a model endpoint."""


class ProtocolError(TransportError):
    """Endpoint answered with a non-success status or unusable payload."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class ExtractionError(LtnOfferError):
    """A JSON completion could not be obtained within the retry budget."""

    def __init__(self, message: str, attempts: list[str] | None = None):
        super().__init__(message)
        # raw model outputs (or error strings), one per attempt
        self.attempts = list(attempts or [])


class RetrievalError(LtnOfferError):
    """Unknown chunk reference or inconsistent retrieval state."""


class LeakageError(LtnOfferError):
    """A pipeline touched a document outside its training fold during fit."""


class CalibrationError(LtnOfferError):
    """Threshold calibration or training preconditions violated."""


class TrainingError(LtnOfferError):
    """Non-finite loss or parameters during gate training."""


class EvidenceError(LtnOfferError):
    """Audit evidence reference cannot be resolved to a chunk."""
