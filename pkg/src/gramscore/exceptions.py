"""Exception types shared across the package."""


class GramscoreError(Exception):
    """Base class for all package errors."""


class ValidationError(GramscoreError):
    """Input data violates a documented precondition or invariant."""


class ParseFailure(GramscoreError):
    """A model response contained no token interpretable as a score."""


class OutOfRangeScore(GramscoreError):
    """A parsed score fell outside the 1-5 rubric range."""


class TrainingDivergenceError(GramscoreError):
    """A training step produced a non-finite loss.

    Carries enough context to locate the offending batch.
    """

    def __init__(self, message, batch_positions=None, epoch=None, batch_index=None):
        super().__init__(message)
        self.batch_positions = list(batch_positions) if batch_positions else []
        self.epoch = epoch
        self.batch_index = batch_index


class UndefinedCorrelationError(GramscoreError):
    """A correlation is undefined because one input has zero variance."""


class ConfigurationError(GramscoreError):
    """Invalid or incomplete run configuration (e.g. missing credentials)."""
