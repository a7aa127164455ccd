"""Exception types shared across the pipeline."""


class PrereviewError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(PrereviewError):
    """A record file could not be parsed; the message names file and line."""


class EmptyCorpusError(PrereviewError):
    """An input file contained no usable records."""


class ConfigError(PrereviewError):
    """Invalid or inconsistent run configuration."""


class MissingArtifactError(PrereviewError):
    """A required upstream artifact is absent; the message names the command to run."""


class CapabilityError(PrereviewError):
    """A backend needs a model runtime that is not available here."""


class TrainingError(PrereviewError):
    """Training preconditions were not met (e.g. single-class data, too few pairs)."""


class DegenerateGenerationError(PrereviewError):
    """A generator kept producing empty output for one conditioning input."""


class UndefinedSimilarityError(PrereviewError):
    """Cosine similarity is undefined (a zero vector was supplied)."""
