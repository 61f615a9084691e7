"""Exception hierarchy for the gg-ez toolkit.

Three branches matter for exit-code mapping in the CLI:

* :class:`ConfigError`       -> exit 2 (bad flags, config files, parameters)
* :class:`DataError`         -> exit 3 (malformed or inconsistent inputs)
* :class:`ExternalToolError` -> exit 4 (scorer / translator / evaluator failures)
"""

from __future__ import annotations


class GgezError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(GgezError):
    """Invalid configuration: flags, config files, out-of-range parameters.

    ``problems`` collects every issue found during validation so callers can
    report all of them at once instead of failing on the first.
    """

    def __init__(self, message: str, problems: list[str] | None = None):
        super().__init__(message)
        self.problems = list(problems) if problems else [message]


class DataError(GgezError):
    """Malformed or inconsistent input data."""


class ExternalToolError(GgezError):
    """An external scorer, translator, or evaluator process failed."""


# --- parity-core -------------------------------------------------------------

class EmptyQuality(DataError):
    """A quality aggregate was requested over zero metrics."""


class InvalidQuality(DataError):
    """A quality value is NaN or infinite."""


class MissingIndex(DataError):
    """A (region, year) cell is absent from the globalization table."""


class EmptyCandidates(DataError):
    """Best-parity selection was asked to choose among zero candidates."""


# --- merge-engine ------------------------------------------------------------

class FormatError(DataError):
    """A checkpoint container file violates the binary format."""


class UnsupportedDtype(DataError):
    """A tensor declares a dtype this toolkit does not handle."""


class IncompatibleCheckpoints(DataError):
    """Two checkpoints disagree on tensor names, shapes, or dtypes."""


class InvalidBeta(DataError):
    """An interpolation weight lies outside [0, 1]."""


class InvalidGrid(DataError):
    """A sweep grid is empty, out of range, or contains duplicates."""


class EvaluatorError(ExternalToolError):
    """An evaluator command failed for a particular grid point."""

    def __init__(self, beta: float, diagnostic: str):
        super().__init__(f"evaluator failed at beta={beta!r}: {diagnostic}")
        self.beta = beta
        self.diagnostic = diagnostic


class IoError(GgezError):
    """Reading or writing a file failed at the OS level."""


# --- data-filter -------------------------------------------------------------

class UnknownRegion(DataError):
    """A record's region tag resolves to no region in the partition."""


class MissingReward(DataError):
    """Filtering requires a reward score the record does not carry."""


class ScoringError(ExternalToolError):
    """A scorer produced no usable reward for one or more records."""

    def __init__(self, message: str, failures: list[tuple[str, str]] | None = None):
        super().__init__(message)
        # (record id, reason) pairs
        self.failures = failures or []


class MissingTranslator(ConfigError):
    """A target language has no assigned translator."""


class TranslationError(ExternalToolError):
    """A translator failed for one or more jobs."""

    def __init__(self, message: str, failures: list[tuple[str, str]] | None = None):
        super().__init__(message)
        # (job id, reason) pairs
        self.failures = failures or []


class InsufficientPool(DataError):
    """A sampling request exceeds the pool size (without replacement)."""


# --- eval-harness ------------------------------------------------------------

class EmptyScores(DataError):
    """A score table has no categories or no items."""


class NoOrderedPairs(DataError):
    """No pair of items has strictly ordered human scores."""


class IncompleteItem(DataError):
    """An item is missing the score for one of the ranked models."""


class IncompleteModel(DataError):
    """A model is missing rows for a required scope in a breakdown."""
