"""Shared exception types with stable CLI exit-code mapping."""


class DataError(Exception):
    """Invalid data in an input file or corpus (CLI exit code 2)."""


class CorpusFormatError(DataError):
    """A corpus, score, or verdict file violates its line-level schema."""


class AlignmentError(DataError):
    """Corpora or verdict sets that must share ids do not line up."""


class ConfigError(Exception):
    """Unusable run configuration or command usage (CLI exit code 1)."""
