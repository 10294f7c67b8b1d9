"""Exception types shared across the toolkit.

Everything raised on bad input data derives from :class:`DataError`, so the
CLI can map usage problems to exit code 1 and data problems to exit code 2.
"""


class DataError(Exception):
    """Malformed or inconsistent input data."""


class ConllParseError(DataError):
    """A CoNLL line could not be parsed; carries the 1-based line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class BioValidationError(DataError):
    """A sentence violates BIO tagging rules where validity is required."""


class LexiconError(DataError):
    """A lexicon file or lexicon operation is invalid (e.g. empty lexicon)."""


class FetchError(DataError):
    """A remote fetch failed after retries, or the response was malformed."""


class EmbeddingFormatError(DataError):
    """An embedding table file violates the word2vec-style text format."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class MissingVectorError(DataError):
    """The query word has no vector in the embedding table."""


class NoCandidatesError(DataError):
    """No substitution candidate has a vector in the embedding table."""


class AlignmentError(DataError):
    """Gold data and predictions diverge; carries the first bad position."""

    def __init__(self, position: int, message: str):
        super().__init__(f"position {position}: {message}")
        self.position = position


class SchemaError(DataError):
    """A JSON-lines record violates the expected schema."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class StatsError(DataError):
    """Statistical input is degenerate (too few pairs, zero variance, ...)."""
