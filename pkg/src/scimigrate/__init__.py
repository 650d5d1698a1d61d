"""scimigrate: measuring international scholarly migration from authorship records."""

__version__ = "0.1.0"

from .records import (
    UNKNOWN,
    AuthorDossier,
    AuthorshipRecord,
    Corpus,
    ParseReport,
    SchemaMismatchError,
    group_by_author,
    parse_corpus,
)

__all__ = [
    "UNKNOWN",
    "AuthorDossier",
    "AuthorshipRecord",
    "Corpus",
    "ParseReport",
    "SchemaMismatchError",
    "group_by_author",
    "parse_corpus",
    "__version__",
]
