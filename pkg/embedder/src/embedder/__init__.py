"""Word-embedding export companion for the xlrobust toolkit."""

from .export import (
    ExportError,
    ExportJob,
    compute_vectors,
    export_token_counts,
    export_vectors,
    make_job,
    token_counts,
)

__version__ = "0.1.0"
