"""HTTP ingest service: uploads, storage, and rendered reports."""
from .app import create_app
from .store import TraceRecord, TraceStore, ValidationFailure

__all__ = ["TraceRecord", "TraceStore", "ValidationFailure", "create_app"]
