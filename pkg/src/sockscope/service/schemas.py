"""Request/response bodies for the ingest API."""
from __future__ import annotations

from pydantic import BaseModel

__all__ = [
    "HealthResponse",
    "TraceListResponse",
    "TraceSummary",
    "UploadResponse",
]


class UploadResponse(BaseModel):
    trace_id: str
    created: bool
    app: str
    event_count: int
    received_at: str


class TraceSummary(BaseModel):
    trace_id: str
    app: str
    received_at: str
    size_bytes: int
    event_count: int


class TraceListResponse(BaseModel):
    traces: list[TraceSummary]
    next_cursor: str | None = None


class HealthResponse(BaseModel):
    status: str
    trace_count: int
