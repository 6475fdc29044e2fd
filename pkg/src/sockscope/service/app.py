"""FastAPI application for receiving and analyzing trace uploads.

Report endpoints return the exact bytes produced by the shared report
serializer (sorted keys, compact separators, trailing newline), so a
report fetched over HTTP is byte-identical to one produced locally by
the command-line analyzer for the same data.
"""
from __future__ import annotations

import base64
import binascii
import datetime as dt
import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query, Request, Response

from ..analysis import compute_report, report_json
from ..traceio import Corpus
from .schemas import HealthResponse, TraceListResponse, TraceSummary, UploadResponse
from .store import DEFAULT_MAX_UPLOAD, TraceRecord, TraceStore, ValidationFailure

__all__ = ["create_app"]


def _utcnow_iso() -> str:
    return dt.datetime.now(dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def _encode_cursor(received_at: str, trace_id: str) -> str:
    raw = f"{received_at}|{trace_id}".encode()
    return base64.urlsafe_b64encode(raw).decode().rstrip("=")


def _decode_cursor(cursor: str) -> tuple[str, str]:
    pad = "=" * (-len(cursor) % 4)
    try:
        raw = base64.urlsafe_b64decode(cursor + pad).decode()
        received_at, trace_id = raw.split("|", 1)
    except (binascii.Error, UnicodeDecodeError, ValueError):
        raise HTTPException(status_code=400, detail="malformed cursor") from None
    return received_at, trace_id


class _ReportCache:
    """Keeps rendered report bytes per scope until the index moves."""

    def __init__(self):
        self._mu = threading.Lock()
        self._entries: dict[str, tuple[int, bytes]] = {}

    def get(self, scope: str, version: int) -> bytes | None:
        with self._mu:
            hit = self._entries.get(scope)
            if hit and hit[0] == version:
                return hit[1]
            return None

    def put(self, scope: str, version: int, payload: bytes) -> None:
        with self._mu:
            self._entries[scope] = (version, payload)


def create_app(data_dir: Path, max_upload_bytes: int = DEFAULT_MAX_UPLOAD) -> FastAPI:
    """Build the service around a data directory."""
    store = TraceStore(Path(data_dir), max_upload_bytes=max_upload_bytes)
    cache = _ReportCache()
    app = FastAPI(title="sockscope ingest", version="0.1.0")
    app.state.store = store

    @app.get("/healthz", response_model=HealthResponse)
    def healthz() -> HealthResponse:
        return HealthResponse(status="ok", trace_count=len(store.records()))

    @app.post("/api/traces", response_model=UploadResponse)
    async def upload_trace(request: Request, response: Response) -> UploadResponse:
        data = await request.body()
        if not data:
            raise HTTPException(status_code=400, detail="empty upload")
        try:
            record, created = store.add_archive(data, received_at=_utcnow_iso())
        except ValidationFailure as exc:
            status = 413 if "limit is" in exc.reason else 400
            raise HTTPException(status_code=status, detail=exc.reason) from None
        response.status_code = 201 if created else 200
        return UploadResponse(
            trace_id=record.trace_id,
            created=created,
            app=record.app,
            event_count=record.event_count,
            received_at=record.received_at,
        )

    def _sorted_records(app_filter: str | None) -> list[TraceRecord]:
        records = store.records()
        if app_filter is not None:
            records = [r for r in records if r.app == app_filter]
        return sorted(records, key=lambda r: (r.received_at, r.trace_id))

    @app.get("/api/traces", response_model=TraceListResponse)
    def list_traces(
        app_filter: str | None = Query(default=None, alias="app"),
        cursor: str | None = Query(default=None),
        limit: int = Query(default=100, ge=1, le=1000),
    ) -> TraceListResponse:
        records = _sorted_records(app_filter)
        if cursor is not None:
            mark = _decode_cursor(cursor)
            records = [r for r in records if (r.received_at, r.trace_id) > mark]
        page = records[:limit]
        next_cursor = None
        if len(records) > limit and page:
            next_cursor = _encode_cursor(page[-1].received_at, page[-1].trace_id)
        return TraceListResponse(
            traces=[TraceSummary(**r.to_json_obj()) for r in page],
            next_cursor=next_cursor,
        )

    def _report_response(payload: bytes) -> Response:
        return Response(content=payload, media_type="application/json")

    @app.get("/api/traces/{trace_id}/report")
    def trace_report(trace_id: str) -> Response:
        record = store.get(trace_id)
        if record is None:
            raise HTTPException(status_code=404, detail="no such trace")
        scope = f"trace:{trace_id}"
        version = store.index_version()
        payload = cache.get(scope, version)
        if payload is None:
            corpus = Corpus(traces=[store.load_trace(trace_id)])
            payload = report_json(compute_report(corpus))
            cache.put(scope, version, payload)
        return _report_response(payload)

    @app.get("/api/corpus/report")
    def corpus_report(
        app_filter: str | None = Query(default=None, alias="app"),
    ) -> Response:
        scope = f"corpus:{app_filter or '*'}"
        version = store.index_version()
        payload = cache.get(scope, version)
        if payload is None:
            records = _sorted_records(app_filter)
            corpus = Corpus(traces=[store.load_trace(r.trace_id) for r in records])
            payload = report_json(compute_report(corpus))
            cache.put(scope, version, payload)
        return _report_response(payload)

    return app
