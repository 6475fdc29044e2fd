"""Durable, content-addressed storage for uploaded trace archives.

Layout under the data directory:

    store/<aa>/<sha256>/archive.tgz     the uploaded bytes, verbatim
    store/<aa>/<sha256>/trace/          extracted meta.json + events files
    index.jsonl                         append-only upload log

where ``<aa>`` is the first two hex characters of the archive's SHA-256
and ``<sha256>`` (the full digest) is the trace id.  An upload becomes
visible only after its store directory has been fully written, fsynced
and renamed into place; the index line is appended (and fsynced) after
that, as a single whole-line write.  A crash can therefore leave an
orphaned store directory, but never an index entry pointing at a
missing or half-written trace — orphans are silently adopted when the
same archive is uploaded again.

Uploads are validated before anything is stored: the archive must be a
gzipped tar below the size cap containing a parseable trace (meta.json
plus events files), and a trace whose metadata carries no anonymization
fingerprint must not contain any global IP address.
"""
from __future__ import annotations

import errno
import fcntl
import hashlib
import io
import json
import os
import shutil
import tarfile
import threading
from dataclasses import dataclass
from pathlib import Path

from ..model import NetAddress, TraceEvent
from ..traceio import Trace, TraceParseError, load_trace_dir

__all__ = [
    "DEFAULT_MAX_UPLOAD",
    "TraceRecord",
    "TraceStore",
    "ValidationFailure",
]

DEFAULT_MAX_UPLOAD = 64 * 1024 * 1024

_INDEX_NAME = "index.jsonl"
_LOCK_NAME = ".index.lock"
_ARCHIVE_NAME = "archive.tgz"
_TRACE_SUBDIR = "trace"


class ValidationFailure(ValueError):
    """The uploaded archive was rejected; ``reason`` says why."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True)
class TraceRecord:
    """One accepted upload, as logged in the index."""

    trace_id: str
    app: str
    received_at: str
    size_bytes: int
    event_count: int

    def to_json_obj(self) -> dict:
        return {
            "trace_id": self.trace_id,
            "app": self.app,
            "received_at": self.received_at,
            "size_bytes": self.size_bytes,
            "event_count": self.event_count,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "TraceRecord":
        return cls(
            trace_id=obj["trace_id"],
            app=obj["app"],
            received_at=obj["received_at"],
            size_bytes=obj["size_bytes"],
            event_count=obj["event_count"],
        )


def _has_global_addr(event: TraceEvent) -> bool:
    addr = getattr(event.args, "addr", None)
    if isinstance(addr, NetAddress) and addr.is_ip and addr.is_global:
        return True
    return False


def _fsync_dir(path: Path) -> None:
    fd = os.open(path, os.O_RDONLY | os.O_DIRECTORY)
    try:
        os.fsync(fd)
    finally:
        os.close(fd)


class TraceStore:
    """Content-addressed trace storage plus the append-only index."""

    def __init__(self, root: Path, max_upload_bytes: int = DEFAULT_MAX_UPLOAD):
        self.root = Path(root)
        self.max_upload_bytes = max_upload_bytes
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "store").mkdir(exist_ok=True)
        self._index_path = self.root / _INDEX_NAME
        self._lock_path = self.root / _LOCK_NAME
        self._mu = threading.Lock()

    # -- paths ---------------------------------------------------------

    def _slot(self, trace_id: str) -> Path:
        return self.root / "store" / trace_id[:2] / trace_id

    def trace_dir(self, trace_id: str) -> Path:
        return self._slot(trace_id) / _TRACE_SUBDIR

    def archive_path(self, trace_id: str) -> Path:
        return self._slot(trace_id) / _ARCHIVE_NAME

    # -- index ---------------------------------------------------------

    def records(self) -> list[TraceRecord]:
        """All accepted uploads, in arrival order.

        A torn final line (possible only if the writer died mid-write,
        which the whole-line append is designed to prevent) is skipped
        rather than poisoning every listing.
        """
        out: list[TraceRecord] = []
        try:
            data = self._index_path.read_bytes()
        except FileNotFoundError:
            return out
        for line in data.split(b"\n"):
            if not line:
                continue
            try:
                out.append(TraceRecord.from_json_obj(json.loads(line)))
            except (ValueError, KeyError):
                continue
        return out

    def get(self, trace_id: str) -> TraceRecord | None:
        for rec in self.records():
            if rec.trace_id == trace_id:
                return rec
        return None

    def index_version(self) -> int:
        """Monotonic token identifying the current index state."""
        try:
            return self._index_path.stat().st_size
        except FileNotFoundError:
            return 0

    def _append_index(self, record: TraceRecord) -> None:
        line = (json.dumps(record.to_json_obj(), separators=(",", ":")) + "\n").encode()
        with self._mu:
            lock_fd = os.open(self._lock_path, os.O_CREAT | os.O_WRONLY, 0o644)
            try:
                fcntl.flock(lock_fd, fcntl.LOCK_EX)
                fd = os.open(self._index_path, os.O_CREAT | os.O_WRONLY | os.O_APPEND, 0o644)
                try:
                    os.write(fd, line)
                    os.fsync(fd)
                finally:
                    os.close(fd)
            finally:
                os.close(lock_fd)

    # -- validation ----------------------------------------------------

    def _extract(self, data: bytes, dest: Path) -> None:
        try:
            tar = tarfile.open(fileobj=io.BytesIO(data), mode="r:gz")
        except tarfile.TarError as exc:
            raise ValidationFailure(f"not a gzipped tar archive: {exc}") from None
        with tar:
            total = 0
            for member in tar.getmembers():
                name = member.name
                if name.startswith(("/", "..")) or ".." in Path(name).parts:
                    raise ValidationFailure(f"unsafe member path {name!r}")
                if member.isdir():
                    continue
                if not member.isreg():
                    raise ValidationFailure(f"non-regular member {name!r}")
                total += member.size
                if total > self.max_upload_bytes:
                    raise ValidationFailure("archive expands past the size cap")
                target = dest / Path(name).name  # flatten: traces are one level
                src = tar.extractfile(member)
                if src is None:
                    raise ValidationFailure(f"unreadable member {name!r}")
                with src, open(target, "wb") as dst:
                    dst.write(src.read())

    def _validate(self, trace_path: Path) -> Trace:
        try:
            trace = load_trace_dir(trace_path)
        except TraceParseError as exc:
            raise ValidationFailure(f"bad trace: {exc}") from None
        if not trace.meta.salt_fp:
            for event in trace.events():
                if _has_global_addr(event):
                    raise ValidationFailure(
                        "trace carries global addresses but no anonymization fingerprint"
                    )
        return trace

    # -- upload --------------------------------------------------------

    def add_archive(self, data: bytes, received_at: str) -> tuple[TraceRecord, bool]:
        """Store an uploaded archive; returns (record, created).

        ``created`` is False when this exact archive was seen before —
        re-uploads are acknowledged with the original record.
        """
        if len(data) > self.max_upload_bytes:
            raise ValidationFailure(
                f"archive is {len(data)} bytes; limit is {self.max_upload_bytes}"
            )
        trace_id = hashlib.sha256(data).hexdigest()
        existing = self.get(trace_id)
        if existing is not None:
            return existing, False

        slot = self._slot(trace_id)
        if not slot.exists():
            tmp = slot.parent / f".tmp.{trace_id}.{os.getpid()}"
            shutil.rmtree(tmp, ignore_errors=True)
            (tmp / _TRACE_SUBDIR).mkdir(parents=True)
            try:
                self._extract(data, tmp / _TRACE_SUBDIR)
                self._validate(tmp / _TRACE_SUBDIR)
                (tmp / _ARCHIVE_NAME).write_bytes(data)
                for p in tmp.rglob("*"):
                    if p.is_file():
                        fd = os.open(p, os.O_RDONLY)
                        try:
                            os.fsync(fd)
                        finally:
                            os.close(fd)
                try:
                    os.rename(tmp, slot)
                except OSError as exc:
                    if exc.errno != errno.ENOTEMPTY:  # concurrent identical upload
                        raise
                _fsync_dir(slot.parent)
            finally:
                shutil.rmtree(tmp, ignore_errors=True)

        trace = load_trace_dir(self.trace_dir(trace_id))
        record = TraceRecord(
            trace_id=trace_id,
            app=trace.meta.app,
            received_at=received_at,
            size_bytes=len(data),
            event_count=trace.event_count(),
        )
        self._append_index(record)
        return record, True

    # -- reading -------------------------------------------------------

    def load_trace(self, trace_id: str) -> Trace:
        return load_trace_dir(self.trace_dir(trace_id), trace_tag=trace_id[:12])
