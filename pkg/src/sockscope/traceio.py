"""Reading and writing the on-disk trace format.

One trace directory holds ``meta.json`` plus one ``events.<pid>.jsonl``
file per traced process.  Every event line is a JSON object with exactly
the keys ``ts``, ``tid``, ``fn``, ``args``, ``ret``, ``err``; addresses
inside ``args`` serialize as ``{"family","addr","port"}``.
"""
from __future__ import annotations

import io
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .functions import BY_NAME, ApiFunction
from .lifecycles import build_lifecycles, collapse_twins
from .model import (
    AddrArgs,
    DupArgs,
    EpollArgs,
    FcntlArgs,
    FdArgs,
    FnArgs,
    IoArgs,
    IoctlArgs,
    NetAddress,
    PollArgs,
    SendfileArgs,
    SockoptArgs,
    SocketArgs,
    SocketLifecycle,
    TraceEvent,
    TraceMeta,
)

META_NAME = "meta.json"
EVENTS_GLOB = "events.*.jsonl"
_EVENTS_RE = re.compile(r"^events\.(\d+)\.jsonl$")


class TraceParseError(ValueError):
    """A trace file line failed validation."""

    def __init__(self, reason: str, line_no: int | None = None, path: str | None = None):
        self.reason = reason
        self.line_no = line_no
        self.path = path
        where = ""
        if path:
            where += f"{path}:"
        if line_no is not None:
            where += f"{line_no}:"
        super().__init__(f"{where} {reason}" if where else reason)


class UnknownFunctionError(TraceParseError):
    """The fn field named something outside the capture set."""


# ---------------------------------------------------------------------------
# Addresses
# ---------------------------------------------------------------------------


def addr_to_json(addr: NetAddress) -> dict:
    return {"family": addr.family, "addr": addr.text(), "port": addr.port}


def addr_from_json(obj: dict) -> NetAddress:
    family = obj.get("family")
    if family not in ("ipv4", "ipv6", "unix", "unspec"):
        raise ValueError(f"bad address family {family!r}")
    try:
        return NetAddress.from_text(family, obj.get("addr", ""), int(obj.get("port", 0)))
    except (ValueError, TypeError) as exc:
        raise ValueError(f"bad address literal: {exc}") from None


# ---------------------------------------------------------------------------
# Event args <-> JSON
# ---------------------------------------------------------------------------

_F = ApiFunction

_SOCKETS = {_F.SOCKET, _F.SOCKETPAIR}
_ADDRS = {_F.BIND, _F.CONNECT, _F.GETSOCKNAME, _F.GETPEERNAME, _F.ACCEPT, _F.ACCEPT4}
_IO = {
    _F.SEND, _F.SENDTO, _F.SENDMSG, _F.SENDMMSG,
    _F.WRITE, _F.WRITEV,
    _F.RECV, _F.RECVFROM, _F.RECVMSG, _F.RECVMMSG,
    _F.READ, _F.READV,
}
_SOCKOPTS = {_F.GETSOCKOPT, _F.SETSOCKOPT}
_POLLS = {_F.POLL, _F.PPOLL, _F.SELECT, _F.PSELECT}
_EPOLLS = {_F.EPOLL_CREATE, _F.EPOLL_CREATE1, _F.EPOLL_CTL, _F.EPOLL_WAIT, _F.EPOLL_PWAIT}
_DUPS = {_F.DUP, _F.DUP2, _F.DUP3}
_FDS = {_F.CLOSE, _F.SHUTDOWN, _F.LISTEN}


def args_to_json(fn: ApiFunction, args: FnArgs) -> dict:
    """Encode one args record; optional fields are omitted when empty."""
    if fn in _SOCKETS:
        assert isinstance(args, SocketArgs)
        out: dict = {
            "domain": args.domain,
            "type": args.sock_type,
            "protocol": args.protocol,
        }
        if args.flags:
            out["flags"] = list(args.flags)
        if args.sv is not None:
            out["sv"] = list(args.sv)
        return out
    if fn in _ADDRS:
        assert isinstance(args, AddrArgs)
        out = {"fd": args.fd}
        if args.addr is not None:
            out["addr"] = addr_to_json(args.addr)
        if args.flags:
            out["flags"] = list(args.flags)
        return out
    if fn in _IO:
        assert isinstance(args, IoArgs)
        out = {"fd": args.fd, "bytes": args.bytes}
        if args.flags:
            out["flags"] = list(args.flags)
        if args.iov is not None:
            out["iov"] = args.iov
        if args.addr is not None:
            out["addr"] = addr_to_json(args.addr)
        return out
    if fn in _SOCKOPTS:
        assert isinstance(args, SockoptArgs)
        out = {"fd": args.fd, "level": args.level, "optname": args.optname}
        if args.optval is not None:
            out["optval"] = args.optval
        return out
    if fn is _F.FCNTL:
        assert isinstance(args, FcntlArgs)
        out = {"fd": args.fd, "cmd": args.cmd}
        if args.flags is not None:
            out["flags"] = list(args.flags)
        if args.arg is not None:
            out["arg"] = args.arg
        return out
    if fn is _F.IOCTL:
        assert isinstance(args, IoctlArgs)
        return {"fd": args.fd, "request": args.request}
    if fn in _POLLS:
        assert isinstance(args, PollArgs)
        return {"nfds": args.nfds, "timeout_ms": args.timeout_ms}
    if fn in _EPOLLS:
        assert isinstance(args, EpollArgs)
        out = {}
        if args.epfd is not None:
            out["epfd"] = args.epfd
        if args.op is not None:
            out["op"] = args.op
        if args.fd is not None:
            out["fd"] = args.fd
        if args.events:
            out["events"] = list(args.events)
        if args.size is not None:
            out["size"] = args.size
        if args.flags is not None:
            out["flags"] = args.flags
        if args.maxevents is not None:
            out["maxevents"] = args.maxevents
        if args.timeout_ms is not None:
            out["timeout_ms"] = args.timeout_ms
        return out
    if fn in _DUPS:
        assert isinstance(args, DupArgs)
        return {"oldfd": args.oldfd, "newfd": args.newfd}
    if fn in _FDS:
        assert isinstance(args, FdArgs)
        out = {"fd": args.fd}
        if args.how is not None:
            out["how"] = args.how
        if args.backlog is not None:
            out["backlog"] = args.backlog
        return out
    if fn is _F.SENDFILE:
        assert isinstance(args, SendfileArgs)
        return {"out_fd": args.out_fd, "in_fd": args.in_fd, "count": args.count}
    raise ValueError(f"no serializer for {fn}")


def _flags(obj: dict, key: str = "flags") -> tuple[str, ...]:
    raw = obj.get(key, [])
    if not isinstance(raw, list) or not all(isinstance(x, str) for x in raw):
        raise ValueError(f"{key} must be a list of strings")
    return tuple(sorted(raw))


def _int(obj: dict, key: str) -> int:
    v = obj.get(key)
    if not isinstance(v, int) or isinstance(v, bool):
        raise ValueError(f"missing or non-integer {key!r}")
    return v


def _opt_addr(obj: dict) -> NetAddress | None:
    raw = obj.get("addr")
    if raw is None:
        return None
    if not isinstance(raw, dict):
        raise ValueError("addr must be an object")
    return addr_from_json(raw)


def args_from_json(fn: ApiFunction, obj: dict) -> FnArgs:
    """Decode one args record, validating the fields this fn requires."""
    if not isinstance(obj, dict):
        raise ValueError("args must be an object")
    if fn in _SOCKETS:
        domain = obj.get("domain")
        sock_type = obj.get("type")
        if not isinstance(domain, str) or not isinstance(sock_type, str):
            raise ValueError("socket args need string domain and type")
        sv = None
        if "sv" in obj:
            raw = obj["sv"]
            if (
                not isinstance(raw, list)
                or len(raw) != 2
                or not all(isinstance(x, int) for x in raw)
            ):
                raise ValueError("sv must be a pair of fds")
            sv = (raw[0], raw[1])
        return SocketArgs(
            domain=domain,
            sock_type=sock_type,
            protocol=_int(obj, "protocol") if "protocol" in obj else 0,
            flags=_flags(obj),
            sv=sv,
        )
    if fn in _ADDRS:
        need_addr = fn in (_F.BIND, _F.CONNECT)
        addr = _opt_addr(obj)
        if need_addr and addr is None:
            raise ValueError(f"{fn.value} args need an addr")
        return AddrArgs(fd=_int(obj, "fd"), addr=addr, flags=_flags(obj))
    if fn in _IO:
        return IoArgs(
            fd=_int(obj, "fd"),
            bytes=_int(obj, "bytes"),
            flags=_flags(obj),
            iov=_int(obj, "iov") if "iov" in obj else None,
            addr=_opt_addr(obj),
        )
    if fn in _SOCKOPTS:
        level = obj.get("level")
        optname = obj.get("optname")
        if not isinstance(level, str) or not isinstance(optname, str):
            raise ValueError("sockopt args need string level and optname")
        optval = obj.get("optval")
        if optval is not None and not isinstance(optval, (int, dict)):
            raise ValueError("optval must be an int or an object")
        return SockoptArgs(fd=_int(obj, "fd"), level=level, optname=optname, optval=optval)
    if fn is _F.FCNTL:
        cmd = obj.get("cmd")
        if not isinstance(cmd, str):
            raise ValueError("fcntl args need a string cmd")
        flags = tuple(sorted(obj["flags"])) if "flags" in obj else None
        if flags is not None and not all(isinstance(x, str) for x in flags):
            raise ValueError("fcntl flags must be strings")
        return FcntlArgs(
            fd=_int(obj, "fd"),
            cmd=cmd,
            flags=flags,
            arg=_int(obj, "arg") if "arg" in obj else None,
        )
    if fn is _F.IOCTL:
        request = obj.get("request")
        if not isinstance(request, str):
            raise ValueError("ioctl args need a string request")
        return IoctlArgs(fd=_int(obj, "fd"), request=request)
    if fn in _POLLS:
        return PollArgs(nfds=_int(obj, "nfds"), timeout_ms=_int(obj, "timeout_ms"))
    if fn in _EPOLLS:
        if fn is _F.EPOLL_CTL:
            for key in ("epfd", "op", "fd"):
                if key not in obj:
                    raise ValueError(f"epoll_ctl args need {key!r}")
        if fn in (_F.EPOLL_WAIT, _F.EPOLL_PWAIT) and "epfd" not in obj:
            raise ValueError(f"{fn.value} args need epfd")
        op = obj.get("op")
        if op is not None and not isinstance(op, str):
            raise ValueError("epoll op must be a string")
        return EpollArgs(
            epfd=_int(obj, "epfd") if "epfd" in obj else None,
            op=op,
            fd=_int(obj, "fd") if "fd" in obj else None,
            events=_flags(obj, "events"),
            size=_int(obj, "size") if "size" in obj else None,
            flags=_int(obj, "flags") if "flags" in obj else None,
            maxevents=_int(obj, "maxevents") if "maxevents" in obj else None,
            timeout_ms=_int(obj, "timeout_ms") if "timeout_ms" in obj else None,
        )
    if fn in _DUPS:
        return DupArgs(oldfd=_int(obj, "oldfd"), newfd=_int(obj, "newfd"))
    if fn in _FDS:
        how = obj.get("how")
        if how is not None and not isinstance(how, str):
            raise ValueError("shutdown how must be a string")
        return FdArgs(
            fd=_int(obj, "fd"),
            how=how,
            backlog=_int(obj, "backlog") if "backlog" in obj else None,
        )
    if fn is _F.SENDFILE:
        return SendfileArgs(
            out_fd=_int(obj, "out_fd"),
            in_fd=_int(obj, "in_fd"),
            count=_int(obj, "count"),
        )
    raise ValueError(f"no parser for {fn}")


# ---------------------------------------------------------------------------
# Event lines
# ---------------------------------------------------------------------------


def event_to_json(event: TraceEvent) -> str:
    """One event as a single JSON line (no trailing newline)."""
    doc = {
        "ts": event.ts_us,
        "tid": event.tid,
        "fn": event.fn.value,
        "args": args_to_json(event.fn, event.args),
        "ret": event.ret,
        "err": event.err,
    }
    return json.dumps(doc, separators=(",", ":"))


def event_from_json(line: str, line_no: int | None = None, path: str | None = None) -> TraceEvent:
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise TraceParseError(f"invalid JSON: {exc.msg}", line_no, path) from None
    if not isinstance(doc, dict):
        raise TraceParseError("event line is not an object", line_no, path)
    missing = {"ts", "tid", "fn", "args", "ret", "err"} - doc.keys()
    if missing:
        raise TraceParseError(f"missing keys: {sorted(missing)}", line_no, path)
    fn_name = doc["fn"]
    fn = BY_NAME.get(fn_name)
    if fn is None:
        raise UnknownFunctionError(f"unknown function {fn_name!r}", line_no, path)
    try:
        args = args_from_json(fn, doc["args"])
    except ValueError as exc:
        raise TraceParseError(f"bad args for {fn_name}: {exc}", line_no, path) from None
    for key in ("ts", "tid", "ret", "err"):
        if not isinstance(doc[key], int) or isinstance(doc[key], bool):
            raise TraceParseError(f"non-integer {key!r}", line_no, path)
    return TraceEvent(
        ts_us=doc["ts"], tid=doc["tid"], fn=fn, args=args, ret=doc["ret"], err=doc["err"]
    )


def serialize_events(events: Iterable[TraceEvent]) -> bytes:
    buf = io.StringIO()
    for ev in events:
        buf.write(event_to_json(ev))
        buf.write("\n")
    return buf.getvalue().encode()


def parse_trace(data: bytes | str, meta: TraceMeta | None = None, path: str | None = None) -> list[TraceEvent]:
    """Parse one events file; raises :class:`TraceParseError` with the
    offending line number on any malformed line."""
    if isinstance(data, bytes):
        data = data.decode("utf-8", errors="strict")
    events = []
    for line_no, line in enumerate(data.splitlines(), start=1):
        if not line.strip():
            continue
        events.append(event_from_json(line, line_no, path))
    return events


# ---------------------------------------------------------------------------
# Metadata
# ---------------------------------------------------------------------------


def meta_to_json(meta: TraceMeta) -> str:
    doc: dict = {
        "app": meta.app,
        "cmd": meta.cmd,
        "os": meta.os,
        "tracer_version": meta.tracer_version,
        "started_at": meta.started_at,
        "salt_fp": meta.salt_fp,
        "opt_out": meta.opt_out,
    }
    if not meta.opt_out:
        if meta.kernel is not None:
            doc["kernel"] = meta.kernel
        if meta.netcfg is not None:
            doc["netcfg"] = meta.netcfg
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def meta_from_json(data: bytes | str, path: str | None = None) -> TraceMeta:
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise TraceParseError(f"invalid meta JSON: {exc.msg}", None, path) from None
    if not isinstance(doc, dict):
        raise TraceParseError("meta is not an object", None, path)
    for key in ("app", "cmd", "os", "tracer_version", "started_at", "salt_fp"):
        if not isinstance(doc.get(key), str):
            raise TraceParseError(f"meta missing string field {key!r}", None, path)
    opt_out = doc.get("opt_out", False)
    if not isinstance(opt_out, bool):
        raise TraceParseError("meta opt_out must be a boolean", None, path)
    return TraceMeta(
        app=doc["app"],
        cmd=doc["cmd"],
        os=doc["os"],
        tracer_version=doc["tracer_version"],
        started_at=doc["started_at"],
        salt_fp=doc["salt_fp"],
        opt_out=opt_out,
        kernel=doc.get("kernel"),
        netcfg=doc.get("netcfg"),
    )


# ---------------------------------------------------------------------------
# Traces and corpora
# ---------------------------------------------------------------------------


@dataclass
class Trace:
    """One trace directory in memory: metadata plus per-process streams."""

    meta: TraceMeta
    streams: list[tuple[int, list[TraceEvent]]] = field(default_factory=list)
    lifecycles: list[SocketLifecycle] = field(default_factory=list)
    unattributed: list[TraceEvent] = field(default_factory=list)

    def events(self) -> Iterator[TraceEvent]:
        for _pid, evs in self.streams:
            yield from evs

    def event_count(self) -> int:
        return sum(len(evs) for _pid, evs in self.streams)


@dataclass
class Corpus:
    """A set of traces under analysis."""

    traces: list[Trace] = field(default_factory=list)

    def apps(self) -> list[str]:
        return sorted({t.meta.app for t in self.traces})

    def all_lifecycles(self) -> Iterator[tuple[Trace, SocketLifecycle]]:
        for trace in self.traces:
            for lc in trace.lifecycles:
                yield trace, lc


def assemble_trace(
    meta: TraceMeta,
    streams: list[tuple[int, list[TraceEvent]]],
    trace_tag: str,
    collapse: bool = False,
) -> Trace:
    """Build lifecycles per process stream and bundle them into a Trace."""
    trace = Trace(meta=meta)
    for pid, events in streams:
        if collapse:
            events = collapse_twins(events)
        built = build_lifecycles(events, id_prefix=f"{trace_tag}:{pid}:")
        trace.streams.append((pid, events))
        trace.lifecycles.extend(built.lifecycles)
        trace.unattributed.extend(built.unattributed)
    return trace


def load_trace_dir(path: Path, trace_tag: str | None = None, collapse: bool = False) -> Trace:
    """Read one directory holding meta.json and events.<pid>.jsonl files."""
    path = Path(path)
    meta_path = path / META_NAME
    if not meta_path.is_file():
        raise TraceParseError("missing meta.json", None, str(path))
    meta = meta_from_json(meta_path.read_bytes(), str(meta_path))
    streams = []
    for events_path in sorted(path.glob(EVENTS_GLOB)):
        m = _EVENTS_RE.match(events_path.name)
        if not m:
            continue
        pid = int(m.group(1))
        events = parse_trace(events_path.read_bytes(), meta, str(events_path))
        streams.append((pid, events))
    return assemble_trace(meta, streams, trace_tag or path.name, collapse)


def find_trace_dirs(root: Path) -> list[Path]:
    """Every directory under ``root`` (inclusive) holding a meta.json."""
    root = Path(root)
    if (root / META_NAME).is_file():
        return [root]
    return sorted(p.parent for p in root.rglob(META_NAME))


def load_corpus(root: Path, collapse: bool = False) -> Corpus:
    """Load every trace directory under ``root`` into one corpus."""
    root = Path(root)
    if not root.exists():
        raise FileNotFoundError(f"no such directory: {root}")
    corpus = Corpus()
    for idx, trace_dir in enumerate(find_trace_dirs(root)):
        corpus.traces.append(load_trace_dir(trace_dir, trace_tag=f"t{idx}", collapse=collapse))
    return corpus


def write_trace_dir(path: Path, meta: TraceMeta, streams: list[tuple[int, list[TraceEvent]]]) -> None:
    """Materialize a trace directory (used by the corpus generator)."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    (path / META_NAME).write_text(meta_to_json(meta))
    for pid, events in streams:
        (path / f"events.{pid}.jsonl").write_bytes(serialize_events(events))
