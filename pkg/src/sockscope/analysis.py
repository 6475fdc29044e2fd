"""Corpus statistics.

Every operation here is a pure function of a :class:`~sockscope.traceio.Corpus`;
results never depend on trace load order.  ``compute_report`` bundles the
whole battery into a :class:`StatsReport` whose JSON form is byte-stable:
keys sorted, fractions rounded to four decimal digits at emission (full
precision is kept in memory).
"""
from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field

from .functions import (
    ApiFunction,
    FLAGGED_RECV,
    FLAGGED_SEND,
    PAYLOAD_FAMILY,
    RECV_FAMILY,
)
from .lifecycles import collapse_twins
from .model import (
    AddrArgs,
    FcntlArgs,
    IoArgs,
    IoctlArgs,
    SockoptArgs,
    SocketArgs,
    SocketLifecycle,
    TraceEvent,
)
from .traceio import Corpus

_F = ApiFunction


class WrongSocketTypeError(ValueError):
    """A classifier was handed a lifecycle of the wrong socket type."""


class WrongFunctionError(ValueError):
    """An operation was asked about a function outside its family."""


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

UDP_CLASSES = ("data", "connect_no_data", "netinfo_ioctl", "other")
TCP_CLASSES = (
    "local_rcvtimeo_only",
    "local_immediate_close",
    "local_wireless_check",
    "local_other",
    "remote_data",
    "remote_no_data",
)

#: The ioctl requests broken out individually on datagram sockets.
NETINFO_IOCTLS = (
    "SIOCGIFADDR",
    "SIOCGIFNAME",
    "SIOCGIFFLAGS",
    "SIOCGIFNETMASK",
    "SIOCGIFBRDADDR",
)

#: MSG_* flags broken out individually per transfer direction.
KNOWN_SEND_FLAGS = ("MSG_NOSIGNAL", "MSG_DONTWAIT", "MSG_MORE", "MSG_PEEK", "MSG_WAITALL")
KNOWN_RECV_FLAGS = KNOWN_SEND_FLAGS

MEMBERSHIP_OPTNAMES = frozenset(
    {
        "IP_ADD_MEMBERSHIP",
        "IP_ADD_SOURCE_MEMBERSHIP",
        "IPV6_ADD_MEMBERSHIP",
        "IPV6_JOIN_GROUP",
        "MCAST_JOIN_GROUP",
        "MCAST_JOIN_SOURCE_GROUP",
    }
)


def classify_udp(lc: SocketLifecycle) -> str:
    """Bucket a datagram socket by what it was used for.

    Precedence: payload exchange beats a bare connect beats interface
    ioctls beats everything else.
    """
    if lc.sock_type != "dgram":
        raise WrongSocketTypeError(f"classify_udp on {lc.sock_type!r} socket")
    has_connect = False
    has_ioctl = False
    for ev in lc.events:
        if ev.fn in PAYLOAD_FAMILY:
            return "data"
        if ev.fn is _F.CONNECT:
            has_connect = True
        elif ev.fn is _F.IOCTL:
            has_ioctl = True
    if has_connect:
        return "connect_no_data"
    if has_ioctl:
        return "netinfo_ioctl"
    return "other"


def _connects_remote(lc: SocketLifecycle) -> int | None:
    """Index of the first connect to a non-loopback IP address, if any."""
    for idx, ev in enumerate(lc.events):
        if ev.fn is _F.CONNECT and isinstance(ev.args, AddrArgs):
            addr = ev.args.addr
            if addr is not None and addr.is_ip and not addr.is_loopback:
                return idx
    return None


def classify_tcp(lc: SocketLifecycle) -> str:
    """Bucket a stream socket.

    A socket is *remote* when it connects to a non-loopback IP address;
    otherwise it is *local* (no connect, loopback connect, or a unix
    endpoint).  Remote sockets split on whether any payload call follows
    the connect; local ones on the shape of their whole history.
    """
    if lc.sock_type != "stream":
        raise WrongSocketTypeError(f"classify_tcp on {lc.sock_type!r} socket")
    remote_at = _connects_remote(lc)
    if remote_at is not None:
        for ev in lc.events[remote_at + 1:]:
            if ev.fn in PAYLOAD_FAMILY:
                return "remote_data"
        return "remote_no_data"
    body = lc.events[1:]  # everything after the creation call
    non_close = [ev for ev in body if ev.fn is not _F.CLOSE]
    if non_close and all(
        ev.fn is _F.SETSOCKOPT
        and isinstance(ev.args, SockoptArgs)
        and ev.args.optname == "SO_RCVTIMEO"
        for ev in non_close
    ):
        return "local_rcvtimeo_only"
    if body and not non_close:
        return "local_immediate_close"
    for ev in lc.events:
        if ev.fn is _F.IOCTL and isinstance(ev.args, IoctlArgs) and ev.args.request == "SIOCGIWNAME":
            return "local_wireless_check"
    return "local_other"


# ---------------------------------------------------------------------------
# Report pieces
# ---------------------------------------------------------------------------


@dataclass
class FunctionUsage:
    app_count: int
    call_count: int


@dataclass
class SockoptUsage:
    app_count: int
    call_count: int
    get_count: int
    set_count: int


@dataclass
class EmpiricalCdf:
    """Empirical distribution of an integer quantity.

    ``points`` are ``(value, cumulative fraction)`` at each distinct
    observed value, ascending; the last fraction is 1.0.
    """

    points: list[tuple[int, float]]
    n: int

    def at(self, x: int) -> float:
        """Fraction of observations <= x."""
        values = [v for v, _ in self.points]
        idx = bisect_right(values, x)
        return self.points[idx - 1][1] if idx else 0.0

    @classmethod
    def from_values(cls, values: list[int]) -> "EmpiricalCdf":
        from collections import Counter

        n = len(values)
        counts = Counter(values)
        points: list[tuple[int, float]] = []
        seen = 0
        for v in sorted(counts):
            seen += counts[v]
            points.append((v, seen / n))
        return cls(points=points, n=n)


@dataclass
class TcpInfoStats:
    socket_fraction: float
    once_fraction: float
    per_socket_counts: dict[int, int]
    normalized_times: list[list[float]]
    ks_uniform: float | None


@dataclass
class StatsReport:
    """Everything the analyzer derives from a corpus, in one record."""

    function_usage: dict[str, FunctionUsage] = field(default_factory=dict)
    socket_type_shares: dict[str, float] = field(default_factory=dict)
    udp_classes: dict[str, float] = field(default_factory=dict)
    tcp_classes: dict[str, float] = field(default_factory=dict)
    ioctl_breakdown: dict[str, float] = field(default_factory=dict)
    sockopt_usage: dict[str, SockoptUsage] = field(default_factory=dict)
    recv_cdfs: dict[str, EmpiricalCdf] = field(default_factory=dict)
    flag_stats: dict[str, dict[str, float]] = field(default_factory=dict)
    tcpinfo: TcpInfoStats = field(
        default_factory=lambda: TcpInfoStats(0.0, 0.0, {}, [], None)
    )
    mode_transitions: dict = field(default_factory=dict)
    accept_origins: dict = field(default_factory=dict)
    multicast: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        """Full-precision plain-type form (stable shapes, unrounded)."""
        return {
            "function_usage": {
                fn: {"apps": u.app_count, "calls": u.call_count}
                for fn, u in self.function_usage.items()
            },
            "socket_type_shares": dict(self.socket_type_shares),
            "udp_classes": dict(self.udp_classes),
            "tcp_classes": dict(self.tcp_classes),
            "ioctl_breakdown": dict(self.ioctl_breakdown),
            "sockopt_usage": {
                key: {
                    "apps": u.app_count,
                    "calls": u.call_count,
                    "gets": u.get_count,
                    "sets": u.set_count,
                }
                for key, u in self.sockopt_usage.items()
            },
            "recv_cdfs": {
                fn: {"n": cdf.n, "points": [[v, f] for v, f in cdf.points]}
                for fn, cdf in self.recv_cdfs.items()
            },
            "flag_stats": {d: dict(flags) for d, flags in self.flag_stats.items()},
            "tcpinfo": {
                "socket_fraction": self.tcpinfo.socket_fraction,
                "once_fraction": self.tcpinfo.once_fraction,
                "per_socket_counts": {
                    str(k): v for k, v in sorted(self.tcpinfo.per_socket_counts.items())
                },
                "normalized_times": self.tcpinfo.normalized_times,
                "ks_uniform": self.tcpinfo.ks_uniform,
            },
            "mode_transitions": self.mode_transitions,
            "accept_origins": self.accept_origins,
            "multicast": self.multicast,
        }


def _round_floats(obj):
    if isinstance(obj, float):
        return round(obj, 4)
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_round_floats(v) for v in obj]
    return obj


def report_json(report: StatsReport) -> bytes:
    """Canonical JSON emission: sorted keys, 4-decimal fractions."""
    doc = _round_floats(report.to_dict())
    return (json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n").encode()


# ---------------------------------------------------------------------------
# Individual operations
# ---------------------------------------------------------------------------


def function_usage(corpus: Corpus, collapse: bool = False) -> dict[str, FunctionUsage]:
    """Per function: how many distinct apps call it, and how often.

    With ``collapse`` set, twin folding is applied to each process stream
    first, so double-recorded forwarding pairs count once.
    """
    calls: dict[str, int] = {}
    apps: dict[str, set[str]] = {}
    for trace in corpus.traces:
        app = trace.meta.app
        for _pid, events in trace.streams:
            if collapse:
                events = collapse_twins(events)
            for ev in events:
                name = ev.fn.value
                calls[name] = calls.get(name, 0) + 1
                apps.setdefault(name, set()).add(app)
    return {
        name: FunctionUsage(app_count=len(apps[name]), call_count=calls[name])
        for name in sorted(calls)
    }


def socket_type_shares(corpus: Corpus) -> dict[str, float]:
    """Fraction of all sockets per type (stream / dgram / other)."""
    counts = {"stream": 0, "dgram": 0, "other": 0}
    total = 0
    for _trace, lc in corpus.all_lifecycles():
        counts[lc.sock_type] = counts.get(lc.sock_type, 0) + 1
        total += 1
    if total == 0:
        return {}
    return {k: counts[k] / total for k in ("stream", "dgram", "other")}


def udp_class_fractions(corpus: Corpus) -> dict[str, float]:
    counts = {c: 0 for c in UDP_CLASSES}
    total = 0
    for _trace, lc in corpus.all_lifecycles():
        if lc.sock_type != "dgram":
            continue
        counts[classify_udp(lc)] += 1
        total += 1
    if total == 0:
        return {}
    return {c: counts[c] / total for c in UDP_CLASSES}


def tcp_class_fractions(corpus: Corpus) -> dict[str, float]:
    counts = {c: 0 for c in TCP_CLASSES}
    total = 0
    for _trace, lc in corpus.all_lifecycles():
        if lc.sock_type != "stream":
            continue
        counts[classify_tcp(lc)] += 1
        total += 1
    if total == 0:
        return {}
    return {c: counts[c] / total for c in TCP_CLASSES}


def ioctl_breakdown(corpus: Corpus) -> dict[str, float]:
    """Request mix of ioctl calls on datagram sockets."""
    counts = {name: 0 for name in NETINFO_IOCTLS}
    other = 0
    total = 0
    for _trace, lc in corpus.all_lifecycles():
        if lc.sock_type != "dgram":
            continue
        for ev in lc.events:
            if ev.fn is not _F.IOCTL or not isinstance(ev.args, IoctlArgs):
                continue
            total += 1
            if ev.args.request in counts:
                counts[ev.args.request] += 1
            else:
                other += 1
    if total == 0:
        return {}
    out = {name: counts[name] / total for name in NETINFO_IOCTLS}
    out["other"] = other / total
    return out


def sockopt_usage(corpus: Corpus) -> dict[str, SockoptUsage]:
    """Per (level, optname) usage on stream sockets, keyed LEVEL.OPTNAME."""
    stats: dict[str, SockoptUsage] = {}
    apps: dict[str, set[str]] = {}
    for trace, lc in corpus.all_lifecycles():
        if lc.sock_type != "stream":
            continue
        for ev in lc.events:
            if ev.fn not in (_F.GETSOCKOPT, _F.SETSOCKOPT):
                continue
            assert isinstance(ev.args, SockoptArgs)
            key = f"{ev.args.level}.{ev.args.optname}"
            rec = stats.setdefault(key, SockoptUsage(0, 0, 0, 0))
            rec.call_count += 1
            if ev.fn is _F.GETSOCKOPT:
                rec.get_count += 1
            else:
                rec.set_count += 1
            apps.setdefault(key, set()).add(trace.meta.app)
    for key, rec in stats.items():
        rec.app_count = len(apps[key])
    return dict(sorted(stats.items()))


def recv_buffer_cdf(corpus: Corpus, fn: ApiFunction) -> EmpiricalCdf | None:
    """Distribution of buffer sizes handed to one receive function on
    stream sockets; None when the function was never called there."""
    if fn not in RECV_FAMILY:
        raise WrongFunctionError(f"{fn.value} is not a receive function")
    sizes = []
    for _trace, lc in corpus.all_lifecycles():
        if lc.sock_type != "stream":
            continue
        for ev in lc.events:
            if ev.fn is fn and isinstance(ev.args, IoArgs):
                sizes.append(ev.args.bytes)
    if not sizes:
        return None
    return EmpiricalCdf.from_values(sizes)


def flag_stats(corpus: Corpus) -> dict[str, dict[str, float]]:
    """Fraction of flag-capable transfer calls carrying each MSG_* flag.

    Denominators are all send-family (resp. receive-family) calls that
    take a flags argument, across every socket and the unattributed
    stream alike.  ``other`` covers any flag outside the broken-out set.
    """
    out: dict[str, dict[str, float]] = {}
    for direction, members, known in (
        ("send", FLAGGED_SEND, KNOWN_SEND_FLAGS),
        ("recv", FLAGGED_RECV, KNOWN_RECV_FLAGS),
    ):
        total = 0
        counts = {name: 0 for name in known}
        other = 0
        for trace in corpus.traces:
            for ev in trace.events():
                if ev.fn not in members or not isinstance(ev.args, IoArgs):
                    continue
                total += 1
                saw_other = False
                for flag in ev.args.flags:
                    if flag in counts:
                        counts[flag] += 1
                    else:
                        saw_other = True
                if saw_other:
                    other += 1
        if total == 0:
            out[direction] = {}
        else:
            frac = {name: counts[name] / total for name in known}
            frac["other"] = other / total
            out[direction] = frac
    return out


def ks_uniform_distance(values: list[float]) -> float:
    """One-sample Kolmogorov-Smirnov distance to Uniform[0,1]."""
    n = len(values)
    if n == 0:
        raise ValueError("KS distance needs at least one observation")
    xs = sorted(values)
    d = 0.0
    for i, x in enumerate(xs):
        d = max(d, (i + 1) / n - x, x - i / n)
    return d


def tcpinfo_stats(corpus: Corpus) -> TcpInfoStats:
    """How stream sockets read TCP_INFO over their lifetime.

    Retrieval times are normalized to [0,1] over first-to-last event of
    the socket; a zero-length lifetime maps every read to 0.  The KS
    distance is computed over the pooled normalized times.
    """
    stream_total = 0
    per_socket_counts: dict[int, int] = {}
    times: list[list[float]] = []
    for _trace, lc in corpus.all_lifecycles():
        if lc.sock_type != "stream":
            continue
        stream_total += 1
        reads = [
            ev
            for ev in lc.events
            if ev.fn is _F.GETSOCKOPT
            and isinstance(ev.args, SockoptArgs)
            and ev.args.optname == "TCP_INFO"
        ]
        if not reads:
            continue
        n = len(reads)
        per_socket_counts[n] = per_socket_counts.get(n, 0) + 1
        span = lc.lifetime_us
        first = lc.first_ts
        if span == 0:
            times.append([0.0 for _ in reads])
        else:
            times.append([(ev.ts_us - first) / span for ev in reads])
    sockets_with = sum(per_socket_counts.values())
    pooled = [t for per in times for t in per]
    return TcpInfoStats(
        socket_fraction=(sockets_with / stream_total) if stream_total else 0.0,
        once_fraction=(per_socket_counts.get(1, 0) / sockets_with) if sockets_with else 0.0,
        per_socket_counts=per_socket_counts,
        normalized_times=sorted(times),
        ks_uniform=ks_uniform_distance(pooled) if pooled else None,
    )


def mode_transition_stats(corpus: Corpus) -> dict:
    """How sockets entered non-blocking mode (first method observed wins):
    a SOCK_NONBLOCK creation flag, fcntl(F_SETFL) adding O_NONBLOCK, or
    ioctl(FIONBIO).  Also collects every file-status flag ever set."""
    methods = ("creation_flag", "fcntl", "ioctl", "blocking_throughout")
    sockets = {m: 0 for m in methods}
    apps: dict[str, set[str]] = {m: set() for m in methods}
    status_flags: set[str] = set()
    for trace, lc in corpus.all_lifecycles():
        method = "blocking_throughout"
        for ev in lc.events:
            if ev.fn is _F.FCNTL and isinstance(ev.args, FcntlArgs):
                if ev.args.cmd == "F_SETFL" and ev.args.flags:
                    status_flags.update(ev.args.flags)
        for ev in lc.events:
            args = ev.args
            if isinstance(args, (SocketArgs, AddrArgs)) and "SOCK_NONBLOCK" in args.flags:
                method = "creation_flag"
                break
            if (
                ev.fn is _F.FCNTL
                and isinstance(args, FcntlArgs)
                and args.cmd == "F_SETFL"
                and args.flags
                and "O_NONBLOCK" in args.flags
            ):
                method = "fcntl"
                break
            if ev.fn is _F.IOCTL and isinstance(args, IoctlArgs) and args.request == "FIONBIO":
                method = "ioctl"
                break
        sockets[method] += 1
        apps[method].add(trace.meta.app)
    return {
        "methods": {
            m: {"apps": len(apps[m]), "sockets": sockets[m]} for m in methods
        },
        "status_flags_seen": sorted(status_flags),
    }


def accept_origin_stats(corpus: Corpus) -> dict:
    """Listening and accepting apps, plus where accepted peers came from."""
    listen_apps: set[str] = set()
    accept_apps: set[str] = set()
    origins = {"loopback": 0, "link_local": 0, "remote": 0}
    for trace in corpus.traces:
        for ev in trace.events():
            if ev.fn is _F.LISTEN:
                listen_apps.add(trace.meta.app)
            elif ev.fn in (_F.ACCEPT, _F.ACCEPT4) and ev.ret >= 0:
                accept_apps.add(trace.meta.app)
                addr = ev.args.addr if isinstance(ev.args, AddrArgs) else None
                if addr is None or not addr.is_ip:
                    continue  # peer unknown: counted as accepting, not classified
                if addr.is_loopback:
                    origins["loopback"] += 1
                elif addr.is_link_local:
                    origins["link_local"] += 1
                else:
                    origins["remote"] += 1
    total = sum(origins.values())
    return {
        "listen_apps": len(listen_apps),
        "accept_apps": len(accept_apps),
        "origins": origins,
        "origin_fractions": (
            {k: v / total for k, v in origins.items()} if total else {}
        ),
    }


def ioctl_timing(corpus: Corpus, request: str) -> dict[str, dict[str, float]]:
    """Inter-arrival timing of one ioctl request per socket.

    Only sockets with at least two matching calls appear.  Mean and
    population standard deviation are in milliseconds.
    """
    out: dict[str, dict[str, float]] = {}
    for _trace, lc in corpus.all_lifecycles():
        ts = [
            ev.ts_us
            for ev in lc.events
            if ev.fn is _F.IOCTL
            and isinstance(ev.args, IoctlArgs)
            and ev.args.request == request
        ]
        if len(ts) < 2:
            continue
        gaps = [(b - a) / 1000.0 for a, b in zip(ts, ts[1:])]
        mean = sum(gaps) / len(gaps)
        var = sum((g - mean) ** 2 for g in gaps) / len(gaps)
        out[lc.socket_id] = {
            "mean_ms": mean,
            "stddev_ms": math.sqrt(var),
            "n": len(ts),
        }
    return out


def multicast_stats(corpus: Corpus) -> dict:
    """Apps sending to multicast groups and apps joining them."""
    senders: set[str] = set()
    joiners: set[str] = set()
    for trace in corpus.traces:
        for ev in trace.events():
            args = ev.args
            if (
                ev.fn in (_F.SENDTO, _F.SENDMSG)
                and isinstance(args, IoArgs)
                and args.addr is not None
                and args.addr.is_multicast
            ):
                senders.add(trace.meta.app)
            elif (
                ev.fn is _F.SETSOCKOPT
                and isinstance(args, SockoptArgs)
                and args.optname in MEMBERSHIP_OPTNAMES
            ):
                joiners.add(trace.meta.app)
    return {"sender_apps": len(senders), "joiner_apps": len(joiners)}


# ---------------------------------------------------------------------------
# The full report
# ---------------------------------------------------------------------------

RECV_CDF_FNS = (_F.RECV, _F.RECVFROM, _F.RECVMSG, _F.RECVMMSG, _F.READ, _F.READV)


def compute_report(corpus: Corpus, collapse: bool = False) -> StatsReport:
    """Run the whole battery over a corpus.

    With ``collapse`` set, the corpus is re-assembled from twin-folded
    streams first so every statistic sees logical calls.
    """
    if collapse:
        from .traceio import assemble_trace

        corpus = Corpus(
            traces=[
                assemble_trace(t.meta, t.streams, trace_tag=f"c{i}", collapse=True)
                for i, t in enumerate(corpus.traces)
            ]
        )
    report = StatsReport(
        function_usage=function_usage(corpus),
        socket_type_shares=socket_type_shares(corpus),
        udp_classes=udp_class_fractions(corpus),
        tcp_classes=tcp_class_fractions(corpus),
        ioctl_breakdown=ioctl_breakdown(corpus),
        sockopt_usage=sockopt_usage(corpus),
        flag_stats=flag_stats(corpus),
        tcpinfo=tcpinfo_stats(corpus),
        mode_transitions=mode_transition_stats(corpus),
        accept_origins=accept_origin_stats(corpus),
        multicast=multicast_stats(corpus),
    )
    for fn in RECV_CDF_FNS:
        cdf = recv_buffer_cdf(corpus, fn)
        if cdf is not None:
            report.recv_cdfs[fn.value] = cdf
    return report
