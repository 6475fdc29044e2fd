"""Independent re-derivations of analyzer results, for cross-checking.

Everything here works from raw JSONL text (plus ``ipaddress`` for bit
arithmetic) and deliberately shares no code with the package: grouping is
a naive per-descriptor scan, statistics are recomputed from literal
definitions, and mining is exhaustive window enumeration.  The builders
produce *restricted* corpora — descriptors are never reused, never
duplicated, and never come from socketpair — so the naive grouping is
guaranteed to coincide with the package's lifecycle reconstruction and a
disagreement in any statistic is a real defect.
"""
from __future__ import annotations

import ipaddress
import json
from pathlib import Path

# Frozen copies of the published groupings (duplicated on purpose).
SEND_FNS = frozenset({"send", "sendto", "sendmsg", "sendmmsg", "write", "writev", "sendfile"})
RECV_FNS = frozenset({"recv", "recvfrom", "recvmsg", "recvmmsg", "read", "readv"})
PAYLOAD_FNS = SEND_FNS | RECV_FNS
FLAGGED_SEND_FNS = frozenset({"send", "sendto", "sendmsg", "sendmmsg"})
FLAGGED_RECV_FNS = frozenset({"recv", "recvfrom", "recvmsg", "recvmmsg"})
KNOWN_MSG_FLAGS = ("MSG_NOSIGNAL", "MSG_DONTWAIT", "MSG_MORE", "MSG_PEEK", "MSG_WAITALL")
NETINFO_REQUESTS = ("SIOCGIFADDR", "SIOCGIFNAME", "SIOCGIFFLAGS", "SIOCGIFNETMASK", "SIOCGIFBRDADDR")
MEMBERSHIP_OPTS = frozenset(
    {
        "IP_ADD_MEMBERSHIP",
        "IP_ADD_SOURCE_MEMBERSHIP",
        "IPV6_ADD_MEMBERSHIP",
        "IPV6_JOIN_GROUP",
        "MCAST_JOIN_GROUP",
        "MCAST_JOIN_SOURCE_GROUP",
    }
)
RECV_CDF_FNS = ("recv", "recvfrom", "recvmsg", "recvmmsg", "read", "readv")
UDP_CLASSES = ("data", "connect_no_data", "netinfo_ioctl", "other")
TCP_CLASSES = (
    "local_rcvtimeo_only",
    "local_immediate_close",
    "local_wireless_check",
    "local_other",
    "remote_data",
    "remote_no_data",
)
CREATION_OR_ADDR_FNS = frozenset(
    {"socket", "socketpair", "bind", "connect", "getsockname", "getpeername", "accept", "accept4"}
)
WAIT_FNS = frozenset(
    {"poll", "ppoll", "select", "pselect", "epoll_create", "epoll_create1", "epoll_wait", "epoll_pwait"}
)


# ---------------------------------------------------------------------------
# Raw address arithmetic
# ---------------------------------------------------------------------------


def _addr_bits(addr: dict) -> int:
    if addr["family"] == "ipv4":
        return int(ipaddress.IPv4Address(addr["addr"]))
    return int(ipaddress.IPv6Address(addr["addr"]))


def _is_ip(addr: dict | None) -> bool:
    return addr is not None and addr.get("family") in ("ipv4", "ipv6")


def _mapped_v4(addr: dict) -> int | None:
    bits = _addr_bits(addr)
    if addr["family"] == "ipv6" and (bits >> 32) == 0xFFFF:
        return bits & 0xFFFFFFFF
    return None


def _is_loopback(addr: dict) -> bool:
    bits = _addr_bits(addr)
    if addr["family"] == "ipv4":
        return (bits >> 24) == 127
    v4 = _mapped_v4(addr)
    if v4 is not None:
        return (v4 >> 24) == 127
    return bits == 1


def _is_link_local(addr: dict) -> bool:
    bits = _addr_bits(addr)
    if addr["family"] == "ipv4":
        return (bits >> 16) == 0xA9FE
    v4 = _mapped_v4(addr)
    if v4 is not None:
        return (v4 >> 16) == 0xA9FE
    return (bits >> 118) == 0x3FA


def _is_multicast(addr: dict) -> bool:
    bits = _addr_bits(addr)
    if addr["family"] == "ipv4":
        return (bits >> 28) == 0xE
    return (bits >> 120) == 0xFF


# ---------------------------------------------------------------------------
# Naive per-descriptor grouping (valid only for restricted corpora)
# ---------------------------------------------------------------------------


def _norm_type(t: str) -> str:
    return t if t in ("stream", "dgram") else "other"


def _scan_stream(events: list[dict]) -> tuple[list[dict], list[dict]]:
    """Group one stream's raw events by descriptor.

    Returns (groups, unattributed); each group is
    {"type": ..., "events": [...]}.  Raises on constructs the restricted
    corpora promise not to contain.
    """
    groups: list[dict] = []
    by_fd: dict[int, dict] = {}
    loose: list[dict] = []
    for ev in events:
        fn = ev["fn"]
        args = ev["args"]
        if fn in ("socketpair", "dup", "dup2", "dup3"):
            raise AssertionError(f"{fn} is outside the restricted corpus contract")
        if fn == "socket":
            if ev["ret"] >= 0:
                if ev["ret"] in by_fd:
                    raise AssertionError("descriptor reuse in restricted corpus")
                g = {"type": _norm_type(args["type"]), "events": [ev]}
                groups.append(g)
                by_fd[ev["ret"]] = g
            else:
                loose.append(ev)
            continue
        if fn in ("accept", "accept4"):
            listener = by_fd.get(args["fd"])
            if ev["ret"] >= 0:
                if ev["ret"] in by_fd:
                    raise AssertionError("descriptor reuse in restricted corpus")
                g = {"type": listener["type"] if listener else "stream", "events": [ev]}
                groups.append(g)
                by_fd[ev["ret"]] = g
            elif listener is not None:
                listener["events"].append(ev)
            else:
                loose.append(ev)
            continue
        if fn in WAIT_FNS:
            loose.append(ev)
            continue
        if fn == "sendfile":
            fd = args["out_fd"]
        elif fn == "epoll_ctl":
            fd = args["fd"]
        else:
            fd = args.get("fd")
        if fd is not None and fd in by_fd:
            by_fd[fd]["events"].append(ev)
        else:
            loose.append(ev)
    return groups, loose


def _load_raw_trace(trace_dir: Path) -> dict:
    meta = json.loads((trace_dir / "meta.json").read_text())
    streams = []
    for path in sorted(trace_dir.glob("events.*.jsonl")):
        events = [json.loads(line) for line in path.read_text().splitlines() if line.strip()]
        streams.append(events)
    groups: list[dict] = []
    for events in streams:
        g, _ = _scan_stream(events)
        groups.extend(g)
    return {"meta": meta, "streams": streams, "groups": groups}


# ---------------------------------------------------------------------------
# Statistic re-derivations
# ---------------------------------------------------------------------------


def _classify_udp_group(events: list[dict]) -> str:
    fns = [ev["fn"] for ev in events]
    if any(fn in PAYLOAD_FNS for fn in fns):
        return "data"
    if "connect" in fns:
        return "connect_no_data"
    if "ioctl" in fns:
        return "netinfo_ioctl"
    return "other"


def _classify_tcp_group(events: list[dict]) -> str:
    remote_at = None
    for idx, ev in enumerate(events):
        if ev["fn"] == "connect":
            addr = ev["args"].get("addr")
            if _is_ip(addr) and not _is_loopback(addr):
                remote_at = idx
                break
    if remote_at is not None:
        if any(ev["fn"] in PAYLOAD_FNS for ev in events[remote_at + 1 :]):
            return "remote_data"
        return "remote_no_data"
    body = events[1:]
    non_close = [ev for ev in body if ev["fn"] != "close"]
    if non_close and all(
        ev["fn"] == "setsockopt" and ev["args"]["optname"] == "SO_RCVTIMEO"
        for ev in non_close
    ):
        return "local_rcvtimeo_only"
    if body and not non_close:
        return "local_immediate_close"
    if any(
        ev["fn"] == "ioctl" and ev["args"]["request"] == "SIOCGIWNAME" for ev in events
    ):
        return "local_wireless_check"
    return "local_other"


def _group_mode(events: list[dict]) -> str:
    for ev in events:
        fn = ev["fn"]
        args = ev["args"]
        if fn in CREATION_OR_ADDR_FNS and "SOCK_NONBLOCK" in args.get("flags", []):
            return "creation_flag"
        if (
            fn == "fcntl"
            and args["cmd"] == "F_SETFL"
            and args.get("flags")
            and "O_NONBLOCK" in args["flags"]
        ):
            return "fcntl"
        if fn == "ioctl" and args["request"] == "FIONBIO":
            return "ioctl"
    return "blocking_throughout"


def _ks_uniform(values: list[float]) -> float:
    xs = sorted(values)
    n = len(xs)
    d = 0.0
    for i, x in enumerate(xs):
        d = max(d, (i + 1) / n - x, x - i / n)
    return d


def _round(obj):
    if isinstance(obj, float):
        return round(obj, 4)
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_round(v) for v in obj]
    return obj


def report_oracle(root: Path) -> dict:
    """Recompute the full report for every trace directory under root.

    Output has the exact shape and rounding of the package's JSON report,
    so the two can be compared with ``==`` after parsing.
    """
    dirs = sorted(p.parent for p in Path(root).rglob("meta.json"))
    traces = [_load_raw_trace(d) for d in dirs]

    # function usage -------------------------------------------------------
    calls: dict[str, int] = {}
    fn_apps: dict[str, set] = {}
    for t in traces:
        for events in t["streams"]:
            for ev in events:
                calls[ev["fn"]] = calls.get(ev["fn"], 0) + 1
                fn_apps.setdefault(ev["fn"], set()).add(t["meta"]["app"])
    function_usage = {
        fn: {"apps": len(fn_apps[fn]), "calls": calls[fn]} for fn in calls
    }

    all_groups = [(t, g) for t in traces for g in t["groups"]]

    # socket type shares ---------------------------------------------------
    total = len(all_groups)
    if total:
        type_counts = {"stream": 0, "dgram": 0, "other": 0}
        for _t, g in all_groups:
            type_counts[g["type"]] += 1
        socket_type_shares = {k: type_counts[k] / total for k in ("stream", "dgram", "other")}
    else:
        socket_type_shares = {}

    # udp / tcp classes ----------------------------------------------------
    dgram_groups = [g for _t, g in all_groups if g["type"] == "dgram"]
    stream_groups = [(t, g) for t, g in all_groups if g["type"] == "stream"]
    if dgram_groups:
        uc = {c: 0 for c in UDP_CLASSES}
        for g in dgram_groups:
            uc[_classify_udp_group(g["events"])] += 1
        udp_classes = {c: uc[c] / len(dgram_groups) for c in UDP_CLASSES}
    else:
        udp_classes = {}
    if stream_groups:
        tc = {c: 0 for c in TCP_CLASSES}
        for _t, g in stream_groups:
            tc[_classify_tcp_group(g["events"])] += 1
        tcp_classes = {c: tc[c] / len(stream_groups) for c in TCP_CLASSES}
    else:
        tcp_classes = {}

    # ioctl breakdown (datagram sockets only) -------------------------------
    io_counts = {name: 0 for name in NETINFO_REQUESTS}
    io_other = 0
    io_total = 0
    for g in dgram_groups:
        for ev in g["events"]:
            if ev["fn"] != "ioctl":
                continue
            io_total += 1
            req = ev["args"]["request"]
            if req in io_counts:
                io_counts[req] += 1
            else:
                io_other += 1
    if io_total:
        ioctl_breakdown = {name: io_counts[name] / io_total for name in NETINFO_REQUESTS}
        ioctl_breakdown["other"] = io_other / io_total
    else:
        ioctl_breakdown = {}

    # sockopt usage (stream sockets only) -----------------------------------
    so: dict[str, dict] = {}
    so_apps: dict[str, set] = {}
    for t, g in stream_groups:
        for ev in g["events"]:
            if ev["fn"] not in ("getsockopt", "setsockopt"):
                continue
            key = f"{ev['args']['level']}.{ev['args']['optname']}"
            rec = so.setdefault(key, {"apps": 0, "calls": 0, "gets": 0, "sets": 0})
            rec["calls"] += 1
            rec["gets" if ev["fn"] == "getsockopt" else "sets"] += 1
            so_apps.setdefault(key, set()).add(t["meta"]["app"])
    for key, rec in so.items():
        rec["apps"] = len(so_apps[key])

    # receive-buffer CDFs (stream sockets only) ------------------------------
    recv_cdfs = {}
    for fn in RECV_CDF_FNS:
        sizes = [
            ev["args"]["bytes"]
            for _t, g in stream_groups
            for ev in g["events"]
            if ev["fn"] == fn
        ]
        if not sizes:
            continue
        n = len(sizes)
        points = []
        seen = 0
        freq: dict[int, int] = {}
        for v in sizes:
            freq[v] = freq.get(v, 0) + 1
        for v in sorted(freq):
            seen += freq[v]
            points.append([v, seen / n])
        recv_cdfs[fn] = {"n": n, "points": points}

    # flag statistics (all events, unattributed included) --------------------
    flag_stats = {}
    for direction, members in (("send", FLAGGED_SEND_FNS), ("recv", FLAGGED_RECV_FNS)):
        f_total = 0
        f_counts = {name: 0 for name in KNOWN_MSG_FLAGS}
        f_other = 0
        for t in traces:
            for events in t["streams"]:
                for ev in events:
                    if ev["fn"] not in members:
                        continue
                    f_total += 1
                    saw_other = False
                    for flag in ev["args"].get("flags", []):
                        if flag in f_counts:
                            f_counts[flag] += 1
                        else:
                            saw_other = True
                    if saw_other:
                        f_other += 1
        if f_total:
            frac = {name: f_counts[name] / f_total for name in KNOWN_MSG_FLAGS}
            frac["other"] = f_other / f_total
            flag_stats[direction] = frac
        else:
            flag_stats[direction] = {}

    # TCP_INFO polling -------------------------------------------------------
    stream_total = len(stream_groups)
    per_counts: dict[int, int] = {}
    times: list[list[float]] = []
    for _t, g in stream_groups:
        reads = [
            ev
            for ev in g["events"]
            if ev["fn"] == "getsockopt" and ev["args"]["optname"] == "TCP_INFO"
        ]
        if not reads:
            continue
        per_counts[len(reads)] = per_counts.get(len(reads), 0) + 1
        first = g["events"][0]["ts"]
        span = g["events"][-1]["ts"] - first
        if span == 0:
            times.append([0.0 for _ in reads])
        else:
            times.append([(ev["ts"] - first) / span for ev in reads])
    with_reads = sum(per_counts.values())
    pooled = [x for per in times for x in per]
    tcpinfo = {
        "socket_fraction": (with_reads / stream_total) if stream_total else 0.0,
        "once_fraction": (per_counts.get(1, 0) / with_reads) if with_reads else 0.0,
        "per_socket_counts": {str(k): per_counts[k] for k in sorted(per_counts)},
        "normalized_times": sorted(times),
        "ks_uniform": _ks_uniform(pooled) if pooled else None,
    }

    # blocking-mode transitions ----------------------------------------------
    methods = ("creation_flag", "fcntl", "ioctl", "blocking_throughout")
    m_sockets = {m: 0 for m in methods}
    m_apps: dict[str, set] = {m: set() for m in methods}
    status_flags: set[str] = set()
    for t, g in all_groups:
        for ev in g["events"]:
            if (
                ev["fn"] == "fcntl"
                and ev["args"]["cmd"] == "F_SETFL"
                and ev["args"].get("flags")
            ):
                status_flags.update(ev["args"]["flags"])
        m = _group_mode(g["events"])
        m_sockets[m] += 1
        m_apps[m].add(t["meta"]["app"])
    mode_transitions = {
        "methods": {m: {"apps": len(m_apps[m]), "sockets": m_sockets[m]} for m in methods},
        "status_flags_seen": sorted(status_flags),
    }

    # accept origins -----------------------------------------------------------
    listen_apps: set = set()
    accept_apps: set = set()
    origins = {"loopback": 0, "link_local": 0, "remote": 0}
    for t in traces:
        for events in t["streams"]:
            for ev in events:
                if ev["fn"] == "listen":
                    listen_apps.add(t["meta"]["app"])
                elif ev["fn"] in ("accept", "accept4") and ev["ret"] >= 0:
                    accept_apps.add(t["meta"]["app"])
                    addr = ev["args"].get("addr")
                    if not _is_ip(addr):
                        continue
                    if _is_loopback(addr):
                        origins["loopback"] += 1
                    elif _is_link_local(addr):
                        origins["link_local"] += 1
                    else:
                        origins["remote"] += 1
    o_total = sum(origins.values())
    accept_origins = {
        "listen_apps": len(listen_apps),
        "accept_apps": len(accept_apps),
        "origins": origins,
        "origin_fractions": (
            {k: v / o_total for k, v in origins.items()} if o_total else {}
        ),
    }

    # multicast ---------------------------------------------------------------
    senders: set = set()
    joiners: set = set()
    for t in traces:
        for events in t["streams"]:
            for ev in events:
                if ev["fn"] in ("sendto", "sendmsg"):
                    addr = ev["args"].get("addr")
                    if _is_ip(addr) and _is_multicast(addr):
                        senders.add(t["meta"]["app"])
                elif (
                    ev["fn"] == "setsockopt"
                    and ev["args"]["optname"] in MEMBERSHIP_OPTS
                ):
                    joiners.add(t["meta"]["app"])
    multicast = {"sender_apps": len(senders), "joiner_apps": len(joiners)}

    return _round(
        {
            "function_usage": function_usage,
            "socket_type_shares": socket_type_shares,
            "udp_classes": udp_classes,
            "tcp_classes": tcp_classes,
            "ioctl_breakdown": ioctl_breakdown,
            "sockopt_usage": so,
            "recv_cdfs": recv_cdfs,
            "flag_stats": flag_stats,
            "tcpinfo": tcpinfo,
            "mode_transitions": mode_transitions,
            "accept_origins": accept_origins,
            "multicast": multicast,
        }
    )


# ---------------------------------------------------------------------------
# Exhaustive mining oracle
# ---------------------------------------------------------------------------


def mine_exhaustive(seqs: list[tuple[str, ...]], min_support: int, max_len: int) -> list[dict]:
    """Every contiguous window with support >= min_support, by brute force.

    Support counts distinct sequences containing the window; maximality
    means no supported one-symbol extension exists within the length
    bound.  Output dicts and ordering mirror the package's mining result.
    """
    support: dict[tuple[str, ...], int] = {}
    for seq in seqs:
        seen: set[tuple[str, ...]] = set()
        for k in range(1, min(max_len, len(seq)) + 1):
            for start in range(len(seq) - k + 1):
                seen.add(seq[start : start + k])
        for w in seen:
            support[w] = support.get(w, 0) + 1
    frequent = {w: c for w, c in support.items() if c >= min_support}
    out = []
    for w, c in frequent.items():
        if len(w) == max_len:
            maximal = True
        else:
            maximal = not any(
                len(w2) == len(w) + 1 and (w2[1:] == w or w2[:-1] == w)
                for w2 in frequent
            )
        out.append({"sequence": list(w), "support": c, "maximal": maximal})
    out.sort(key=lambda p: (-p["support"], p["sequence"]))
    return out


# ---------------------------------------------------------------------------
# Restricted corpus builder (raw JSONL, no package involvement)
# ---------------------------------------------------------------------------

_GLOBAL_V4 = ["8.8.8.8", "93.184.216.34", "198.51.100.7", "203.0.113.9", "0.0.0.0"]
_GLOBAL_V6 = ["2001:db8::1", "2607:f8b0::200e", "::ffff:8.8.4.4"]
_LOOP = [("ipv4", "127.0.0.1"), ("ipv6", "::1")]
_LINKLOCAL = [("ipv4", "169.254.10.3"), ("ipv6", "fe80::1234")]
_MCAST = [("ipv4", "224.0.0.251"), ("ipv6", "ff02::fb")]
_CDF_SIZES = [1, 5, 128, 1024, 4096, 16384]
_FLAG_POOL = ["MSG_NOSIGNAL", "MSG_DONTWAIT", "MSG_MORE", "MSG_PEEK", "MSG_WAITALL", "MSG_FASTOPEN"]


class _Script:
    """One socket's (or noise event's) ordered call list, timestamp-free.

    Scripts are interleaved randomly into a stream afterwards; only the
    relative order *within* a script is meaningful, which mirrors how
    real threads interleave independent sockets.
    """

    def __init__(self, tid: int):
        self.tid = tid
        self.lines: list[dict] = []

    def emit(self, fn: str, args: dict, ret: int = 0, err: int = 0) -> None:
        self.lines.append({"fn": fn, "args": args, "ret": ret, "err": err})


def _interleave(rng, scripts: list[_Script]) -> list[dict]:
    """Randomly merge scripts, preserving per-script order, with a
    strictly increasing clock."""
    pending = [list(s.lines) for s in scripts]
    tids = [s.tid for s in scripts]
    out: list[dict] = []
    ts = 0
    while any(pending):
        i = rng.choice([k for k, p in enumerate(pending) if p])
        line = pending[i].pop(0)
        ts += rng.randint(1, 400)
        out.append(
            {
                "ts": ts,
                "tid": tids[i],
                "fn": line["fn"],
                "args": line["args"],
                "ret": line["ret"],
                "err": line["err"],
            }
        )
    return out


def _rand_addr(rng, pool) -> dict:
    if pool is _GLOBAL_V4:
        return {"family": "ipv4", "addr": rng.choice(_GLOBAL_V4), "port": rng.randint(1, 65535)}
    fam, text = rng.choice(pool)
    return {"family": fam, "addr": text, "port": rng.randint(1, 65535)}


def _rand_global(rng) -> dict:
    if rng.random() < 0.6:
        return {"family": "ipv4", "addr": rng.choice(_GLOBAL_V4), "port": rng.randint(1, 65535)}
    return {"family": "ipv6", "addr": rng.choice(_GLOBAL_V6), "port": rng.randint(1, 65535)}


def _emit_payload(w: _StreamWriter, fd: int, rng, n: int) -> None:
    for _ in range(n):
        fn = rng.choice(["send", "recv", "read", "write", "recvfrom", "sendto", "readv", "recvmsg"])
        args: dict = {"fd": fd, "bytes": rng.choice(_CDF_SIZES)}
        if fn in ("send", "sendto", "recv", "recvfrom", "recvmsg"):
            k = rng.randint(0, 2)
            if k:
                args["flags"] = rng.sample(_FLAG_POOL, k)
        if fn in ("readv", "recvmsg"):
            args["iov"] = rng.randint(1, 4)
        if fn == "sendto" and rng.random() < 0.4:
            pool = rng.choice([_GLOBAL_V4, _LOOP, _MCAST])
            args["addr"] = _rand_addr(rng, pool)
        w.emit(fn, args, ret=args["bytes"])


def _emit_decorations(w: _StreamWriter, fd: int, rng) -> None:
    r = rng.random()
    if r < 0.15:
        w.emit("fcntl", {"fd": fd, "cmd": "F_GETFL"}, ret=2)
        w.emit("fcntl", {"fd": fd, "cmd": "F_SETFL", "flags": ["O_NONBLOCK"], "arg": 2048}, ret=0)
    elif r < 0.25:
        w.emit("ioctl", {"fd": fd, "request": "FIONBIO"}, ret=0)
    elif r < 0.32:
        w.emit("fcntl", {"fd": fd, "cmd": "F_SETFL", "flags": ["O_APPEND"]}, ret=0)
    elif r < 0.38:
        w.emit("fcntl", {"fd": fd, "cmd": "F_SETFL", "flags": []}, ret=0)
    if rng.random() < 0.3:
        level, opt = rng.choice(
            [
                ("SOL_SOCKET", "SO_KEEPALIVE"),
                ("SOL_SOCKET", "SO_RCVBUF"),
                ("IPPROTO_TCP", "TCP_NODELAY"),
            ]
        )
        if rng.random() < 0.5:
            w.emit("setsockopt", {"fd": fd, "level": level, "optname": opt, "optval": 1}, ret=0)
        else:
            w.emit("getsockopt", {"fd": fd, "level": level, "optname": opt, "optval": 4096}, ret=0)


def _emit_tcpinfo(w: _StreamWriter, fd: int, rng) -> None:
    for _ in range(rng.randint(1, 4)):
        w.emit(
            "getsockopt",
            {"fd": fd, "level": "IPPROTO_TCP", "optname": "TCP_INFO", "optval": {"len": 104}},
            ret=0,
        )


def _emit_stream_socket(w: _StreamWriter, rng, fd: int, accept_fd_alloc) -> None:
    kind = rng.choice(
        [
            "remote_data",
            "remote_nodata",
            "rcvtimeo",
            "immediate",
            "wireless",
            "local_loop",
            "listener",
        ]
    )
    flags = ["SOCK_NONBLOCK"] if rng.random() < 0.12 else []
    args: dict = {"domain": "inet", "type": "stream", "protocol": 0}
    if flags:
        args["flags"] = flags
    w.emit("socket", args, ret=fd)

    if kind == "rcvtimeo":
        for _ in range(rng.randint(1, 2)):
            w.emit(
                "setsockopt",
                {
                    "fd": fd,
                    "level": "SOL_SOCKET",
                    "optname": "SO_RCVTIMEO",
                    "optval": {"sec": 1, "usec": 0},
                },
                ret=0,
            )
        w.emit("close", {"fd": fd}, ret=0)
        return
    if kind == "immediate":
        w.emit("close", {"fd": fd}, ret=0)
        return
    if kind == "wireless":
        w.emit("ioctl", {"fd": fd, "request": "SIOCGIWNAME"}, ret=0)
        w.emit("getsockname", {"fd": fd, "addr": _rand_addr(rng, _LOOP)}, ret=0)
        w.emit("close", {"fd": fd}, ret=0)
        return
    if kind == "listener":
        w.emit("bind", {"fd": fd, "addr": {"family": "ipv4", "addr": "0.0.0.0", "port": 8080}}, ret=0)
        w.emit("listen", {"fd": fd, "backlog": 128}, ret=0)
        for _ in range(rng.randint(0, 3)):
            peer_kind = rng.random()
            acc_args: dict = {"fd": fd}
            if peer_kind < 0.3:
                acc_args["addr"] = _rand_addr(rng, _LOOP)
            elif peer_kind < 0.45:
                acc_args["addr"] = _rand_addr(rng, _LINKLOCAL)
            elif peer_kind < 0.8:
                acc_args["addr"] = _rand_global(rng)
            fn = "accept"
            if rng.random() < 0.4:
                fn = "accept4"
                if rng.random() < 0.5:
                    acc_args["flags"] = ["SOCK_NONBLOCK"]
            afd = accept_fd_alloc()
            w.emit(fn, acc_args, ret=afd)
            _emit_payload(w, afd, rng, rng.randint(0, 2))
            w.emit("close", {"fd": afd}, ret=0)
        if rng.random() < 0.3:
            w.emit("accept", {"fd": fd}, ret=-1, err=11)
        w.emit("close", {"fd": fd}, ret=0)
        return

    _emit_decorations(w, fd, rng)
    if kind == "remote_data" or kind == "remote_nodata":
        dest = _rand_global(rng) if rng.random() < 0.8 else _rand_addr(rng, _LINKLOCAL)
        w.emit("connect", {"fd": fd, "addr": dest}, ret=0)
        if kind == "remote_data":
            _emit_payload(w, fd, rng, rng.randint(1, 5))
        else:
            w.emit("getpeername", {"fd": fd, "addr": dest}, ret=0)
    else:  # local_loop: loopback connect (or none), payload both ways
        if rng.random() < 0.7:
            w.emit("connect", {"fd": fd, "addr": _rand_addr(rng, _LOOP)}, ret=0)
        _emit_payload(w, fd, rng, rng.randint(1, 4))
    if rng.random() < 0.35:
        _emit_tcpinfo(w, fd, rng)
    if rng.random() < 0.9:
        w.emit("close", {"fd": fd}, ret=0)


def _emit_dgram_socket(w: _StreamWriter, rng, fd: int) -> None:
    kind = rng.choice(["data", "connect", "netinfo", "idle"])
    w.emit("socket", {"domain": "inet", "type": "dgram", "protocol": 0}, ret=fd)
    if kind == "data":
        if rng.random() < 0.3:
            w.emit(
                "setsockopt",
                {"fd": fd, "level": "IPPROTO_IP", "optname": "IP_ADD_MEMBERSHIP", "optval": {"len": 8}},
                ret=0,
            )
        for _ in range(rng.randint(1, 3)):
            pool = rng.choice([_GLOBAL_V4, _LOOP, _MCAST])
            w.emit(
                "sendto",
                {"fd": fd, "bytes": rng.choice([1, 5, 128]), "addr": _rand_addr(rng, pool)},
                ret=5,
            )
    elif kind == "connect":
        w.emit("connect", {"fd": fd, "addr": _rand_global(rng)}, ret=0)
    elif kind == "netinfo":
        for _ in range(rng.randint(1, 4)):
            req = rng.choice(list(NETINFO_REQUESTS) + ["SIOCGIFMTU", "FIONREAD"])
            w.emit("ioctl", {"fd": fd, "request": req}, ret=0)
    else:
        w.emit("getsockname", {"fd": fd, "addr": _rand_addr(rng, _LOOP)}, ret=0)
    if rng.random() < 0.9:
        w.emit("close", {"fd": fd}, ret=0)


def _emit_noise(w: _StreamWriter, rng) -> None:
    """Events that belong to no lifecycle: waits, failed creations, and
    transfers on descriptors the stream never created."""
    r = rng.random()
    if r < 0.3:
        w.emit("poll", {"nfds": rng.randint(1, 8), "timeout_ms": rng.choice([-1, 0, 100])}, ret=1)
    elif r < 0.45:
        w.emit("select", {"nfds": 16, "timeout_ms": 50}, ret=0)
    elif r < 0.6:
        w.emit("epoll_create1", {"flags": 0}, ret=700 + rng.randint(0, 50))
    elif r < 0.7:
        w.emit("epoll_wait", {"epfd": 700, "maxevents": 32, "timeout_ms": 10}, ret=0)
    elif r < 0.8:
        w.emit("socket", {"domain": "inet", "type": "stream"}, ret=-1, err=24)
    else:
        args: dict = {"fd": 999, "bytes": rng.choice(_CDF_SIZES)}
        if rng.random() < 0.5:
            args["flags"] = rng.sample(_FLAG_POOL, rng.randint(1, 2))
        w.emit(rng.choice(["send", "recv", "sendto", "recvfrom"]), args, ret=-1, err=9)


def build_reference_corpus(root: Path, rng) -> None:
    """Write a randomized restricted corpus under ``root``.

    Restricted means: no descriptor reuse, no dup/socketpair, every
    descriptor unique per stream — the contract ``_scan_stream`` needs.
    """
    root = Path(root)
    n_traces = rng.randint(2, 5)
    for t_idx in range(n_traces):
        app = f"app-{rng.randint(0, 3)}"
        trace_dir = root / f"trace{t_idx}"
        trace_dir.mkdir(parents=True)
        meta = {
            "app": app,
            "cmd": f"{app} --serve",
            "os": "Linux 6.1.0 x86_64",
            "tracer_version": "1.2.0",
            "started_at": "2026-03-01T12:00:00Z",
            "salt_fp": "00c0ffee",
            "opt_out": False,
            "kernel": "6.1.0",
            "netcfg": "ifaces=lo,eth0;families=ipv4,ipv6",
        }
        (trace_dir / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
        for s_idx in range(rng.randint(1, 2)):
            pid = 1000 * (t_idx + 1) + s_idx
            next_fd = [10]

            def alloc() -> int:
                next_fd[0] += 1
                return next_fd[0]

            scripts: list[_Script] = []
            for _ in range(rng.randint(3, 8)):
                # A couple of threads per process; scripts interleave.
                w = _Script(tid=pid + rng.randint(0, 1))
                scripts.append(w)
                roll = rng.random()
                if roll < 0.12:
                    _emit_noise(w, rng)
                    continue
                fd = alloc()
                if roll < 0.55:
                    _emit_stream_socket(w, rng, fd, alloc)
                elif roll < 0.9:
                    _emit_dgram_socket(w, rng, fd)
                else:
                    w.emit("socket", {"domain": "inet", "type": "raw", "protocol": 1}, ret=fd)
                    w.emit("sendto", {"fd": fd, "bytes": 64, "addr": _rand_global(rng)}, ret=64)
                    w.emit("close", {"fd": fd}, ret=0)
            events = _interleave(rng, scripts)
            (trace_dir / f"events.{pid}.jsonl").write_text(
                "".join(json.dumps(line, separators=(",", ":")) + "\n" for line in events)
            )


# ---------------------------------------------------------------------------
# Mining corpus builder (product types as inputs, symbols derived here)
# ---------------------------------------------------------------------------

_MINE_ALPHABET = [
    ("send", None),
    ("recv", None),
    ("close", None),
    ("connect", None),
    ("ioctl", None),
    ("setsockopt", "SO_KEEPALIVE"),
    ("setsockopt", "TCP_NODELAY"),
    ("getsockopt", "TCP_INFO"),
]


def build_mining_case(rng):
    """One randomized mining problem.

    Returns (corpus, expected-call kwargs, symbol sequences).  The corpus
    is built from hand-made lifecycles whose event specs are also mapped
    to symbols here, independently of the package's symbol rule.
    """
    from sockscope.model import (
        AddrArgs,
        FdArgs,
        IoArgs,
        IoctlArgs,
        NetAddress,
        SockoptArgs,
        SocketLifecycle,
        TraceEvent,
        TraceMeta,
    )
    from sockscope.functions import BY_NAME
    from sockscope.traceio import Corpus, Trace

    alphabet = rng.sample(_MINE_ALPHABET, rng.randint(3, 5))
    seqs: list[tuple[str, ...]] = []
    lifecycles = []
    for i in range(rng.randint(4, 12)):
        specs = [rng.choice(alphabet) for _ in range(rng.randint(2, 10))]
        seqs.append(
            tuple(fn if opt is None else f"{fn}({opt})" for fn, opt in specs)
        )
        events = []
        for j, (fn, opt) in enumerate(specs):
            if fn in ("send", "recv"):
                args = IoArgs(fd=5, bytes=16)
            elif fn == "close":
                args = FdArgs(fd=5)
            elif fn == "connect":
                args = AddrArgs(fd=5, addr=NetAddress.ipv4("127.0.0.1", 80))
            elif fn == "ioctl":
                args = IoctlArgs(fd=5, request="FIONREAD")
            else:
                args = SockoptArgs(fd=5, level="SOL_SOCKET", optname=opt)
            events.append(
                TraceEvent(ts_us=j * 10, tid=1, fn=BY_NAME[fn], args=args, ret=0, err=0)
            )
        lifecycles.append(
            SocketLifecycle(
                socket_id=f"m{i}", domain="inet", sock_type="stream", events=events
            )
        )
    meta = TraceMeta(
        app="miner",
        cmd="miner",
        os="linux",
        tracer_version="1",
        started_at="2026-01-01T00:00:00Z",
        salt_fp="00000000",
    )
    corpus = Corpus(traces=[Trace(meta=meta, lifecycles=lifecycles)])
    min_support = rng.randint(2, 4)
    max_len = rng.randint(2, 6)
    return corpus, min_support, max_len, seqs
