"""Deterministic synthetic corpus generation.

A generation spec (JSON) names target statistics — socket-type shares,
per-class fractions, flag rates, buffer-size mixes, call budgets — and
the generator realizes them *exactly* by integer counting: every
fraction must multiply out to a whole number of sockets or calls, and
generation fails up front (listing every offender) when one does not.
Two runs with the same spec produce byte-identical corpora.

Spec fields (all optional unless noted):

- ``seed`` (required), ``app_count`` (required)
- ``total_sockets`` + ``socket_types`` {stream,dgram,other -> fraction}
- ``tcp_classes`` — fractions over stream sockets, keys to
  :data:`~sockscope.analysis.TCP_CLASSES`
- ``udp_classes`` — fractions over datagram sockets
- ``ioctl_events`` + ``ioctl_requests`` (fractions; key "other" allowed)
- ``tcp_send_calls`` / ``tcp_recv_calls`` / ``udp_send_calls`` /
  ``udp_recv_calls`` — payload call budgets
- ``send_flags`` / ``recv_flags`` — per-flag fraction of all flag-capable
  calls in that direction
- ``recv_sizes`` — buffer-size mix for stream ``recv`` calls
- ``opening_pattern_fraction`` / ``closing_pattern_fraction`` — fraction
  of stream sockets scripted to the built-in templates
- ``tcpinfo`` {sockets, once_sockets, min_reads, max_reads} — counts
- ``tcpinfo_timing`` {reads, duration_us, placement: uniform|start}
- ``accept_origins`` {loopback, link_local, remote} + ``listen_apps`` +
  ``accept_apps``
- ``multicast`` {sender_apps, joiner_apps}
- ``bind_apps`` — apps given one bind-bearing socket
- ``per_app_baseline`` — every app gets a socket touching getsockopt,
  setsockopt and fcntl
- ``twin_send_fraction`` — fraction of stream send calls double-recorded
  as send+sendto pairs (incompatible with flag targets)

Integers are absolute counts; floats in [0,1] are fractions.
"""
from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .analysis import NETINFO_IOCTLS, TCP_CLASSES, UDP_CLASSES
from .functions import ApiFunction
from .model import (
    AddrArgs,
    FcntlArgs,
    FdArgs,
    IoArgs,
    IoctlArgs,
    NetAddress,
    SockoptArgs,
    SocketArgs,
    TraceEvent,
    TraceMeta,
)
from .traceio import write_trace_dir

_F = ApiFunction

STARTED_AT = "2017-03-01T00:00:00Z"


class GenerationError(ValueError):
    """The generation spec cannot be realized exactly; lists every offender."""

    def __init__(self, offenders: list[str]):
        self.offenders = list(offenders)
        super().__init__("infeasible generation spec:\n" + "\n".join(f"  - {o}" for o in self.offenders))


def load_spec(path: Path) -> dict:
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict):
        raise GenerationError(["spec must be a JSON object"])
    return doc


def builtin_spec(name: str) -> dict:
    """A generation spec shipped with the package (e.g. ``reference_mix``)."""
    from importlib.resources import files

    resource = files("sockscope").joinpath(f"specs/{name}.json")
    return json.loads(resource.read_text())


# ---------------------------------------------------------------------------
# Exact count resolution
# ---------------------------------------------------------------------------


def _as_count(value, total: int, what: str, offenders: list[str]) -> int:
    """An int is a count; a float is a fraction of ``total``."""
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        offenders.append(f"{what}: expected number, got {value!r}")
        return 0
    if isinstance(value, int):
        if value < 0:
            offenders.append(f"{what}: negative count {value}")
            return 0
        return value
    if not 0.0 <= value <= 1.0:
        offenders.append(f"{what}: fraction {value} outside [0,1]")
        return 0
    exact = value * total
    count = round(exact)
    if abs(exact - count) > 1e-9:
        offenders.append(
            f"{what}: fraction {value} of {total} is not a whole number ({exact})"
        )
        return 0
    return count


def _resolve_mix(
    mapping: dict,
    total: int,
    what: str,
    offenders: list[str],
    keys: tuple[str, ...] | None = None,
    must_sum: bool = True,
) -> dict[str, int]:
    counts: dict[str, int] = {}
    if keys is not None:
        unknown = set(mapping) - set(keys)
        if unknown:
            offenders.append(f"{what}: unknown keys {sorted(unknown)}")
    for key in sorted(mapping):
        counts[key] = _as_count(mapping[key], total, f"{what}.{key}", offenders)
    if must_sum and sum(counts.values()) != total:
        offenders.append(
            f"{what}: counts {counts} sum to {sum(counts.values())}, expected {total}"
        )
    return counts


def _spread(total: int, buckets: int, rng: random.Random, base: int = 0) -> list[int]:
    """Deal ``total`` items over ``buckets`` (each gets >= base)."""
    counts = [base] * buckets
    remaining = total - base * buckets
    assert remaining >= 0
    for _ in range(remaining):
        counts[rng.randrange(buckets)] += 1
    return counts


# ---------------------------------------------------------------------------
# Address helpers (all seeded)
# ---------------------------------------------------------------------------

_SAFE_V4_FIRST_OCTETS = (11, 23, 34, 45, 52, 66, 77, 88, 99, 101)


def _global_v4(rng: random.Random, port: int | None = None) -> NetAddress:
    bits = (rng.choice(_SAFE_V4_FIRST_OCTETS) << 24) | rng.getrandbits(24)
    return NetAddress("ipv4", bits, port if port is not None else rng.randint(1024, 60000))


def _global_v6(rng: random.Random, port: int | None = None) -> NetAddress:
    bits = (0x2 << 124) | rng.getrandbits(120)  # 2000::/4 unicast space
    return NetAddress("ipv6", bits, port if port is not None else rng.randint(1024, 60000))


def _global_addr(rng: random.Random, port: int | None = None) -> NetAddress:
    return _global_v6(rng, port) if rng.random() < 0.4 else _global_v4(rng, port)


def _loopback(rng: random.Random) -> NetAddress:
    return NetAddress.ipv4("127.0.0.1", rng.randint(1024, 60000))


def _link_local(rng: random.Random) -> NetAddress:
    bits = (0xA9FE << 16) | rng.getrandbits(16)
    return NetAddress("ipv4", bits, rng.randint(1024, 60000))


def _multicast(rng: random.Random) -> NetAddress:
    bits = (239 << 24) | rng.getrandbits(24)
    return NetAddress("ipv4", bits, rng.randint(1024, 60000))


# ---------------------------------------------------------------------------
# Socket plans
# ---------------------------------------------------------------------------


@dataclass
class _SocketPlan:
    kind: str  # one of the class names, or a feature tag
    sock_type: str = "stream"
    sends: int = 0
    recvs: int = 0
    ioctls: list[str] = field(default_factory=list)
    tcpinfo_reads: int = 0
    closing: bool = False
    opening: bool = False
    rcvtimeo_calls: int = 1
    multicast_send: bool = False
    membership_join: bool = False
    accept_peers: list[NetAddress] = field(default_factory=list)
    listen_only: bool = False
    timing: dict | None = None  # tcpinfo_timing parameters
    app: int | None = None  # pinned app, else dealt
    send_slots: list[int] = field(default_factory=list)  # global slot ids
    recv_slots: list[int] = field(default_factory=list)
    twin_sends: set[int] = field(default_factory=set)  # local send indices


@dataclass
class _Resolved:
    """Spec after validation: everything as integers."""

    seed: int
    app_count: int
    plans: list[_SocketPlan]
    send_flag_slots: dict[str, set[int]]
    recv_flag_slots: dict[str, set[int]]
    recv_sizes: list[int]  # per tcp-recv slot
    n_send_slots: int
    n_recv_slots: int


def _resolve(spec: dict) -> _Resolved:
    offenders: list[str] = []
    if not isinstance(spec.get("seed"), int):
        offenders.append("seed: required integer")
    if not isinstance(spec.get("app_count"), int) or spec.get("app_count", 0) < 1:
        offenders.append("app_count: required positive integer")
    if offenders:
        raise GenerationError(offenders)
    seed = spec["seed"]
    app_count = spec["app_count"]
    rng = random.Random(seed ^ 0x5EED)

    # --- socket totals ----------------------------------------------------
    total_sockets = spec.get("total_sockets")
    type_counts = {"stream": 0, "dgram": 0, "other": 0}
    if total_sockets is not None:
        if "socket_types" not in spec:
            offenders.append("socket_types: required when total_sockets is set")
        else:
            type_counts.update(
                _resolve_mix(
                    spec["socket_types"],
                    total_sockets,
                    "socket_types",
                    offenders,
                    keys=("stream", "dgram", "other"),
                )
            )
    stream_total = type_counts["stream"]
    dgram_total = type_counts["dgram"]

    # --- class pools ------------------------------------------------------
    tcp_pools: dict[str, int] = {}
    if "tcp_classes" in spec:
        if total_sockets is None:
            offenders.append("tcp_classes: requires total_sockets/socket_types")
        tcp_pools = _resolve_mix(
            spec["tcp_classes"], stream_total, "tcp_classes", offenders, keys=TCP_CLASSES
        )
    udp_pools: dict[str, int] = {}
    if "udp_classes" in spec:
        if total_sockets is None:
            offenders.append("udp_classes: requires total_sockets/socket_types")
        udp_pools = _resolve_mix(
            spec["udp_classes"], dgram_total, "udp_classes", offenders, keys=UDP_CLASSES
        )

    def claim(pools: dict[str, int], key: str, n: int, what: str) -> None:
        if not pools:
            return
        if pools.get(key, 0) < n:
            offenders.append(
                f"{what}: needs {n} sockets from {key} pool, only {pools.get(key, 0)} available"
            )
            pools[key] = 0
        else:
            pools[key] -= n

    plans: list[_SocketPlan] = []

    # --- feature sockets --------------------------------------------------
    if spec.get("per_app_baseline"):
        claim(tcp_pools, "local_other", app_count, "per_app_baseline")
        for app in range(app_count):
            plans.append(_SocketPlan(kind="baseline", app=app))

    bind_apps = _as_count(spec.get("bind_apps", 0), app_count, "bind_apps", offenders)
    if bind_apps > app_count:
        offenders.append(f"bind_apps: {bind_apps} exceeds app_count {app_count}")
    if bind_apps:
        claim(tcp_pools, "local_other", bind_apps, "bind_apps")
        for app in rng.sample(range(app_count), bind_apps):
            plans.append(_SocketPlan(kind="binder", app=app))

    listen_apps = spec.get("listen_apps", 0)
    accept_apps = spec.get("accept_apps", 0)
    origins = spec.get("accept_origins")
    if origins is not None or listen_apps or accept_apps:
        origins = origins or {}
        counts = {
            k: _as_count(origins.get(k, 0), 0, f"accept_origins.{k}", offenders)
            for k in ("loopback", "link_local", "remote")
        }
        total_accepts = sum(counts.values())
        if not isinstance(listen_apps, int) or not isinstance(accept_apps, int):
            offenders.append("listen_apps/accept_apps: must be integers")
            listen_apps = accept_apps = 0
        if accept_apps > listen_apps:
            offenders.append("accept_apps exceeds listen_apps")
        if listen_apps > app_count:
            offenders.append("listen_apps exceeds app_count")
        if accept_apps and total_accepts < accept_apps:
            offenders.append("accept_origins total below accept_apps (need >=1 each)")
        listener_apps = rng.sample(range(app_count), listen_apps) if listen_apps else []
        peers: list[NetAddress] = []
        for _ in range(counts["loopback"]):
            peers.append(_loopback(rng))
        for _ in range(counts["link_local"]):
            peers.append(_link_local(rng))
        for _ in range(counts["remote"]):
            peers.append(_global_addr(rng))
        rng.shuffle(peers)
        # a listener's own history lands in local_other; each accepted
        # socket is an accept+close pair, i.e. local_immediate_close
        claim(tcp_pools, "local_other", listen_apps, "accept_origins")
        claim(tcp_pools, "local_immediate_close", total_accepts, "accept_origins")
        if accept_apps:
            deal = _spread(total_accepts, accept_apps, rng, base=1)
        else:
            deal = []
        cursor = 0
        for i, app in enumerate(listener_apps):
            if i < accept_apps:
                take = deal[i]
                plan_peers = peers[cursor:cursor + take]
                cursor += take
            else:
                plan_peers = []
            plans.append(
                _SocketPlan(kind="listener", app=app, accept_peers=plan_peers,
                            listen_only=not plan_peers)
            )

    multicast = spec.get("multicast") or {}
    mc_senders = _as_count(multicast.get("sender_apps", 0), app_count, "multicast.sender_apps", offenders)
    mc_joiners = _as_count(multicast.get("joiner_apps", 0), app_count, "multicast.joiner_apps", offenders)
    if mc_senders > app_count or mc_joiners > app_count:
        offenders.append("multicast: more apps than app_count")
    if mc_senders:
        claim(udp_pools, "data", mc_senders, "multicast.sender_apps")
        for app in rng.sample(range(app_count), mc_senders):
            plans.append(_SocketPlan(kind="data", sock_type="dgram", app=app,
                                     sends=1, multicast_send=True))
    if mc_joiners:
        claim(udp_pools, "other", mc_joiners, "multicast.joiner_apps")
        for app in rng.sample(range(app_count), mc_joiners):
            plans.append(_SocketPlan(kind="joiner", sock_type="dgram", app=app,
                                     membership_join=True))

    timing = spec.get("tcpinfo_timing")
    if timing is not None:
        reads = timing.get("reads")
        duration = timing.get("duration_us")
        placement = timing.get("placement", "uniform")
        if not isinstance(reads, int) or reads < 1:
            offenders.append("tcpinfo_timing.reads: positive integer required")
        if not isinstance(duration, int) or duration < 1000:
            offenders.append("tcpinfo_timing.duration_us: integer >= 1000 required")
        if placement not in ("uniform", "start"):
            offenders.append("tcpinfo_timing.placement: uniform or start")
        claim(tcp_pools, "remote_data", 1, "tcpinfo_timing")
        plans.append(
            _SocketPlan(kind="remote_data", sends=1, timing={
                "reads": reads or 1,
                "duration_us": duration or 1000,
                "placement": placement,
            })
        )

    # --- generic class sockets --------------------------------------------
    tcp_generic_start = len(plans)
    remote_data_idx: list[int] = [
        i for i, p in enumerate(plans) if p.kind == "remote_data"
    ]
    for cls in TCP_CLASSES:
        for _ in range(tcp_pools.get(cls, 0)):
            plan = _SocketPlan(kind=cls)
            if cls == "local_rcvtimeo_only":
                plan.rcvtimeo_calls = rng.randint(1, 2)
            if cls == "remote_data":
                remote_data_idx.append(len(plans))
            plans.append(plan)
    for cls in UDP_CLASSES:
        for _ in range(udp_pools.get(cls, 0)):
            plans.append(_SocketPlan(kind=cls, sock_type="dgram"))
    if total_sockets is not None and not tcp_pools:
        # stream share requested without class targets: plain local sockets
        realized = sum(1 for p in plans if p.sock_type == "stream")
        fill = stream_total - realized
        if fill < 0:
            offenders.append("socket_types.stream: below the feature socket count")
        for _ in range(max(fill, 0)):
            plans.append(_SocketPlan(kind="local_other"))
    if total_sockets is not None and not udp_pools:
        realized = sum(1 for p in plans if p.sock_type == "dgram")
        fill = dgram_total - realized
        if fill < 0:
            offenders.append("socket_types.dgram: below the feature socket count")
        for _ in range(max(fill, 0)):
            plans.append(_SocketPlan(kind="other", sock_type="dgram"))
    for _ in range(type_counts["other"]):
        plans.append(_SocketPlan(kind="rawsock", sock_type="other"))

    del tcp_generic_start

    # --- ioctl deal ---------------------------------------------------------
    netinfo_plans = [p for p in plans if p.kind == "netinfo_ioctl"]
    ioctl_events = spec.get("ioctl_events")
    if ioctl_events is not None:
        if "ioctl_requests" not in spec:
            offenders.append("ioctl_requests: required when ioctl_events is set")
        elif not netinfo_plans:
            offenders.append("ioctl_events: no netinfo_ioctl sockets to host them")
        elif ioctl_events < len(netinfo_plans):
            offenders.append(
                f"ioctl_events: {ioctl_events} below netinfo socket count {len(netinfo_plans)}"
            )
        else:
            req_counts = _resolve_mix(
                spec["ioctl_requests"], ioctl_events, "ioctl_requests", offenders,
                keys=NETINFO_IOCTLS + ("other",),
            )
            requests: list[str] = []
            for name in sorted(req_counts):
                emit = "SIOCGIFMTU" if name == "other" else name
                requests.extend([emit] * req_counts[name])
            rng.shuffle(requests)
            deal = _spread(ioctl_events, len(netinfo_plans), rng, base=1)
            cursor = 0
            for plan, take in zip(netinfo_plans, deal):
                plan.ioctls = requests[cursor:cursor + take]
                cursor += take
    else:
        for plan in netinfo_plans:
            plan.ioctls = [rng.choice(NETINFO_IOCTLS)]

    # --- payload budgets ----------------------------------------------------
    remote_plans = [p for p in plans if p.kind == "remote_data"]
    udp_data_plans = [p for p in plans if p.kind == "data" and p.sock_type == "dgram"]
    tcp_sends = spec.get("tcp_send_calls")
    if tcp_sends is not None:
        if not remote_plans:
            offenders.append("tcp_send_calls: no remote_data sockets to host them")
        elif tcp_sends < len(remote_plans):
            offenders.append(
                f"tcp_send_calls: {tcp_sends} below remote_data socket count {len(remote_plans)}"
            )
        else:
            for plan, n in zip(remote_plans, _spread(tcp_sends, len(remote_plans), rng, base=1)):
                plan.sends = n
    else:
        for plan in remote_plans:
            if not plan.sends:
                plan.sends = 1
    tcp_recvs = spec.get("tcp_recv_calls", 0)
    if tcp_recvs:
        if not remote_plans:
            offenders.append("tcp_recv_calls: no remote_data sockets to host them")
        else:
            for plan, n in zip(remote_plans, _spread(tcp_recvs, len(remote_plans), rng)):
                plan.recvs = n
    udp_sends = spec.get("udp_send_calls")
    plain_udp = [p for p in udp_data_plans if not p.multicast_send]
    if udp_sends is not None:
        if not plain_udp:
            offenders.append("udp_send_calls: no datagram data sockets to host them")
        elif udp_sends < len(plain_udp):
            offenders.append(
                f"udp_send_calls: {udp_sends} below datagram data socket count {len(plain_udp)}"
            )
        else:
            for plan, n in zip(plain_udp, _spread(udp_sends, len(plain_udp), rng, base=1)):
                plan.sends = n
    else:
        for plan in plain_udp:
            if not plan.sends:
                plan.sends = 1
    udp_recvs = spec.get("udp_recv_calls", 0)
    if udp_recvs:
        if not udp_data_plans:
            offenders.append("udp_recv_calls: no datagram data sockets to host them")
        else:
            for plan, n in zip(udp_data_plans, _spread(udp_recvs, len(udp_data_plans), rng)):
                plan.recvs = n

    # --- tcpinfo spread -----------------------------------------------------
    tcpinfo = spec.get("tcpinfo")
    if tcpinfo is not None:
        hosts = tcpinfo.get("sockets", 0)
        once = tcpinfo.get("once_sockets", 0)
        lo = tcpinfo.get("min_reads", 2)
        hi = tcpinfo.get("max_reads", 16)
        plain_remote = [p for p in remote_plans if p.timing is None]
        if not isinstance(hosts, int) or not isinstance(once, int):
            offenders.append("tcpinfo: sockets/once_sockets must be integers")
        elif hosts > len(plain_remote):
            offenders.append(
                f"tcpinfo.sockets: {hosts} exceeds available remote_data sockets {len(plain_remote)}"
            )
        elif once > hosts:
            offenders.append("tcpinfo.once_sockets exceeds tcpinfo.sockets")
        elif not (isinstance(lo, int) and isinstance(hi, int) and 2 <= lo <= hi):
            offenders.append("tcpinfo.min_reads/max_reads: need 2 <= min <= max")
        else:
            chosen = rng.sample(range(len(plain_remote)), hosts)
            for j, idx in enumerate(chosen):
                plain_remote[idx].tcpinfo_reads = 1 if j < once else rng.randint(lo, hi)

    # --- opening / closing templates -----------------------------------------
    stream_plans = [p for p in plans if p.sock_type == "stream"]
    n_stream = len(stream_plans)
    opening = _as_count(
        spec.get("opening_pattern_fraction", 0), n_stream, "opening_pattern_fraction", offenders
    )
    if opening:
        plain_remote = [p for p in remote_plans if p.timing is None]
        if opening > len(plain_remote):
            offenders.append(
                f"opening_pattern_fraction: needs {opening} remote_data hosts, have {len(plain_remote)}"
            )
        else:
            for idx in rng.sample(range(len(plain_remote)), opening):
                plain_remote[idx].opening = True
    closing = _as_count(
        spec.get("closing_pattern_fraction", 0), n_stream, "closing_pattern_fraction", offenders
    )
    if closing:
        eligible = [
            p for p in plans
            if p.kind in ("remote_data", "remote_no_data", "local_wireless_check", "local_other")
            and p.timing is None
        ]
        if closing > len(eligible):
            offenders.append(
                f"closing_pattern_fraction: needs {closing} eligible sockets, have {len(eligible)}"
            )
        else:
            for idx in rng.sample(range(len(eligible)), closing):
                eligible[idx].closing = True

    # --- twin pairs -----------------------------------------------------------
    twin_fraction = spec.get("twin_send_fraction", 0)
    if twin_fraction:
        if "send_flags" in spec or "recv_flags" in spec:
            offenders.append("twin_send_fraction: incompatible with flag targets")
        total_tcp_sends = sum(p.sends for p in remote_plans)
        twins = _as_count(twin_fraction, total_tcp_sends, "twin_send_fraction", offenders)
        slots = []
        for pi, plan in enumerate(remote_plans):
            slots.extend((pi, k) for k in range(plan.sends))
        if twins > len(slots):
            offenders.append("twin_send_fraction: more twins than send calls")
        else:
            for pi, k in rng.sample(slots, twins):
                remote_plans[pi].twin_sends.add(k)

    # --- flag deals -------------------------------------------------------------
    send_slot_count = 0
    recv_slot_count = 0
    tcp_recv_slot_ids: list[int] = []
    for plan in plans:
        plan.send_slots = list(range(send_slot_count, send_slot_count + plan.sends))
        send_slot_count += plan.sends
        plan.recv_slots = list(range(recv_slot_count, recv_slot_count + plan.recvs))
        recv_slot_count += plan.recvs
        if plan.kind == "remote_data":
            tcp_recv_slot_ids.extend(plan.recv_slots)

    send_flag_slots: dict[str, set[int]] = {}
    for flag in sorted(spec.get("send_flags", {})):
        n = _as_count(spec["send_flags"][flag], send_slot_count, f"send_flags.{flag}", offenders)
        if n > send_slot_count:
            offenders.append(f"send_flags.{flag}: count {n} exceeds send calls {send_slot_count}")
            n = 0
        send_flag_slots[flag] = set(rng.sample(range(send_slot_count), n)) if n else set()
    recv_flag_slots: dict[str, set[int]] = {}
    for flag in sorted(spec.get("recv_flags", {})):
        n = _as_count(spec["recv_flags"][flag], recv_slot_count, f"recv_flags.{flag}", offenders)
        if n > recv_slot_count:
            offenders.append(f"recv_flags.{flag}: count {n} exceeds recv calls {recv_slot_count}")
            n = 0
        recv_flag_slots[flag] = set(rng.sample(range(recv_slot_count), n)) if n else set()

    # --- recv size deal -----------------------------------------------------------
    recv_sizes: list[int] = []
    if "recv_sizes" in spec:
        n_tcp_recvs = len(tcp_recv_slot_ids)
        if n_tcp_recvs == 0:
            offenders.append("recv_sizes: requires tcp_recv_calls > 0")
        else:
            size_counts = _resolve_mix(
                spec["recv_sizes"], n_tcp_recvs, "recv_sizes", offenders
            )
            for key in sorted(size_counts, key=lambda s: int(s)):
                try:
                    size = int(key)
                except ValueError:
                    offenders.append(f"recv_sizes: key {key!r} is not an integer")
                    continue
                recv_sizes.extend([size] * size_counts[key])
            rng.shuffle(recv_sizes)

    # --- app assignment --------------------------------------------------------------
    floating = [p for p in plans if p.app is None]
    app_seq = [i % app_count for i in range(len(floating))]
    rng.shuffle(app_seq)
    for plan, app in zip(floating, app_seq):
        plan.app = app

    if offenders:
        raise GenerationError(offenders)
    return _Resolved(
        seed=seed,
        app_count=app_count,
        plans=plans,
        send_flag_slots=send_flag_slots,
        recv_flag_slots=recv_flag_slots,
        recv_sizes=recv_sizes,
        n_send_slots=send_slot_count,
        n_recv_slots=recv_slot_count,
    )


# ---------------------------------------------------------------------------
# Script materialization
# ---------------------------------------------------------------------------


class _TraceBuilder:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.events: list[TraceEvent] = []
        self.ts = 0
        self.next_fd = 3

    def tick(self) -> int:
        self.ts += self.rng.randint(1, 40)
        return self.ts

    def emit(self, fn: ApiFunction, args, ret: int, err: int = 0, ts: int | None = None) -> None:
        self.events.append(
            TraceEvent(ts_us=ts if ts is not None else self.tick(), tid=1, fn=fn, args=args, ret=ret, err=err)
        )

    def alloc_fd(self) -> int:
        fd = self.next_fd
        self.next_fd += 1
        return fd


def _slot_flags(slot_ids: list[int], k: int, table: dict[str, set[int]]) -> tuple[str, ...]:
    slot = slot_ids[k]
    return tuple(sorted(flag for flag, members in table.items() if slot in members))


def _emit_socket_script(tb: _TraceBuilder, plan: _SocketPlan, res: _Resolved,
                        tcp_size_of: dict[int, int]) -> None:
    rng = tb.rng
    fd = tb.alloc_fd()
    domain = "inet6" if rng.random() < 0.35 else "inet"

    def sockopt(fn: ApiFunction, level: str, name: str, val, ret: int = 0) -> None:
        tb.emit(fn, SockoptArgs(fd=fd, level=level, optname=name, optval=val), ret)

    def do_close() -> None:
        if plan.closing:
            sockopt(_F.GETSOCKOPT, "SOL_SOCKET", "SO_DEBUG", 0)
            sockopt(_F.GETSOCKOPT, "SOL_SOCKET", "SO_LINGER", {"onoff": 0, "linger": 0})
        tb.emit(_F.CLOSE, FdArgs(fd=fd), 0)

    if plan.sock_type == "other":
        tb.emit(_F.SOCKET, SocketArgs(domain="netlink", sock_type="raw"), fd)
        do_close()
        return

    if plan.sock_type == "dgram":
        tb.emit(_F.SOCKET, SocketArgs(domain=domain, sock_type="dgram", protocol=17), fd)
        if plan.kind == "netinfo_ioctl":
            for request in plan.ioctls:
                tb.emit(_F.IOCTL, IoctlArgs(fd=fd, request=request), 0)
        elif plan.kind == "connect_no_data":
            tb.emit(_F.CONNECT, AddrArgs(fd=fd, addr=_global_addr(rng, 53)), 0)
        elif plan.kind == "joiner":
            sockopt(_F.SETSOCKOPT, "IPPROTO_IP", "IP_ADD_MEMBERSHIP", {"len": 8})
        elif plan.kind == "data":
            dest = _multicast(rng) if plan.multicast_send else _global_addr(rng)
            for k in range(plan.sends):
                size = rng.choice((64, 128, 512, 1400))
                tb.emit(
                    _F.SENDTO,
                    IoArgs(fd=fd, bytes=size,
                           flags=_slot_flags(plan.send_slots, k, res.send_flag_slots),
                           addr=dest),
                    size,
                )
            for k in range(plan.recvs):
                tb.emit(
                    _F.RECVFROM,
                    IoArgs(fd=fd, bytes=2048,
                           flags=_slot_flags(plan.recv_slots, k, res.recv_flag_slots)),
                    rng.randint(16, 512),
                )
        do_close()
        return

    # stream sockets -------------------------------------------------------
    if plan.kind == "listener":
        tb.emit(_F.SOCKET, SocketArgs(domain=domain, sock_type="stream", protocol=6), fd)
        tb.emit(_F.BIND, AddrArgs(fd=fd, addr=NetAddress.ipv4("0.0.0.0", rng.randint(1024, 60000))), 0)
        tb.emit(_F.LISTEN, FdArgs(fd=fd, backlog=16), 0)
        accepted: list[int] = []
        for peer in plan.accept_peers:
            newfd = tb.alloc_fd()
            tb.emit(_F.ACCEPT, AddrArgs(fd=fd, addr=peer), newfd)
            accepted.append(newfd)
        for newfd in accepted:
            tb.emit(_F.CLOSE, FdArgs(fd=newfd), 0)
        tb.emit(_F.CLOSE, FdArgs(fd=fd), 0)
        return

    if plan.kind == "baseline":
        tb.emit(_F.SOCKET, SocketArgs(domain=domain, sock_type="stream", protocol=6), fd)
        sockopt(_F.GETSOCKOPT, "SOL_SOCKET", "SO_ERROR", 0)
        sockopt(_F.SETSOCKOPT, "SOL_SOCKET", "SO_RCVTIMEO", {"sec": 5, "usec": 0})
        tb.emit(_F.FCNTL, FcntlArgs(fd=fd, cmd="F_GETFL"), 2)
        do_close()
        return

    if plan.kind == "binder":
        tb.emit(_F.SOCKET, SocketArgs(domain=domain, sock_type="stream", protocol=6), fd)
        tb.emit(_F.BIND, AddrArgs(fd=fd, addr=NetAddress.ipv4("0.0.0.0", 0)), 0)
        tb.emit(_F.GETSOCKNAME, AddrArgs(fd=fd, addr=NetAddress.ipv4("0.0.0.0", rng.randint(32768, 60999))), 0)
        do_close()
        return

    if plan.kind == "local_rcvtimeo_only":
        tb.emit(_F.SOCKET, SocketArgs(domain=domain, sock_type="stream", protocol=6), fd)
        for _ in range(plan.rcvtimeo_calls):
            sockopt(_F.SETSOCKOPT, "SOL_SOCKET", "SO_RCVTIMEO", {"sec": rng.randint(1, 30), "usec": 0})
        tb.emit(_F.CLOSE, FdArgs(fd=fd), 0)
        return

    if plan.kind == "local_immediate_close":
        tb.emit(_F.SOCKET, SocketArgs(domain=domain, sock_type="stream", protocol=6), fd)
        tb.emit(_F.CLOSE, FdArgs(fd=fd), 0)
        return

    if plan.kind == "local_wireless_check":
        tb.emit(_F.SOCKET, SocketArgs(domain=domain, sock_type="stream", protocol=6), fd)
        tb.emit(_F.IOCTL, IoctlArgs(fd=fd, request="SIOCGIWNAME"), 0)
        do_close()
        return

    if plan.kind == "local_other":
        tb.emit(_F.SOCKET, SocketArgs(domain=domain, sock_type="stream", protocol=6), fd)
        tb.emit(_F.GETSOCKNAME, AddrArgs(fd=fd, addr=NetAddress.ipv4("0.0.0.0", 0)), 0)
        do_close()
        return

    if plan.kind == "remote_no_data":
        tb.emit(_F.SOCKET, SocketArgs(domain=domain, sock_type="stream", protocol=6), fd)
        tb.emit(_F.CONNECT, AddrArgs(fd=fd, addr=_global_addr(rng, 443)), 0)
        do_close()
        return

    assert plan.kind == "remote_data"
    dest = _global_addr(rng, 443)
    base_ts: int | None = None
    if plan.timing is not None:
        base_ts = tb.ts + rng.randint(1, 40)
        tb.ts = base_ts
        tb.emit(_F.SOCKET, SocketArgs(domain=domain, sock_type="stream", protocol=6), fd, ts=base_ts)
    elif plan.opening:
        tb.emit(_F.SOCKET, SocketArgs(domain=domain, sock_type="stream", protocol=6), fd)
        tb.emit(_F.BIND, AddrArgs(fd=fd, addr=NetAddress.ipv4("0.0.0.0", 0)), 0)
        local = NetAddress.ipv4("0.0.0.0", rng.randint(32768, 60999))
        tb.emit(_F.GETSOCKNAME, AddrArgs(fd=fd, addr=local), 0)
        sockopt(_F.SETSOCKOPT, "SOL_SOCKET", "SO_RCVTIMEO", {"sec": 10, "usec": 0})
        tb.emit(_F.FCNTL, FcntlArgs(fd=fd, cmd="F_GETFL"), 2)
        tb.emit(_F.FCNTL, FcntlArgs(fd=fd, cmd="F_SETFL", flags=("O_NONBLOCK",), arg=2050), 0)
        tb.emit(_F.CONNECT, AddrArgs(fd=fd, addr=dest), -1, err=115)  # EINPROGRESS
        sockopt(_F.GETSOCKOPT, "SOL_SOCKET", "SO_ERROR", 0)
        tb.emit(_F.FCNTL, FcntlArgs(fd=fd, cmd="F_GETFL"), 2050)
        tb.emit(_F.FCNTL, FcntlArgs(fd=fd, cmd="F_SETFL", flags=(), arg=2), 0)
        tb.emit(_F.GETSOCKNAME, AddrArgs(fd=fd, addr=local), 0)
        sockopt(_F.GETSOCKOPT, "SOL_SOCKET", "SO_RCVTIMEO", {"sec": 10, "usec": 0})
        sockopt(_F.GETSOCKOPT, "SOL_SOCKET", "SO_RCVTIMEO", {"sec": 10, "usec": 0})
        tb.emit(_F.FCNTL, FcntlArgs(fd=fd, cmd="F_GETFL"), 2)
        tb.emit(_F.FCNTL, FcntlArgs(fd=fd, cmd="F_SETFL", flags=("O_NONBLOCK",), arg=2050), 0)
    else:
        tb.emit(_F.SOCKET, SocketArgs(domain=domain, sock_type="stream", protocol=6), fd)
        tb.emit(_F.CONNECT, AddrArgs(fd=fd, addr=dest), 0)

    if plan.timing is None:
        for k in range(plan.sends):
            size = rng.choice((128, 256, 1024, 4096))
            flags = _slot_flags(plan.send_slots, k, res.send_flag_slots)
            tb.emit(_F.SEND, IoArgs(fd=fd, bytes=size, flags=flags), size)
            if k in plan.twin_sends:
                tb.emit(_F.SENDTO, IoArgs(fd=fd, bytes=size, flags=flags), size)
        for k in range(plan.recvs):
            slot = plan.recv_slots[k]
            size = tcp_size_of.get(slot, 2048)
            tb.emit(
                _F.RECV,
                IoArgs(fd=fd, bytes=size,
                       flags=_slot_flags(plan.recv_slots, k, res.recv_flag_slots)),
                min(size, rng.randint(1, max(size, 1))),
            )
        for _ in range(plan.tcpinfo_reads):
            sockopt(_F.GETSOCKOPT, "IPPROTO_TCP", "TCP_INFO", {"len": 104})
        do_close()
        return

    # the timing socket: reads placed over a fixed lifetime
    assert base_ts is not None
    params = plan.timing
    duration = params["duration_us"]
    tb.emit(_F.CONNECT, AddrArgs(fd=fd, addr=dest), 0, ts=base_ts + 1)
    tb.emit(_F.SEND, IoArgs(fd=fd, bytes=512,
                            flags=_slot_flags(plan.send_slots, 0, res.send_flag_slots)), 512,
            ts=base_ts + 2)
    if params["placement"] == "uniform":
        points = sorted(rng.random() for _ in range(params["reads"]))
    else:
        points = sorted(rng.uniform(0.0, 0.05) for _ in range(params["reads"]))
    for u in points:
        ts = base_ts + max(3, min(duration - 1, round(u * duration)))
        tb.emit(_F.GETSOCKOPT,
                SockoptArgs(fd=fd, level="IPPROTO_TCP", optname="TCP_INFO", optval={"len": 104}),
                0, ts=ts)
    tb.emit(_F.CLOSE, FdArgs(fd=fd), 0, ts=base_ts + duration)
    tb.ts = base_ts + duration


def generate_corpus(spec: dict, out_dir: Path) -> list[Path]:
    """Materialize the generation spec under ``out_dir``, one trace dir per app.

    Raises :class:`GenerationError` (listing every offender) when any
    target cannot be met exactly.  Returns the trace directories.
    """
    res = _resolve(spec)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    salt_fp = hashlib.sha1(res.seed.to_bytes(8, "big", signed=True)).hexdigest()[:8]

    tcp_size_of: dict[int, int] = {}
    cursor = 0
    for plan in res.plans:
        if plan.kind == "remote_data":
            for slot in plan.recv_slots:
                if cursor < len(res.recv_sizes):
                    tcp_size_of[slot] = res.recv_sizes[cursor]
                    cursor += 1

    by_app: dict[int, list[_SocketPlan]] = {}
    for plan in res.plans:
        assert plan.app is not None
        by_app.setdefault(plan.app, []).append(plan)

    paths = []
    for app in range(res.app_count):
        name = f"app{app:03d}"
        rng = random.Random((res.seed << 16) ^ app)
        tb = _TraceBuilder(rng)
        for plan in by_app.get(app, []):
            _emit_socket_script(tb, plan, res, tcp_size_of)
        meta = TraceMeta(
            app=name,
            cmd=f"synthetic://{name}",
            os="Linux",
            tracer_version=__version__,
            started_at=STARTED_AT,
            salt_fp=salt_fp,
            opt_out=False,
            kernel="5.15.0-synthetic",
            netcfg="ifaces=lo,wlan0;families=ipv4,ipv6",
        )
        trace_dir = out_dir / name
        write_trace_dir(trace_dir, meta, [(1000 + app, tb.events)])
        paths.append(trace_dir)
    return paths
