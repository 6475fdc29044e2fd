"""Rebuilding per-socket histories from a flat event stream.

The tracer emits one stream per process; descriptors are meaningful only
within it.  ``build_lifecycles`` walks a stream in timestamp order and
partitions every event into exactly one socket lifecycle or the
unattributed bucket (events on descriptors never seen as sockets, plus
calls that reference no descriptor at all, like poll or epoll_wait).
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .functions import ApiFunction, TWINS
from .model import (
    AddrArgs,
    DupArgs,
    EpollArgs,
    FcntlArgs,
    FdArgs,
    IoArgs,
    IoctlArgs,
    SendfileArgs,
    SockoptArgs,
    SocketArgs,
    SocketLifecycle,
    TraceEvent,
)

_F = ApiFunction


@dataclass
class LifecycleBuild:
    """Result of one reconstruction pass."""

    lifecycles: list[SocketLifecycle] = field(default_factory=list)
    unattributed: list[TraceEvent] = field(default_factory=list)


def _event_fd(event: TraceEvent) -> int | None:
    """The socket descriptor an event acts on, if any.

    epoll_ctl targets the registered fd (the epoll fd itself is not a
    socket); sendfile writes to out_fd.  Wait-style calls return None.
    """
    args = event.args
    if isinstance(args, (AddrArgs, IoArgs, SockoptArgs, FcntlArgs, IoctlArgs, FdArgs)):
        return args.fd
    if isinstance(args, SendfileArgs):
        return args.out_fd
    if isinstance(args, EpollArgs) and event.fn is _F.EPOLL_CTL:
        return args.fd
    return None


_DOMAIN_BY_FAMILY = {"ipv4": "inet", "ipv6": "inet6", "unix": "unix"}


def _norm_type(sock_type: str) -> str:
    return sock_type if sock_type in ("stream", "dgram") else "other"


def build_lifecycles(events: list[TraceEvent], id_prefix: str = "") -> LifecycleBuild:
    """Partition one process stream into socket lifecycles.

    Events are processed in non-decreasing timestamp order (stable for
    ties, so per-thread order survives).  A creation call on a descriptor
    that is still mapped retires the stale mapping first — descriptor
    reuse after close always starts a fresh lifecycle.  dup/dup2/dup3
    alias the new descriptor to the existing lifecycle; a socket counts
    as closed only when an explicit close lands on its last live alias.
    """
    out = LifecycleBuild()
    live: dict[int, SocketLifecycle] = {}
    alive_fds: dict[int, set[int]] = {}  # id(lifecycle) -> live aliases
    seq = 0

    def new_lifecycle(ev: TraceEvent, fds: set[int], domain: str, sock_type: str) -> SocketLifecycle:
        nonlocal seq
        lc = SocketLifecycle(
            socket_id=f"{id_prefix}s{seq}",
            domain=domain,
            sock_type=_norm_type(sock_type),
            events=[ev],
            fds=set(fds),
        )
        seq += 1
        out.lifecycles.append(lc)
        for fd in fds:
            if fd in live:
                _drop_alias(live[fd], fd)
            live[fd] = lc
        alive_fds[id(lc)] = set(fds)
        return lc

    def _drop_alias(lc: SocketLifecycle, fd: int) -> None:
        alive_fds[id(lc)].discard(fd)
        if fd in live and live[fd] is lc:
            del live[fd]

    for ev in sorted(events, key=lambda e: e.ts_us):
        fn = ev.fn
        args = ev.args

        if fn is _F.SOCKET and isinstance(args, SocketArgs):
            if ev.ret >= 0:
                new_lifecycle(ev, {ev.ret}, args.domain, args.sock_type)
            else:
                out.unattributed.append(ev)
            continue

        if fn is _F.SOCKETPAIR and isinstance(args, SocketArgs):
            # Both ends are aliases of one lifecycle here: the pair is
            # created by a single call and no stat treats the ends apart.
            if ev.ret == 0 and args.sv is not None:
                new_lifecycle(ev, set(args.sv), args.domain, args.sock_type)
            else:
                out.unattributed.append(ev)
            continue

        if fn in (_F.ACCEPT, _F.ACCEPT4) and isinstance(args, AddrArgs):
            if ev.ret >= 0:
                listener = live.get(args.fd)
                if listener is not None:
                    domain = listener.domain
                    sock_type = listener.sock_type
                elif args.addr is not None:
                    domain = _DOMAIN_BY_FAMILY.get(args.addr.family, "unspec")
                    sock_type = "stream"
                else:
                    domain, sock_type = "unspec", "stream"
                new_lifecycle(ev, {ev.ret}, domain, sock_type)
            else:
                lc = live.get(args.fd)
                if lc is not None:
                    lc.events.append(ev)
                else:
                    out.unattributed.append(ev)
            continue

        if fn in (_F.DUP, _F.DUP2, _F.DUP3) and isinstance(args, DupArgs):
            src = live.get(args.oldfd)
            if ev.ret < 0 or src is None:
                # dup2 onto a tracked fd from an untracked source still
                # implicitly closes the target descriptor.
                if ev.ret >= 0 and args.newfd in live and args.newfd != args.oldfd:
                    _drop_alias(live[args.newfd], args.newfd)
                out.unattributed.append(ev)
                continue
            newfd = args.newfd
            if newfd != args.oldfd:
                if newfd in live and live[newfd] is not src:
                    _drop_alias(live[newfd], newfd)
                live[newfd] = src
                src.fds.add(newfd)
                alive_fds[id(src)].add(newfd)
            src.events.append(ev)
            continue

        if fn is _F.CLOSE and isinstance(args, FdArgs):
            lc = live.get(args.fd)
            if lc is None:
                out.unattributed.append(ev)
                continue
            lc.events.append(ev)
            if ev.ret == 0:
                _drop_alias(lc, args.fd)
                if not alive_fds[id(lc)]:
                    lc.closed = True
            continue

        fd = _event_fd(ev)
        if fd is not None and fd in live:
            live[fd].events.append(ev)
        else:
            out.unattributed.append(ev)

    return out


def _twin_consistent(first: TraceEvent, second: TraceEvent) -> bool:
    """Do these two records describe the same underlying call?"""
    a, b = first.args, second.args
    if first.ret != second.ret:
        return False
    if isinstance(a, IoArgs) and isinstance(b, IoArgs):
        return a.fd == b.fd and a.bytes == b.bytes and a.flags == b.flags
    if isinstance(a, AddrArgs) and isinstance(b, AddrArgs):
        return a.fd == b.fd
    if isinstance(a, EpollArgs) and isinstance(b, EpollArgs):
        return a.epfd == b.epfd
    return False


def collapse_twins(events: list[TraceEvent]) -> list[TraceEvent]:
    """Fold double-recorded calls into single logical events.

    On libc flavours where the simple entry point forwards to its richer
    sibling (send -> sendto, recv -> recvfrom, accept -> accept4,
    epoll_wait -> epoll_pwait) one application call is recorded twice.
    Whenever the simple record is immediately followed, on the same
    thread, by its sibling with consistent descriptor/size arguments and
    return value, the pair becomes one logical event under the simple
    name.  Folded events are marked so a second pass leaves them alone
    (idempotence); a pass never removes more than half the stream.
    """
    drop: set[int] = set()
    fold: set[int] = set()
    last_kept_by_tid: dict[int, int] = {}

    for idx, ev in enumerate(events):
        prev_idx = last_kept_by_tid.get(ev.tid)
        if prev_idx is not None:
            prev = events[prev_idx]
            if (
                not prev.twin_collapsed
                and prev_idx not in fold
                and TWINS.get(prev.fn) is ev.fn
                and _twin_consistent(prev, ev)
            ):
                drop.add(idx)
                fold.add(prev_idx)
                # The folded event is consumed; the next candidate pair
                # starts after it.
                del last_kept_by_tid[ev.tid]
                continue
        last_kept_by_tid[ev.tid] = idx

    out: list[TraceEvent] = []
    for idx, ev in enumerate(events):
        if idx in drop:
            continue
        if idx in fold:
            ev = TraceEvent(
                ts_us=ev.ts_us,
                tid=ev.tid,
                fn=ev.fn,
                args=ev.args,
                ret=ev.ret,
                err=ev.err,
                twin_collapsed=True,
            )
        out.append(ev)
    return out
