"""Core trace data types.

A trace is a stream of :class:`TraceEvent` records, one per intercepted
call.  Each event carries a function-specific argument record (one of the
``*Args`` dataclasses below).  Addresses travel as :class:`NetAddress`,
which classifies itself from its raw bits.
"""
from __future__ import annotations

import ipaddress
from dataclasses import dataclass, field
from typing import Union

from .functions import ApiFunction


@dataclass(frozen=True)
class NetAddress:
    """A network endpoint: family, raw address bits, port.

    ``family`` is one of ``ipv4``, ``ipv6``, ``unix``, ``unspec``.  For the
    IP families ``bits`` holds the address as an unsigned integer in network
    bit order (32 or 128 bits); for the others it is zero.  Classification
    flags are derived from the bits, never stored.
    """

    family: str
    bits: int = 0
    port: int = 0

    @property
    def is_ip(self) -> bool:
        return self.family in ("ipv4", "ipv6")

    @property
    def _v4_mapped(self) -> int | None:
        # ::ffff:a.b.c.d carries an embedded ipv4 in the low 32 bits.
        if self.family == "ipv6" and (self.bits >> 32) == 0xFFFF:
            return self.bits & 0xFFFFFFFF
        return None

    @property
    def is_loopback(self) -> bool:
        if self.family == "ipv4":
            return (self.bits >> 24) == 127
        if self.family == "ipv6":
            v4 = self._v4_mapped
            if v4 is not None:
                return (v4 >> 24) == 127
            return self.bits == 1
        return False

    @property
    def is_link_local(self) -> bool:
        if self.family == "ipv4":
            return (self.bits >> 16) == 0xA9FE  # 169.254/16
        if self.family == "ipv6":
            v4 = self._v4_mapped
            if v4 is not None:
                return (v4 >> 16) == 0xA9FE
            return (self.bits >> 118) == 0x3FA  # fe80::/10
        return False

    @property
    def is_multicast(self) -> bool:
        if self.family == "ipv4":
            return (self.bits >> 28) == 0xE  # 224/4
        if self.family == "ipv6":
            return (self.bits >> 120) == 0xFF  # ff00::/8
        return False

    @property
    def is_global(self) -> bool:
        return self.is_ip and not (
            self.is_loopback or self.is_link_local or self.is_multicast
        )

    @property
    def category(self) -> str:
        """One of loopback / link_local / multicast / global / none."""
        if self.is_loopback:
            return "loopback"
        if self.is_link_local:
            return "link_local"
        if self.is_multicast:
            return "multicast"
        if self.is_ip:
            return "global"
        return "none"

    def text(self) -> str:
        """Dotted-quad or colon-hex form (empty for non-IP families)."""
        if self.family == "ipv4":
            return str(ipaddress.IPv4Address(self.bits))
        if self.family == "ipv6":
            return str(ipaddress.IPv6Address(self.bits))
        return ""

    def packed(self) -> bytes:
        """Network-order raw bytes (4 or 16)."""
        if self.family == "ipv4":
            return self.bits.to_bytes(4, "big")
        if self.family == "ipv6":
            return self.bits.to_bytes(16, "big")
        raise ValueError(f"family {self.family!r} has no packed form")

    @classmethod
    def from_text(cls, family: str, addr: str, port: int) -> "NetAddress":
        if family == "ipv4":
            return cls("ipv4", int(ipaddress.IPv4Address(addr)), port)
        if family == "ipv6":
            return cls("ipv6", int(ipaddress.IPv6Address(addr)), port)
        return cls(family, 0, port)

    @classmethod
    def ipv4(cls, addr: str, port: int = 0) -> "NetAddress":
        return cls.from_text("ipv4", addr, port)

    @classmethod
    def ipv6(cls, addr: str, port: int = 0) -> "NetAddress":
        return cls.from_text("ipv6", addr, port)


# ---------------------------------------------------------------------------
# Per-function argument records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SocketArgs:
    """socket / socketpair: domain, type, protocol and creation flags."""

    domain: str
    sock_type: str
    protocol: int = 0
    flags: tuple[str, ...] = ()  # SOCK_NONBLOCK / SOCK_CLOEXEC
    sv: tuple[int, int] | None = None  # the two fds a socketpair produced


@dataclass(frozen=True)
class AddrArgs:
    """bind / connect / getsockname / getpeername / accept / accept4."""

    fd: int
    addr: NetAddress | None = None
    flags: tuple[str, ...] = ()  # accept4 creation flags


@dataclass(frozen=True)
class IoArgs:
    """Payload transfer calls: fd, buffer size, flags, optional peer."""

    fd: int
    bytes: int
    flags: tuple[str, ...] = ()
    iov: int | None = None
    addr: NetAddress | None = None  # sendto destination / recvfrom source


OptVal = Union[int, dict, None]


@dataclass(frozen=True)
class SockoptArgs:
    """getsockopt / setsockopt.

    ``optval`` is an int for scalar options, ``{"sec","usec"}`` for
    timeouts, ``{"onoff","linger"}`` for linger, and ``{"len": n}`` for
    anything opaque.  Never raw bytes.
    """

    fd: int
    level: str
    optname: str
    optval: OptVal = None


@dataclass(frozen=True)
class FcntlArgs:
    fd: int
    cmd: str
    flags: tuple[str, ...] | None = None  # decoded file-status flags (F_SETFL)
    arg: int | None = None  # raw third argument when meaningful


@dataclass(frozen=True)
class IoctlArgs:
    fd: int
    request: str


@dataclass(frozen=True)
class PollArgs:
    """poll / ppoll / select / pselect: only the shape of the wait."""

    nfds: int
    timeout_ms: int  # -1 for unbounded


@dataclass(frozen=True)
class EpollArgs:
    """epoll_create / epoll_create1 / epoll_ctl / epoll_wait / epoll_pwait."""

    epfd: int | None = None
    op: str | None = None
    fd: int | None = None
    events: tuple[str, ...] = ()
    size: int | None = None
    flags: int | None = None
    maxevents: int | None = None
    timeout_ms: int | None = None


@dataclass(frozen=True)
class DupArgs:
    oldfd: int
    newfd: int


@dataclass(frozen=True)
class FdArgs:
    """close / shutdown / listen."""

    fd: int
    how: str | None = None  # shutdown
    backlog: int | None = None  # listen


@dataclass(frozen=True)
class SendfileArgs:
    out_fd: int
    in_fd: int
    count: int


FnArgs = Union[
    SocketArgs,
    AddrArgs,
    IoArgs,
    SockoptArgs,
    FcntlArgs,
    IoctlArgs,
    PollArgs,
    EpollArgs,
    DupArgs,
    FdArgs,
    SendfileArgs,
]


@dataclass
class TraceEvent:
    """One intercepted call.

    ``ts_us`` is microseconds since trace start (monotonic), ``tid`` the
    calling thread, ``ret`` the raw return value and ``err`` the errno
    (zero unless ``ret`` signalled failure).
    """

    ts_us: int
    tid: int
    fn: ApiFunction
    args: FnArgs
    ret: int
    err: int = 0
    # Set when collapse_twins already folded this event's richer sibling
    # into it; keeps the fold from being applied twice.
    twin_collapsed: bool = field(default=False, compare=False, repr=False)


@dataclass
class TraceMeta:
    """Sidecar metadata for one traced process tree."""

    app: str
    cmd: str
    os: str
    tracer_version: str
    started_at: str  # RFC3339
    salt_fp: str  # first 8 hex chars of SHA-1(salt)
    opt_out: bool = False
    kernel: str | None = None  # absent under opt-out
    netcfg: str | None = None  # absent under opt-out


@dataclass
class SocketLifecycle:
    """Everything one socket did between creation and close.

    ``fds`` is every descriptor that ever referred to the socket (dup
    aliases included).  ``closed`` is True only when an explicit close hit
    the last remaining descriptor.
    """

    socket_id: str
    domain: str
    sock_type: str  # stream / dgram / other
    events: list[TraceEvent] = field(default_factory=list)
    fds: set[int] = field(default_factory=set)
    closed: bool = False

    @property
    def first_ts(self) -> int:
        return self.events[0].ts_us if self.events else 0

    @property
    def last_ts(self) -> int:
        return self.events[-1].ts_us if self.events else 0

    @property
    def lifetime_us(self) -> int:
        return self.last_ts - self.first_ts
