"""Capture-set tables: the traced functions and their groupings."""
from __future__ import annotations

import enum


class ApiFunction(str, enum.Enum):
    """One of the 40 socket-API functions recorded by the tracer."""

    SOCKET = "socket"
    SOCKETPAIR = "socketpair"
    BIND = "bind"
    CONNECT = "connect"
    LISTEN = "listen"
    ACCEPT = "accept"
    ACCEPT4 = "accept4"
    GETSOCKNAME = "getsockname"
    GETPEERNAME = "getpeername"
    SHUTDOWN = "shutdown"
    CLOSE = "close"
    DUP = "dup"
    DUP2 = "dup2"
    DUP3 = "dup3"
    SEND = "send"
    SENDTO = "sendto"
    SENDMSG = "sendmsg"
    SENDMMSG = "sendmmsg"
    SENDFILE = "sendfile"
    WRITE = "write"
    WRITEV = "writev"
    RECV = "recv"
    RECVFROM = "recvfrom"
    RECVMSG = "recvmsg"
    RECVMMSG = "recvmmsg"
    READ = "read"
    READV = "readv"
    GETSOCKOPT = "getsockopt"
    SETSOCKOPT = "setsockopt"
    FCNTL = "fcntl"
    IOCTL = "ioctl"
    POLL = "poll"
    PPOLL = "ppoll"
    SELECT = "select"
    PSELECT = "pselect"
    EPOLL_CREATE = "epoll_create"
    EPOLL_CREATE1 = "epoll_create1"
    EPOLL_CTL = "epoll_ctl"
    EPOLL_WAIT = "epoll_wait"
    EPOLL_PWAIT = "epoll_pwait"


_F = ApiFunction

#: Every traced function, in canonical order.
CAPTURE_SET: tuple[ApiFunction, ...] = tuple(_F)

#: Calls that bring a new socket into existence.
CREATORS = frozenset({_F.SOCKET, _F.SOCKETPAIR, _F.ACCEPT, _F.ACCEPT4})

SEND_FAMILY = frozenset(
    {_F.SEND, _F.SENDTO, _F.SENDMSG, _F.SENDMMSG, _F.WRITE, _F.WRITEV, _F.SENDFILE}
)
RECV_FAMILY = frozenset(
    {_F.RECV, _F.RECVFROM, _F.RECVMSG, _F.RECVMMSG, _F.READ, _F.READV}
)
PAYLOAD_FAMILY = SEND_FAMILY | RECV_FAMILY

#: Transfer calls that take a MSG_* flags argument.
FLAGGED_SEND = frozenset({_F.SEND, _F.SENDTO, _F.SENDMSG, _F.SENDMMSG})
FLAGGED_RECV = frozenset({_F.RECV, _F.RECVFROM, _F.RECVMSG, _F.RECVMMSG})

#: Simple wrapper -> richer sibling it forwards to on some libc flavours.
TWINS = {
    _F.SEND: _F.SENDTO,
    _F.RECV: _F.RECVFROM,
    _F.ACCEPT: _F.ACCEPT4,
    _F.EPOLL_WAIT: _F.EPOLL_PWAIT,
}

ADDR_FNS = frozenset(
    {_F.BIND, _F.CONNECT, _F.GETSOCKNAME, _F.GETPEERNAME, _F.ACCEPT, _F.ACCEPT4}
)
SOCKOPT_FNS = frozenset({_F.GETSOCKOPT, _F.SETSOCKOPT})
POLL_FNS = frozenset({_F.POLL, _F.PPOLL, _F.SELECT, _F.PSELECT})
EPOLL_FNS = frozenset(
    {_F.EPOLL_CREATE, _F.EPOLL_CREATE1, _F.EPOLL_CTL, _F.EPOLL_WAIT, _F.EPOLL_PWAIT}
)
DUP_FNS = frozenset({_F.DUP, _F.DUP2, _F.DUP3})

BY_NAME: dict[str, ApiFunction] = {f.value: f for f in _F}
