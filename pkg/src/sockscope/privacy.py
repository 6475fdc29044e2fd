"""Address anonymization.

Global addresses are replaced before a trace leaves the machine: the
address bits become the low-order 32 (ipv4) or 128 (ipv6) bits of
SHA-1(salt || raw network-order address bytes).  Loopback and link-local
addresses are the only fixed points; ports are never touched.  The salt
is 32 random bytes drawn once per traced process and never persisted —
only its fingerprint (first 8 hex characters of SHA-1(salt)) is kept so
traces from one run can be correlated.
"""
from __future__ import annotations

import hashlib
import re
import secrets
from dataclasses import dataclass

from .model import (
    AddrArgs,
    IoArgs,
    NetAddress,
    TraceEvent,
    TraceMeta,
)

SALT_LEN = 32
_HEX_RE = re.compile(r"^[0-9a-fA-F]{64}$")


class AddressFamilyError(ValueError):
    """Anonymization asked for on a non-IP address."""


@dataclass(frozen=True)
class Salt:
    """The per-process anonymization secret."""

    value: bytes

    def __post_init__(self):
        if len(self.value) != SALT_LEN:
            raise ValueError(f"salt must be {SALT_LEN} bytes, got {len(self.value)}")

    @classmethod
    def generate(cls) -> "Salt":
        return cls(secrets.token_bytes(SALT_LEN))

    @classmethod
    def from_hex(cls, text: str) -> "Salt":
        if not _HEX_RE.match(text):
            raise ValueError("salt must be exactly 64 hex characters")
        return cls(bytes.fromhex(text))

    @property
    def fingerprint(self) -> str:
        """First 8 hex chars of SHA-1 over the salt itself."""
        return hashlib.sha1(self.value).hexdigest()[:8]

    def hex(self) -> str:
        return self.value.hex()


def anonymize_addr(addr: NetAddress, salt: Salt) -> NetAddress:
    """Replace a global address with its salted hash.

    Loopback and link-local inputs come back unchanged (an ipv4-mapped
    ipv6 address is judged by its embedded ipv4).  Everything else gets
    new bits: the low-order 32 or 128 bits of SHA-1(salt || address
    bytes), family and port preserved.  Deterministic per salt.
    """
    if not addr.is_ip:
        raise AddressFamilyError(f"cannot anonymize family {addr.family!r}")
    if addr.is_loopback or addr.is_link_local:
        return addr
    digest = hashlib.sha1(salt.value + addr.packed()).digest()
    if addr.family == "ipv4":
        bits = int.from_bytes(digest[-4:], "big")
    else:
        bits = int.from_bytes(digest[-16:], "big")
    return NetAddress(family=addr.family, bits=bits, port=addr.port)


def scrub_event(event: TraceEvent, salt: Salt) -> TraceEvent:
    """Return the event with any embedded IP address anonymized.

    Events without an address (or with unix/unspec endpoints) pass
    through untouched; nothing else about the event changes.
    """
    args = event.args
    addr = getattr(args, "addr", None)
    if not isinstance(addr, NetAddress) or not addr.is_ip:
        return event
    hashed = anonymize_addr(addr, salt)
    if hashed == addr:
        return event
    if isinstance(args, AddrArgs):
        new_args = AddrArgs(fd=args.fd, addr=hashed, flags=args.flags)
    elif isinstance(args, IoArgs):
        new_args = IoArgs(
            fd=args.fd, bytes=args.bytes, flags=args.flags, iov=args.iov, addr=hashed
        )
    else:
        return event
    return TraceEvent(
        ts_us=event.ts_us,
        tid=event.tid,
        fn=event.fn,
        args=new_args,
        ret=event.ret,
        err=event.err,
    )


def scrub_meta(meta: TraceMeta) -> TraceMeta:
    """Apply the opt-out policy: drop host details when the user asked."""
    if not meta.opt_out:
        return meta
    return TraceMeta(
        app=meta.app,
        cmd=meta.cmd,
        os=meta.os,
        tracer_version=meta.tracer_version,
        started_at=meta.started_at,
        salt_fp=meta.salt_fp,
        opt_out=True,
        kernel=None,
        netcfg=None,
    )
