"""Call-sequence patterns over socket lifecycles.

Two tools live here: matching hand-written templates (ordered predicate
lists anchored at the start, the end, or anywhere in a lifecycle), and
mining frequent contiguous call sequences from a corpus.  Mining works
over a refined alphabet: getsockopt/setsockopt events are distinguished
by option name, every other call by function name alone.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .functions import BY_NAME, ApiFunction
from .model import (
    AddrArgs,
    FcntlArgs,
    IoArgs,
    SockoptArgs,
    SocketLifecycle,
    TraceEvent,
)
from .traceio import Corpus

_F = ApiFunction

ANCHORS = ("prefix", "suffix", "anywhere")


class TemplateError(ValueError):
    """A pattern template file failed validation."""


@dataclass(frozen=True)
class EventPredicate:
    """Does one event look like this template step?

    ``fns`` — acceptable function names (usually one; several for steps
    like "any payload call").  The optional refinements check sockopt
    option names, fcntl commands and file-status flag bits being set or
    cleared, and the class of an embedded address.
    """

    fns: tuple[ApiFunction, ...]
    optname: str | None = None
    cmd: str | None = None
    set_flags: tuple[str, ...] = ()
    clear_flags: tuple[str, ...] = ()
    addr_class: str | None = None

    def matches(self, ev: TraceEvent) -> bool:
        if ev.fn not in self.fns:
            return False
        if self.optname is not None:
            if not isinstance(ev.args, SockoptArgs) or ev.args.optname != self.optname:
                return False
        if self.cmd is not None:
            if not isinstance(ev.args, FcntlArgs) or ev.args.cmd != self.cmd:
                return False
        if self.set_flags or self.clear_flags:
            flags: tuple[str, ...] = ()
            if isinstance(ev.args, FcntlArgs):
                flags = ev.args.flags or ()
            elif isinstance(ev.args, (AddrArgs, IoArgs)):
                flags = ev.args.flags
            else:
                return False
            if any(f not in flags for f in self.set_flags):
                return False
            if any(f in flags for f in self.clear_flags):
                return False
        if self.addr_class is not None:
            addr = getattr(ev.args, "addr", None)
            if addr is None or addr.category != self.addr_class:
                return False
        return True


@dataclass(frozen=True)
class PatternTemplate:
    name: str
    anchor: str  # prefix / suffix / anywhere
    steps: tuple[EventPredicate, ...]

    @classmethod
    def from_dict(cls, doc: dict) -> "PatternTemplate":
        if not isinstance(doc, dict):
            raise TemplateError("template must be an object")
        name = doc.get("name")
        anchor = doc.get("anchor")
        raw_steps = doc.get("steps")
        if not isinstance(name, str) or not name:
            raise TemplateError("template needs a name")
        if anchor not in ANCHORS:
            raise TemplateError(f"anchor must be one of {ANCHORS}")
        if not isinstance(raw_steps, list) or not raw_steps:
            raise TemplateError("template needs a non-empty steps list")
        steps = []
        for i, raw in enumerate(raw_steps):
            if not isinstance(raw, dict):
                raise TemplateError(f"step {i} is not an object")
            fn_field = raw.get("fn")
            names = [fn_field] if isinstance(fn_field, str) else fn_field
            if not isinstance(names, list) or not names:
                raise TemplateError(f"step {i} needs fn (string or list)")
            fns = []
            for n in names:
                fn = BY_NAME.get(n) if isinstance(n, str) else None
                if fn is None:
                    raise TemplateError(f"step {i} names unknown function {n!r}")
                fns.append(fn)
            steps.append(
                EventPredicate(
                    fns=tuple(fns),
                    optname=raw.get("optname"),
                    cmd=raw.get("cmd"),
                    set_flags=tuple(raw.get("set_flags", ())),
                    clear_flags=tuple(raw.get("clear_flags", ())),
                    addr_class=raw.get("addr_class"),
                )
            )
        return cls(name=name, anchor=anchor, steps=tuple(steps))

    @classmethod
    def from_file(cls, path: Path) -> "PatternTemplate":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise TemplateError(f"{path}: invalid JSON: {exc.msg}") from None
        return cls.from_dict(doc)


def builtin_template(name: str) -> PatternTemplate:
    """Load one of the templates shipped with the package
    (``opening`` — the 16-step connection setup; ``closing``)."""
    ref = resources.files("sockscope").joinpath(f"templates/{name}.json")
    return PatternTemplate.from_dict(json.loads(ref.read_text()))


@dataclass(frozen=True)
class TemplateMatch:
    positions: tuple[int, ...]  # event indices within the lifecycle


def match_template(lc: SocketLifecycle, template: PatternTemplate) -> TemplateMatch | None:
    """Locate the template in one lifecycle.

    prefix — the first len(steps) events must match in order;
    suffix — the last len(steps) events; anywhere — the first contiguous
    window that matches.  Returns the matched event indices or None.
    """
    k = len(template.steps)
    n = len(lc.events)
    if n < k:
        return None

    def window_matches(start: int) -> bool:
        return all(
            template.steps[i].matches(lc.events[start + i]) for i in range(k)
        )

    if template.anchor == "prefix":
        starts: range = range(0, 1)
    elif template.anchor == "suffix":
        starts = range(n - k, n - k + 1)
    else:
        starts = range(0, n - k + 1)
    for start in starts:
        if window_matches(start):
            return TemplateMatch(positions=tuple(range(start, start + k)))
    return None


@dataclass
class PatternPrevalence:
    app_count: int
    socket_count: int
    fraction: float  # of all lifecycles in the corpus

    def to_dict(self) -> dict:
        return {
            "apps": self.app_count,
            "sockets": self.socket_count,
            "fraction": self.fraction,
        }


def pattern_prevalence(corpus: Corpus, template: PatternTemplate) -> PatternPrevalence:
    """How widespread a template is across a corpus."""
    apps: set[str] = set()
    matched = 0
    total = 0
    for trace, lc in corpus.all_lifecycles():
        total += 1
        if match_template(lc, template) is not None:
            matched += 1
            apps.add(trace.meta.app)
    return PatternPrevalence(
        app_count=len(apps),
        socket_count=matched,
        fraction=(matched / total) if total else 0.0,
    )


# ---------------------------------------------------------------------------
# Frequent contiguous sequence mining
# ---------------------------------------------------------------------------


def event_symbol(ev: TraceEvent) -> str:
    """Mining alphabet: sockopt calls carry their option name."""
    if isinstance(ev.args, SockoptArgs):
        return f"{ev.fn.value}({ev.args.optname})"
    return ev.fn.value


@dataclass(frozen=True)
class MinedPattern:
    sequence: tuple[str, ...]
    support: int
    maximal: bool

    def to_dict(self) -> dict:
        return {
            "sequence": list(self.sequence),
            "support": self.support,
            "maximal": self.maximal,
        }


def mine_frequent(corpus: Corpus, min_support: int, max_len: int) -> list[MinedPattern]:
    """All contiguous call sequences with support >= min_support.

    Support counts distinct lifecycles containing the sequence at least
    once.  Candidates grow level-wise — a window only counts when both
    its (k-1)-prefix and (k-1)-suffix were frequent, which by
    anti-monotonicity of contiguous support is lossless.  A pattern is
    maximal when no frequent pattern within the mined length bound
    extends it by one symbol on either side.  Output is ordered by
    support descending, then lexicographically.
    """
    if min_support < 1:
        raise ValueError("min_support must be >= 1")
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    seqs = [
        tuple(event_symbol(ev) for ev in lc.events)
        for _trace, lc in corpus.all_lifecycles()
    ]

    frequent: dict[tuple[str, ...], int] = {}
    prev_level: set[tuple[str, ...]] = set()
    for k in range(1, max_len + 1):
        support: dict[tuple[str, ...], set[int]] = {}
        for seq_idx, seq in enumerate(seqs):
            if len(seq) < k:
                continue
            for start in range(len(seq) - k + 1):
                window = seq[start:start + k]
                if k > 1 and (
                    window[:-1] not in prev_level or window[1:] not in prev_level
                ):
                    continue
                support.setdefault(window, set()).add(seq_idx)
        level = {
            window: len(ids) for window, ids in support.items() if len(ids) >= min_support
        }
        if not level:
            break
        frequent.update(level)
        prev_level = set(level)

    # Maximality: a frequent one-symbol extension (within the length
    # bound) on either side disqualifies.  Any longer frequent container
    # implies such an extension by anti-monotonicity of contiguous
    # support, so checking one step out is enough.
    keys = set(frequent)
    one_grams = sorted(w[0] for w in keys if len(w) == 1)
    patterns = []
    for window, sup in frequent.items():
        maximal = True
        if len(window) < max_len:
            for sym in one_grams:
                if ((sym,) + window) in keys or (window + (sym,)) in keys:
                    maximal = False
                    break
        patterns.append(MinedPattern(sequence=window, support=sup, maximal=maximal))
    patterns.sort(key=lambda p: (-p.support, p.sequence))
    return patterns
