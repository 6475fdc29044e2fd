"""Command-line interface.

Subcommands:

    run      trace a program: sockscope run --out DIR -- CMD [ARG...]
    analyze  summarize one or many trace directories
    mine     frequent contiguous call sequences in a corpus
    match    check a pattern template against a corpus
    gen      produce a synthetic corpus from a spec file
    upload   push a trace directory to an ingest service
    serve    run the ingest service

Exit codes: 0 success; 1 operational failure; 2 usage error;
127 the traced command could not be launched.  ``run`` otherwise
propagates the child's exit status (128+N when it died on signal N).
"""
from __future__ import annotations

import argparse
import gzip
import io
import json
import sys
import tarfile
from pathlib import Path

from .analysis import compute_report, report_json
from .generator import GenerationError, builtin_spec, generate_corpus, load_spec
from .patterns import (
    PatternTemplate,
    builtin_template,
    mine_frequent,
    pattern_prevalence,
)
from .privacy import Salt
from .traceio import TraceParseError, load_corpus

__all__ = ["main"]


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def _cmd_run(args: argparse.Namespace, command: list[str]) -> int:
    from .interceptor import BuildError, attach

    salt = None
    if args.salt is not None:
        salt = Salt.from_hex(args.salt)
    try:
        traced = attach(
            command,
            Path(args.out),
            salt=salt,
            opt_out=args.opt_out,
        )
    except BuildError as exc:
        return _fail(str(exc))
    except (FileNotFoundError, PermissionError, OSError) as exc:
        print(f"error: cannot launch {command[0]!r}: {exc}", file=sys.stderr)
        return 127
    code = traced.wait()
    if code < 0:
        return 128 + (-code)
    return code


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------


def _render_text(report) -> str:
    doc = report.to_dict()
    lines: list[str] = []

    def pct(x: float) -> str:
        return f"{100.0 * x:6.2f}%"

    lines.append("socket types:")
    for name, share in sorted(doc["socket_type_shares"].items()):
        lines.append(f"  {name:12s} {pct(share)}")
    lines.append("tcp classes:")
    for name, share in sorted(doc["tcp_classes"].items()):
        lines.append(f"  {name:24s} {pct(share)}")
    lines.append("udp classes:")
    for name, share in sorted(doc["udp_classes"].items()):
        lines.append(f"  {name:24s} {pct(share)}")
    if doc["ioctl_breakdown"]:
        lines.append("ioctl requests:")
        for name, share in sorted(
            doc["ioctl_breakdown"].items(), key=lambda kv: -kv[1]
        ):
            lines.append(f"  {name:18s} {pct(share)}")
    usage = doc["function_usage"]
    top = sorted(usage.items(), key=lambda kv: -kv[1]["calls"])[:12]
    if top:
        lines.append("most-called functions:")
        for name, row in top:
            lines.append(f"  {name:14s} calls={row['calls']:<10d} apps={row['apps']}")
    tcpinfo = doc["tcpinfo"]
    ks = tcpinfo["ks_uniform"]
    lines.append(
        "tcp_info polling: socket_fraction="
        f"{tcpinfo['socket_fraction']:.4f} once_fraction={tcpinfo['once_fraction']:.4f} "
        f"ks_uniform={'n/a' if ks is None else format(ks, '.4f')}"
    )
    return "\n".join(lines) + "\n"


def _cmd_analyze(args: argparse.Namespace) -> int:
    try:
        corpus = load_corpus(Path(args.trace_dir), collapse=args.collapse_twins)
    except FileNotFoundError as exc:
        return _fail(str(exc))
    except TraceParseError as exc:
        return _fail(f"unreadable trace: {exc}")
    if not corpus.traces:
        return _fail(f"no traces under {args.trace_dir}")
    report = compute_report(corpus, collapse=args.collapse_twins)
    if args.json:
        sys.stdout.buffer.write(report_json(report))
    else:
        sys.stdout.write(_render_text(report))
    return 0


# ---------------------------------------------------------------------------
# mine / match
# ---------------------------------------------------------------------------


def _cmd_mine(args: argparse.Namespace) -> int:
    try:
        corpus = load_corpus(Path(args.trace_dir))
    except FileNotFoundError as exc:
        return _fail(str(exc))
    except TraceParseError as exc:
        return _fail(f"unreadable trace: {exc}")
    patterns = mine_frequent(corpus, min_support=args.min_support, max_len=args.max_len)
    doc = {"min_support": args.min_support, "max_len": args.max_len,
           "patterns": [p.to_dict() for p in patterns]}
    sys.stdout.write(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n")
    return 0


def _load_template(spec: str) -> PatternTemplate:
    path = Path(spec)
    if path.is_file():
        return PatternTemplate.from_dict(json.loads(path.read_text()))
    return builtin_template(spec)


def _cmd_match(args: argparse.Namespace) -> int:
    try:
        template = _load_template(args.template)
    except (OSError, ValueError) as exc:  # TemplateError is a ValueError
        return _fail(f"bad template {args.template!r}: {exc}")
    try:
        corpus = load_corpus(Path(args.trace_dir))
    except FileNotFoundError as exc:
        return _fail(str(exc))
    except TraceParseError as exc:
        return _fail(f"unreadable trace: {exc}")
    prevalence = pattern_prevalence(corpus, template)
    doc = {"template": template.name, "anchor": template.anchor}
    doc.update(prevalence.to_dict())
    sys.stdout.write(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n")
    return 0


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------


def _cmd_gen(args: argparse.Namespace) -> int:
    path = Path(args.spec)
    try:
        if path.is_file():
            spec = load_spec(path)
        else:
            spec = builtin_spec(args.spec)
    except FileNotFoundError:
        return _fail(f"no such spec: {args.spec}")
    except (ValueError, KeyError) as exc:
        return _fail(f"bad spec {args.spec!r}: {exc}")
    try:
        paths = generate_corpus(spec, Path(args.out))
    except GenerationError as exc:
        return _fail(str(exc))
    print(f"wrote {len(paths)} trace dir(s) under {args.out}")
    return 0


# ---------------------------------------------------------------------------
# upload
# ---------------------------------------------------------------------------


def deterministic_archive(trace_dir: Path) -> bytes:
    """Pack a trace directory into a reproducible .tgz.

    Same files, same bytes: members are sorted by name, all tar metadata
    is zeroed, and the gzip header carries no timestamp — so uploading a
    directory twice yields the identical archive and the service can
    deduplicate by content hash.
    """
    files = sorted(p for p in trace_dir.iterdir() if p.is_file())
    buf = io.BytesIO()
    with gzip.GzipFile(fileobj=buf, mode="wb", compresslevel=9, mtime=0) as gz:
        with tarfile.open(fileobj=gz, mode="w") as tar:
            for path in files:
                data = path.read_bytes()
                info = tarfile.TarInfo(name=path.name)
                info.size = len(data)
                info.mtime = 0
                info.uid = info.gid = 0
                info.uname = info.gname = ""
                info.mode = 0o644
                tar.addfile(info, io.BytesIO(data))
    return buf.getvalue()


def _cmd_upload(args: argparse.Namespace) -> int:
    import httpx

    trace_dir = Path(args.trace_dir)
    if not (trace_dir / "meta.json").is_file():
        return _fail(f"{trace_dir} has no meta.json; refusing to upload")
    archive = deterministic_archive(trace_dir)
    url = args.url.rstrip("/") + "/api/traces"
    try:
        resp = httpx.post(
            url,
            content=archive,
            headers={"content-type": "application/gzip"},
            timeout=60.0,
        )
    except httpx.HTTPError as exc:
        return _fail(f"upload failed: {exc}")
    if resp.status_code not in (200, 201):
        detail = ""
        try:
            detail = resp.json().get("detail", "")
        except ValueError:
            pass
        return _fail(f"service rejected upload ({resp.status_code}): {detail}")
    body = resp.json()
    print(f"{'stored' if body.get('created') else 'already stored'} "
          f"trace {body.get('trace_id')} ({body.get('event_count')} events)")
    return 0


# ---------------------------------------------------------------------------
# serve
# ---------------------------------------------------------------------------


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    host, _, port_text = args.listen.rpartition(":")
    if not host or not port_text.isdigit():
        return _fail(f"--listen must look like HOST:PORT, got {args.listen!r}")
    app = create_app(Path(args.data))
    uvicorn.run(app, host=host, port=int(port_text), log_level="warning")
    return 0


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sockscope", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="trace a program")
    p_run.add_argument("--out", default="sockscope-trace", help="output trace directory")
    p_run.add_argument("--salt", default=None, help="64 hex chars; generated when omitted")
    p_run.add_argument("--opt-out", action="store_true",
                       help="omit kernel/network details from metadata")

    p_an = sub.add_parser("analyze", help="summarize traces")
    p_an.add_argument("trace_dir", help="trace directory, or a tree of them")
    grp = p_an.add_mutually_exclusive_group()
    grp.add_argument("--json", action="store_true", help="machine-readable report")
    grp.add_argument("--text", action="store_true", help="human-readable summary (default)")
    p_an.add_argument("--collapse-twins", action="store_true",
                      help="merge libc alias pairs (send/sendto etc.) before analysis")

    p_mine = sub.add_parser("mine", help="mine frequent call sequences")
    p_mine.add_argument("trace_dir")
    p_mine.add_argument("--min-support", type=int, required=True)
    p_mine.add_argument("--max-len", type=int, default=8)

    p_match = sub.add_parser("match", help="match a pattern template")
    p_match.add_argument("trace_dir")
    p_match.add_argument("--template", required=True,
                         help="template JSON file, or a built-in name (opening, closing)")

    p_gen = sub.add_parser("gen", help="generate a synthetic corpus")
    p_gen.add_argument("spec", help="spec JSON file, or a built-in name")
    p_gen.add_argument("--out", required=True, help="output directory")

    p_up = sub.add_parser("upload", help="upload a trace directory")
    p_up.add_argument("trace_dir")
    p_up.add_argument("--url", required=True, help="ingest service base URL")

    p_srv = sub.add_parser("serve", help="run the ingest service")
    p_srv.add_argument("--listen", default="127.0.0.1:8000", help="HOST:PORT")
    p_srv.add_argument("--data", required=True, help="service data directory")

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()

    # `run` owns everything after `--`; split before argparse sees it.
    command: list[str] = []
    if argv and argv[0] == "run":
        if "--" not in argv:
            parser.error("run: expected '-- CMD [ARG...]'")
        split = argv.index("--")
        argv, command = argv[:split], argv[split + 1:]
        if not command:
            parser.error("run: no command given after '--'")

    args = parser.parse_args(argv)

    if args.command == "run":
        if not command:
            parser.error("run: expected '-- CMD [ARG...]'")
        if args.salt is not None:
            try:
                Salt.from_hex(args.salt)
            except ValueError as exc:
                parser.error(f"--salt: {exc}")
        return _cmd_run(args, command)
    if args.command == "analyze":
        return _cmd_analyze(args)
    if args.command == "mine":
        return _cmd_mine(args)
    if args.command == "match":
        return _cmd_match(args)
    if args.command == "gen":
        return _cmd_gen(args)
    if args.command == "upload":
        return _cmd_upload(args)
    if args.command == "serve":
        return _cmd_serve(args)
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
