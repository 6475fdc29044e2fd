"""Build and attach the LD_PRELOAD tracing library.

The C source ships inside the package; it is compiled on demand into a
per-user cache directory keyed by the source hash, so repeated runs reuse
the same shared object and a package upgrade rebuilds automatically.
"""
from __future__ import annotations

import hashlib
import importlib.resources
import os
import shutil
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

from ..privacy import Salt

__all__ = [
    "BuildError",
    "TracedProcess",
    "attach",
    "build_library",
    "library_path",
    "source_path",
]

_SONAME = "libsockscope-{digest}.so"


class BuildError(RuntimeError):
    """Compiling the preload library failed."""


def source_path() -> Path:
    """Filesystem path of the bundled C source."""
    return Path(str(importlib.resources.files("sockscope.interceptor") / "preload.c"))


def _cache_dir() -> Path:
    xdg = os.environ.get("XDG_CACHE_HOME")
    base = Path(xdg) if xdg else Path.home() / ".cache"
    return base / "sockscope"


def _compiler() -> str:
    for name in (os.environ.get("CC"), "cc", "gcc", "clang"):
        if name and shutil.which(name):
            return name
    raise BuildError("no C compiler found (tried $CC, cc, gcc, clang)")


def build_library(force: bool = False) -> Path:
    """Compile the preload library if needed and return its path."""
    source = source_path().read_bytes()
    digest = hashlib.sha256(source).hexdigest()[:12]
    out = _cache_dir() / _SONAME.format(digest=digest)
    if out.exists() and not force:
        return out
    out.parent.mkdir(parents=True, exist_ok=True)
    cc = _compiler()
    with tempfile.TemporaryDirectory(dir=out.parent) as tmp:
        src = Path(tmp) / "preload.c"
        src.write_bytes(source)
        tmp_so = Path(tmp) / "lib.so"
        cmd = [
            cc,
            "-O2",
            "-fPIC",
            "-shared",
            "-pthread",
            "-D_GNU_SOURCE",
            "-o",
            str(tmp_so),
            str(src),
            "-ldl",
        ]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        if proc.returncode != 0:
            raise BuildError(
                f"{cc} failed with status {proc.returncode}:\n{proc.stderr.strip()}"
            )
        os.replace(tmp_so, out)  # atomic: concurrent builders race benignly
    return out


def library_path() -> Path:
    """Path to a ready-to-use shared object (building it on first use)."""
    return build_library(force=False)


@dataclass
class TracedProcess:
    """A child process being traced into ``out_dir``."""

    proc: subprocess.Popen
    out_dir: Path
    salt: Salt

    @property
    def pid(self) -> int:
        return self.proc.pid

    @property
    def events_path(self) -> Path:
        return self.out_dir / f"events.{self.proc.pid}.jsonl"

    def wait(self, timeout: float | None = None) -> int:
        return self.proc.wait(timeout=timeout)


def attach(
    cmd: list[str],
    out_dir: Path,
    *,
    salt: Salt | None = None,
    opt_out: bool = False,
    env: dict[str, str] | None = None,
    **popen_kwargs,
) -> TracedProcess:
    """Spawn ``cmd`` with the tracer preloaded, recording into ``out_dir``.

    Raises FileNotFoundError when the executable does not exist and
    PermissionError when it is not runnable, exactly like Popen.
    """
    lib = library_path()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if salt is None:
        salt = Salt.generate()
    child_env = dict(os.environ if env is None else env)
    preload = child_env.get("LD_PRELOAD", "")
    child_env["LD_PRELOAD"] = f"{lib}:{preload}" if preload else str(lib)
    child_env["SOCKSCOPE_OUT"] = str(out_dir)
    child_env["SOCKSCOPE_SALT"] = salt.hex()
    if opt_out:
        child_env["SOCKSCOPE_OPTOUT"] = "1"
    else:
        child_env.pop("SOCKSCOPE_OPTOUT", None)
    proc = subprocess.Popen(cmd, env=child_env, **popen_kwargs)
    return TracedProcess(proc=proc, out_dir=out_dir, salt=salt)
