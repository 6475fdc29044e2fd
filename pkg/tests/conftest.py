import os
import shutil
import socket
import subprocess
import threading
from pathlib import Path

import pytest

from sockscope.interceptor import attach, build_library
from sockscope.privacy import Salt
from sockscope.traceio import load_trace_dir

FIXTURES = Path(__file__).parent / "fixtures"

# A fixed salt (and its mate) so traced fixture runs are reproducible.
SALT_A = Salt.from_hex("aa" * 32)
SALT_B = Salt.from_hex("bb" * 32)


@pytest.fixture(scope="session")
def lib_path() -> str:
    return str(build_library())


@pytest.fixture(scope="session")
def cbin(tmp_path_factory):
    """Compile a C fixture once per session; returns path by name."""
    cc = None
    for cand in (os.environ.get("CC"), "cc", "gcc", "clang"):
        if cand and shutil.which(cand):
            cc = shutil.which(cand)
            break
    if cc is None:
        pytest.skip("no C compiler available")
    out_dir = tmp_path_factory.mktemp("cbin")
    built: dict[str, str] = {}

    def build(name: str) -> str:
        if name not in built:
            dst = out_dir / name
            subprocess.run(
                [cc, "-O2", "-Wall", "-pthread", "-o", str(dst), str(FIXTURES / f"{name}.c")],
                check=True,
            )
            built[name] = str(dst)
        return built[name]

    return build


class TcpServer:
    """Tiny threaded TCP server: echoes or drains each connection."""

    def __init__(self, mode: str):
        assert mode in ("echo", "drain")
        self.mode = mode
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self.sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self.sock.bind(("127.0.0.1", 0))
        self.sock.listen(128)
        self.port = self.sock.getsockname()[1]
        self._stop = False
        self._threads: list[threading.Thread] = []
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._accept_thread.start()

    def _accept_loop(self):
        while not self._stop:
            try:
                conn, _ = self.sock.accept()
            except OSError:
                return
            t = threading.Thread(target=self._serve, args=(conn,), daemon=True)
            t.start()
            self._threads.append(t)

    def _serve(self, conn: socket.socket):
        conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        try:
            while True:
                data = conn.recv(1 << 16)
                if not data:
                    return
                if self.mode == "echo":
                    conn.sendall(data)
        except OSError:
            pass
        finally:
            conn.close()

    def close(self):
        self._stop = True
        try:
            self.sock.close()
        except OSError:
            pass


@pytest.fixture
def echo_server():
    srv = TcpServer("echo")
    yield srv
    srv.close()


@pytest.fixture
def drain_server():
    srv = TcpServer("drain")
    yield srv
    srv.close()


def run_traced(cmd, out_dir, salt=SALT_A, opt_out=False, timeout=120):
    """Run a command under the interposer and wait for it.

    Returns (returncode, stdout, stderr, events_path).
    """
    tp = attach(
        cmd,
        out_dir,
        salt=salt,
        opt_out=opt_out,
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
    )
    stdout, stderr = tp.proc.communicate(timeout=timeout)
    return tp.proc.returncode, stdout, stderr, tp.events_path


def run_bare(cmd, timeout=120):
    res = subprocess.run(cmd, capture_output=True, timeout=timeout)
    return res.returncode, res.stdout, res.stderr


def load_single(out_dir):
    """Load the one trace directory a traced run produced."""
    return load_trace_dir(Path(out_dir))
