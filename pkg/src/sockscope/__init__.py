"""Socket API tracing toolkit.

Capture socket-related library calls from a running process, reconstruct
per-socket histories, compute usage statistics over collections of traces,
mine recurring call patterns, and serve an ingestion HTTP API.
"""

__version__ = "0.1.0"

from .functions import ApiFunction
from .model import NetAddress, SocketLifecycle, TraceEvent, TraceMeta

__all__ = [
    "ApiFunction",
    "NetAddress",
    "SocketLifecycle",
    "TraceEvent",
    "TraceMeta",
    "__version__",
]
