"""HTTP gateway: resolves /ipfs/<cid> to verified content via a backing node."""

from __future__ import annotations

import json
import threading
import time

from .cid import parse_cid, CidError
from .node import Node, NotFoundAnywhere

DEFAULT_RESOLVE_TIMEOUT_S = 5.0
_RETRY_SLEEP_S = 0.25
_SIM_DEADLINE_MS = 10_000


class Gateway:
    """Thin adapter over a node's cat; no store of its own."""

    def __init__(self, node: Node, resolve_timeout: float = DEFAULT_RESOLVE_TIMEOUT_S,
                 lock: threading.Lock | None = None):
        if resolve_timeout <= 0:
            raise ValueError("resolve_timeout must be positive")
        self.node = node
        self.resolve_timeout = resolve_timeout
        self.lock = lock or threading.Lock()

    def resolve(self, path: str) -> tuple[int, str, bytes]:
        """Returns (status, media_type, body) for a /ipfs/<cid> path."""
        if not path.startswith("/ipfs/"):
            return 400, "text/plain; charset=utf-8", b"expected /ipfs/<cid>\n"
        text = path[len("/ipfs/"):]
        try:
            cid = parse_cid(text)
        except CidError as e:
            return 400, "text/plain; charset=utf-8", f"invalid cid: {e}\n".encode()

        deadline = time.monotonic() + self.resolve_timeout
        while True:
            try:
                with self.lock:
                    data = self.node.cat(cid, deadline_ms=_SIM_DEADLINE_MS)
                return 200, _sniff_media_type(data), data
            except NotFoundAnywhere:
                if time.monotonic() >= deadline:
                    return (404, "text/plain; charset=utf-8",
                            f"content not found: {cid.text}\n".encode())
                time.sleep(min(_RETRY_SLEEP_S, max(0.0, deadline - time.monotonic())))


def _sniff_media_type(data: bytes) -> str:
    try:
        json.loads(data.decode("utf-8"))
        return "application/json"
    except (ValueError, UnicodeDecodeError):
        return "application/octet-stream"
