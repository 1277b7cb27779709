"""Wire envelope for peer messages and per-peer bandwidth accounting."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

from .cid import Cid, CID_BYTE_LENGTH

# Envelope: 1-byte kind, 34-byte cid (zero-filled when unused),
# 8-byte big-endian payload length, payload.
ENVELOPE_OVERHEAD = 1 + CID_BYTE_LENGTH + 8
ZERO_CID = b"\x00" * CID_BYTE_LENGTH

CONNECT = 0x01
FIND_NODE = 0x02
FIND_NODE_REPLY = 0x03
FIND_PROVIDERS = 0x04
FIND_PROVIDERS_REPLY = 0x05
ADD_PROVIDER = 0x06
ADD_PROVIDER_REPLY = 0x07
WANT = 0x10
HAVE_BLOCK = 0x11
DONT_HAVE = 0x12
REPUBLISH = 0x20  # local timer event, never counted as traffic

KIND_NAMES = {
    CONNECT: "connect",
    FIND_NODE: "find_node",
    FIND_NODE_REPLY: "find_node_reply",
    FIND_PROVIDERS: "find_providers",
    FIND_PROVIDERS_REPLY: "find_providers_reply",
    ADD_PROVIDER: "add_provider",
    ADD_PROVIDER_REPLY: "add_provider_reply",
    WANT: "want",
    HAVE_BLOCK: "have_block",
    DONT_HAVE: "dont_have",
    REPUBLISH: "republish",
}


@dataclass(frozen=True)
class Envelope:
    kind: int
    cid_raw: bytes  # 34 bytes, zero-filled when the message carries no cid
    payload: bytes

    @property
    def size(self) -> int:
        return ENVELOPE_OVERHEAD + len(self.payload)

    @property
    def kind_name(self) -> str:
        return KIND_NAMES.get(self.kind, f"kind_{self.kind:#x}")

    def encode(self) -> bytes:
        return (bytes([self.kind]) + self.cid_raw
                + struct.pack(">Q", len(self.payload)) + self.payload)


def make_envelope(kind: int, cid: Cid | None = None, payload: bytes = b"",
                  obj: dict | None = None) -> Envelope:
    if obj is not None:
        payload = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return Envelope(kind, cid.raw if cid is not None else ZERO_CID, payload)


def decode_envelope(data: bytes) -> Envelope:
    if len(data) < ENVELOPE_OVERHEAD:
        raise ValueError("short envelope")
    kind = data[0]
    cid_raw = data[1:1 + CID_BYTE_LENGTH]
    (n,) = struct.unpack(">Q", data[1 + CID_BYTE_LENGTH:ENVELOPE_OVERHEAD])
    payload = data[ENVELOPE_OVERHEAD:]
    if len(payload) != n:
        raise ValueError("payload length mismatch")
    return Envelope(kind, cid_raw, payload)


def payload_obj(env: Envelope) -> dict:
    return json.loads(env.payload.decode())


BUCKET_MS = 1000


class BandwidthLedger:
    """Non-decreasing per-peer byte counters plus 1-second traffic buckets."""

    def __init__(self):
        self.sent: dict = {}      # peer -> bytes
        self.received: dict = {}  # peer -> bytes
        self.buckets: dict[int, list[int]] = {}  # bucket start (s) -> [in, out]

    def add_sent(self, peer, nbytes: int, at_ms: int) -> None:
        self.sent[peer] = self.sent.get(peer, 0) + nbytes
        b = self.buckets.setdefault(at_ms // BUCKET_MS, [0, 0])
        b[1] += nbytes

    def add_received(self, peer, nbytes: int, at_ms: int) -> None:
        self.received[peer] = self.received.get(peer, 0) + nbytes
        b = self.buckets.setdefault(at_ms // BUCKET_MS, [0, 0])
        b[0] += nbytes

    @property
    def total_sent(self) -> int:
        return sum(self.sent.values())

    @property
    def total_received(self) -> int:
        return sum(self.received.values())


def bandwidth_report(ledger: BandwidthLedger, start_s: int, end_s: int) -> list[tuple[int, int, int]]:
    """(bucket_start_s, bytes_in, bytes_out) for every second in [start_s, end_s), zero-filled."""
    out = []
    for s in range(start_s, end_s):
        b = ledger.buckets.get(s, (0, 0))
        out.append((s, b[0], b[1]))
    return out


def merge_reports(ledgers, start_s: int, end_s: int) -> list[tuple[int, int, int]]:
    out = []
    for s in range(start_s, end_s):
        bi = bo = 0
        for led in ledgers:
            b = led.buckets.get(s)
            if b:
                bi += b[0]
                bo += b[1]
        out.append((s, bi, bo))
    return out
