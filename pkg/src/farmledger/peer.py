"""Peer identities and /ip4 multiaddresses."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .cid import base58_encode, base58_decode, CidError, SHA2_256_CODE, DIGEST_LENGTH


class MalformedMultiaddr(ValueError):
    pass


@dataclass(frozen=True, order=True)
class PeerId:
    """34-byte multihash identity (0x12 0x20 || sha256(seed)), base58btc text."""

    raw: bytes

    def __post_init__(self):
        if len(self.raw) != 34 or self.raw[0] != SHA2_256_CODE or self.raw[1] != DIGEST_LENGTH:
            raise ValueError("peer id must be 0x12 0x20 plus a 32-byte digest")

    @property
    def text(self) -> str:
        return base58_encode(self.raw)

    def __str__(self) -> str:
        return self.text

    def __repr__(self) -> str:
        return f"PeerId({self.text})"


def generate_peer(seed: bytes) -> PeerId:
    """Deterministic identity from a seed."""
    return PeerId(bytes([SHA2_256_CODE, DIGEST_LENGTH]) + hashlib.sha256(seed).digest())


def parse_peer_id(text: str) -> PeerId:
    try:
        raw = base58_decode(text)
    except CidError as e:
        raise ValueError(str(e)) from None
    return PeerId(raw)


@dataclass(frozen=True)
class Multiaddress:
    """Renders as /ip4/<ip>/tcp/<port>/p2p/<peer-id>."""

    ip: str
    port: int
    peer: PeerId

    def __post_init__(self):
        _check_ipv4(self.ip)
        if not 0 <= self.port <= 65535:
            raise MalformedMultiaddr(f"port {self.port} out of range")

    def render(self) -> str:
        return f"/ip4/{self.ip}/tcp/{self.port}/p2p/{self.peer.text}"

    def __str__(self) -> str:
        return self.render()


def _check_ipv4(ip: str) -> None:
    parts = ip.split(".")
    if len(parts) != 4:
        raise MalformedMultiaddr(f"bad ipv4 address {ip!r}")
    for p in parts:
        if not p.isdigit() or not 0 <= int(p) <= 255 or (len(p) > 1 and p[0] == "0"):
            raise MalformedMultiaddr(f"bad ipv4 address {ip!r}")


def parse_multiaddr(s: str) -> Multiaddress:
    parts = s.split("/")
    # leading empty segment from the initial slash
    if len(parts) != 7 or parts[0] != "":
        raise MalformedMultiaddr(f"expected /ip4/<ip>/tcp/<port>/p2p/<id>, got {s!r}")
    if parts[1] != "ip4":
        raise MalformedMultiaddr(f"unsupported address family {parts[1]!r}")
    if parts[3] != "tcp":
        raise MalformedMultiaddr(f"unsupported transport {parts[3]!r}")
    if parts[5] != "p2p":
        raise MalformedMultiaddr(f"expected p2p segment, got {parts[5]!r}")
    ip = parts[2]
    if not parts[4].isdigit():
        raise MalformedMultiaddr(f"bad port {parts[4]!r}")
    port = int(parts[4])
    if port > 65535:
        raise MalformedMultiaddr(f"port {port} out of range")
    try:
        peer = parse_peer_id(parts[6])
    except ValueError as e:
        raise MalformedMultiaddr(f"bad peer id: {e}") from None
    return Multiaddress(ip=ip, port=port, peer=peer)
