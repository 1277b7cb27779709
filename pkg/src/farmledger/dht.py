"""Kademlia-style DHT state: xor keys, k-buckets, roles, provider records."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .cid import Cid
from .peer import PeerId, Multiaddress

K = 20
ALPHA = 3
KEY_BITS = 256
SERVER_INBOUND_THRESHOLD = 4  # "more than three peers connect"
PROVIDER_TTL_MS = 24 * 3600 * 1000
REPUBLISH_INTERVAL_MS = 12 * 3600 * 1000


class NoServersReachable(Exception):
    pass


def dht_key(value: Cid | PeerId) -> int:
    """256-bit routing key: sha256 over the raw 34 multihash bytes."""
    return int.from_bytes(hashlib.sha256(value.raw).digest(), "big")


def xor_distance(a: int, b: int) -> int:
    return a ^ b


def bucket_index(owner_key: int, peer_key: int) -> int:
    """Length of the common bit prefix of the two keys (0..255)."""
    d = owner_key ^ peer_key
    if d == 0:
        raise ValueError("a key has zero distance to itself")
    return KEY_BITS - d.bit_length()


@dataclass
class Contact:
    peer: PeerId
    addr: Multiaddress
    is_server: bool = False
    last_seen: int = 0


class RoutingTable:
    """256 k-buckets indexed by shared-prefix length, least-recently-seen eviction."""

    def __init__(self, owner: PeerId, k: int = K):
        self.owner = owner
        self.owner_key = dht_key(owner)
        self.k = k
        self.buckets: list[list[Contact]] = [[] for _ in range(KEY_BITS)]

    def update(self, peer: PeerId, addr: Multiaddress, now: int = 0,
               is_server: bool | None = None) -> None:
        if peer == self.owner:
            return
        idx = bucket_index(self.owner_key, dht_key(peer))
        bucket = self.buckets[idx]
        for c in bucket:
            if c.peer == peer:
                c.last_seen = now
                c.addr = addr
                if is_server is not None:
                    c.is_server = is_server
                return
        contact = Contact(peer, addr, bool(is_server), now)
        if len(bucket) >= self.k:
            oldest = min(range(len(bucket)), key=lambda i: bucket[i].last_seen)
            bucket.pop(oldest)
        bucket.append(contact)

    def contacts(self) -> list[Contact]:
        return [c for bucket in self.buckets for c in bucket]

    def get(self, peer: PeerId) -> Contact | None:
        for c in self.buckets[bucket_index(self.owner_key, dht_key(peer))]:
            if c.peer == peer:
                return c
        return None

    def closest(self, key: int, n: int) -> list[Contact]:
        return closest_peers(self, key, n)

    def __len__(self) -> int:
        return sum(len(b) for b in self.buckets)


def closest_peers(table: RoutingTable, key: int, n: int) -> list[Contact]:
    """The n known contacts nearest to key by xor distance, PeerId bytes as tiebreak."""
    if n < 1:
        raise ValueError("n must be >= 1")
    all_contacts = table.contacts()
    all_contacts.sort(key=lambda c: (xor_distance(dht_key(c.peer), key), c.peer.raw))
    return all_contacts[:n]


@dataclass(frozen=True)
class ProviderRecord:
    cid: Cid
    provider: PeerId
    addr: Multiaddress
    published_at: int  # sim-time ms
    ttl: int = PROVIDER_TTL_MS

    def expired(self, now: int) -> bool:
        return now > self.published_at + self.ttl


@dataclass
class DhtRole:
    """Client until four distinct peers have ever connected inbound; then Server."""

    is_server: bool = False
    inbound_peers: set = field(default_factory=set)

    @property
    def value(self) -> str:
        return "Server" if self.is_server else "Client"

    def record_inbound(self, from_peer: PeerId) -> None:
        self.inbound_peers.add(from_peer)
        if len(self.inbound_peers) >= SERVER_INBOUND_THRESHOLD:
            self.is_server = True  # monotonic: never downgraded


class ProviderStore:
    """Per-node provider record table; only Server nodes accept writes."""

    def __init__(self):
        self.records: dict[Cid, dict[PeerId, ProviderRecord]] = {}

    def store(self, role: DhtRole, rec: ProviderRecord) -> bool:
        if not role.is_server:
            return False
        self.records.setdefault(rec.cid, {})[rec.provider] = rec
        return True

    def find(self, cid: Cid, now: int) -> list[ProviderRecord]:
        recs = self.records.get(cid, {})
        return [r for r in recs.values() if not r.expired(now)]

    def count(self) -> int:
        return sum(len(v) for v in self.records.values())
