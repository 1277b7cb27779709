"""Deterministic in-process multi-node network.

One event loop owns all nodes; events are processed in (deliver_at, seq)
order. All randomness comes from a splitmix64 stream seeded from the config,
so two runs with the same config and script produce identical traces.
"""

from __future__ import annotations

import hashlib
import heapq
from dataclasses import dataclass, field

from .exchange import Envelope, HAVE_BLOCK, REPUBLISH
from .node import Node
from .peer import Multiaddress, PeerId, generate_peer

MASK64 = (1 << 64) - 1


class SplitMix64:
    """splitmix64: tiny, fully specified, platform-independent PRNG."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return (z ^ (z >> 31)) & MASK64

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] via rejection sampling."""
        span = hi - lo + 1
        limit = (1 << 64) - ((1 << 64) % span)
        while True:
            x = self.next_u64()
            if x < limit:
                return lo + x % span

    def randbytes(self, n: int) -> bytes:
        out = bytearray()
        while len(out) < n:
            out += self.next_u64().to_bytes(8, "big")
        return bytes(out[:n])


@dataclass
class SimConfig:
    node_count: int
    seed: int = 0
    latency_range: tuple[int, int] = (5, 50)  # ms
    bootstrap_fanout: int = 4
    gc_ttl: int = 12 * 3600 * 1000  # ms

    def __post_init__(self):
        if self.node_count < 1:
            raise ValueError("node_count must be >= 1")
        if self.latency_range[0] > self.latency_range[1]:
            raise ValueError("latency_range min must be <= max")


@dataclass(order=True)
class SimEvent:
    deliver_at: int
    seq: int
    sent_at: int = field(compare=False)
    frm: PeerId = field(compare=False)
    to: PeerId = field(compare=False)
    env: Envelope = field(compare=False)


class Simulation:
    def __init__(self, config: SimConfig):
        self.config = config
        self.rng = SplitMix64(config.seed)
        self.now = 0
        self._seq = 0
        self._req = 0
        self._events: list[SimEvent] = []
        self._trace = hashlib.sha256()
        self.events_processed = 0
        # fault injection (error-path tests only)
        self.fault_drop_next = False
        self.fault_corrupt_block_from: set[PeerId] = set()
        self.nodes: list[Node] = []
        self._by_peer: dict[PeerId, Node] = {}

        for i in range(config.node_count):
            seed = hashlib.sha256(
                config.seed.to_bytes(8, "big") + i.to_bytes(4, "big")).digest()
            peer = generate_peer(seed)
            addr = Multiaddress(ip=f"10.{(i // 250) % 256}.{i % 250 + 1}.1",
                                port=4001, peer=peer)
            node = Node(self, seed, addr, gc_ttl=config.gc_ttl)
            self.nodes.append(node)
            self._by_peer[peer] = node

    @classmethod
    def build(cls, config: SimConfig) -> "Simulation":
        """Create the network and bootstrap-connect every node to prior nodes."""
        sim = cls(config)
        for i in range(1, config.node_count):
            fanout = min(config.bootstrap_fanout, i)
            chosen: set[int] = set()
            while len(chosen) < fanout:
                chosen.add(sim.rng.randint(0, i - 1))
            for j in sorted(chosen):
                sim.nodes[i].connect_to(sim.nodes[j].addr)
        sim.drain()
        return sim

    def node_for(self, peer: PeerId) -> Node:
        return self._by_peer[peer]

    def next_req_id(self) -> int:
        self._req += 1
        return self._req

    # ------------------------------------------------------------------ queue

    def send(self, frm: PeerId, to: PeerId, env: Envelope) -> None:
        sender = self._by_peer.get(frm)
        if sender is not None and not sender.online:
            return
        latency = self.rng.randint(*self.config.latency_range)
        self._push(frm, to, env, latency)

    def schedule_local(self, peer: PeerId, env: Envelope, delay: int) -> None:
        self._push(peer, peer, env, delay)

    def _push(self, frm: PeerId, to: PeerId, env: Envelope, delay: int) -> None:
        self._seq += 1
        heapq.heappush(self._events,
                       SimEvent(self.now + delay, self._seq, self.now, frm, to, env))

    def _process(self, ev: SimEvent) -> None:
        self.now = ev.deliver_at
        if self.fault_drop_next:
            self.fault_drop_next = False
            return
        if ev.env.kind == HAVE_BLOCK and ev.frm in self.fault_corrupt_block_from:
            self.fault_corrupt_block_from.discard(ev.frm)
            payload = bytearray(ev.env.payload)
            if payload:
                payload[0] ^= 0xFF
            ev = SimEvent(ev.deliver_at, ev.seq, ev.sent_at, ev.frm, ev.to,
                          Envelope(ev.env.kind, ev.env.cid_raw, bytes(payload)))
        self.events_processed += 1
        self._trace.update(
            f"{ev.deliver_at}|{ev.frm}|{ev.to}|{ev.env.kind_name}|{ev.env.size}\n".encode())
        target = self._by_peer.get(ev.to)
        if target is None or not target.online:
            return
        if ev.env.kind != REPUBLISH and ev.frm != ev.to:
            sender = self._by_peer.get(ev.frm)
            if sender is not None:
                sender.ledger.add_sent(ev.to, ev.env.size, ev.sent_at)
            target.ledger.add_received(ev.frm, ev.env.size, ev.deliver_at)
        target.handle(ev.frm, ev.env)

    # ------------------------------------------------------------------ pumping

    def advance(self, duration: int) -> int:
        """Process every event due within `duration` ms; returns the count."""
        horizon = self.now + duration
        n = 0
        while self._events and self._events[0].deliver_at <= horizon:
            self._process(heapq.heappop(self._events))
            n += 1
        self.now = horizon
        return n

    def run_until(self, pred, deadline: int) -> bool:
        """Process events in order until pred() holds or the deadline passes."""
        while not pred():
            if not self._events or self._events[0].deliver_at > deadline:
                self.now = max(self.now, deadline)
                return pred()
            self._process(heapq.heappop(self._events))
        return True

    def drain(self) -> int:
        """Process every pending event regardless of time (setup only)."""
        n = 0
        while self._events:
            self._process(heapq.heappop(self._events))
            n += 1
        return n

    # ------------------------------------------------------------------ outputs

    def set_offline(self, peer: PeerId) -> None:
        self._by_peer[peer].online = False

    def trace_hash(self) -> str:
        return self._trace.copy().hexdigest()

    def total_bytes_sent(self) -> int:
        return sum(n.ledger.total_sent for n in self.nodes)

    def total_bytes_received(self) -> int:
        return sum(n.ledger.total_received for n in self.nodes)

    def bandwidth_rows(self) -> list[tuple[int, int, int]]:
        """Network-wide (bucket_start_s, bytes_in, bytes_out), zero-filled."""
        from .exchange import merge_reports
        end_s = self.now // 1000 + 1
        return merge_reports([n.ledger for n in self.nodes], 0, end_s)


def standard_scenario(node_count: int, seed: int, duration_hours: int = 1):
    """The scripted upload+retrieve run behind `sim run`: deterministic per seed."""
    sim = Simulation.build(SimConfig(node_count=node_count, seed=seed))
    payload = SplitMix64(seed ^ 0xA5A5A5A5A5A5A5A5).randbytes(1 << 20)
    root = sim.nodes[0].add(payload)
    for i in (1, 2):
        if node_count > i:
            sim.nodes[i].cat(root)
    sim.advance(duration_hours * 3600 * 1000)
    for n in sim.nodes:
        n.run_gc()
    providers_final = len(sim.nodes[0].find_providers(root))
    summary = {
        "trace_hash": sim.trace_hash(),
        "events": sim.events_processed,
        "bytes_total": sim.total_bytes_sent(),
        "providers_final": providers_final,
    }
    return sim, root, summary
