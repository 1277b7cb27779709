"""A peer: blockstore + DHT + block exchange + pinning + GC.

All cross-node interaction goes through the simulation's message queue.
Handlers (handle_*) never block; the public operations (add, cat, provide,
find_providers, fetch_block) are drivers that send requests and pump the
simulation until replies arrive or a deadline passes.
"""

from __future__ import annotations

from .cid import Cid, cid_from_bytes, parse_cid
from . import dag
from .dag import BlockStore, Block, dag_closure, decode_node
from .dht import (K, ALPHA, Contact, DhtRole, ProviderRecord, ProviderStore, RoutingTable,
                  NoServersReachable, dht_key, xor_distance,
                  PROVIDER_TTL_MS, REPUBLISH_INTERVAL_MS)
from .exchange import (BandwidthLedger, Envelope, make_envelope, payload_obj,
                       CONNECT, FIND_NODE, FIND_NODE_REPLY, FIND_PROVIDERS,
                       FIND_PROVIDERS_REPLY, ADD_PROVIDER, ADD_PROVIDER_REPLY,
                       WANT, HAVE_BLOCK, DONT_HAVE, REPUBLISH, ZERO_CID)
from .peer import PeerId, Multiaddress, parse_peer_id, parse_multiaddr

DEFAULT_GC_TTL_MS = 12 * 3600 * 1000
RPC_TIMEOUT_MS = 1000
DEFAULT_FETCH_DEADLINE_MS = 30_000
MAX_LOOKUP_ROUNDS = 32


class NotFoundAnywhere(Exception):
    def __init__(self, cid: Cid):
        super().__init__(f"content not found on the network: {cid}")
        self.cid = cid


class FetchIntegrityError(dag.IntegrityError):
    def __init__(self, cid: Cid, peer: PeerId):
        super().__init__(cid)
        self.peer = peer


class Node:
    def __init__(self, sim, seed: bytes, addr: Multiaddress, gc_ttl: int = DEFAULT_GC_TTL_MS):
        if gc_ttl <= 0:
            raise ValueError("gc_ttl must be positive")
        self.sim = sim
        self.seed = seed
        self.peer_id = addr.peer
        self.addr = addr
        self.gc_ttl = gc_ttl
        self.online = True

        self.store = BlockStore()
        self.pins: set[Cid] = set()
        self.pin_closure: set[Cid] = set()
        self.role = DhtRole()
        self.rt = RoutingTable(self.peer_id)
        self.providers = ProviderStore()
        self.ledger = BandwidthLedger()
        self.connected: set[PeerId] = set()

        self._responses: dict[int, dict] = {}
        self._want_replies: dict[tuple[PeerId, Cid], tuple] = {}
        self._republishing: set[Cid] = set()
        self.last_lookup_rounds = 0

    # ------------------------------------------------------------------ wiring

    def _send(self, to: PeerId, env: Envelope) -> None:
        self.sim.send(self.peer_id, to, env)

    def handle(self, frm: PeerId, env: Envelope) -> None:
        if not self.online:
            return
        kind = env.kind
        if kind == CONNECT:
            self._handle_connect(frm, env)
        elif kind == FIND_NODE:
            self._handle_find_node(frm, env)
        elif kind == FIND_PROVIDERS:
            self._handle_find_providers(frm, env)
        elif kind == ADD_PROVIDER:
            self._handle_add_provider(frm, env)
        elif kind == WANT:
            self._handle_want(frm, env)
        elif kind in (FIND_NODE_REPLY, FIND_PROVIDERS_REPLY, ADD_PROVIDER_REPLY):
            obj = payload_obj(env)
            self._responses[obj["req"]] = obj
            self._learn_from_reply(frm, obj)
        elif kind == HAVE_BLOCK:
            self._want_replies[(frm, Cid(env.cid_raw))] = ("have", env.payload)
        elif kind == DONT_HAVE:
            self._want_replies[(frm, Cid(env.cid_raw))] = ("dont_have", None)
        elif kind == REPUBLISH:
            self._handle_republish(env)

    def _note_sender(self, frm: PeerId, obj: dict) -> None:
        addr = obj.get("addr")
        if addr:
            self.rt.update(frm, parse_multiaddr(addr), now=self.sim.now,
                           is_server=obj.get("server"))

    def _learn_from_reply(self, frm: PeerId, obj: dict) -> None:
        self._note_sender(frm, obj)
        for p in obj.get("peers", []):
            peer = parse_peer_id(p["id"])
            if peer != self.peer_id:
                self.rt.update(peer, parse_multiaddr(p["addr"]),
                               now=self.sim.now, is_server=p.get("server"))

    # ------------------------------------------------------------------ handlers

    def _handle_connect(self, frm: PeerId, env: Envelope) -> None:
        obj = payload_obj(env)
        self.connected.add(frm)
        self.role.record_inbound(frm)
        self._note_sender(frm, obj)

    def _peer_entries(self, key: int) -> list[dict]:
        return [{"id": c.peer.text, "addr": c.addr.render(), "server": c.is_server}
                for c in self.rt.closest(key, K)]

    def _handle_find_node(self, frm: PeerId, env: Envelope) -> None:
        obj = payload_obj(env)
        self._note_sender(frm, obj)
        key = int(obj["key"], 16)
        self._send(frm, make_envelope(FIND_NODE_REPLY, obj={
            "req": obj["req"], "addr": self.addr.render(),
            "server": self.role.is_server, "peers": self._peer_entries(key)}))

    def _handle_find_providers(self, frm: PeerId, env: Envelope) -> None:
        obj = payload_obj(env)
        self._note_sender(frm, obj)
        cid = Cid(env.cid_raw)
        recs = self.providers.find(cid, self.sim.now)
        self._send(frm, make_envelope(FIND_PROVIDERS_REPLY, cid=cid, obj={
            "req": obj["req"], "addr": self.addr.render(),
            "server": self.role.is_server,
            "providers": [{"id": r.provider.text, "addr": r.addr.render(),
                           "published_at": r.published_at, "ttl": r.ttl}
                          for r in sorted(recs, key=lambda r: r.provider.raw)],
            "peers": self._peer_entries(dht_key(cid))}))

    def _handle_add_provider(self, frm: PeerId, env: Envelope) -> None:
        obj = payload_obj(env)
        self._note_sender(frm, obj)
        cid = Cid(env.cid_raw)
        rec = ProviderRecord(cid=cid, provider=parse_peer_id(obj["provider"]),
                             addr=parse_multiaddr(obj["provider_addr"]),
                             published_at=obj["published_at"], ttl=obj["ttl"])
        accepted = self.providers.store(self.role, rec)
        self._send(frm, make_envelope(ADD_PROVIDER_REPLY, cid=cid, obj={
            "req": obj["req"], "addr": self.addr.render(),
            "server": self.role.is_server, "accepted": accepted}))

    def _handle_want(self, frm: PeerId, env: Envelope) -> None:
        # a want over a fresh stream counts as an inbound connection
        if frm not in self.connected:
            self.connected.add(frm)
            self.role.record_inbound(frm)
        cid = Cid(env.cid_raw)
        if self.store.has(cid):
            blk = self.store.get(cid, now=self.sim.now)
            self._send(frm, make_envelope(HAVE_BLOCK, cid=cid, payload=blk.data))
        else:
            self._send(frm, make_envelope(DONT_HAVE, cid=cid))

    def _handle_republish(self, env: Envelope) -> None:
        cid = Cid(env.cid_raw)
        if not self.online or not self.store.has(cid):
            self._republishing.discard(cid)
            return
        rec_obj = self._provider_obj(cid)
        for c in self.rt.closest(dht_key(cid), K):
            self._send(c.peer, make_envelope(ADD_PROVIDER, cid=cid, obj=dict(rec_obj, req=self.sim.next_req_id())))
        if self.role.is_server:
            self.providers.store(self.role, self._own_record(cid))
        self.sim.schedule_local(self.peer_id, make_envelope(REPUBLISH, cid=cid),
                                REPUBLISH_INTERVAL_MS)

    # ------------------------------------------------------------------ drivers

    def connect_to(self, addr: Multiaddress) -> None:
        if addr.peer == self.peer_id:
            return
        self.connected.add(addr.peer)
        self.rt.update(addr.peer, addr, now=self.sim.now)
        self._send(addr.peer, make_envelope(CONNECT, obj={
            "addr": self.addr.render(), "server": self.role.is_server}))

    def _rpc(self, targets: list, kind: int, cid: Cid | None, extra: dict,
             deadline: int) -> dict[PeerId, dict]:
        """Send one request per target contact, pump until replies or timeout."""
        reqs = {}
        for contact in targets:
            req = self.sim.next_req_id()
            obj = dict(extra, req=req, addr=self.addr.render())
            self._send(contact.peer, make_envelope(kind, cid=cid, obj=obj))
            reqs[req] = contact.peer
        limit = min(self.sim.now + RPC_TIMEOUT_MS, deadline)
        self.sim.run_until(lambda: all(r in self._responses for r in reqs), limit)
        out = {}
        for req, peer in reqs.items():
            if req in self._responses:
                out[peer] = self._responses.pop(req)
        return out

    def iterative_lookup(self, key: int, providers_for: Cid | None = None,
                         deadline: int | None = None):
        """Kademlia iterative lookup; returns (contacts by distance, provider records).

        Queries the ALPHA closest unqueried peers per round until every peer
        among the K closest known has been queried.
        """
        if deadline is None:
            deadline = self.sim.now + DEFAULT_FETCH_DEADLINE_MS
        known = {c.peer: c for c in self.rt.closest(key, K)}
        queried: set[PeerId] = set()
        providers: dict[PeerId, ProviderRecord] = {}
        kind = FIND_PROVIDERS if providers_for is not None else FIND_NODE
        extra = {} if providers_for is not None else {"key": f"{key:064x}"}

        def ranked() -> list[Contact]:
            return sorted(known.values(),
                          key=lambda c: (xor_distance(dht_key(c.peer), key), c.peer.raw))

        rounds = 0
        for _ in range(MAX_LOOKUP_ROUNDS):
            batch = [c for c in ranked()[:K] if c.peer not in queried][:ALPHA]
            if not batch or self.sim.now >= deadline:
                break
            rounds += 1
            queried.update(c.peer for c in batch)
            replies = self._rpc(batch, kind, providers_for, extra, deadline)
            for peer, obj in replies.items():
                for p in obj.get("peers", []):
                    pid = parse_peer_id(p["id"])
                    if pid == self.peer_id or pid in known:
                        continue
                    known[pid] = Contact(pid, parse_multiaddr(p["addr"]),
                                         bool(p.get("server")), self.sim.now)
                for pr in obj.get("providers", []):
                    pid = parse_peer_id(pr["id"])
                    rec = ProviderRecord(cid=providers_for, provider=pid,
                                         addr=parse_multiaddr(pr["addr"]),
                                         published_at=pr["published_at"], ttl=pr["ttl"])
                    if not rec.expired(self.sim.now):
                        providers[pid] = rec
        self.last_lookup_rounds = rounds
        return ranked(), list(providers.values())

    def _own_record(self, cid: Cid) -> ProviderRecord:
        return ProviderRecord(cid=cid, provider=self.peer_id, addr=self.addr,
                              published_at=self.sim.now, ttl=PROVIDER_TTL_MS)

    def _provider_obj(self, cid: Cid) -> dict:
        return {"provider": self.peer_id.text, "provider_addr": self.addr.render(),
                "published_at": self.sim.now, "ttl": PROVIDER_TTL_MS,
                "addr": self.addr.render(), "server": self.role.is_server}

    def provide(self, cid: Cid) -> list[PeerId]:
        """Publish a provider record for cid on the closest Server peers."""
        key = dht_key(cid)
        ranked, _ = self.iterative_lookup(key)
        stored_at: list[PeerId] = []
        if self.role.is_server:
            self.providers.store(self.role, self._own_record(cid))
            stored_at.append(self.peer_id)
        targets = ranked[:K]
        if targets:
            replies = self._rpc(targets, ADD_PROVIDER, cid, self._provider_obj(cid),
                                self.sim.now + RPC_TIMEOUT_MS)
            for peer, obj in replies.items():
                if obj.get("accepted"):
                    stored_at.append(peer)
        if not stored_at:
            raise NoServersReachable(f"no DHT server accepted the provider record for {cid}")
        if cid not in self._republishing:
            self._republishing.add(cid)
            self.sim.schedule_local(self.peer_id, make_envelope(REPUBLISH, cid=cid),
                                    REPUBLISH_INTERVAL_MS)
        return stored_at

    def find_providers(self, cid: Cid) -> list[ProviderRecord]:
        _, recs = self.iterative_lookup(dht_key(cid), providers_for=cid)
        by_peer = {r.provider: r for r in recs}
        for r in self.providers.find(cid, self.sim.now):
            by_peer.setdefault(r.provider, r)
        return sorted(by_peer.values(), key=lambda r: r.provider.raw)

    # ------------------------------------------------------------------ exchange

    def _want_round(self, peers: list[PeerId], cid: Cid, deadline: int):
        """Ask each peer for cid; return verified block or None. Corrupt peers recorded."""
        pending = []
        for peer in peers:
            wkey = (peer, cid)
            if wkey in self._want_replies:
                continue  # one in-flight want per (peer, cid)
            self._want_replies[wkey] = ()
            self._send(peer, make_envelope(WANT, cid=cid))
            pending.append(wkey)
        limit = min(self.sim.now + RPC_TIMEOUT_MS, deadline)
        self.sim.run_until(lambda: all(self._want_replies.get(k) for k in pending), limit)
        corrupt = []
        block = None
        for wkey in pending:
            reply = self._want_replies.pop(wkey, ())
            if not reply:
                continue
            status, data = reply
            if status == "have" and block is None:
                if cid_from_bytes(data) == cid:
                    block = Block(cid, data)
                else:
                    corrupt.append(wkey[0])
        return block, corrupt

    def fetch_block(self, cid: Cid, deadline_ms: int = DEFAULT_FETCH_DEADLINE_MS) -> Block:
        """Bitswap-style fetch: connected peers first, then DHT provider lookup."""
        if self.store.has(cid):
            return self.store.get(cid, now=self.sim.now)
        deadline = self.sim.now + deadline_ms
        corrupt_peers: set[PeerId] = set()
        saw_corrupt = False

        peers = sorted(self.connected, key=lambda p: p.raw)
        block, corrupt = self._want_round(peers, cid, deadline)
        corrupt_peers.update(corrupt)
        saw_corrupt = saw_corrupt or bool(corrupt)
        if block is None and self.sim.now < deadline:
            for rec in self.find_providers(cid):
                if rec.provider == self.peer_id or rec.provider in corrupt_peers:
                    continue
                if self.sim.now >= deadline:
                    break
                if rec.provider not in self.connected:
                    self.connect_to(rec.addr)
                block, corrupt = self._want_round([rec.provider], cid, deadline)
                corrupt_peers.update(corrupt)
                saw_corrupt = saw_corrupt or bool(corrupt)
                if block is not None:
                    break
        if block is None:
            self.sim.run_until(lambda: False, deadline)  # let the deadline elapse
            if saw_corrupt:
                raise FetchIntegrityError(cid, sorted(corrupt_peers, key=lambda p: p.raw)[0])
            raise NotFoundAnywhere(cid)
        self.store.put_block(block, now=self.sim.now)  # cached unpinned
        return block

    # ------------------------------------------------------------------ content api

    def add(self, data: bytes) -> Cid:
        """Store content locally, pin it, and announce every block on the DHT."""
        root, blocks = dag.build_dag(data)
        for blk in blocks:
            self.store.put_block(blk, now=self.sim.now)
        self.pins.add(root)
        self._recompute_pin_closure()
        for c in [root] + [b.cid for b in blocks if b.cid != root]:
            self.provide(c)
        return root

    def cat(self, cid: Cid, deadline_ms: int = DEFAULT_FETCH_DEADLINE_MS) -> bytes:
        """Fetch (locally or over the network), verify, reassemble; then become a provider."""
        fetched: list[Cid] = []
        if not self.store.has(cid):
            self.fetch_block(cid, deadline_ms)
            fetched.append(cid)
        node = decode_node(self.store.get(cid, now=self.sim.now).data)
        if node.kind == "branch":
            for child_cid, _ in node.links:
                if not self.store.has(child_cid):
                    self.fetch_block(child_cid, deadline_ms)
                    fetched.append(child_cid)
                else:
                    self.store.touch(child_cid, self.sim.now)
        data = dag.assemble(cid, self.store)
        for c in fetched:
            self.provide(c)
        return data

    def pin(self, cid: Cid, deadline_ms: int = DEFAULT_FETCH_DEADLINE_MS) -> None:
        if not self.store.has(cid):
            self.cat(cid, deadline_ms)
        self.pins.add(cid)
        self._recompute_pin_closure()

    def unpin(self, cid: Cid) -> None:
        self.pins.discard(cid)
        self._recompute_pin_closure()

    def _recompute_pin_closure(self) -> None:
        closure: set[Cid] = set()
        for root in self.pins:
            closure |= dag_closure(root, self.store)
        self.pin_closure = closure

    def run_gc(self, now: int | None = None) -> list[Cid]:
        """Evict unpinned blocks whose last access is older than gc_ttl."""
        if now is None:
            now = self.sim.now
        evicted = []
        for c in self.store.cids():
            if c in self.pin_closure:
                continue
            if now - self.store.last_access.get(c, now) > self.gc_ttl:
                evicted.append(c)
        for c in evicted:
            self.store.delete(c)
        return sorted(evicted, key=lambda c: c.raw)
