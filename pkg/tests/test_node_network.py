import math
import random

import pytest

from farmledger.cid import cid_from_bytes
from farmledger.dag import IntegrityError
from farmledger.dht import NoServersReachable, PROVIDER_TTL_MS
from farmledger.node import NotFoundAnywhere
from farmledger.simnet import SimConfig, Simulation

HOUR = 3600 * 1000


@pytest.fixture(scope="module")
def sim20():
    return Simulation.build(SimConfig(node_count=20, seed=42))


class TestAddCat:
    def test_add_then_local_cat(self):
        sim = Simulation.build(SimConfig(node_count=5, seed=1))
        data = b"local content" * 50
        root = sim.nodes[0].add(data)
        events_before = sim.events_processed
        assert sim.nodes[0].cat(root) == data
        # local read needs no block-exchange traffic
        assert sim.events_processed == events_before

    def test_add_twice_same_cid(self):
        sim = Simulation.build(SimConfig(node_count=6, seed=2))
        data = b"idempotent"
        assert sim.nodes[0].add(data) == sim.nodes[0].add(data)

    def test_remote_cat_20_nodes(self):
        sim = Simulation.build(SimConfig(node_count=20, seed=42))
        payload = random.Random(42).randbytes(1 << 20)
        root = sim.nodes[0].add(payload)
        assert sim.nodes[1].cat(root) == payload
        providers = {r.provider for r in sim.nodes[5].find_providers(root)}
        assert sim.nodes[0].peer_id in providers
        assert sim.nodes[1].peer_id in providers

    def test_cat_never_added(self):
        sim = Simulation.build(SimConfig(node_count=5, seed=3))
        with pytest.raises(NotFoundAnywhere):
            sim.nodes[1].cat(cid_from_bytes(b"never added"), deadline_ms=3000)

    def test_round_trip_payload_sizes(self):
        sim = Simulation.build(SimConfig(node_count=8, seed=4))
        rng = random.Random(4)
        for size in (0, 1, 1000, 300_000, 2 ** 20 + 13):
            data = rng.randbytes(size)
            root = sim.nodes[0].add(data)
            assert sim.nodes[3].cat(root) == data


class TestProviders:
    def test_find_providers_after_add(self):
        sim = Simulation.build(SimConfig(node_count=10, seed=5))
        root = sim.nodes[0].add(b"announced")
        recs = sim.nodes[4].find_providers(root)
        assert sim.nodes[0].peer_id in {r.provider for r in recs}

    def test_unknown_cid_empty(self):
        sim = Simulation.build(SimConfig(node_count=10, seed=5))
        assert sim.nodes[4].find_providers(cid_from_bytes(b"unknown")) == []

    def test_provider_amplification(self):
        sim = Simulation.build(SimConfig(node_count=12, seed=6))
        root = sim.nodes[0].add(b"popular content" * 20)
        readers = [1, 2, 3]
        for i in readers:
            sim.nodes[i].cat(root)
        recs = sim.nodes[7].find_providers(root)
        assert len(recs) >= len(readers) + 1

    def test_single_node_provide_stores_locally(self):
        sim = Simulation.build(SimConfig(node_count=1, seed=7))
        node = sim.nodes[0]
        node.role.is_server = True  # fixture: lone node acts as server
        root = node.add(b"solo")
        assert node.peer_id in {r.provider for r in node.providers.find(root, sim.now)}

    def test_all_client_network_raises(self):
        sim = Simulation(SimConfig(node_count=2, seed=8))  # no bootstrap: all clients
        with pytest.raises(NoServersReachable):
            sim.nodes[0].add(b"nowhere to store")

    def test_expired_records_not_returned(self):
        sim = Simulation.build(SimConfig(node_count=6, seed=9))
        node = sim.nodes[0]
        root = node.add(b"will expire")
        sim.set_offline(node.peer_id)  # stop republish keeping it alive
        sim.advance(PROVIDER_TTL_MS + 60_000)
        assert sim.nodes[2].find_providers(root) == []


class TestRoles:
    def test_role_rule_over_full_scenario(self, sim20):
        sim = Simulation.build(SimConfig(node_count=20, seed=42))
        payload = random.Random(1).randbytes(1 << 20)
        root = sim.nodes[0].add(payload)
        sim.nodes[1].cat(root)
        for n in sim.nodes:
            if len(n.role.inbound_peers) >= 4:
                assert n.role.value == "Server"
            else:
                assert n.role.value == "Client"
                assert n.providers.count() == 0

    def test_lookup_round_bound(self, sim20):
        key = random.Random(10).getrandbits(256)
        sim20.nodes[0].iterative_lookup(key)
        bound = math.ceil(math.log2(20)) + 5
        assert sim20.nodes[0].last_lookup_rounds <= bound


class TestFetch:
    def test_direct_peer_no_dht(self):
        sim = Simulation.build(SimConfig(node_count=2, seed=11))
        a, b = sim.nodes
        from farmledger.dag import encode_leaf
        encoded = encode_leaf(b"direct")
        cid = a.store.put(encoded)
        b.connect_to(a.addr)
        sim.drain()
        blk = b.fetch_block(cid)
        assert blk.data == encoded

    def test_corrupt_block_skips_peer(self):
        sim = Simulation.build(SimConfig(node_count=2, seed=12))
        a, b = sim.nodes
        from farmledger.dag import encode_leaf
        cid = a.store.put(encode_leaf(b"will be corrupted"))
        b.connect_to(a.addr)
        sim.drain()
        sim.fault_corrupt_block_from.add(a.peer_id)
        with pytest.raises(IntegrityError):
            b.fetch_block(cid, deadline_ms=3000)

    def test_fetch_via_dht_from_unconnected_provider(self):
        sim = Simulation.build(SimConfig(node_count=20, seed=13))
        uploader = sim.nodes[10]
        reader = next(n for n in sim.nodes[1:]
                      if uploader.peer_id not in n.connected and n is not uploader)
        data = b"distant content" * 100
        root = uploader.add(data)
        assert uploader.peer_id not in reader.connected
        assert reader.cat(root) == data
        assert uploader.peer_id in reader.connected  # connected during fetch


class TestPinGc:
    def test_gc_evicts_after_ttl(self):
        sim = Simulation.build(SimConfig(node_count=6, seed=14))
        root = sim.nodes[0].add(b"cached remotely" * 10)
        reader = sim.nodes[2]
        reader.cat(root)
        sim.advance(12 * HOUR + 1000)
        evicted = reader.run_gc()
        assert root in evicted
        assert not reader.store.has(root)

    def test_gc_retains_before_ttl(self):
        sim = Simulation.build(SimConfig(node_count=6, seed=15))
        root = sim.nodes[0].add(b"fresh enough" * 10)
        reader = sim.nodes[2]
        reader.cat(root)
        sim.advance(11 * HOUR + 59 * 60 * 1000)
        assert reader.run_gc() == []
        assert reader.store.has(root)

    def test_pinned_retained_at_1000_hours(self):
        sim = Simulation.build(SimConfig(node_count=6, seed=16))
        node = sim.nodes[0]
        root = node.add(b"pinned forever" * 10)
        sim.advance(1000 * HOUR)
        assert node.run_gc() == []
        assert node.cat(root) == b"pinned forever" * 10

    def test_unpin_makes_gc_eligible(self):
        sim = Simulation.build(SimConfig(node_count=6, seed=17))
        node = sim.nodes[0]
        root = node.add(b"temporarily pinned")
        node.unpin(root)
        sim.advance(12 * HOUR + 1000)
        assert root in node.run_gc()

    def test_unpin_never_pinned_is_noop(self):
        sim = Simulation.build(SimConfig(node_count=3, seed=18))
        sim.nodes[0].unpin(cid_from_bytes(b"never pinned"))

    def test_pin_remote_content_fetches_and_retains(self):
        sim = Simulation.build(SimConfig(node_count=8, seed=19))
        data = b"remote pin target" * 30
        root = sim.nodes[0].add(data)
        pinner = sim.nodes[4]
        pinner.pin(root)
        sim.advance(1000 * HOUR)
        pinner.run_gc()
        assert pinner.store.has(root)

    def test_pin_unavailable_content(self):
        sim = Simulation.build(SimConfig(node_count=4, seed=20))
        with pytest.raises(NotFoundAnywhere):
            sim.nodes[0].pin(cid_from_bytes(b"ghost"), deadline_ms=3000)

    def test_access_refresh_defers_eviction(self):
        sim = Simulation.build(SimConfig(node_count=6, seed=21))
        root = sim.nodes[0].add(b"frequently read" * 10)
        reader = sim.nodes[2]
        reader.cat(root)
        sim.advance(8 * HOUR)
        reader.cat(root)  # refreshes last_access
        sim.advance(8 * HOUR)
        assert reader.run_gc() == []
        assert reader.store.has(root)

    def test_gc_safety_pinned_closure_never_evicted(self):
        sim = Simulation.build(SimConfig(node_count=6, seed=22))
        node = sim.nodes[0]
        root = node.add(random.Random(22).randbytes(1 << 20))
        sim.advance(100 * HOUR)
        evicted = set(node.run_gc())
        assert evicted.isdisjoint(node.pin_closure)
