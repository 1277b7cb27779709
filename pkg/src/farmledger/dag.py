"""Merkle DAG: fixed-size chunking, canonical node encoding, block store, reassembly."""

from __future__ import annotations

import struct
import threading
from dataclasses import dataclass, field

from .cid import Cid, cid_from_bytes, CID_BYTE_LENGTH

DEFAULT_CHUNK_SIZE = 262144  # 256 KiB
MAX_FANOUT = 174  # single-level DAG cap

LEAF_TAG = 0x00
BRANCH_TAG = 0x01


class DagError(Exception):
    pass


class TooLarge(DagError):
    pass


class NotFound(DagError):
    def __init__(self, cid: Cid):
        super().__init__(f"block not found: {cid}")
        self.cid = cid


class MissingBlock(DagError):
    def __init__(self, cid: Cid):
        super().__init__(f"missing block: {cid}")
        self.cid = cid


class IntegrityError(DagError):
    def __init__(self, cid: Cid):
        super().__init__(f"block bytes do not hash to {cid}")
        self.cid = cid


class BadEncoding(DagError):
    pass


@dataclass(frozen=True)
class Block:
    cid: Cid
    data: bytes


@dataclass(frozen=True)
class DagNode:
    """Decoded block: either a leaf carrying raw bytes or a branch of links."""

    kind: str  # "leaf" | "branch"
    leaf_data: bytes = b""
    links: tuple = ()  # ((child_cid, child_size), ...)
    total_size: int = 0


def chunk(data: bytes, chunk_size: int = DEFAULT_CHUNK_SIZE) -> list[bytes]:
    """Split into fixed-size pieces; empty input yields one empty chunk."""
    if chunk_size < 1:
        raise ValueError("chunk_size must be >= 1")
    if not data:
        return [b""]
    return [data[i:i + chunk_size] for i in range(0, len(data), chunk_size)]


def encode_leaf(data: bytes) -> bytes:
    return bytes([LEAF_TAG]) + data


def encode_branch(links: list[tuple[Cid, int]]) -> bytes:
    total = sum(size for _, size in links)
    parts = [bytes([BRANCH_TAG]), struct.pack(">I", len(links))]
    for child_cid, size in links:
        parts.append(child_cid.raw)
        parts.append(struct.pack(">Q", size))
    parts.append(struct.pack(">Q", total))
    return b"".join(parts)


def decode_node(data: bytes) -> DagNode:
    if not data:
        raise BadEncoding("empty block")
    tag = data[0]
    if tag == LEAF_TAG:
        return DagNode(kind="leaf", leaf_data=data[1:], total_size=len(data) - 1)
    if tag != BRANCH_TAG:
        raise BadEncoding(f"unknown node tag {tag:#x}")
    if len(data) < 5:
        raise BadEncoding("truncated branch header")
    (count,) = struct.unpack(">I", data[1:5])
    entry = CID_BYTE_LENGTH + 8
    expected = 5 + count * entry + 8
    if len(data) != expected:
        raise BadEncoding(f"branch length {len(data)} != expected {expected}")
    links = []
    off = 5
    for _ in range(count):
        child = Cid(data[off:off + CID_BYTE_LENGTH])
        (size,) = struct.unpack(">Q", data[off + CID_BYTE_LENGTH:off + entry])
        links.append((child, size))
        off += entry
    (total,) = struct.unpack(">Q", data[off:off + 8])
    if total != sum(s for _, s in links):
        raise BadEncoding("branch total_size does not match links")
    return DagNode(kind="branch", links=tuple(links), total_size=total)


def build_dag(data: bytes, chunk_size: int = DEFAULT_CHUNK_SIZE) -> tuple[Cid, list[Block]]:
    """Chunk content into leaf blocks plus, when needed, one branch root."""
    pieces = chunk(data, chunk_size)
    if len(pieces) > MAX_FANOUT:
        raise TooLarge(f"{len(pieces)} chunks exceeds single-level fan-out cap {MAX_FANOUT}")
    leaves = []
    for piece in pieces:
        encoded = encode_leaf(piece)
        leaves.append(Block(cid_from_bytes(encoded), encoded))
    if len(leaves) == 1:
        return leaves[0].cid, leaves
    links = [(blk.cid, len(piece)) for blk, piece in zip(leaves, pieces)]
    encoded_root = encode_branch(links)
    root = Block(cid_from_bytes(encoded_root), encoded_root)
    return root.cid, leaves + [root]


class BlockStore:
    """In-memory cid -> block map with last-access times for GC.

    Concurrent readers allowed; mutations serialized by an internal lock.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._blocks: dict[Cid, Block] = {}
        self.last_access: dict[Cid, int] = {}

    def put(self, data: bytes, now: int = 0) -> Cid:
        c = cid_from_bytes(data)
        with self._lock:
            self._blocks[c] = Block(c, data)
            self.last_access[c] = now
        return c

    def put_block(self, block: Block, now: int = 0) -> None:
        if cid_from_bytes(block.data) != block.cid:
            raise IntegrityError(block.cid)
        with self._lock:
            self._blocks[block.cid] = block
            self.last_access[block.cid] = now

    def get(self, cid: Cid, now: int | None = None) -> Block:
        with self._lock:
            blk = self._blocks.get(cid)
            if blk is None:
                raise NotFound(cid)
            if now is not None:
                self.last_access[cid] = now
            return blk

    def has(self, cid: Cid) -> bool:
        with self._lock:
            return cid in self._blocks

    def delete(self, cid: Cid) -> None:
        with self._lock:
            self._blocks.pop(cid, None)
            self.last_access.pop(cid, None)

    def touch(self, cid: Cid, now: int) -> None:
        with self._lock:
            if cid in self._blocks:
                self.last_access[cid] = now

    def cids(self) -> list[Cid]:
        with self._lock:
            return list(self._blocks)

    def __len__(self) -> int:
        with self._lock:
            return len(self._blocks)


def assemble(root: Cid, store) -> bytes:
    """Reassemble content from a block source, hash-verifying every block.

    `store` needs only a get(cid) returning an object with .data.
    """

    def fetch(cid: Cid) -> bytes:
        try:
            blk = store.get(cid)
        except NotFound:
            raise MissingBlock(cid) from None
        if cid_from_bytes(blk.data) != cid:
            raise IntegrityError(cid)
        return blk.data

    node = decode_node(fetch(root))
    if node.kind == "leaf":
        return node.leaf_data
    parts = []
    for child_cid, child_size in node.links:
        child = decode_node(fetch(child_cid))
        if child.kind != "leaf":
            raise BadEncoding("nested branches are not produced by this dag builder")
        if len(child.leaf_data) != child_size:
            raise IntegrityError(child_cid)
        parts.append(child.leaf_data)
    return b"".join(parts)


def dag_closure(root: Cid, store) -> set[Cid]:
    """All block cids reachable from root (root included)."""
    blk = store.get(root)
    node = decode_node(blk.data)
    out = {root}
    if node.kind == "branch":
        for child_cid, _ in node.links:
            out.add(child_cid)
    return out
