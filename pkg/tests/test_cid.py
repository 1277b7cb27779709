import hashlib
import random

import pytest
from hypothesis import given, strategies as st

from farmledger.cid import (BASE58_ALPHABET, Cid, InvalidCharacter, InvalidLength,
                            InvalidPrefix, base58_decode, base58_encode,
                            cid_from_bytes, cid_from_digest, digest, parse_cid)

# The printed form of this example identifier contains "0", which base58btc
# excludes, so the verbatim string cannot be valid; the corrected fixture
# substitutes the visually-confusable "o".
EXAMPLE_CID_PRINTED = "Qmc9jWAvivgWrUdPoPEp7f07sqRTaVEQr7Yb2NCcN7JAYJ"
EXAMPLE_CID = "Qmc9jWAvivgWrUdPoPEp7fo7sqRTaVEQr7Yb2NCcN7JAYJ"


def oracle_base58(raw: bytes) -> str:
    """Independent path: big-int divmod instead of bytewise long division."""
    n = int.from_bytes(raw, "big")
    out = ""
    while n:
        n, r = divmod(n, 58)
        out = BASE58_ALPHABET[r] + out
    pad = len(raw) - len(raw.lstrip(b"\x00"))
    return "1" * pad + out


def oracle_cid_text(data: bytes) -> str:
    return oracle_base58(b"\x12\x20" + hashlib.sha256(data).digest())


def test_sha256_published_vectors():
    assert digest(b"abc").hex() == (
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad")
    assert digest(b"").hex() == (
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855")


def test_digest_deterministic():
    assert digest(b"same input") == digest(b"same input")


def test_cid_matches_oracle_on_random_inputs():
    rng = random.Random(1234)
    for _ in range(1000):
        data = rng.randbytes(rng.randrange(0, 200))
        assert cid_from_bytes(data).text == oracle_cid_text(data)


def test_cid_text_shape():
    for data in (b"", b"x", b"hello world"):
        text = cid_from_bytes(data).text
        assert len(text) == 46
        assert text.startswith("Qm")


def test_all_zero_digest_round_trips():
    c = cid_from_digest(b"\x00" * 32)
    assert parse_cid(c.text) == c


def test_example_cid_parses_and_rerenders():
    c = parse_cid(EXAMPLE_CID)
    assert c.text == EXAMPLE_CID


def test_printed_fixture_with_zero_is_rejected():
    with pytest.raises(InvalidCharacter):
        parse_cid(EXAMPLE_CID_PRINTED)


def test_parse_errors():
    with pytest.raises(InvalidLength):
        parse_cid("abc")
    with pytest.raises(InvalidCharacter):
        parse_cid(EXAMPLE_CID[:-1] + "0")  # '0' is not base58
    # valid length, wrong multihash prefix (0x11 = sha1)
    bogus = base58_encode(b"\x11\x20" + b"\x01" * 32)
    with pytest.raises(InvalidPrefix):
        parse_cid(bogus)


@given(st.binary(max_size=500))
def test_round_trip_property(data):
    c = cid_from_bytes(data)
    assert parse_cid(c.text) == c


def test_round_trip_1000_random():
    rng = random.Random(7)
    for _ in range(1000):
        c = cid_from_bytes(rng.randbytes(rng.randrange(0, 64)))
        assert parse_cid(c.text) == c


def test_bit_flip_changes_cid():
    rng = random.Random(99)
    data = bytearray(rng.randbytes(512))
    base = cid_from_bytes(bytes(data))
    for _ in range(100):
        pos = rng.randrange(len(data) * 8)
        flipped = bytearray(data)
        flipped[pos // 8] ^= 1 << (pos % 8)
        assert cid_from_bytes(bytes(flipped)) != base


def test_cid_length_independent_of_content_size():
    for size in (0, 1024, 10 * 1024 * 1024):
        assert len(cid_from_bytes(b"\xab" * size).text) == 46


@given(st.binary(min_size=0, max_size=100))
def test_base58_round_trip(raw):
    assert base58_decode(base58_encode(raw)) == raw


def test_base58_leading_zeros():
    assert base58_encode(b"\x00\x00\x01") == "112"
    assert base58_decode("112") == b"\x00\x00\x01"
    assert base58_encode(b"") == ""
    assert base58_decode("") == b""
