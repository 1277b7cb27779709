"""CIDv0 content identifiers: sha2-256 multihash, base58btc text form."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

BASE58_ALPHABET = "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz"
_B58_INDEX = {c: i for i, c in enumerate(BASE58_ALPHABET)}

SHA2_256_CODE = 0x12
DIGEST_LENGTH = 0x20  # 32 bytes
CID_BYTE_LENGTH = 34
CID_TEXT_LENGTH = 46


class CidError(ValueError):
    pass


class InvalidCharacter(CidError):
    pass


class InvalidLength(CidError):
    pass


class InvalidPrefix(CidError):
    pass


def digest(data: bytes) -> bytes:
    """SHA-256 of the given bytes (32-byte digest)."""
    return hashlib.sha256(data).digest()


def base58_encode(raw: bytes) -> str:
    # Long division over base-256 digits; leading zero bytes map to '1'.
    zeros = 0
    for b in raw:
        if b != 0:
            break
        zeros += 1
    digits = list(raw)
    out = []
    while any(digits):
        remainder = 0
        quotient = []
        for d in digits:
            acc = remainder * 256 + d
            quotient.append(acc // 58)
            remainder = acc % 58
        out.append(BASE58_ALPHABET[remainder])
        # strip leading zeros of the quotient to terminate
        i = 0
        while i < len(quotient) and quotient[i] == 0:
            i += 1
        digits = quotient[i:]
    return "1" * zeros + "".join(reversed(out))


def base58_decode(text: str) -> bytes:
    zeros = 0
    for c in text:
        if c != "1":
            break
        zeros += 1
    digits = [0]
    for c in text:
        if c not in _B58_INDEX:
            raise InvalidCharacter(f"character {c!r} is not in the base58 alphabet")
        carry = _B58_INDEX[c]
        for i in range(len(digits) - 1, -1, -1):
            carry += digits[i] * 58
            digits[i] = carry % 256
            carry //= 256
        while carry:
            digits.insert(0, carry % 256)
            carry //= 256
    # strip leading zeros produced by the accumulator, then restore counted ones
    i = 0
    while i < len(digits) - 1 and digits[i] == 0:
        i += 1
    stripped = bytes(digits[i:])
    if stripped == b"\x00":
        stripped = b""
    return b"\x00" * zeros + stripped


@dataclass(frozen=True, order=True)
class Cid:
    """CIDv0: base58btc(0x12 || 0x20 || sha256-digest), 46 chars starting 'Qm'."""

    raw: bytes  # the 34 multihash bytes

    def __post_init__(self):
        if len(self.raw) != CID_BYTE_LENGTH:
            raise InvalidLength(f"cid raw form must be {CID_BYTE_LENGTH} bytes, got {len(self.raw)}")
        if self.raw[0] != SHA2_256_CODE or self.raw[1] != DIGEST_LENGTH:
            raise InvalidPrefix("cid must start with 0x12 0x20 (sha2-256, 32 bytes)")

    @property
    def digest(self) -> bytes:
        return self.raw[2:]

    @property
    def text(self) -> str:
        return base58_encode(self.raw)

    def __str__(self) -> str:
        return self.text

    def __repr__(self) -> str:
        return f"Cid({self.text})"


def cid_from_digest(d: bytes) -> Cid:
    return Cid(bytes([SHA2_256_CODE, DIGEST_LENGTH]) + d)


def cid_from_bytes(data: bytes) -> Cid:
    """Content identifier of the given bytes."""
    return cid_from_digest(digest(data))


def parse_cid(text: str) -> Cid:
    raw = base58_decode(text)
    if len(raw) != CID_BYTE_LENGTH:
        raise InvalidLength(f"decoded cid is {len(raw)} bytes, expected {CID_BYTE_LENGTH}")
    if raw[0] != SHA2_256_CODE or raw[1] != DIGEST_LENGTH:
        raise InvalidPrefix("decoded cid does not start with 0x12 0x20")
    return Cid(raw)
