"""Remote pinning service: API credentials, HS256 JWTs, pin-by-hash."""

from __future__ import annotations

import base64
import hashlib
import hmac
import json
import secrets
import time
from dataclasses import dataclass

from .cid import Cid
from .node import Node, NotFoundAnywhere


class AuthError(Exception):
    pass


class MalformedToken(AuthError):
    pass


class UnknownKey(AuthError):
    pass


class BadSignature(AuthError):
    pass


class NotOwner(Exception):
    pass


@dataclass(frozen=True)
class ApiCredentials:
    api_key: str     # 20 random bytes, hex
    api_secret: str  # 32 random bytes, hex


@dataclass
class PinEntry:
    cid: Cid
    owner: str
    pinned_at: int
    status: str  # fetching | pinned | failed


def _b64url(data: bytes) -> str:
    return base64.urlsafe_b64encode(data).rstrip(b"=").decode("ascii")


def _b64url_decode(text: str) -> bytes:
    pad = "=" * (-len(text) % 4)
    return base64.urlsafe_b64decode(text + pad)


def sign_jwt(api_key: str, api_secret: str, iat: int | None = None) -> str:
    """HS256 token over {"alg","typ"} / {"key","iat"}; key is the secret's hex text."""
    if iat is None:
        iat = int(time.time())
    header = json.dumps({"alg": "HS256", "typ": "JWT"}, separators=(",", ":"))
    payload = json.dumps({"key": api_key, "iat": iat}, separators=(",", ":"))
    signing_input = _b64url(header.encode()) + "." + _b64url(payload.encode())
    sig = hmac.new(api_secret.encode("ascii"), signing_input.encode("ascii"),
                   hashlib.sha256).digest()
    return signing_input + "." + _b64url(sig)


class PinningService:
    """Holds credentials and pin entries; content lives on the service's own node."""

    def __init__(self, node: Node):
        self.node = node
        self._secrets: dict[str, str] = {}  # api_key -> api_secret
        self._pins: dict[tuple[str, str], PinEntry] = {}  # (api_key, cid text) -> entry

    # --------------------------------------------------------------- auth

    def issue_credentials(self) -> ApiCredentials:
        creds = ApiCredentials(api_key=secrets.token_hex(20),
                               api_secret=secrets.token_hex(32))
        self._secrets[creds.api_key] = creds.api_secret
        return creds

    def issue_jwt(self, creds: ApiCredentials, iat: int | None = None) -> str:
        return sign_jwt(creds.api_key, creds.api_secret, iat)

    def verify_jwt(self, token: str) -> str:
        """Returns the api_key on success; constant-time signature comparison."""
        parts = token.split(".")
        if len(parts) != 3:
            raise MalformedToken("token must have three dot-separated segments")
        try:
            header = json.loads(_b64url_decode(parts[0]))
            payload = json.loads(_b64url_decode(parts[1]))
            sig = _b64url_decode(parts[2])
        except (ValueError, UnicodeDecodeError):
            raise MalformedToken("token segments are not base64url JSON") from None
        if _b64url(sig) != parts[2]:
            raise MalformedToken("signature segment is not canonical base64url")
        if not isinstance(header, dict) or header.get("alg") != "HS256":
            raise MalformedToken("unsupported algorithm")
        if not isinstance(payload, dict) or "key" not in payload:
            raise MalformedToken("payload missing key")
        api_key = payload["key"]
        secret = self._secrets.get(api_key)
        if secret is None:
            raise UnknownKey(f"unknown api key")
        expected = hmac.new(secret.encode("ascii"),
                            (parts[0] + "." + parts[1]).encode("ascii"),
                            hashlib.sha256).digest()
        if not hmac.compare_digest(expected, sig):
            raise BadSignature("signature mismatch")
        return api_key

    def revoke(self, api_key: str) -> None:
        self._secrets.pop(api_key, None)

    # --------------------------------------------------------------- pins

    def pin_by_hash(self, token: str, cid: Cid) -> PinEntry:
        owner = self.verify_jwt(token)
        existing = self._pins.get((owner, cid.text))
        if existing is not None and existing.status == "pinned":
            return existing
        entry = PinEntry(cid=cid, owner=owner, pinned_at=self.node.sim.now,
                         status="fetching")
        self._pins[(owner, cid.text)] = entry
        try:
            self.node.pin(cid)
        except NotFoundAnywhere:
            entry.status = "failed"
            raise
        entry.status = "pinned"
        entry.pinned_at = self.node.sim.now
        return entry

    def unpin(self, token: str, cid: Cid) -> None:
        owner = self.verify_jwt(token)
        entry = self._pins.get((owner, cid.text))
        if entry is None:
            if any(k[1] == cid.text for k in self._pins):
                raise NotOwner(f"pin for {cid} belongs to another key")
            raise KeyError(cid.text)
        del self._pins[(owner, cid.text)]
        # release the node-level pin unless another owner still holds it
        if not any(k[1] == cid.text and e.status == "pinned"
                   for k, e in self._pins.items()):
            self.node.unpin(cid)

    def list_pins(self, token: str) -> list[PinEntry]:
        owner = self.verify_jwt(token)
        return [e for (k, _), e in sorted(self._pins.items()) if k == owner]
