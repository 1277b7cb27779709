"""HTTP surfaces: node RPC API, gateway, and pinning service endpoints.

All servers share one lock around the simulation so concurrent HTTP requests
serialize their access to node state.
"""

from __future__ import annotations

import datetime
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import urlparse, parse_qs

from .cid import parse_cid, CidError
from . import analytics, farm
from .farm import parse_csv, parse_canonical, upload_dataset, NotADataset, HeaderMismatch, RowError
from .gateway import Gateway
from .node import Node, NotFoundAnywhere
from .pinsvc import PinningService, AuthError, NotOwner


class _JsonHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _body(self) -> bytes:
        n = int(self.headers.get("Content-Length") or 0)
        return self.rfile.read(n) if n else b""

    def _respond(self, status: int, body: bytes, content_type: str,
                 extra: dict | None = None) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Headers", "Authorization, Content-Type")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS")
        for k, v in (extra or {}).items():
            self.send_header(k, v)
        self.end_headers()
        self.wfile.write(body)

    def _json(self, status: int, obj, extra: dict | None = None) -> None:
        self._respond(status, json.dumps(obj).encode(), "application/json", extra)

    def do_OPTIONS(self):
        self._respond(204, b"", "text/plain")


# ---------------------------------------------------------------- node RPC


def make_rpc_server(node: Node, host: str = "127.0.0.1", port: int = 5001,
                    visualizer_base: str = "http://127.0.0.1:8080",
                    lock: threading.Lock | None = None) -> ThreadingHTTPServer:
    lock = lock or threading.Lock()

    class RpcHandler(_JsonHandler):
        def do_POST(self):
            url = urlparse(self.path)
            if url.path == "/api/v0/add":
                data = self._body()
                with lock:
                    cid = node.add(data)
                self._json(200, {"cid": cid.text, "size": len(data)})
            elif url.path == "/api/v0/pin/add":
                self._pin_add(url)
            elif url.path == "/api/v0/pin/rm":
                try:
                    cid = self._arg_cid(url)
                except CidError as e:
                    self._json(400, {"error": str(e)})
                    return
                with lock:
                    node.unpin(cid)
                self._json(200, {"unpinned": [cid.text]})
            elif url.path == "/api/v0/farm/upload":
                self._farm_upload()
            else:
                self._json(404, {"error": "unknown endpoint"})

        def do_GET(self):
            url = urlparse(self.path)
            if url.path == "/api/v0/cat":
                self._cat(url)
            elif url.path == "/api/v0/id":
                with lock:
                    self._json(200, {"peer_id": node.peer_id.text,
                                     "multiaddr": node.addr.render()})
            elif url.path == "/api/v0/farm/analyze":
                self._analyze(url)
            else:
                self._json(404, {"error": "unknown endpoint"})

        def _arg_cid(self, url):
            args = parse_qs(url.query).get("arg", [])
            if not args:
                raise CidError("missing arg=<cid>")
            return parse_cid(args[0])

        def _cat(self, url):
            try:
                cid = self._arg_cid(url)
            except CidError as e:
                self._json(400, {"error": str(e)})
                return
            try:
                with lock:
                    data = node.cat(cid)
            except NotFoundAnywhere:
                self._json(404, {"error": f"content not found: {cid.text}"})
                return
            self._respond(200, data, "application/octet-stream")

        def _pin_add(self, url):
            try:
                cid = self._arg_cid(url)
            except CidError as e:
                self._json(400, {"error": str(e)})
                return
            try:
                with lock:
                    node.pin(cid)
            except NotFoundAnywhere:
                self._json(404, {"error": f"content not found: {cid.text}"})
                return
            self._json(200, {"pinned": [cid.text]})

        def _farm_upload(self):
            try:
                ds = parse_csv(self._body().decode("utf-8"))
            except (HeaderMismatch, RowError, UnicodeDecodeError) as e:
                self._json(422, {"error": type(e).__name__, "detail": str(e)})
                return
            with lock:
                receipt = upload_dataset(ds, node, visualizer_base)
            self._json(200, receipt.to_json())

        def _analyze(self, url):
            q = {k: v[0] for k, v in parse_qs(url.query).items()}
            try:
                cid = parse_cid(q.get("cid", ""))
            except CidError as e:
                self._json(400, {"error": str(e)})
                return
            try:
                with lock:
                    data = node.cat(cid)
            except NotFoundAnywhere:
                self._json(404, {"error": f"content not found: {cid.text}"})
                return
            try:
                ds = parse_canonical(data)
            except NotADataset as e:
                self._json(422, {"error": "NotADataset", "detail": str(e)})
                return
            try:
                self._json(200, analyze_query(ds, q))
            except ValueError as e:
                self._json(400, {"error": str(e)})

    return ThreadingHTTPServer((host, port), RpcHandler)


def analyze_query(ds: farm.Dataset, q: dict) -> dict:
    """Build the chart-ready JSON payload for the analyze endpoint."""
    date_range = None
    if "date_start" in q or "date_end" in q:
        if not ("date_start" in q and "date_end" in q):
            raise ValueError("date_start and date_end must be given together")
        date_range = (datetime.date.fromisoformat(q["date_start"]),
                      datetime.date.fromisoformat(q["date_end"]))
    f = analytics.Filter(product_type=q.get("product_type"),
                         location=q.get("location"),
                         farm_type=q.get("farm_type"),
                         date_range=date_range)
    chart = q.get("chart", "timeseries")
    out = {"chart": chart, "summary": analytics.summary(ds, f)}
    if chart == "timeseries":
        series = analytics.yield_over_time(ds, f, q.get("bucket", "month"))
        out["series"] = [{"bucket_start": d.isoformat(), "value": v} for d, v in series]
    elif chart == "scatter":
        groups = analytics.yield_vs_resource(ds, f, q.get("resource", "water_l"),
                                             q.get("group_by", "farm_type"))
        out["groups"] = {
            label: {"points": [[x, y] for x, y in g["points"]],
                    "fit": None if g["fit"] is None else {
                        "slope": g["fit"].slope, "intercept": g["fit"].intercept,
                        "r2": g["fit"].r2}}
            for label, g in groups.items()}
    else:
        raise ValueError(f"unknown chart {chart!r}")
    return out


# ---------------------------------------------------------------- gateway


def make_gateway_server(gw: Gateway, host: str = "127.0.0.1",
                        port: int = 8080) -> ThreadingHTTPServer:
    class GatewayHandler(_JsonHandler):
        def do_GET(self):
            path = urlparse(self.path).path
            if path == "/healthz":
                self._respond(200, b"ok", "text/plain; charset=utf-8")
                return
            if not path.startswith("/ipfs/"):
                self._respond(404, b"not found\n", "text/plain; charset=utf-8")
                return
            status, media_type, body = gw.resolve(path)
            extra = {}
            if status in (200, 404):
                extra["X-Content-Cid"] = path[len("/ipfs/"):]
            self._respond(status, body, media_type, extra)

    return ThreadingHTTPServer((host, port), GatewayHandler)


# ---------------------------------------------------------------- pinning


def make_pinning_server(svc: PinningService, host: str = "127.0.0.1",
                        port: int = 9097,
                        lock: threading.Lock | None = None) -> ThreadingHTTPServer:
    lock = lock or threading.Lock()

    class PinningHandler(_JsonHandler):
        def _token(self) -> str:
            auth = self.headers.get("Authorization", "")
            if not auth.startswith("Bearer "):
                raise AuthError("missing bearer token")
            return auth[len("Bearer "):]

        def do_POST(self):
            path = urlparse(self.path).path
            if path == "/keys":
                creds = svc.issue_credentials()
                self._json(201, {"api_key": creds.api_key,
                                 "api_secret": creds.api_secret,
                                 "jwt": svc.issue_jwt(creds)})
            elif path == "/pinning/pinByHash":
                self._pin_by_hash()
            else:
                self._json(404, {"error": "unknown endpoint"})

        def _pin_by_hash(self):
            try:
                token = self._token()
                body = json.loads(self._body() or b"{}")
                cid = parse_cid(body.get("hashToPin", ""))
            except AuthError as e:
                self._json(401, {"error": str(e)})
                return
            except (ValueError, CidError) as e:
                self._json(400, {"error": str(e)})
                return
            try:
                with lock:
                    entry = svc.pin_by_hash(token, cid)
            except AuthError as e:
                self._json(401, {"error": str(e)})
                return
            except NotFoundAnywhere:
                self._json(404, {"error": f"content not found: {cid.text}",
                                 "status": "failed"})
                return
            self._json(200, {"cid": entry.cid.text, "status": entry.status})

        def do_DELETE(self):
            path = urlparse(self.path).path
            if not path.startswith("/pinning/unpin/"):
                self._json(404, {"error": "unknown endpoint"})
                return
            try:
                token = self._token()
                cid = parse_cid(path[len("/pinning/unpin/"):])
            except AuthError as e:
                self._json(401, {"error": str(e)})
                return
            except CidError as e:
                self._json(400, {"error": str(e)})
                return
            try:
                with lock:
                    svc.unpin(token, cid)
            except AuthError as e:
                self._json(401, {"error": str(e)})
                return
            except NotOwner as e:
                self._json(403, {"error": str(e)})
                return
            except KeyError:
                self._json(404, {"error": f"no pin for {cid.text}"})
                return
            self._json(200, {"cid": cid.text, "status": "unpinned"})

        def do_GET(self):
            if urlparse(self.path).path != "/pinning/pinList":
                self._json(404, {"error": "unknown endpoint"})
                return
            try:
                token = self._token()
                with lock:
                    entries = svc.list_pins(token)
            except AuthError as e:
                self._json(401, {"error": str(e)})
                return
            self._json(200, {"rows": [{"cid": e.cid.text, "status": e.status,
                                       "pinned_at": e.pinned_at} for e in entries]})

    return ThreadingHTTPServer((host, port), PinningHandler)
