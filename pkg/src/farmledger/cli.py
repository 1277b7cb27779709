"""Operator command line: daemon, content ops, farm data, pinning, simulations.

Machine-readable output goes to stdout as JSON; diagnostics to stderr.
Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import base64
import csv
import json
import sys
import threading
import urllib.error
import urllib.request

from .cid import parse_cid, CidError

DEFAULT_CONFIG = {
    "listen": "127.0.0.1:5001",
    "gateway_port": "8080",
    "pinsvc_port": "9097",
    "gc_ttl_hours": "12",
    "visualizer_base": "http://127.0.0.1:8080",
    "peers": "8",
}


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def load_config(path: str | None) -> dict:
    cfg = dict(DEFAULT_CONFIG)
    if path:
        with open(path) as f:
            for line in f:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise CliError(f"bad config line: {line!r}")
                key, value = line.split("=", 1)
                cfg[key.strip()] = value.strip()
    return cfg


def _http(method: str, url: str, data: bytes | None = None,
          headers: dict | None = None) -> tuple[int, bytes]:
    req = urllib.request.Request(url, data=data, method=method,
                                 headers=headers or {})
    try:
        with urllib.request.urlopen(req) as resp:
            return resp.status, resp.read()
    except urllib.error.HTTPError as e:
        return e.code, e.read()
    except urllib.error.URLError as e:
        raise CliError(f"cannot reach {url}: {e.reason}") from None


def _api(args) -> str:
    return args.api.rstrip("/")


# ----------------------------------------------------------------- commands


def cmd_daemon(args) -> int:
    from .gateway import Gateway
    from .httpapi import make_rpc_server, make_gateway_server, make_pinning_server
    from .pinsvc import PinningService
    from .simnet import Simulation, SimConfig

    cfg = load_config(args.config)
    host, port = cfg["listen"].rsplit(":", 1)
    gc_ttl = int(float(cfg["gc_ttl_hours"]) * 3600 * 1000)
    peers = int(cfg["peers"])

    sim = Simulation.build(SimConfig(node_count=max(1, peers), seed=0, gc_ttl=gc_ttl))
    node = sim.nodes[0]
    lock = threading.Lock()

    rpc = make_rpc_server(node, host, int(port),
                          visualizer_base=cfg["visualizer_base"], lock=lock)
    gw = make_gateway_server(Gateway(node, lock=lock), host, int(cfg["gateway_port"]))
    pin_node = sim.nodes[min(1, peers - 1)]
    pin_node.role.is_server = True
    pinsvc = make_pinning_server(PinningService(pin_node), host,
                                 int(cfg["pinsvc_port"]), lock=lock)

    print(json.dumps({"peer_id": node.peer_id.text, "multiaddr": node.addr.render(),
                      "rpc": f"http://{host}:{port}",
                      "gateway": f"http://{host}:{cfg['gateway_port']}",
                      "pinsvc": f"http://{host}:{cfg['pinsvc_port']}"}))
    sys.stdout.flush()
    threads = [threading.Thread(target=s.serve_forever, daemon=True)
               for s in (rpc, gw, pinsvc)]
    for t in threads:
        t.start()
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        pass
    finally:
        for s in (rpc, gw, pinsvc):
            s.shutdown()
    return 0


def cmd_add(args) -> int:
    with open(args.file, "rb") as f:
        data = f.read()
    status, body = _http("POST", f"{_api(args)}/api/v0/add", data)
    if status != 200:
        raise CliError(body.decode())
    print(json.loads(body)["cid"])
    return 0


def cmd_cat(args) -> int:
    cid = parse_cid(args.cid)
    status, body = _http("GET", f"{_api(args)}/api/v0/cat?arg={cid.text}")
    if status != 200:
        raise CliError(body.decode())
    sys.stdout.buffer.write(body)
    return 0


def cmd_id(args) -> int:
    status, body = _http("GET", f"{_api(args)}/api/v0/id")
    if status != 200:
        raise CliError(body.decode())
    print(body.decode())
    return 0


def cmd_pin_add(args) -> int:
    cid = parse_cid(args.cid)
    status, body = _http("POST", f"{_api(args)}/api/v0/pin/add?arg={cid.text}")
    if status != 200:
        raise CliError(body.decode())
    print(body.decode())
    return 0


def cmd_pin_rm(args) -> int:
    cid = parse_cid(args.cid)
    status, body = _http("POST", f"{_api(args)}/api/v0/pin/rm?arg={cid.text}")
    if status != 200:
        raise CliError(body.decode())
    print(body.decode())
    return 0


def cmd_pin_remote(args) -> int:
    cid = parse_cid(args.cid)
    status, body = _http("POST", f"{args.url.rstrip('/')}/pinning/pinByHash",
                         json.dumps({"hashToPin": cid.text}).encode(),
                         {"Authorization": f"Bearer {args.jwt}",
                          "Content-Type": "application/json"})
    if status != 200:
        raise CliError(body.decode())
    print(body.decode())
    return 0


def cmd_farm_upload(args) -> int:
    with open(args.csv, "rb") as f:
        data = f.read()
    status, body = _http("POST", f"{_api(args)}/api/v0/farm/upload", data)
    if status != 200:
        raise CliError(body.decode())
    receipt = json.loads(body)
    if args.qr_out:
        with open(args.qr_out, "wb") as f:
            f.write(base64.b64decode(receipt["qr_png"]))
        receipt["qr_png"] = args.qr_out
    print(json.dumps(receipt))
    return 0


def cmd_farm_analyze(args) -> int:
    params = [f"cid={args.cid}", f"chart={args.chart}"]
    for key in ("resource", "group_by", "bucket", "product_type", "location", "farm_type"):
        value = getattr(args, key)
        if value:
            params.append(f"{key}={value}")
    status, body = _http("GET", f"{_api(args)}/api/v0/farm/analyze?" + "&".join(params))
    if status != 200:
        raise CliError(body.decode())
    payload = json.loads(body)
    if args.svg:
        with open(args.svg, "w") as f:
            f.write(render_svg(payload))
        print(json.dumps(dict(payload, svg=args.svg)))
    else:
        print(json.dumps(payload))
    return 0


def cmd_pinsvc_serve(args) -> int:
    from .httpapi import make_pinning_server
    from .pinsvc import PinningService
    from .simnet import Simulation, SimConfig

    sim = Simulation.build(SimConfig(node_count=1, seed=0))
    sim.nodes[0].role.is_server = True
    server = make_pinning_server(PinningService(sim.nodes[0]), "127.0.0.1", args.port)
    print(json.dumps({"pinsvc": f"http://127.0.0.1:{args.port}"}))
    sys.stdout.flush()
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


def cmd_pinsvc_keygen(args) -> int:
    status, body = _http("POST", f"{args.url.rstrip('/')}/keys", b"")
    if status != 201:
        raise CliError(body.decode())
    print(body.decode())
    return 0


def cmd_sim_run(args) -> int:
    from .simnet import standard_scenario

    sim, _root, summary = standard_scenario(args.nodes, args.seed, args.duration)
    if args.bandwidth_csv:
        with open(args.bandwidth_csv, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["bucket_start_s", "bytes_in", "bytes_out"])
            for row in sim.bandwidth_rows():
                w.writerow(row)
    print(json.dumps(summary))
    return 0


# ----------------------------------------------------------------- svg


def render_svg(payload: dict, width: int = 640, height: int = 400) -> str:
    """Line chart for timeseries payloads, grouped scatter for scatter payloads."""
    pad = 40
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>']

    def scale(values, lo_px, hi_px):
        lo, hi = min(values), max(values)
        span = (hi - lo) or 1.0
        return lambda v: lo_px + (v - lo) / span * (hi_px - lo_px)

    if payload["chart"] == "timeseries" and payload.get("series"):
        pts = [(i, p["value"]) for i, p in enumerate(payload["series"])]
        sx = scale([p[0] for p in pts], pad, width - pad)
        sy = scale([p[1] for p in pts], height - pad, pad)
        path = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in pts)
        parts.append(f'<polyline points="{path}" fill="none" stroke="#2a7" stroke-width="2"/>')
    elif payload["chart"] == "scatter" and payload.get("groups"):
        colors = ["#2a7", "#d43", "#36b", "#b80", "#849", "#087"]
        all_pts = [p for g in payload["groups"].values() for p in g["points"]]
        if all_pts:
            sx = scale([p[0] for p in all_pts], pad, width - pad)
            sy = scale([p[1] for p in all_pts], height - pad, pad)
            for i, (label, g) in enumerate(sorted(payload["groups"].items())):
                color = colors[i % len(colors)]
                for x, y in g["points"]:
                    parts.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3" '
                                 f'fill="{color}" opacity="0.7"/>')
                fit = g.get("fit")
                if fit:
                    x0 = min(p[0] for p in g["points"])
                    x1 = max(p[0] for p in g["points"])
                    y0 = fit["slope"] * x0 + fit["intercept"]
                    y1 = fit["slope"] * x1 + fit["intercept"]
                    parts.append(f'<line x1="{sx(x0):.1f}" y1="{sy(y0):.1f}" '
                                 f'x2="{sx(x1):.1f}" y2="{sy(y1):.1f}" '
                                 f'stroke="{color}" stroke-dasharray="4 2"/>')
                parts.append(f'<text x="{pad}" y="{pad + 14 * i}" fill="{color}" '
                             f'font-size="12">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts)


# ----------------------------------------------------------------- parser


def build_parser() -> _Parser:
    p = _Parser(prog="farmledger")
    p.add_argument("--api", default="http://127.0.0.1:5001",
                   help="node RPC API base URL")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("daemon", help="run node + RPC API + gateway + pinning service")
    d.add_argument("--config", default=None)
    d.set_defaults(fn=cmd_daemon)

    a = sub.add_parser("add", help="add a file, print its cid")
    a.add_argument("file")
    a.set_defaults(fn=cmd_add)

    c = sub.add_parser("cat", help="write content for a cid to stdout")
    c.add_argument("cid")
    c.set_defaults(fn=cmd_cat)

    i = sub.add_parser("id", help="show peer id and multiaddress")
    i.set_defaults(fn=cmd_id)

    pin = sub.add_parser("pin", help="pin management")
    pin_sub = pin.add_subparsers(dest="pin_command", required=True)
    pa = pin_sub.add_parser("add")
    pa.add_argument("cid")
    pa.set_defaults(fn=cmd_pin_add)
    pr = pin_sub.add_parser("rm")
    pr.add_argument("cid")
    pr.set_defaults(fn=cmd_pin_rm)
    prm = pin_sub.add_parser("remote", help="pin on a remote pinning service")
    prm.add_argument("cid")
    prm.add_argument("--jwt", required=True)
    prm.add_argument("--url", default="http://127.0.0.1:9097")
    prm.set_defaults(fn=cmd_pin_remote)

    fm = sub.add_parser("farm", help="farm data operations")
    fm_sub = fm.add_subparsers(dest="farm_command", required=True)
    fu = fm_sub.add_parser("upload")
    fu.add_argument("csv")
    fu.add_argument("--visualizer-base", default=None,
                    help="unused client-side; the daemon's config decides the link base")
    fu.add_argument("--qr-out", default=None, help="write the QR PNG to this path")
    fu.set_defaults(fn=cmd_farm_upload)
    fa = fm_sub.add_parser("analyze")
    fa.add_argument("cid")
    fa.add_argument("--chart", choices=["timeseries", "scatter"], default="timeseries")
    fa.add_argument("--resource", default=None)
    fa.add_argument("--group-by", dest="group_by", default=None)
    fa.add_argument("--bucket", default=None)
    fa.add_argument("--product-type", dest="product_type", default=None)
    fa.add_argument("--location", default=None)
    fa.add_argument("--farm-type", dest="farm_type", default=None)
    fa.add_argument("--svg", default=None)
    fa.set_defaults(fn=cmd_farm_analyze)

    ps = sub.add_parser("pinsvc", help="pinning service operations")
    ps_sub = ps.add_subparsers(dest="pinsvc_command", required=True)
    pss = ps_sub.add_parser("serve")
    pss.add_argument("--port", type=int, default=9097)
    pss.set_defaults(fn=cmd_pinsvc_serve)
    psk = ps_sub.add_parser("keygen")
    psk.add_argument("--url", default="http://127.0.0.1:9097")
    psk.set_defaults(fn=cmd_pinsvc_keygen)

    sm = sub.add_parser("sim", help="deterministic network simulations")
    sm_sub = sm.add_subparsers(dest="sim_command", required=True)
    sr = sm_sub.add_parser("run")
    sr.add_argument("--nodes", type=int, required=True)
    sr.add_argument("--seed", type=int, required=True)
    sr.add_argument("--duration", type=int, default=1, help="simulated hours")
    sr.add_argument("--bandwidth-csv", default=None)
    sr.set_defaults(fn=cmd_sim_run)

    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 1
    try:
        return args.fn(args)
    except (CliError, CidError, OSError) as e:
        print(json.dumps({"error": str(e)}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
