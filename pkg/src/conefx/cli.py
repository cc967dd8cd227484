"""Command-line front end: a thin client of the pricing service.

Every command builds a request for the HTTP API and renders the response;
by default the app is served in-process, with ``--server URL`` the same
requests go to a remote instance.  Exit codes: 0 success, 1 domain failure
(bad model, no-arbitrage failure, insufficient endowment), 2 resource cap
exceeded, 3 internal verification or oracle mismatch.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

EXIT_CODES = {
    "invalid-model": 1,
    "na-failed": 1,
    "endowment-insufficient": 1,
    "enumeration-cap": 2,
    "piece-cap": 2,
    "verification-failed": 3,
    "oracle-mismatch": 3,
}


class _Client:
    def __init__(self, server: str | None):
        if server:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=600.0)
        else:
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import app

            self._client = TestClient(app)

    def post(self, path: str, payload: dict) -> dict:
        resp = self._client.post(path, json=payload)
        if resp.status_code == 200:
            return resp.json()
        try:
            detail = resp.json().get("detail")
        except Exception:
            detail = None
        if isinstance(detail, dict) and "code" in detail:
            print(f"error [{detail['code']}]: {detail['message']}", file=sys.stderr)
            raise SystemExit(EXIT_CODES.get(detail["code"], 1))
        print(f"error: HTTP {resp.status_code}: {resp.text}", file=sys.stderr)
        raise SystemExit(1)


def _load_model_doc(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error [invalid-model]: cannot read {path}: {exc}", file=sys.stderr)
        raise SystemExit(1)


def _write(path: str | None, text: str):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def cmd_check_na(args) -> int:
    client = _Client(args.server)
    out = client.post(
        "/check-na",
        {"model": _load_model_doc(args.model), "asset": args.asset, "oracle": args.oracle},
    )
    if out["holds"]:
        print(f"no-arbitrage holds (margin {out['margin']})")
        if args.verbose:
            print(_dump({"transitions": out["transitions"], "prices": out["prices"]}), end="")
        return 0
    print("no-arbitrage FAILS")
    return 1


def cmd_price(args) -> int:
    client = _Client(args.server)
    out = client.post(
        "/price",
        {
            "model": _load_model_doc(args.model),
            "side": args.side,
            "asset": args.asset,
            "convention": args.convention,
            "oracle": args.oracle,
            "cap": args.cap,
        },
    )
    suffix = "  [oracle checked]" if out["oracle_checked"] else ""
    print(f"{out['side']} (asset {out['asset']}): {out['exact']} ≈ {out['approx']}{suffix}")
    return 0


def cmd_hedge(args) -> int:
    client = _Client(args.server)
    out = client.post(
        "/hedge",
        {
            "model": _load_model_doc(args.model),
            "side": args.side,
            "asset": args.asset,
            "endowment": args.endowment,
        },
    )
    _write(args.out, _dump(out))
    if args.out:
        print(f"hedge written to {args.out} (endowment {out['endowment']}, verified)")
    return 0


def cmd_dual(args) -> int:
    client = _Client(args.server)
    out = client.post(
        "/dual",
        {"model": _load_model_doc(args.model), "side": args.side, "asset": args.asset},
    )
    _write(args.out, _dump(out))
    if args.out:
        print(f"dual certificate written to {args.out} (value {out['value']} = price)")
    return 0


def _export_csv(nodes: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["node", "family", "piece", "kind", "coords"])

    def rows_for(nid, family, body):
        if "marker" in body:
            writer.writerow([nid, family, "", body["marker"], ""])
            return
        if "pieces" in body:
            for idx, piece in enumerate(body["pieces"]):
                for v in piece.get("vertices", []):
                    writer.writerow([nid, family, idx, "vertex", ";".join(v)])
                for r in piece.get("rays", []):
                    writer.writerow([nid, family, idx, "ray", ";".join(r)])
            for entry in body.get("vertices", []):
                labels = []
                if entry.get("in_exercise"):
                    labels.append("exercise")
                if entry.get("in_continuation"):
                    labels.append("continuation")
                writer.writerow([nid, family, "+".join(labels), "union-vertex", ";".join(entry["point"])])
            return
        for v in body.get("vertices", []):
            writer.writerow([nid, family, "", "vertex", ";".join(v)])
        for r in body.get("rays", []):
            writer.writerow([nid, family, "", "ray", ";".join(r)])
        for v in body.get("dual_section", {}).get("vertices", []):
            writer.writerow([nid, family, "", "dual-vertex", ";".join(v)])
        for r in body.get("dual_section", {}).get("rays", []):
            writer.writerow([nid, family, "", "dual-ray", ";".join(r)])

    for nid in sorted(nodes):
        for family in sorted(nodes[nid]):
            rows_for(nid, family, nodes[nid][family])
    return buf.getvalue()


def cmd_export_sets(args) -> int:
    client = _Client(args.server)
    out = client.post(
        "/export-sets",
        {
            "model": _load_model_doc(args.model),
            "side": args.side,
            "asset": args.asset,
            "axis": args.axis,
            "convention": args.convention,
        },
    )
    if args.format == "json":
        _write(args.out, _dump(out))
    else:
        _write(args.out, _export_csv(out["nodes"]))
    if args.out:
        print(f"sets exported to {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("conefx.service:app", host=args.host, port=args.port)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="conefx",
        description="exact bid/ask option pricing on event trees with proportional transaction costs",
    )
    parser.add_argument("--server", help="URL of a running service (default: run in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, price_opts=True):
        p.add_argument("model", help="model JSON file")
        p.add_argument("--asset", type=int, help="1-based priced asset (default: last asset)")

    p = sub.add_parser("check-na", help="decide weak no-arbitrage and print a witness pair")
    common(p)
    p.add_argument("--oracle", action="store_true", help="cross-check with an arbitrage-search LP")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(fn=cmd_check_na)

    p = sub.add_parser("price", help="compute the exact ask or bid price")
    common(p)
    p.add_argument("--side", choices=["ask", "bid"], required=True)
    p.add_argument("--convention", choices=["standard", "interchanged"])
    p.add_argument("--oracle", action="store_true", help="assert exact equality with the LP oracle")
    p.add_argument("--cap", type=int, help="resource cap for enumeration/union growth")
    p.set_defaults(fn=cmd_price)

    p = sub.add_parser("hedge", help="construct and verify an optimal hedge")
    common(p)
    p.add_argument("--side", choices=["ask", "bid"], required=True)
    p.add_argument("--endowment", help="initial amount of the priced asset (default: the price)")
    p.add_argument("--out", help="write strategy JSON here")
    p.set_defaults(fn=cmd_hedge)

    p = sub.add_parser("dual", help="construct and verify the optimal dual certificate")
    common(p)
    p.add_argument("--side", choices=["ask", "bid"], required=True)
    p.add_argument("--out", help="write certificate JSON here")
    p.set_defaults(fn=cmd_dual)

    p = sub.add_parser("export-sets", help="export per-node set geometry for plotting")
    common(p)
    p.add_argument("--side", choices=["ask", "bid"], required=True)
    p.add_argument("--axis", type=int, help="1-based slicing axis for dual sections")
    p.add_argument("--convention", choices=["standard", "interchanged"])
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(fn=cmd_export_sets)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(fn=cmd_serve)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
