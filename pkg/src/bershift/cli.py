"""Thin command-line client for the service.

By default the CLI talks to an in-process instance of the FastAPI app over
an ASGI transport, so no server needs to run; --server points it at a live
deployment instead.  File I/O (family JSON, reports, CSV) lives here, the
numerical work lives behind the endpoints.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx


def _client(server: str | None):
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    # in-process: drive the ASGI app through the synchronous test transport
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

        from .service.app import app

        return TestClient(app)


def _post(client: httpx.Client, path: str, payload: dict) -> dict:
    resp = client.post(path, json=payload)
    if resp.status_code != 200:
        detail = resp.json().get("detail", resp.text)
        raise SystemExit(f"error from {path}: {detail}")
    return resp.json()


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True)


def _write(out: str | None, text: str):
    if out is None or out == "-":
        sys.stdout.write(text + ("\n" if not text.endswith("\n") else ""))
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)


def _parse_params(pairs) -> dict:
    out = {}
    for pair in pairs or []:
        key, _, val = pair.partition("=")
        try:
            out[key] = json.loads(val)
        except json.JSONDecodeError:
            out[key] = val
    return out


def _report_to_csv(report: dict) -> str:
    # flat key,value dump for simple post-processing
    lines = ["key,value"]

    def walk(prefix, obj):
        if isinstance(obj, dict):
            for k in sorted(obj):
                walk(f"{prefix}.{k}" if prefix else str(k), obj[k])
        elif isinstance(obj, list):
            for i, v in enumerate(obj):
                walk(f"{prefix}[{i}]", v)
        else:
            lines.append(f"{prefix},{obj}")

    walk("", report)
    return "\n".join(lines) + "\n"


GLOBAL_DEFAULTS = {"server": None, "seed": 20240601, "threads": 1,
                   "out_dir": None, "format": "json"}


def main(argv=None) -> int:
    # SUPPRESS keeps subparser defaults from clobbering globals given before
    # the subcommand; the fallbacks are applied after parsing
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--server", default=argparse.SUPPRESS,
                        help="service URL (default: in-process)")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out-dir", default=argparse.SUPPRESS)
    common.add_argument("--format", choices=("json", "csv"), default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="bershift", parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    p_con = add("construct", help="build a named family, write its JSON")
    p_con.add_argument("name")
    p_con.add_argument("--param", action="append", help="key=json-value")
    p_con.add_argument("--out", default="-")

    p_cls = add("classify", help="run the classification pipeline")
    p_cls.add_argument("--family", required=True)
    p_cls.add_argument("--config", default=None)
    p_cls.add_argument("--out", default="-")

    p_sim = add("simulate", help="Monte Carlo statistics")
    p_sim.add_argument("--family", required=True)
    p_sim.add_argument("--stat", required=True,
                       choices=("lattice", "recurrence", "flip", "permflow"))
    p_sim.add_argument("--windows", default="4,8,16,32")
    p_sim.add_argument("--samples", type=int, default=1000)
    p_sim.add_argument("--param", action="append")
    p_sim.add_argument("--out", default="-")

    p_tf = add("tailflow", help="tail-boundary walk criteria")
    p_tf.add_argument("--spec", required=True, help="walk spec JSON file or inline JSON")
    p_tf.add_argument("--criterion", required=True,
                      choices=("semifinite", "eigenvalue", "ore", "walk"))
    p_tf.add_argument("--param", action="append")
    p_tf.add_argument("--out", default="-")

    p_suite = add("suite", help="run a scenario manifest")
    p_suite.add_argument("manifest", help="bundled name (paper-examples) or JSON file")

    args = parser.parse_args(argv)
    for key, val in GLOBAL_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, val)
    client = _client(args.server)

    if args.command == "construct":
        res = _post(client, "/construct", {"name": args.name,
                                           "params": _parse_params(args.param)})
        _write(args.out, _canonical(res["family"]) if args.format == "json"
               else _report_to_csv(res))
        return 0

    if args.command == "classify":
        family = json.loads(Path(args.family).read_text())
        config = json.loads(Path(args.config).read_text()) if args.config else {}
        config.setdefault("seed", args.seed)
        config.setdefault("threads", args.threads)
        res = _post(client, "/classify", {"family": family, "config": config})
        report = res["report"]
        _write(args.out, _canonical(report) if args.format == "json"
               else _report_to_csv(report))
        return 0

    if args.command == "simulate":
        family = json.loads(Path(args.family).read_text())
        windows = [int(x) for x in args.windows.split(",") if x]
        res = _post(client, "/simulate", {
            "family": family, "stat": args.stat, "windows": windows,
            "samples": args.samples, "seed": args.seed, "threads": args.threads,
            "params": _parse_params(args.param),
        })
        report = res["report"]
        _write(args.out, _canonical(report) if args.format == "json"
               else _report_to_csv(report))
        return 0

    if args.command == "tailflow":
        raw = args.spec
        spec = json.loads(Path(raw).read_text()) if Path(raw).exists() else json.loads(raw)
        res = _post(client, "/tailflow", {"spec": spec, "criterion": args.criterion,
                                          "params": _parse_params(args.param)})
        report = res["report"]
        _write(args.out, _canonical(report) if args.format == "json"
               else _report_to_csv(report))
        return 0

    if args.command == "suite":
        name = args.manifest
        manifest = name if name == "paper-examples" else json.loads(Path(name).read_text())
        res = _post(client, "/suite", {"manifest": manifest, "seed": args.seed})
        out_dir = Path(args.out_dir) if args.out_dir else None
        if out_dir:
            out_dir.mkdir(parents=True, exist_ok=True)
            for scenario, report in res["reports"].items():
                (out_dir / f"{scenario}.report.json").write_text(_canonical(report))
        for row in res["results"]:
            status = "PASS" if row["ok"] else "FAIL"
            print(f"[{status}] {row['name']}: {row['verdict']}")
        return 0 if res["ok"] else 1

    return 2


if __name__ == "__main__":
    raise SystemExit(main())
