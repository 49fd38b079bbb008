"""Command-line client for the run / replay / compare pipeline.

The CLI is a thin HTTP client: by default it talks to the service
in-process over an ASGI transport, and with --server it targets a
running instance instead. File writing stays client-side so outputs
land next to the caller.

Verbosity comes from the RAILWARN_LOG_LEVEL environment variable
(DEBUG, INFO, WARNING, ERROR).
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import os
import sys
import time
from pathlib import Path

import httpx
import yaml

from . import __version__
from .kmlout import to_kmz

log = logging.getLogger("railwarn.cli")


class CliInputError(Exception):
    """Bad user input; message is ready to print."""


def _configure_logging() -> None:
    name = os.environ.get("RAILWARN_LOG_LEVEL", "WARNING").upper()
    level = getattr(logging, name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


async def _post_in_process(path: str, payload: dict) -> httpx.Response:
    from .service.app import app

    transport = httpx.ASGITransport(app=app)
    async with httpx.AsyncClient(
        transport=transport, base_url="http://railwarn.internal", timeout=None
    ) as client:
        return await client.post(path, json=payload)


def _post(server: str | None, path: str, payload: dict) -> dict:
    if server:
        log.debug("POST %s%s", server, path)
        with httpx.Client(base_url=server, timeout=600.0) as client:
            resp = client.post(path, json=payload)
    else:
        log.debug("POST %s in-process", path)
        resp = asyncio.run(_post_in_process(path, payload))
    if resp.status_code == 400:
        errors = resp.json().get("errors", [])
        lines = [f"{e.get('field') or 'config'}: {e.get('message')}" for e in errors]
        raise CliInputError("invalid input:\n  " + "\n  ".join(lines))
    if resp.status_code == 422:
        detail = resp.json().get("detail", [])
        lines = [
            f"{'.'.join(str(x) for x in e.get('loc', []))}: {e.get('msg')}" for e in detail
        ]
        raise CliInputError("invalid request:\n  " + "\n  ".join(lines))
    resp.raise_for_status()
    return resp.json()


def _load_config(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise CliInputError(f"config file not found: {p}")
    try:
        data = yaml.safe_load(p.read_text())
    except yaml.YAMLError as e:
        raise CliInputError(f"config is not valid YAML: {e}") from e
    if not isinstance(data, dict):
        raise CliInputError("config root must be a mapping")
    return data


def _parse_position(raw: str, flag: str) -> list[float]:
    parts = raw.split(",")
    try:
        lat, lon = (float(x) for x in parts)
    except ValueError:
        raise CliInputError(f"{flag} must be LAT,LON, got {raw!r}") from None
    return [lat, lon]


def _write_outputs(out_dir: Path, files: dict, kmz: bool) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    p = out_dir / "packets.csv"
    p.write_text(files["packets_csv"])
    written.append(p)
    if kmz:
        p = out_dir / "trace.kmz"
        p.write_bytes(to_kmz(files["trace_kml"]))
    else:
        p = out_dir / "trace.kml"
        p.write_text(files["trace_kml"])
    written.append(p)
    if files.get("stats_json"):
        p = out_dir / "stats.json"
        p.write_text(files["stats_json"])
        written.append(p)
    return written


def _print_warnings(warnings: list[str]) -> None:
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)


def _fmt(value: float | None, fmt: str) -> str:
    return "-" if value is None else format(value, fmt)


def _print_stats_table(stats: dict) -> None:
    print(f"{'receiver':<12}{'attempts':>9}{'received':>9}{'pdr':>8}"
          f"{'direct_pdr':>12}{'coverage_m':>12}")
    for r in stats.get("receivers", []):
        print(
            f"{r['receiver_id']:<12}{r['attempts']:>9}{r['received']:>9}"
            f"{r['pdr']:>8.3f}"
            f"{_fmt(r.get('direct_pdr'), '.3f'):>12}"
            f"{_fmt(r.get('coverage_range_m'), '.1f'):>12}"
        )


def _finish(report: dict, out_dir: Path, args, started: float) -> int:
    _print_warnings(report.get("warnings", []))
    written = _write_outputs(out_dir, report["files"], getattr(args, "kmz", False))
    stats = report.get("stats")
    packets = stats["total_packets"] if stats else 0
    print(f"scenario {report['scenario_hash']}: {packets} packets")
    for p in written:
        print(f"wrote {p}")
    if args.summary and stats:
        _print_stats_table(stats)
    print(f"completed in {int((time.perf_counter() - started) * 1000)} ms")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    payload: dict = {"scenario": _load_config(args.config), "decimate": args.decimate}
    if args.seed is not None:
        payload["seed"] = args.seed
    report = _post(args.server, "/run", payload)
    return _finish(report, Path(args.out_dir), args, started)


def cmd_replay(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    csv_path = Path(args.packets_csv)
    if not csv_path.is_file():
        raise CliInputError(f"packet log not found: {csv_path}")
    payload: dict = {
        "packets_csv": csv_path.read_text(),
        "strict": args.strict,
        "decimate": args.decimate,
    }
    if args.nmea:
        nmea_path = Path(args.nmea)
        if not nmea_path.is_file():
            raise CliInputError(f"NMEA file not found: {nmea_path}")
        payload["nmea"] = nmea_path.read_text()
    if args.rsu_position:
        payload["rsu_position"] = _parse_position(args.rsu_position, "--rsu-position")
    if args.obu_position:
        payload["obu_position"] = _parse_position(args.obu_position, "--obu-position")
    report = _post(args.server, "/replay", payload)
    return _finish(report, Path(args.out_dir), args, started)


def cmd_compare(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    payload: dict = {
        "scenario": _load_config(args.config),
        "axis": args.axis,
        "decimate": args.decimate,
    }
    if args.seed is not None:
        payload["seed"] = args.seed
    report = _post(args.server, "/compare", payload)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    print(f"axis: {report['axis']}")
    for leg in report["legs"]:
        _print_warnings(leg.get("warnings", []))
        leg_dir = out_dir / leg["label"]
        written = _write_outputs(leg_dir, leg["files"], getattr(args, "kmz", False))
        stats = leg.get("stats")
        packets = stats["total_packets"] if stats else 0
        print(f"leg {leg['label']} ({leg['scenario_hash']}): {packets} packets")
        for p in written:
            print(f"wrote {p}")
        if args.summary and stats:
            _print_stats_table(stats)
    report_path = out_dir / "compare.json"
    report_path.write_text(
        json.dumps(
            {
                "axis": report["axis"],
                "legs": [
                    {
                        "label": leg["label"],
                        "scenario_hash": leg["scenario_hash"],
                        "stats": leg.get("stats"),
                    }
                    for leg in report["legs"]
                ],
                "deltas": report["deltas"],
            },
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    print(f"wrote {report_path}")
    if report["deltas"]:
        print(f"{'receiver':<12}{'pdr_delta':>12}{'coverage_delta_m':>18}")
        for rid, d in report["deltas"].items():
            print(
                f"{rid:<12}{d['pdr_delta']:>+12.3f}"
                f"{_fmt(d.get('coverage_range_delta_m'), '+.1f'):>18}"
            )
    print(f"completed in {int((time.perf_counter() - started) * 1000)} ms")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="railwarn",
        description="Simulate and analyze DSRC grade-crossing warning coverage.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("-o", "--out-dir", required=True, help="output directory")
        p.add_argument("--decimate", type=int, default=1,
                       help="keep every n-th packet in the KML")
        p.add_argument("--kmz", action="store_true",
                       help="write trace.kmz instead of trace.kml")
        p.add_argument("--summary", action="store_true",
                       help="print a per-receiver statistics table")
        p.add_argument("--server", help="base URL of a running service "
                                        "(default: in-process)")

    p = sub.add_parser("run", help="simulate a scenario config")
    p.add_argument("config", help="scenario YAML file")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("replay", help="rebuild outputs from a packet CSV log")
    p.add_argument("packets_csv", help="packet log CSV file")
    p.add_argument("--nmea", help="NMEA sentence file for position interpolation")
    p.add_argument("--strict", action="store_true",
                   help="fail on any malformed log row or sentence")
    p.add_argument("--rsu-position", help="LAT,LON of the roadside unit")
    p.add_argument("--obu-position", help="LAT,LON of the vehicle unit")
    common(p)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("compare", help="run a paired comparison on one axis")
    p.add_argument("config", help="scenario YAML file")
    p.add_argument("--axis", required=True, choices=["antenna", "relay", "power"])
    p.add_argument("--seed", type=int, help="override the scenario seed")
    common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliInputError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except httpx.HTTPError as e:
        print(f"error: service request failed: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
