"""Output assembly shared by the HTTP service and the CLI.

Each entry point turns inputs into an in-memory bundle of the three
artifacts (packet CSV, trace KML, stats JSON) plus warnings, leaving all
filesystem and transport concerns to the caller.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .exceptions import EmptyLogError
from .geo import GeoPoint
from .ingest import parse_nmea_file, parse_packet_log, replay, write_packet_csv
from .kmlout import kml_for_log
from .scenario import Scenario, compare_legs
from .sim import LogStats, SimLog, compute_stats, run, stats_to_dict


@dataclass(frozen=True)
class RunOutputs:
    """One run's artifacts; stats are absent when there were no packets."""

    scenario_hash: str
    stats: LogStats | None
    packets_csv: str
    trace_kml: str
    stats_json: str | None
    warnings: tuple[str, ...]


def _outputs_for_log(log: SimLog, decimate: int, extra_warnings: list[str]) -> RunOutputs:
    warnings = list(extra_warnings)
    csv_text = write_packet_csv(log)
    kml_text = kml_for_log(log, decimate=decimate)
    if not log.fates:
        warnings.append("no packets to render; KML contains unit markers only")
    stats = None
    stats_json = None
    try:
        stats = compute_stats(log)
        stats_json = json.dumps(
            {"scenario_hash": log.scenario_hash, **stats_to_dict(stats)},
            indent=2,
            sort_keys=True,
        ) + "\n"
    except EmptyLogError as e:
        warnings.append(f"stats suppressed: {e}")
    return RunOutputs(
        scenario_hash=log.scenario_hash,
        stats=stats,
        packets_csv=csv_text,
        trace_kml=kml_text,
        stats_json=stats_json,
        warnings=tuple(warnings),
    )


def run_outputs(sc: Scenario, decimate: int = 1) -> RunOutputs:
    """Simulate a scenario and assemble its artifacts."""
    return _outputs_for_log(run(sc), decimate, [])


def replay_outputs(
    packets_csv: str,
    nmea_text: str | None = None,
    strict: bool = False,
    rsu_position: GeoPoint | None = None,
    obu_position: GeoPoint | None = None,
    decimate: int = 1,
) -> RunOutputs:
    """Rebuild artifacts from a field log instead of a simulation."""
    warnings: list[str] = []
    records, row_errors = parse_packet_log(packets_csv, strict=strict)
    warnings.extend(row_errors)
    fixes = None
    if nmea_text is not None:
        fixes, problems = parse_nmea_file(nmea_text.splitlines(), strict=strict)
        warnings.extend(problems)
    log = replay(records, fixes, rsu_position=rsu_position, obu_position=obu_position)
    return _outputs_for_log(log, decimate, warnings)


@dataclass(frozen=True)
class CompareOutputs:
    """Two runs differing on one axis, plus their per-receiver deltas."""

    axis: str
    legs: tuple[tuple[str, RunOutputs], ...]
    deltas: dict[str, dict[str, float | None]]
    report_json: str


def compare_outputs(sc: Scenario, axis: str, decimate: int = 1) -> CompareOutputs:
    """Run the two legs of a comparison on a shared seed and diff them.

    Deltas are leg A minus leg B (array vs omni, relay on vs off,
    23 dBm vs 11 dBm).
    """
    (label_a, sc_a), (label_b, sc_b) = compare_legs(sc, axis)
    out_a = run_outputs(sc_a, decimate)
    out_b = run_outputs(sc_b, decimate)

    deltas: dict[str, dict[str, float | None]] = {}
    if out_a.stats is not None and out_b.stats is not None:
        by_id_b = {r.receiver_id: r for r in out_b.stats.receivers}
        for ra in out_a.stats.receivers:
            rb = by_id_b.get(ra.receiver_id)
            if rb is None:
                continue
            cov_delta = None
            if ra.coverage_range_m is not None and rb.coverage_range_m is not None:
                cov_delta = ra.coverage_range_m - rb.coverage_range_m
            deltas[ra.receiver_id] = {
                "pdr_delta": ra.pdr - rb.pdr,
                "coverage_range_delta_m": cov_delta,
            }

    report = {
        "axis": axis,
        "legs": [
            {
                "label": label,
                "scenario_hash": out.scenario_hash,
                "stats": stats_to_dict(out.stats) if out.stats else None,
            }
            for label, out in [(label_a, out_a), (label_b, out_b)]
        ],
        "deltas": deltas,
    }
    return CompareOutputs(
        axis=axis,
        legs=((label_a, out_a), (label_b, out_b)),
        deltas=deltas,
        report_json=json.dumps(report, indent=2, sort_keys=True) + "\n",
    )
