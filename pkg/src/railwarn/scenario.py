"""Scenario configuration: schema, validation, canonical form, compare legs.

A scenario is one track with a crossing, one transmitting train unit, one
roadside unit at the crossing, and any number of vehicle units on roads.
Loading collects every validation problem before failing so a bad config
surfaces all its mistakes at once.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml

from .antenna import Antenna, LinearArrayAntenna, OmniAntenna
from .channel import (
    DEFAULT_SENSITIVITY_DBM,
    PathLossModel,
    PowerClass,
    Radio,
    ReceptionModel,
)
from .exceptions import RailwarnError, ScenarioError, ValidationIssue
from .geo import GeoPoint, Polyline
from .protocol import (
    DEFAULT_BROADCAST_PERIOD_MS,
    DEFAULT_CLEAR_MARGIN_M,
    DEFAULT_HOLD_TIME_MS,
)

COMPARE_AXES = ("antenna", "relay", "power")


@dataclass(frozen=True)
class TrainConfig:
    """The transmitting unit riding the track."""

    train_id: str
    initial_arclength_m: float
    speed_mps: float
    radio: Radio
    antenna: Antenna
    mount_offset_deg: float = 0.0


@dataclass(frozen=True)
class RsuConfig:
    """The fixed unit at the crossing; relays fresh warnings when enabled."""

    rsu_id: str
    position: GeoPoint
    radio: Radio
    antenna: Antenna
    relay_enabled: bool = True
    relay_delay_ms: int = 0
    boresight_deg: float = 0.0


@dataclass(frozen=True)
class ObuConfig:
    """A vehicle unit travelling (or parked) on one of the roads."""

    obu_id: str
    road_index: int
    initial_arclength_m: float
    speed_mps: float
    radio: Radio
    antenna: Antenna
    hold_time_ms: int = DEFAULT_HOLD_TIME_MS
    mount_offset_deg: float = 0.0


@dataclass(frozen=True)
class Scenario:
    name: str
    track: Polyline
    crossing_arclength_m: float
    roads: tuple[Polyline, ...]
    train: TrainConfig
    rsu: RsuConfig
    obus: tuple[ObuConfig, ...]
    path_loss: PathLossModel
    reception: ReceptionModel
    duration_ms: int
    seed: int
    timestep_ms: int = 100
    broadcast_period_ms: int = DEFAULT_BROADCAST_PERIOD_MS
    clear_margin_m: float = DEFAULT_CLEAR_MARGIN_M


class _Issues:
    """Accumulates validation problems keyed by config field path."""

    def __init__(self) -> None:
        self.items: list[ValidationIssue] = []

    def add(self, field: str, message: str) -> None:
        self.items.append(ValidationIssue(field=field, message=message))

    def raise_if_any(self) -> None:
        if self.items:
            raise ScenarioError(self.items)


def _num(data: dict, key: str, path: str, issues: _Issues, default=None, required=False):
    if key not in data or data[key] is None:
        if required:
            issues.add(f"{path}{key}", "required field missing")
            return None
        return default
    v = data[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        issues.add(f"{path}{key}", f"expected a number, got {type(v).__name__}")
        return None
    return v


def _int(data: dict, key: str, path: str, issues: _Issues, default=None, required=False):
    v = _num(data, key, path, issues, default, required)
    if v is None or v is default:
        return v
    if isinstance(v, float) and not v.is_integer():
        issues.add(f"{path}{key}", f"expected an integer, got {v}")
        return None
    return int(v)


def _str(data: dict, key: str, path: str, issues: _Issues, default=None, required=False):
    if key not in data or data[key] is None:
        if required:
            issues.add(f"{path}{key}", "required field missing")
            return None
        return default
    v = data[key]
    if not isinstance(v, str):
        issues.add(f"{path}{key}", f"expected a string, got {type(v).__name__}")
        return None
    return v


def _bool(data: dict, key: str, path: str, issues: _Issues, default=None):
    if key not in data or data[key] is None:
        return default
    v = data[key]
    if not isinstance(v, bool):
        issues.add(f"{path}{key}", f"expected a boolean, got {type(v).__name__}")
        return default
    return v


def _point(raw: Any, path: str, issues: _Issues) -> GeoPoint | None:
    """Accept [lat, lon], [lat, lon, alt], or {lat:, lon:, alt:}."""
    if isinstance(raw, dict):
        vals = [raw.get("lat"), raw.get("lon"), raw.get("alt", 0.0)]
    elif isinstance(raw, (list, tuple)) and len(raw) in (2, 3):
        vals = list(raw) + [0.0] * (3 - len(raw))
    else:
        issues.add(path, "expected [lat, lon] or {lat, lon, alt}")
        return None
    if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in vals):
        issues.add(path, "lat/lon/alt must be numbers")
        return None
    try:
        return GeoPoint(float(vals[0]), float(vals[1]), float(vals[2]))
    except RailwarnError as e:
        issues.add(path, str(e))
        return None


def _polyline(raw: Any, path: str, issues: _Issues) -> Polyline | None:
    if not isinstance(raw, (list, tuple)) or len(raw) < 2:
        issues.add(path, "expected a list of at least 2 [lat, lon] vertices")
        return None
    pts = []
    for i, v in enumerate(raw):
        p = _point(v, f"{path}[{i}]", issues)
        if p is None:
            return None
        pts.append(p)
    try:
        return Polyline(pts)
    except RailwarnError as e:
        issues.add(path, str(e))
        return None


def _radio(raw: Any, path: str, issues: _Issues, sensitivity: dict[str, float],
           default: Radio | None = None) -> Radio | None:
    if raw is None:
        if default is not None:
            return default
        issues.add(path, "required field missing")
        return None
    if not isinstance(raw, dict):
        issues.add(path, "expected a mapping")
        return None
    pc_name = _str(raw, "power_class", f"{path}.", issues, required=True)
    mcs = _str(raw, "mcs", f"{path}.", issues, default="MCS2")
    tx_power = _num(raw, "tx_power_dbm", f"{path}.", issues)
    override = _bool(raw, "allow_power_override", f"{path}.", issues, default=False)
    if pc_name is None or mcs is None:
        return None
    try:
        pc = PowerClass.parse(pc_name)
    except RailwarnError as e:
        issues.add(f"{path}.power_class", str(e))
        return None
    if tx_power is not None and tx_power != pc.value and not override:
        issues.add(
            f"{path}.tx_power_dbm",
            f"{tx_power} dBm conflicts with power class {pc_name} ({pc.value} dBm); "
            "set allow_power_override to use a non-standard power",
        )
        return None
    if mcs not in sensitivity:
        issues.add(f"{path}.mcs", f"MCS not in sensitivity table: {mcs!r}")
        return None
    return Radio(
        power_class=pc,
        mcs=mcs,
        sensitivity_dbm=sensitivity[mcs],
        tx_power_override_dbm=float(tx_power) if tx_power is not None and override else None,
    )


def _antenna(raw: Any, path: str, issues: _Issues, default: Antenna | None = None) -> Antenna | None:
    if raw is None:
        if default is not None:
            return default
        issues.add(path, "required field missing")
        return None
    if not isinstance(raw, dict):
        issues.add(path, "expected a mapping")
        return None
    kind = _str(raw, "kind", f"{path}.", issues, required=True)
    if kind is None:
        return None
    try:
        if kind == "omni":
            gain = _num(raw, "gain_dbi", f"{path}.", issues, default=0.0)
            return OmniAntenna(gain_dbi=float(gain)) if gain is not None else None
        if kind == "linear_array":
            n = _int(raw, "elements", f"{path}.", issues, required=True)
            g = _num(raw, "element_gain_dbi", f"{path}.", issues, required=True)
            d = _num(raw, "spacing_wavelengths", f"{path}.", issues, default=0.5)
            if n is None or g is None or d is None:
                return None
            return LinearArrayAntenna(
                elements=n, element_gain_dbi=float(g), spacing_wavelengths=float(d)
            )
    except RailwarnError as e:
        issues.add(path, str(e))
        return None
    issues.add(f"{path}.kind", f"unknown antenna kind {kind!r} (omni or linear_array)")
    return None


def _path_loss(raw: Any, path: str, issues: _Issues) -> PathLossModel | None:
    if raw is None:
        return PathLossModel()
    if not isinstance(raw, dict):
        issues.add(path, "expected a mapping")
        return None
    kind = _str(raw, "kind", f"{path}.", issues, default="free_space")
    exponent = _num(raw, "exponent", f"{path}.", issues, default=2.0)
    ref = _num(raw, "ref_distance_m", f"{path}.", issues, default=1.0)
    sigma = _num(raw, "shadow_sigma_db", f"{path}.", issues, default=0.0)
    freq = _num(raw, "frequency_hz", f"{path}.", issues, default=5.9e9)
    if None in (kind, exponent, ref, sigma, freq):
        return None
    if kind == "free_space":
        if exponent != 2.0:
            issues.add(f"{path}.exponent", "free_space model fixes the exponent at 2.0")
            return None
        if sigma != 0.0:
            issues.add(f"{path}.shadow_sigma_db", "free_space model has no shadowing")
            return None
    elif kind != "log_distance":
        issues.add(f"{path}.kind", f"unknown model kind {kind!r} (free_space or log_distance)")
        return None
    try:
        return PathLossModel(
            exponent=float(exponent),
            ref_distance_m=float(ref),
            shadow_sigma_db=float(sigma),
            frequency_hz=float(freq),
        )
    except RailwarnError as e:
        issues.add(path, str(e))
        return None


def scenario_from_dict(data: Any) -> Scenario:
    """Build and validate a Scenario, reporting every problem found."""
    issues = _Issues()
    if not isinstance(data, dict):
        issues.add("", "config root must be a mapping")
        issues.raise_if_any()

    name = _str(data, "name", "", issues, default="scenario")
    seed = _int(data, "seed", "", issues, default=0)
    duration = _int(data, "duration_ms", "", issues, required=True)
    timestep = _int(data, "timestep_ms", "", issues, default=100)
    period = _int(data, "broadcast_period_ms", "", issues, default=DEFAULT_BROADCAST_PERIOD_MS)
    margin = _num(data, "clear_margin_m", "", issues, default=DEFAULT_CLEAR_MARGIN_M)

    if duration is not None and duration < 0:
        issues.add("duration_ms", f"must be >= 0, got {duration}")
    if timestep is not None and timestep <= 0:
        issues.add("timestep_ms", f"must be > 0, got {timestep}")
    if period is not None and timestep is not None and timestep > 0 and period % timestep != 0:
        issues.add(
            "broadcast_period_ms",
            f"period {period} ms must be a multiple of timestep {timestep} ms",
        )
    if margin is not None and margin < 0:
        issues.add("clear_margin_m", f"must be >= 0, got {margin}")

    reception_name = _str(data, "reception", "", issues, default="hard")
    reception = None
    if reception_name is not None:
        try:
            reception = ReceptionModel(reception_name)
        except ValueError:
            issues.add("reception", f"unknown reception model {reception_name!r} (hard or soft)")

    sensitivity = dict(DEFAULT_SENSITIVITY_DBM)
    raw_sens = data.get("sensitivity_dbm")
    if raw_sens is not None:
        if not isinstance(raw_sens, dict):
            issues.add("sensitivity_dbm", "expected a mapping of MCS name to dBm")
        else:
            for k, v in raw_sens.items():
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    issues.add(f"sensitivity_dbm.{k}", f"expected a number, got {v!r}")
                else:
                    sensitivity[str(k)] = float(v)

    path_loss = _path_loss(data.get("path_loss"), "path_loss", issues)

    track = _polyline(data.get("track"), "track", issues)
    crossing = _num(data, "crossing_arclength_m", "", issues, required=True)
    if track is not None and crossing is not None:
        if not 0.0 <= crossing <= track.total_length_m:
            issues.add(
                "crossing_arclength_m",
                f"{crossing} outside track [0, {track.total_length_m:.3f}]",
            )

    roads: list[Polyline] = []
    raw_roads = data.get("roads", [])
    if not isinstance(raw_roads, list):
        issues.add("roads", "expected a list of polylines")
        raw_roads = []
    for i, rr in enumerate(raw_roads):
        r = _polyline(rr, f"roads[{i}]", issues)
        if r is not None:
            roads.append(r)

    # Train.
    train = None
    raw_train = data.get("train")
    if not isinstance(raw_train, dict):
        issues.add("train", "required mapping missing")
    else:
        tid = _str(raw_train, "id", "train.", issues, default="train")
        arc = _num(raw_train, "initial_arclength_m", "train.", issues, default=0.0)
        speed = _num(raw_train, "speed_mps", "train.", issues, required=True)
        offset = _num(raw_train, "mount_offset_deg", "train.", issues, default=0.0)
        radio = _radio(raw_train.get("radio"), "train.radio", issues, sensitivity)
        ant = _antenna(raw_train.get("antenna"), "train.antenna", issues)
        if speed is not None and speed < 0:
            issues.add("train.speed_mps", f"must be >= 0, got {speed}")
        if arc is not None and track is not None and not 0.0 <= arc <= track.total_length_m:
            issues.add(
                "train.initial_arclength_m",
                f"{arc} outside track [0, {track.total_length_m:.3f}]",
            )
        if None not in (tid, arc, speed, offset, radio, ant):
            train = TrainConfig(
                train_id=tid,
                initial_arclength_m=float(arc),
                speed_mps=float(speed),
                radio=radio,
                antenna=ant,
                mount_offset_deg=float(offset),
            )

    # RSU; radio and antenna fall back to the train's.
    rsu = None
    raw_rsu = data.get("rsu")
    if not isinstance(raw_rsu, dict):
        issues.add("rsu", "required mapping missing")
    else:
        rid = _str(raw_rsu, "id", "rsu.", issues, default="rsu")
        pos = _point(raw_rsu.get("position"), "rsu.position", issues) \
            if raw_rsu.get("position") is not None else None
        if raw_rsu.get("position") is None:
            issues.add("rsu.position", "required field missing")
        relay_on = _bool(raw_rsu, "relay_enabled", "rsu.", issues, default=True)
        delay = _int(raw_rsu, "relay_delay_ms", "rsu.", issues, default=0)
        boresight = _num(raw_rsu, "boresight_deg", "rsu.", issues, default=0.0)
        fallback_radio = train.radio if train is not None else None
        fallback_ant = train.antenna if train is not None else None
        radio = _radio(raw_rsu.get("radio"), "rsu.radio", issues, sensitivity, fallback_radio)
        ant = _antenna(raw_rsu.get("antenna"), "rsu.antenna", issues, fallback_ant)
        if delay is not None and delay < 0:
            issues.add("rsu.relay_delay_ms", f"must be >= 0, got {delay}")
        if delay is not None and timestep is not None and timestep > 0 and delay % timestep != 0:
            issues.add(
                "rsu.relay_delay_ms",
                f"delay {delay} ms must be a multiple of timestep {timestep} ms",
            )
        if None not in (rid, pos, radio, ant, delay, boresight):
            rsu = RsuConfig(
                rsu_id=rid,
                position=pos,
                radio=radio,
                antenna=ant,
                relay_enabled=bool(relay_on),
                relay_delay_ms=delay,
                boresight_deg=float(boresight),
            )

    # OBUs; radio falls back to the train's, antenna to a 0 dBi omni.
    obus: list[ObuConfig] = []
    raw_obus = data.get("obus", [])
    if not isinstance(raw_obus, list):
        issues.add("obus", "expected a list")
        raw_obus = []
    for i, ro in enumerate(raw_obus):
        p = f"obus[{i}]"
        if not isinstance(ro, dict):
            issues.add(p, "expected a mapping")
            continue
        oid = _str(ro, "id", f"{p}.", issues, default=f"obu{i}")
        ri = _int(ro, "road_index", f"{p}.", issues, default=0)
        arc = _num(ro, "initial_arclength_m", f"{p}.", issues, default=0.0)
        speed = _num(ro, "speed_mps", f"{p}.", issues, default=0.0)
        hold = _int(ro, "hold_time_ms", f"{p}.", issues, default=DEFAULT_HOLD_TIME_MS)
        offset = _num(ro, "mount_offset_deg", f"{p}.", issues, default=0.0)
        fallback_radio = train.radio if train is not None else None
        radio = _radio(ro.get("radio"), f"{p}.radio", issues, sensitivity, fallback_radio)
        ant = _antenna(ro.get("antenna"), f"{p}.antenna", issues, OmniAntenna(0.0))
        if ri is not None:
            if not raw_roads:
                issues.add(f"{p}.road_index", "scenario defines no roads")
            elif not 0 <= ri < len(raw_roads):
                issues.add(f"{p}.road_index", f"{ri} outside roads[0..{len(raw_roads) - 1}]")
            elif ri < len(roads) and arc is not None and \
                    not 0.0 <= arc <= roads[ri].total_length_m:
                issues.add(
                    f"{p}.initial_arclength_m",
                    f"{arc} outside road [0, {roads[ri].total_length_m:.3f}]",
                )
        if speed is not None and speed < 0:
            issues.add(f"{p}.speed_mps", f"must be >= 0, got {speed}")
        if hold is not None and hold < 0:
            issues.add(f"{p}.hold_time_ms", f"must be >= 0, got {hold}")
        if None not in (oid, ri, arc, speed, hold, offset, radio, ant):
            obus.append(
                ObuConfig(
                    obu_id=oid,
                    road_index=ri,
                    initial_arclength_m=float(arc),
                    speed_mps=float(speed),
                    radio=radio,
                    antenna=ant,
                    hold_time_ms=hold,
                    mount_offset_deg=float(offset),
                )
            )

    # Cross-cutting checks.
    ids = [u for u in [train.train_id if train else None, rsu.rsu_id if rsu else None]
           if u is not None] + [o.obu_id for o in obus]
    dupes = {u for u in ids if ids.count(u) > 1}
    if dupes:
        issues.add("", f"unit ids must be unique, duplicated: {sorted(dupes)}")

    issues.raise_if_any()
    return Scenario(
        name=name,
        track=track,
        crossing_arclength_m=float(crossing),
        roads=tuple(roads),
        train=train,
        rsu=rsu,
        obus=tuple(obus),
        path_loss=path_loss,
        reception=reception,
        duration_ms=duration,
        seed=seed,
        timestep_ms=timestep,
        broadcast_period_ms=period,
        clear_margin_m=float(margin),
    )


def load_scenario(path: str | Path) -> Scenario:
    """Load a YAML (or JSON) scenario file."""
    p = Path(path)
    if not p.is_file():
        raise ScenarioError([ValidationIssue("", f"config file not found: {p}")])
    try:
        data = yaml.safe_load(p.read_text())
    except yaml.YAMLError as e:
        raise ScenarioError([ValidationIssue("", f"config is not valid YAML: {e}")]) from e
    return scenario_from_dict(data)


def _antenna_to_dict(a: Antenna) -> dict:
    if isinstance(a, OmniAntenna):
        return {"kind": "omni", "gain_dbi": a.gain_dbi}
    return {
        "kind": "linear_array",
        "elements": a.elements,
        "element_gain_dbi": a.element_gain_dbi,
        "spacing_wavelengths": a.spacing_wavelengths,
    }


def _radio_to_dict(r: Radio) -> dict:
    d: dict[str, Any] = {
        "power_class": r.power_class.name.lower(),
        "mcs": r.mcs,
    }
    if r.tx_power_override_dbm is not None:
        d["tx_power_dbm"] = r.tx_power_override_dbm
        d["allow_power_override"] = True
    return d


def scenario_to_dict(sc: Scenario) -> dict:
    """Canonical plain-data form; feeds hashing and the service API."""
    return {
        "name": sc.name,
        "seed": sc.seed,
        "duration_ms": sc.duration_ms,
        "timestep_ms": sc.timestep_ms,
        "broadcast_period_ms": sc.broadcast_period_ms,
        "clear_margin_m": sc.clear_margin_m,
        "reception": sc.reception.value,
        "sensitivity_dbm": {
            mcs: radio.sensitivity_dbm
            for mcs, radio in sorted(
                {u.radio.mcs: u.radio for u in [sc.train, sc.rsu, *sc.obus]}.items()
            )
        },
        "path_loss": {
            "kind": "log_distance",
            "exponent": sc.path_loss.exponent,
            "ref_distance_m": sc.path_loss.ref_distance_m,
            "shadow_sigma_db": sc.path_loss.shadow_sigma_db,
            "frequency_hz": sc.path_loss.frequency_hz,
        },
        "track": [[p.lat, p.lon, p.alt] for p in sc.track.vertices],
        "crossing_arclength_m": sc.crossing_arclength_m,
        "roads": [[[p.lat, p.lon, p.alt] for p in r.vertices] for r in sc.roads],
        "train": {
            "id": sc.train.train_id,
            "initial_arclength_m": sc.train.initial_arclength_m,
            "speed_mps": sc.train.speed_mps,
            "mount_offset_deg": sc.train.mount_offset_deg,
            "radio": _radio_to_dict(sc.train.radio),
            "antenna": _antenna_to_dict(sc.train.antenna),
        },
        "rsu": {
            "id": sc.rsu.rsu_id,
            "position": [sc.rsu.position.lat, sc.rsu.position.lon, sc.rsu.position.alt],
            "relay_enabled": sc.rsu.relay_enabled,
            "relay_delay_ms": sc.rsu.relay_delay_ms,
            "boresight_deg": sc.rsu.boresight_deg,
            "radio": _radio_to_dict(sc.rsu.radio),
            "antenna": _antenna_to_dict(sc.rsu.antenna),
        },
        "obus": [
            {
                "id": o.obu_id,
                "road_index": o.road_index,
                "initial_arclength_m": o.initial_arclength_m,
                "speed_mps": o.speed_mps,
                "hold_time_ms": o.hold_time_ms,
                "mount_offset_deg": o.mount_offset_deg,
                "radio": _radio_to_dict(o.radio),
                "antenna": _antenna_to_dict(o.antenna),
            }
            for o in sc.obus
        ],
    }


def scenario_hash(sc: Scenario) -> str:
    """Stable short hash of the canonical scenario form."""
    blob = json.dumps(scenario_to_dict(sc), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def with_seed(sc: Scenario, seed: int) -> Scenario:
    return dataclasses.replace(sc, seed=seed)


def compare_legs(sc: Scenario, axis: str) -> tuple[tuple[str, Scenario], tuple[str, Scenario]]:
    """Derive the two scenarios a comparison runs, sharing the seed.

    antenna: configured array vs a single-element omni of the same gain.
    relay:   roadside relay on vs off.
    power:   every transmitter at 23 dBm vs 11 dBm.
    """
    if axis == "relay":
        on = dataclasses.replace(sc, rsu=dataclasses.replace(sc.rsu, relay_enabled=True))
        off = dataclasses.replace(sc, rsu=dataclasses.replace(sc.rsu, relay_enabled=False))
        return ("relay_on", on), ("relay_off", off)
    if axis == "power":
        def at(pc: PowerClass) -> Scenario:
            return dataclasses.replace(
                sc,
                train=dataclasses.replace(
                    sc.train, radio=dataclasses.replace(sc.train.radio, power_class=pc)
                ),
                rsu=dataclasses.replace(
                    sc.rsu, radio=dataclasses.replace(sc.rsu.radio, power_class=pc)
                ),
            )
        return ("public_safety_23dbm", at(PowerClass.PUBLIC_SAFETY)), (
            "private_11dbm", at(PowerClass.PRIVATE)
        )
    if axis == "antenna":
        ant = sc.train.antenna
        if not isinstance(ant, LinearArrayAntenna):
            raise ScenarioError(
                [ValidationIssue(
                    "train.antenna",
                    "antenna comparison needs a linear_array train antenna to contrast",
                )]
            )
        omni = OmniAntenna(gain_dbi=ant.element_gain_dbi)
        array_leg = sc
        omni_leg = dataclasses.replace(
            sc, train=dataclasses.replace(sc.train, antenna=omni)
        )
        return ("array", array_leg), ("omni", omni_leg)
    raise ScenarioError(
        [ValidationIssue("axis", f"unknown compare axis {axis!r}; one of {COMPARE_AXES}")]
    )
