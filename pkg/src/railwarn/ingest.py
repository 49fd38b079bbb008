"""Field-log ingestion: NMEA 0183 GPS sentences and packet CSV records.

Replayed logs feed the same classification, statistics, and KML pipeline
as simulated ones. Parsers never raise anything but structured errors,
whatever the input bytes.
"""

from __future__ import annotations

import bisect
import hashlib
from dataclasses import dataclass
from typing import Iterable

from .exceptions import EmptyLogError, RailwarnError
from .geo import EnuVector, GeoPoint, from_enu, haversine_distance, to_enu
from .sim import PacketFate, Reception, SimLog

PACKET_CSV_HEADER = "seq,tx_time_ms,tx_lat,tx_lon,rsu_received,obu_received"

_BOOL_WORDS = {"0": False, "1": True, "false": False, "true": True}

MS_PER_DAY = 86_400_000


class IngestError(RailwarnError):
    """Malformed field log input."""


class NmeaChecksumError(IngestError):
    """Sentence checksum does not match its payload."""


class NmeaUnsupportedError(IngestError):
    """Valid sentence of a type this parser does not handle (skippable)."""


class NmeaParseError(IngestError):
    """Structurally broken sentence or field."""


@dataclass(frozen=True)
class GpsFix:
    """One GPS position sample."""

    time_ms: int  # since midnight UTC
    position: GeoPoint
    quality: int
    sentence_type: str  # GGA or RMC


def nmea_checksum(payload: str) -> int:
    """XOR of all character bytes between '$' and '*'."""
    c = 0
    for ch in payload:
        c ^= ord(ch)
    return c


def _parse_nmea_time(raw: str) -> int:
    if len(raw) < 6:
        raise NmeaParseError(f"parse error in time: {raw!r}")
    try:
        h, m = int(raw[0:2]), int(raw[2:4])
        s = float(raw[4:])
    except ValueError as e:
        raise NmeaParseError(f"parse error in time: {raw!r}") from e
    if not (0 <= h < 24 and 0 <= m < 60 and 0.0 <= s < 61.0):
        raise NmeaParseError(f"parse error in time: {raw!r} out of range")
    return round(((h * 60 + m) * 60 + s) * 1000) % MS_PER_DAY


def _dm_to_degrees(raw: str, hemi: str, field: str) -> float:
    """ddmm.mmmm (or dddmm.mmmm) plus hemisphere letter to signed degrees."""
    if not raw or not hemi:
        raise NmeaParseError(f"parse error in {field}: empty field")
    try:
        v = float(raw)
    except ValueError as e:
        raise NmeaParseError(f"parse error in {field}: {raw!r}") from e
    if v < 0:
        raise NmeaParseError(f"parse error in {field}: negative {raw!r}")
    deg = int(v // 100)
    minutes = v - deg * 100
    if minutes >= 60.0:
        raise NmeaParseError(f"parse error in {field}: minutes {minutes} >= 60")
    value = deg + minutes / 60.0
    if hemi in ("S", "W"):
        value = -value
    elif hemi not in ("N", "E"):
        raise NmeaParseError(f"parse error in {field}: hemisphere {hemi!r}")
    return value


def _float_field(raw: str, field: str, default: float | None = None) -> float:
    if raw == "":
        if default is not None:
            return default
        raise NmeaParseError(f"parse error in {field}: empty field")
    try:
        return float(raw)
    except ValueError as e:
        raise NmeaParseError(f"parse error in {field}: {raw!r}") from e


def parse_nmea_sentence(line: str) -> GpsFix:
    """Parse one GGA or RMC sentence, validating the *XX checksum."""
    s = line.strip()
    if not s.startswith("$"):
        raise NmeaParseError(f"parse error in sentence: missing '$' start: {s[:20]!r}")
    star = s.rfind("*")
    if star < 0 or len(s) < star + 3:
        raise NmeaParseError("parse error in checksum: missing '*XX' trailer")
    payload, stated = s[1:star], s[star + 1 : star + 3]
    try:
        stated_val = int(stated, 16)
    except ValueError as e:
        raise NmeaParseError(f"parse error in checksum: {stated!r} not hex") from e
    computed = nmea_checksum(payload)
    if computed != stated_val:
        raise NmeaChecksumError(
            f"checksum error: expected {computed:02X}, got {stated.upper()}"
        )
    fields = payload.split(",")
    ident = fields[0]
    if len(ident) < 5:
        raise NmeaParseError(f"parse error in sentence id: {ident!r}")
    kind = ident[-3:]
    if kind == "GGA":
        if len(fields) < 10:
            raise NmeaParseError(f"parse error in GGA: {len(fields)} fields < 10")
        t = _parse_nmea_time(fields[1])
        lat = _dm_to_degrees(fields[2], fields[3], "latitude")
        lon = _dm_to_degrees(fields[4], fields[5], "longitude")
        try:
            quality = int(fields[6]) if fields[6] else 0
        except ValueError as e:
            raise NmeaParseError(f"parse error in quality: {fields[6]!r}") from e
        alt = _float_field(fields[9], "altitude", default=0.0)
        try:
            pos = GeoPoint(lat, lon, alt)
        except RailwarnError as e:
            raise NmeaParseError(f"parse error in position: {e}") from e
        return GpsFix(time_ms=t, position=pos, quality=quality, sentence_type="GGA")
    if kind == "RMC":
        if len(fields) < 7:
            raise NmeaParseError(f"parse error in RMC: {len(fields)} fields < 7")
        t = _parse_nmea_time(fields[1])
        status = fields[2]
        if status not in ("A", "V"):
            raise NmeaParseError(f"parse error in status: {status!r}")
        lat = _dm_to_degrees(fields[3], fields[4], "latitude")
        lon = _dm_to_degrees(fields[5], fields[6], "longitude")
        try:
            pos = GeoPoint(lat, lon)
        except RailwarnError as e:
            raise NmeaParseError(f"parse error in position: {e}") from e
        return GpsFix(
            time_ms=t, position=pos, quality=1 if status == "A" else 0,
            sentence_type="RMC",
        )
    raise NmeaUnsupportedError(f"unsupported sentence: {ident}")


def _format_dm(value_deg: float, lat: bool) -> tuple[str, str]:
    hemi = ("N" if value_deg >= 0 else "S") if lat else ("E" if value_deg >= 0 else "W")
    v = abs(value_deg)
    deg = int(v)
    minutes = (v - deg) * 60.0
    if minutes >= 59.999995:  # rounding would carry into the degree field
        deg += 1
        minutes = 0.0
    width = 2 if lat else 3
    return f"{deg:0{width}d}{minutes:08.5f}", hemi


def format_nmea(fix: GpsFix) -> str:
    """Serialize a fix back to its sentence type, checksum included."""
    ms = fix.time_ms % MS_PER_DAY
    h, rem = divmod(ms, 3_600_000)
    m, rem = divmod(rem, 60_000)
    s = rem / 1000.0
    t = f"{h:02d}{m:02d}{s:05.2f}"
    lat, ns = _format_dm(fix.position.lat, lat=True)
    lon, ew = _format_dm(fix.position.lon, lat=False)
    if fix.sentence_type == "RMC":
        status = "A" if fix.quality > 0 else "V"
        payload = f"GPRMC,{t},{status},{lat},{ns},{lon},{ew},0.00,0.00,010100,,"
    else:
        payload = (
            f"GPGGA,{t},{lat},{ns},{lon},{ew},{fix.quality},08,1.0,"
            f"{fix.position.alt:.1f},M,0.0,M,,"
        )
    return f"${payload}*{nmea_checksum(payload):02X}"


def parse_nmea_file(
    lines: Iterable[str], strict: bool = False
) -> tuple[list[GpsFix], list[str]]:
    """Parse many sentences; bad or unsupported lines become warnings.

    In strict mode any error other than an unsupported sentence raises.
    """
    fixes: list[GpsFix] = []
    problems: list[str] = []
    for n, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            fixes.append(parse_nmea_sentence(line))
        except NmeaUnsupportedError as e:
            problems.append(f"line {n}: {e}")
        except IngestError as e:
            if strict:
                raise IngestError(f"line {n}: {e}") from e
            problems.append(f"line {n}: {e}")
    return fixes, problems


@dataclass(frozen=True)
class PacketRecord:
    """One packet-log CSV row."""

    seq: int
    tx_time_ms: int
    tx_lat: float | None
    tx_lon: float | None
    rsu_received: bool
    obu_received: bool


def _parse_bool(raw: str, field: str, row: int) -> bool:
    key = raw.strip().lower()
    if key not in _BOOL_WORDS:
        raise IngestError(f"row {row}: {field} must be one of 0,1,true,false, got {raw!r}")
    return _BOOL_WORDS[key]


def parse_packet_log(text: str, strict: bool = False) -> tuple[list[PacketRecord], list[str]]:
    """Parse the packet CSV; returns (records, row errors).

    The header is mandatory and exact. Lenient mode keeps good rows and
    reports bad ones by line number; strict mode raises listing them all.
    """
    lines = text.splitlines()
    if not lines or lines[0].strip() != PACKET_CSV_HEADER:
        got = lines[0].strip() if lines else ""
        missing = sorted(set(PACKET_CSV_HEADER.split(",")) - set(got.split(",")))
        raise IngestError(
            f"bad CSV header: expected {PACKET_CSV_HEADER!r}"
            + (f", missing columns {missing}" if missing else f", got {got!r}")
        )
    records: list[PacketRecord] = []
    errors: list[str] = []
    seen: set[tuple[int, int]] = set()
    last_time: int | None = None
    for n, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 6:
            errors.append(f"row {n}: expected 6 columns, got {len(parts)}")
            continue
        try:
            seq = int(parts[0])
            t = int(parts[1])
            if seq < 0 or t < 0:
                raise ValueError("negative")
        except ValueError:
            errors.append(f"row {n}: seq/tx_time_ms must be non-negative integers")
            continue
        lat_raw, lon_raw = parts[2].strip(), parts[3].strip()
        if (lat_raw == "") != (lon_raw == ""):
            errors.append(f"row {n}: tx_lat and tx_lon must be both present or both empty")
            continue
        lat = lon = None
        if lat_raw:
            try:
                lat, lon = float(lat_raw), float(lon_raw)
                GeoPoint(lat, lon)
            except (ValueError, RailwarnError):
                errors.append(f"row {n}: invalid tx_lat/tx_lon {lat_raw!r},{lon_raw!r}")
                continue
        try:
            rsu = _parse_bool(parts[4], "rsu_received", n)
            obu = _parse_bool(parts[5], "obu_received", n)
        except IngestError as e:
            errors.append(str(e))
            continue
        if (seq, t) in seen:
            errors.append(f"row {n}: duplicate (seq, tx_time_ms) = ({seq}, {t})")
            continue
        if last_time is not None and t < last_time:
            errors.append(f"row {n}: tx_time_ms {t} decreases (previous {last_time})")
            continue
        seen.add((seq, t))
        last_time = t
        records.append(PacketRecord(seq, t, lat, lon, rsu, obu))
    if strict and errors:
        raise IngestError("packet log errors:\n" + "\n".join(errors))
    return records, errors


def write_packet_csv(log: SimLog) -> str:
    """Serialize a log to the canonical CSV; floats use repr for exact
    round-trips. Multiple RSUs/OBUs collapse to any-received booleans."""
    out = [PACKET_CSV_HEADER]
    for f in log.fates:
        rsu = any(f.receptions[r].received for r in f.receptions if r in log.rsu_ids)
        obu = any(f.receptions[r].received for r in f.receptions if r in log.obu_ids)
        out.append(
            f"{f.seq},{f.tx_time_ms},{f.tx_position.lat!r},{f.tx_position.lon!r},"
            f"{int(rsu)},{int(obu)}"
        )
    return "\n".join(out) + "\n"


def _interpolate(fixes: list[GpsFix], t: int) -> GeoPoint:
    times = [f.time_ms for f in fixes]
    i = bisect.bisect_left(times, t)
    if i < len(times) and times[i] == t:
        return fixes[i].position
    a, b = fixes[i - 1], fixes[i]
    u = (t - a.time_ms) / (b.time_ms - a.time_ms)
    v = to_enu(a.position, b.position)
    return from_enu(a.position, EnuVector(v.east * u, v.north * u, v.up * u))


def replay(
    records: list[PacketRecord],
    fixes: list[GpsFix] | None = None,
    rsu_position: GeoPoint | None = None,
    obu_position: GeoPoint | None = None,
) -> SimLog:
    """Rebuild a log from field records so stats and KML apply unchanged.

    Records missing tx positions are placed by linear ENU interpolation
    between the bracketing GPS fixes (same clock as tx_time_ms). Receiver
    positions, when supplied, enable distance-binned statistics.
    """
    if not records:
        raise EmptyLogError("no packets to analyze")
    need_gps = [r for r in records if r.tx_lat is None]
    fix_list: list[GpsFix] = []
    if need_gps:
        if not fixes:
            raise IngestError(
                f"{len(need_gps)} records lack tx positions and no GPS fixes were given"
            )
        fix_list = sorted(fixes, key=lambda f: f.time_ms)
        lo, hi = fix_list[0].time_ms, fix_list[-1].time_ms
        uncovered = [r.seq for r in need_gps if not lo <= r.tx_time_ms <= hi]
        if uncovered:
            raise IngestError(
                f"record times outside GPS fix span [{lo}, {hi}] ms "
                f"for seqs {uncovered[:20]}"
            )
    fates = []
    for r in records:
        if r.tx_lat is not None:
            pos = GeoPoint(r.tx_lat, r.tx_lon)
        else:
            pos = _interpolate(fix_list, r.tx_time_ms)
        receptions = {
            "rsu": Reception(
                received=r.rsu_received,
                distance_m=haversine_distance(pos, rsu_position) if rsu_position else None,
            ),
            "obu": Reception(
                received=r.obu_received,
                distance_m=haversine_distance(pos, obu_position) if obu_position else None,
            ),
        }
        fates.append(PacketFate(r.seq, r.tx_time_ms, pos, receptions))
    digest = hashlib.sha256(
        "\n".join(
            f"{r.seq},{r.tx_time_ms},{r.tx_lat},{r.tx_lon},"
            f"{r.rsu_received},{r.obu_received}"
            for r in records
        ).encode()
    ).hexdigest()[:16]
    unit_positions: dict[str, GeoPoint] = {}
    if rsu_position is not None:
        unit_positions["rsu"] = rsu_position
    if obu_position is not None:
        unit_positions["obu"] = obu_position
    return SimLog(
        scenario_hash=digest,
        rsu_ids=frozenset({"rsu"}),
        obu_ids=frozenset({"obu"}),
        unit_positions=unit_positions,
        fates=tuple(fates),
        has_link_detail=False,
    )
