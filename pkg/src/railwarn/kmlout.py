"""Packet-fate classification and Google-Earth KML output.

Every broadcast lands in one of four classes from the two any-receiver
booleans: neither role received it (White), only the roadside unit
(Yellow), only a vehicle (Blue), or both (Green). The emitted document
groups packet dots in per-class folders and marks unit locations with
yellow (roadside) and blue (vehicle) pushpins.
"""

from __future__ import annotations

import io
import zipfile
from collections.abc import Iterable, Mapping
from enum import Enum
from xml.sax.saxutils import escape

from .exceptions import RailwarnError
from .geo import GeoPoint
from .sim import PacketFate, SimLog


class KmlError(RailwarnError):
    """Nothing to render or inconsistent classification input."""


class PacketClass(Enum):
    WHITE = "White"
    YELLOW = "Yellow"
    BLUE = "Blue"
    GREEN = "Green"


# KML colors are aabbggrr.
KML_COLORS: dict[PacketClass, str] = {
    PacketClass.WHITE: "ffffffff",
    PacketClass.YELLOW: "ff00ffff",
    PacketClass.BLUE: "ffff0000",
    PacketClass.GREEN: "ff00ff00",
}

_DOT_ICON = "http://maps.google.com/mapfiles/kml/shapes/shaded_dot.png"
_RSU_ICON = "http://maps.google.com/mapfiles/kml/pushpin/ylw-pushpin.png"
_OBU_ICON = "http://maps.google.com/mapfiles/kml/pushpin/blue-pushpin.png"


def classify(rsu_received: bool, obu_received: bool) -> PacketClass:
    """Four-color fate of one packet."""
    if rsu_received and obu_received:
        return PacketClass.GREEN
    if rsu_received:
        return PacketClass.YELLOW
    if obu_received:
        return PacketClass.BLUE
    return PacketClass.WHITE


def classify_multi(
    receptions: Mapping[str, bool],
    rsu_ids: Iterable[str],
    obu_ids: Iterable[str],
) -> PacketClass:
    """Collapse many receivers to the two role booleans, then classify."""
    rsu_set, obu_set = set(rsu_ids), set(obu_ids)
    unknown = [r for r in receptions if r not in rsu_set and r not in obu_set]
    if unknown:
        raise KmlError(f"unclassified receiver role: {sorted(unknown)}")
    rsu = any(ok for r, ok in receptions.items() if r in rsu_set)
    obu = any(ok for r, ok in receptions.items() if r in obu_set)
    return classify(rsu, obu)


def classify_fate(fate: PacketFate, rsu_ids: Iterable[str], obu_ids: Iterable[str]) -> PacketClass:
    return classify_multi(
        {rid: rec.received for rid, rec in fate.receptions.items()}, rsu_ids, obu_ids
    )


def _coords(p: GeoPoint) -> str:
    # KML wants lon,lat,alt in that order.
    return f"{p.lon!r},{p.lat!r},{p.alt!r}"


def _packet_style(cls: PacketClass) -> str:
    return (
        f'    <Style id="pkt_{cls.value.lower()}">\n'
        f"      <IconStyle>\n"
        f"        <color>{KML_COLORS[cls]}</color>\n"
        f"        <scale>0.5</scale>\n"
        f"        <Icon><href>{_DOT_ICON}</href></Icon>\n"
        f"      </IconStyle>\n"
        f"      <LabelStyle><scale>0</scale></LabelStyle>\n"
        f"    </Style>\n"
    )


def _unit_style(style_id: str, icon: str) -> str:
    return (
        f'    <Style id="{style_id}">\n'
        f"      <IconStyle>\n"
        f"        <scale>1.2</scale>\n"
        f"        <Icon><href>{icon}</href></Icon>\n"
        f"      </IconStyle>\n"
        f"    </Style>\n"
    )


def _placemark(name: str, style_id: str, p: GeoPoint, indent: str) -> str:
    return (
        f"{indent}<Placemark>\n"
        f"{indent}  <name>{escape(name)}</name>\n"
        f"{indent}  <styleUrl>#{style_id}</styleUrl>\n"
        f"{indent}  <Point><coordinates>{_coords(p)}</coordinates></Point>\n"
        f"{indent}</Placemark>\n"
    )


def emit_kml(
    classified: Iterable[tuple[PacketFate, PacketClass]],
    rsu_positions: Mapping[str, GeoPoint],
    obu_positions: Mapping[str, GeoPoint],
    decimate: int = 1,
) -> str:
    """Render packet fates and unit markers as a KML 2.2 document.

    ``decimate`` keeps every n-th packet (the first always survives) for
    hand inspection of dense traces. Output is byte-deterministic.
    """
    if decimate < 1:
        raise KmlError(f"decimation factor must be >= 1, got {decimate}")
    fates = list(classified)[::decimate]
    if not fates and not rsu_positions and not obu_positions:
        raise KmlError("nothing to render")

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        '<kml xmlns="http://www.opengis.net/kml/2.2">\n'
        "  <Document>\n"
        "    <name>crossing warning packet trace</name>\n"
    ]
    for cls in PacketClass:
        parts.append(_packet_style(cls))
    parts.append(_unit_style("unit_rsu", _RSU_ICON))
    parts.append(_unit_style("unit_obu", _OBU_ICON))

    for cls in PacketClass:
        members = [f for f, c in fates if c is cls]
        parts.append(f"    <Folder>\n      <name>{cls.value}</name>\n")
        for f in members:
            parts.append(
                _placemark(str(f.seq), f"pkt_{cls.value.lower()}", f.tx_position, "      ")
            )
        parts.append("    </Folder>\n")

    parts.append("    <Folder>\n      <name>Units</name>\n")
    for uid, p in rsu_positions.items():
        parts.append(_placemark(uid, "unit_rsu", p, "      "))
    for uid, p in obu_positions.items():
        parts.append(_placemark(uid, "unit_obu", p, "      "))
    parts.append("    </Folder>\n")

    parts.append("  </Document>\n</kml>\n")
    return "".join(parts)


def kml_for_log(log: SimLog, decimate: int = 1) -> str:
    """Classify a whole log and render it."""
    classified = [
        (f, classify_fate(f, log.rsu_ids, log.obu_ids)) for f in log.fates
    ]
    rsu_positions = {u: p for u, p in log.unit_positions.items() if u in log.rsu_ids}
    obu_positions = {u: p for u, p in log.unit_positions.items() if u in log.obu_ids}
    return emit_kml(classified, rsu_positions, obu_positions, decimate)


def to_kmz(kml_text: str) -> bytes:
    """Zip the document; fixed metadata keeps the archive deterministic."""
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as z:
        info = zipfile.ZipInfo("doc.kml", date_time=(1980, 1, 1, 0, 0, 0))
        info.compress_type = zipfile.ZIP_DEFLATED
        info.external_attr = 0o644 << 16
        z.writestr(info, kml_text)
    return buf.getvalue()
