"""Deterministic fixed-timestep simulation engine and log statistics.

Each step advances mobility, lets the train broadcast, evaluates every
(packet, receiver) link, applies the relay, updates warning latches, and
appends one packet-fate record merging direct and relayed receptions.
Identical scenario and seed give a bit-identical log.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .antenna import Antenna
from .channel import ReceptionModel, evaluate_link, packet_rng
from .exceptions import EmptyLogError
from .geo import GeoPoint, Polyline, bearing, haversine_distance, point_at_arclength
from .protocol import (
    ObuState,
    RsuState,
    TrainState,
    WarningMessage,
    next_broadcast,
    obu_ingest,
    obu_warning_active,
    rsu_ingest,
    warning_active,
)
from .scenario import Scenario
from .scenario import scenario_hash as _scenario_hash

DEFAULT_BIN_WIDTH_M = 50.0

COVERAGE_PDR = 0.9


@dataclass(frozen=True)
class Reception:
    """One receiver's view of one packet."""

    received: bool
    via_relay: bool = False
    prx_dbm: float | None = None
    distance_m: float | None = None


@dataclass(frozen=True)
class PacketFate:
    """Per-broadcast record of which receivers decoded it."""

    seq: int
    tx_time_ms: int
    tx_position: GeoPoint
    receptions: dict[str, Reception]


@dataclass(frozen=True)
class SimLog:
    """Everything a run produced, in deterministic order."""

    scenario_hash: str
    rsu_ids: frozenset[str]
    obu_ids: frozenset[str]
    unit_positions: dict[str, GeoPoint]
    fates: tuple[PacketFate, ...]
    traces: dict[str, tuple[tuple[int, float, float], ...]] = field(default_factory=dict)
    warning_timelines: dict[str, tuple[tuple[int, bool], ...]] = field(default_factory=dict)
    # False for replayed field logs: prx and relay attribution are unknown.
    has_link_detail: bool = True


@dataclass(frozen=True)
class _Pose:
    position: GeoPoint
    boresight_deg: float


def _path_pose(path: Polyline, arc_m: float, mount_offset_deg: float) -> _Pose:
    pos, heading = point_at_arclength(path, arc_m)
    return _Pose(pos, (heading + mount_offset_deg) % 360.0)


def _gain_toward(antenna: Antenna, pose: _Pose, target: GeoPoint) -> float:
    return antenna.gain(bearing(pose.position, target) - pose.boresight_deg)


def _attempt(
    sc: Scenario,
    msg: WarningMessage,
    tx_pose: _Pose,
    tx_antenna: Antenna,
    tx_power_dbm: float,
    tx_id: str,
    rx_pose: _Pose,
    rx_antenna: Antenna,
    rx_sensitivity_dbm: float,
    rx_id: str,
) -> tuple[bool, float, float]:
    """Evaluate one link for one packet: (received, prx, distance)."""
    d = haversine_distance(tx_pose.position, rx_pose.position)
    result = evaluate_link(
        tx_power_dbm=tx_power_dbm,
        tx_gain_dbi=_gain_toward(tx_antenna, tx_pose, rx_pose.position),
        rx_gain_dbi=_gain_toward(rx_antenna, rx_pose, tx_pose.position),
        distance_m=d,
        sensitivity_dbm=rx_sensitivity_dbm,
        path_loss=sc.path_loss,
        reception=sc.reception,
        shadow_rng=packet_rng(sc.seed, msg.seq, rx_id, tx_id, "shadow"),
        soft_rng=packet_rng(sc.seed, msg.seq, rx_id, tx_id, "soft"),
    )
    return result.received, result.rx_power_dbm, d


class _FateBuilder:
    """Accumulates direct and relayed receptions for one packet."""

    def __init__(self, msg: WarningMessage, receiver_ids: list[str]) -> None:
        self.seq = msg.seq
        self.tx_time_ms = msg.timestamp_ms
        self.tx_position = msg.position
        self.direct: dict[str, tuple[bool, float, float]] = {}
        self.relay: dict[str, tuple[bool, float, float]] = {}
        self.receiver_ids = receiver_ids

    def freeze(self) -> PacketFate:
        receptions: dict[str, Reception] = {}
        for rid in self.receiver_ids:
            d_ok, d_prx, dist = self.direct[rid]
            r = self.relay.get(rid)
            if d_ok:
                receptions[rid] = Reception(True, False, d_prx, dist)
            elif r is not None and r[0]:
                # Relay-only save; prx is the delivering (relay) path's.
                receptions[rid] = Reception(True, True, r[1], dist)
            else:
                receptions[rid] = Reception(False, False, d_prx, dist)
        return PacketFate(self.seq, self.tx_time_ms, self.tx_position, receptions)


def run(sc: Scenario) -> SimLog:
    """Execute the scenario end to end."""
    track_len = sc.track.total_length_m
    train_arc = sc.train.initial_arclength_m
    obu_arcs = [o.initial_arclength_m for o in sc.obus]

    train_state = TrainState(train_id=sc.train.train_id)
    rsu_state = RsuState(rsu_id=sc.rsu.rsu_id, relay_enabled=sc.rsu.relay_enabled)
    obu_states = {o.obu_id: ObuState(obu_id=o.obu_id, hold_time_ms=o.hold_time_ms)
                  for o in sc.obus}
    rsu_pose = _Pose(sc.rsu.position, sc.rsu.boresight_deg % 360.0)
    receiver_ids = [sc.rsu.rsu_id] + [o.obu_id for o in sc.obus]

    builders: dict[int, _FateBuilder] = {}
    fates_order: list[int] = []
    # Relay copies awaiting their delivery step: (due_ms, message).
    pending_relays: list[tuple[int, WarningMessage]] = []

    traces: dict[str, list[tuple[int, float, float]]] = {
        uid: [] for uid in [sc.train.train_id, *obu_states]
    }
    timelines: dict[str, list[tuple[int, bool]]] = {uid: [] for uid in _warned_unit_ids(sc)}

    def obu_pose(i: int) -> _Pose:
        o = sc.obus[i]
        return _path_pose(sc.roads[o.road_index], obu_arcs[i], o.mount_offset_deg)

    def record_state(now: int, train_pose: _Pose) -> None:
        traces[sc.train.train_id].append(
            (now, train_pose.position.lat, train_pose.position.lon)
        )
        for i, o in enumerate(sc.obus):
            p = obu_pose(i).position
            traces[o.obu_id].append((now, p.lat, p.lon))
        mark_timeline(timelines, sc.train.train_id, now,
                      warning_active(train_arc, sc.crossing_arclength_m, sc.clear_margin_m))
        for oid, st in obu_states.items():
            mark_timeline(timelines, oid, now, obu_warning_active(st, now))

    def deliver_relay(msg: WarningMessage, rsu_tx_time: int) -> None:
        b = builders.get(msg.seq)
        if b is None:
            return
        for i, o in enumerate(sc.obus):
            ok, prx, dist = _attempt(
                sc, msg, rsu_pose, sc.rsu.antenna, sc.rsu.radio.tx_power_dbm,
                sc.rsu.rsu_id, obu_pose(i), o.antenna, o.radio.sensitivity_dbm, o.obu_id,
            )
            b.relay[o.obu_id] = (ok, prx, dist)
            if ok:
                obu_ingest(obu_states[o.obu_id], msg, rsu_tx_time)

    train_pose = _path_pose(sc.track, train_arc, sc.train.mount_offset_deg)
    record_state(0, train_pose)

    steps = sc.duration_ms // sc.timestep_ms
    for k in range(1, steps + 1):
        now = k * sc.timestep_ms
        dt_s = sc.timestep_ms / 1000.0

        # Phase 1: mobility; paths pin at their far end.
        train_arc = min(train_arc + sc.train.speed_mps * dt_s, track_len)
        for i, o in enumerate(sc.obus):
            obu_arcs[i] = min(obu_arcs[i] + o.speed_mps * dt_s, sc.roads[o.road_index].total_length_m)
        train_pose = _path_pose(sc.track, train_arc, sc.train.mount_offset_deg)

        # Phase 2: broadcast.
        active = warning_active(train_arc, sc.crossing_arclength_m, sc.clear_margin_m)
        msg = next_broadcast(
            train_state, now, sc.broadcast_period_ms, active,
            train_pose.position, sc.train.speed_mps, train_pose.boresight_deg,
        )

        # Phase 3: direct receptions.
        relay_copy: WarningMessage | None = None
        if msg is not None:
            b = _FateBuilder(msg, receiver_ids)
            builders[msg.seq] = b
            fates_order.append(msg.seq)
            ok, prx, dist = _attempt(
                sc, msg, train_pose, sc.train.antenna, sc.train.radio.tx_power_dbm,
                sc.train.train_id, rsu_pose, sc.rsu.antenna,
                sc.rsu.radio.sensitivity_dbm, sc.rsu.rsu_id,
            )
            b.direct[sc.rsu.rsu_id] = (ok, prx, dist)
            if ok:
                relay_copy = rsu_ingest(rsu_state, msg)
            for i, o in enumerate(sc.obus):
                ok, prx, dist = _attempt(
                    sc, msg, train_pose, sc.train.antenna, sc.train.radio.tx_power_dbm,
                    sc.train.train_id, obu_pose(i), o.antenna,
                    o.radio.sensitivity_dbm, o.obu_id,
                )
                b.direct[o.obu_id] = (ok, prx, dist)
                if ok:
                    obu_ingest(obu_states[o.obu_id], msg, now)

        # Phase 4: relay emissions due this step (zero delay: same step).
        due_now = [m for t, m in pending_relays if t <= now]
        pending_relays = [(t, m) for t, m in pending_relays if t > now]
        for m in due_now:
            deliver_relay(m, now)
        if relay_copy is not None:
            if sc.rsu.relay_delay_ms == 0:
                deliver_relay(relay_copy, now)
            else:
                pending_relays.append((now + sc.rsu.relay_delay_ms, relay_copy))

        # Phases 5-6: warning states and traces; fates freeze after the run
        # so delayed relays can still land in their packet's record.
        record_state(now, train_pose)

    fates = tuple(builders[seq].freeze() for seq in fates_order)
    return SimLog(
        scenario_hash=_scenario_hash(sc),
        rsu_ids=frozenset({sc.rsu.rsu_id}),
        obu_ids=frozenset(o.obu_id for o in sc.obus),
        unit_positions={
            sc.rsu.rsu_id: sc.rsu.position,
            **{o.obu_id: point_at_arclength(
                sc.roads[o.road_index], o.initial_arclength_m)[0] for o in sc.obus},
        },
        fates=fates,
        traces={k: tuple(v) for k, v in traces.items()},
        warning_timelines={k: tuple(v) for k, v in timelines.items()},
    )


def _warned_unit_ids(sc: Scenario) -> list[str]:
    """Units with a warning state to track: the train and every vehicle."""
    return [sc.train.train_id] + [o.obu_id for o in sc.obus]


def mark_timeline(timelines: dict[str, list[tuple[int, bool]]], uid: str,
                  now: int, state: bool) -> None:
    """Append only state changes, so timelines stay compact."""
    tl = timelines[uid]
    if not tl or tl[-1][1] != state:
        tl.append((now, state))


@dataclass(frozen=True)
class BinStat:
    lo_m: float
    hi_m: float
    attempts: int
    received: int

    @property
    def pdr(self) -> float:
        return self.received / self.attempts


@dataclass(frozen=True)
class ReceiverStats:
    receiver_id: str
    attempts: int
    received: int
    pdr: float
    # Relay decomposition; None when the log lacks relay attribution.
    direct_received: int | None
    direct_pdr: float | None
    bins: tuple[BinStat, ...]
    coverage_range_m: float | None
    direct_coverage_range_m: float | None


@dataclass(frozen=True)
class LogStats:
    total_packets: int
    bin_width_m: float
    receivers: tuple[ReceiverStats, ...]


def _coverage_range(samples: list[tuple[float, bool]]) -> float | None:
    """Farthest delivered distance that is still >= 90% reliable.

    Walks samples in distance order; a distance qualifies when the packet
    there was received and the cumulative delivery ratio of everything at
    or inside that distance is at least COVERAGE_PDR.
    """
    if not samples:
        return None
    best = 0.0
    got = 0
    for i, (d, ok) in enumerate(sorted(samples), start=1):
        got += int(ok)
        if ok and got / i >= COVERAGE_PDR:
            best = d
    return best


def compute_stats(log: SimLog, bin_width_m: float = DEFAULT_BIN_WIDTH_M) -> LogStats:
    """Per-receiver delivery statistics, binned by tx-rx distance."""
    if not log.fates:
        raise EmptyLogError("no packets to analyze")
    receiver_ids: list[str] = sorted(
        {rid for f in log.fates for rid in f.receptions},
        key=lambda r: (r not in log.rsu_ids, r),
    )
    out: list[ReceiverStats] = []
    for rid in receiver_ids:
        rec = [f.receptions[rid] for f in log.fates if rid in f.receptions]
        attempts = len(rec)
        received = sum(r.received for r in rec)
        with_dist = [(r.distance_m, r) for r in rec if r.distance_m is not None]
        bins: list[BinStat] = []
        if with_dist:
            by_bin: dict[int, list[Reception]] = {}
            for d, r in with_dist:
                by_bin.setdefault(int(d // bin_width_m), []).append(r)
            for b in sorted(by_bin):
                rs = by_bin[b]
                bins.append(BinStat(
                    lo_m=b * bin_width_m,
                    hi_m=(b + 1) * bin_width_m,
                    attempts=len(rs),
                    received=sum(r.received for r in rs),
                ))
        coverage = _coverage_range([(d, r.received) for d, r in with_dist])
        if log.has_link_detail:
            direct = sum(r.received and not r.via_relay for r in rec)
            direct_pdr = direct / attempts if attempts else 0.0
            direct_cov = _coverage_range(
                [(d, r.received and not r.via_relay) for d, r in with_dist]
            )
        else:
            direct, direct_pdr, direct_cov = None, None, None
        out.append(ReceiverStats(
            receiver_id=rid,
            attempts=attempts,
            received=received,
            pdr=received / attempts if attempts else 0.0,
            direct_received=direct,
            direct_pdr=direct_pdr,
            bins=tuple(bins),
            coverage_range_m=coverage,
            direct_coverage_range_m=direct_cov,
        ))
    return LogStats(
        total_packets=len(log.fates),
        bin_width_m=bin_width_m,
        receivers=tuple(out),
    )


def stats_to_dict(stats: LogStats) -> dict:
    """Plain-data form for the JSON stats report."""
    return {
        "total_packets": stats.total_packets,
        "bin_width_m": stats.bin_width_m,
        "receivers": [
            {
                "receiver_id": r.receiver_id,
                "attempts": r.attempts,
                "received": r.received,
                "pdr": r.pdr,
                "direct_received": r.direct_received,
                "direct_pdr": r.direct_pdr,
                "coverage_range_m": r.coverage_range_m,
                "direct_coverage_range_m": r.direct_coverage_range_m,
                "bins": [
                    {
                        "lo_m": b.lo_m,
                        "hi_m": b.hi_m,
                        "attempts": b.attempts,
                        "received": b.received,
                        "pdr": b.pdr,
                    }
                    for b in r.bins
                ],
            }
            for r in stats.receivers
        ],
    }
