"""Node roles of the crossing warning system.

Three roles cooperate: the train unit broadcasts warning messages on a
fixed cadence while approaching and until it clears the crossing, the
roadside unit relays each fresh message exactly once toward the road,
and vehicle units hold a warning active while messages keep arriving.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .exceptions import RailwarnError
from .geo import GeoPoint

DEFAULT_BROADCAST_PERIOD_MS = 100

DEFAULT_CLEAR_MARGIN_M = 100.0

DEFAULT_HOLD_TIME_MS = 3000


class ProtocolError(RailwarnError):
    """Invalid protocol configuration."""


@dataclass(frozen=True)
class WarningMessage:
    """One broadcast (or relayed) crossing warning."""

    train_id: str
    seq: int
    position: GeoPoint
    speed_mps: float
    heading_deg: float
    timestamp_ms: int
    relayed: bool = False
    relay_id: str | None = None

    def __post_init__(self) -> None:
        if self.seq < 0:
            raise ProtocolError(f"message seq must be >= 0, got {self.seq}")
        if self.relayed != (self.relay_id is not None):
            raise ProtocolError("relayed flag and relay_id must agree")


def warning_active(
    train_arclength_m: float,
    crossing_arclength_m: float,
    clear_margin_m: float = DEFAULT_CLEAR_MARGIN_M,
) -> bool:
    """Warning lifecycle: active while approaching, until the train is
    ``clear_margin_m`` past the crossing (travel in increasing arclength)."""
    return train_arclength_m <= crossing_arclength_m + clear_margin_m


@dataclass
class TrainState:
    """Broadcast bookkeeping for the train unit."""

    train_id: str
    next_seq: int = 0


def next_broadcast(
    state: TrainState,
    now_ms: int,
    period_ms: int,
    active: bool,
    position: GeoPoint,
    speed_mps: float,
    heading_deg: float,
) -> WarningMessage | None:
    """Emit the broadcast due at ``now_ms``, if any.

    Broadcast epochs are multiples of the period; inactive trains stay
    silent and do not consume sequence numbers.
    """
    if period_ms <= 0:
        raise ProtocolError(f"broadcast period must be > 0 ms, got {period_ms}")
    if not active or now_ms % period_ms != 0:
        return None
    msg = WarningMessage(
        train_id=state.train_id,
        seq=state.next_seq,
        position=position,
        speed_mps=speed_mps,
        heading_deg=heading_deg,
        timestamp_ms=now_ms,
    )
    state.next_seq += 1
    return msg


@dataclass
class RsuState:
    """Relay bookkeeping: which (train_id, seq) were already forwarded."""

    rsu_id: str
    relay_enabled: bool = True
    seen: set[tuple[str, int]] = field(default_factory=set)


def rsu_ingest(state: RsuState, msg: WarningMessage) -> WarningMessage | None:
    """Relay a freshly decoded message, at most once per (train_id, seq).

    Relayed copies are never re-relayed, so a warning traverses at most
    one hop beyond the originator.
    """
    if not state.relay_enabled or msg.relayed:
        return None
    key = (msg.train_id, msg.seq)
    if key in state.seen:
        return None
    state.seen.add(key)
    return replace(msg, relayed=True, relay_id=state.rsu_id)


@dataclass
class ObuState:
    """Warning latch for a vehicle unit."""

    obu_id: str
    hold_time_ms: int = DEFAULT_HOLD_TIME_MS
    last_msg_time_ms: int | None = None

    def __post_init__(self) -> None:
        if self.hold_time_ms < 0:
            raise ProtocolError(f"hold time must be >= 0 ms, got {self.hold_time_ms}")


def obu_ingest(state: ObuState, msg: WarningMessage, now_ms: int) -> None:
    """Accept a decoded warning; original and relayed copies act alike."""
    state.last_msg_time_ms = now_ms


def obu_warning_active(state: ObuState, now_ms: int) -> bool:
    """True while the latest message is within the hold window."""
    if state.last_msg_time_ms is None:
        return False
    return now_ms - state.last_msg_time_ms <= state.hold_time_ms
