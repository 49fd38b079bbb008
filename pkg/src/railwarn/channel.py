"""Link-budget models: path loss, shadowing, and reception decisions.

The carrier rides at 5.9 GHz. Path loss is either pure free space or the
log-distance model with optional lognormal shadowing; reception is judged
against per-MCS sensitivity, either as a hard threshold (ties succeed) or
a logistic edge around it.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass
from enum import Enum

from .exceptions import RailwarnError

SPEED_OF_LIGHT_M_S = 299_792_458.0

CARRIER_HZ = 5.9e9

# Logistic slope of the soft reception model, per dB of margin.
SOFT_MODEL_K_PER_DB = 1.0

# Receiver sensitivity floor in dBm per modulation-coding scheme. Typical
# 10 MHz DSRC-class figures; configurable per scenario, not ground truth.
DEFAULT_SENSITIVITY_DBM: dict[str, float] = {
    "MCS0": -94.0,
    "MCS2": -88.0,
    "MCS4": -82.0,
}


class ChannelError(RailwarnError):
    """Invalid channel configuration or link geometry."""


class PowerClass(Enum):
    """Transmit power classes; value is the TX power in dBm."""

    PRIVATE = 11.0
    PUBLIC_SAFETY = 23.0

    @classmethod
    def parse(cls, name: str) -> "PowerClass":
        key = name.strip().lower().replace("-", "_").replace(" ", "_")
        table = {"private": cls.PRIVATE, "public_safety": cls.PUBLIC_SAFETY}
        if key not in table:
            raise ChannelError(f"unknown power class {name!r}")
        return table[key]


def free_space_path_loss_db(distance_m: float, freq_hz: float = CARRIER_HZ) -> float:
    """Free-space loss 20*log10(4*pi*d*f/c)."""
    if distance_m <= 0.0:
        raise ChannelError(f"path-loss distance must be > 0, got {distance_m}")
    if freq_hz <= 0.0:
        raise ChannelError(f"frequency must be > 0, got {freq_hz}")
    return 20.0 * math.log10(4.0 * math.pi * distance_m * freq_hz / SPEED_OF_LIGHT_M_S)


@dataclass(frozen=True)
class PathLossModel:
    """Log-distance path loss anchored at free space at ``ref_distance_m``.

    ``exponent`` 2.0 with ``shadow_sigma_db`` 0 reduces to free space.
    Exponent is limited to [1.6, 6.0]: below waveguide-like corridors,
    above heavily obstructed clutter. Distances inside the reference
    clamp to it; mobility may legitimately pass very near a node.
    """

    exponent: float = 2.0
    ref_distance_m: float = 1.0
    shadow_sigma_db: float = 0.0
    frequency_hz: float = CARRIER_HZ

    def __post_init__(self) -> None:
        if not 1.6 <= self.exponent <= 6.0:
            raise ChannelError(f"path-loss exponent {self.exponent} outside [1.6, 6.0]")
        if self.ref_distance_m <= 0.0:
            raise ChannelError(f"reference distance must be > 0, got {self.ref_distance_m}")
        if self.shadow_sigma_db < 0.0:
            raise ChannelError(f"shadowing sigma must be >= 0, got {self.shadow_sigma_db}")
        if self.frequency_hz <= 0.0:
            raise ChannelError(f"frequency must be > 0, got {self.frequency_hz}")

    def mean_loss_db(self, distance_m: float) -> float:
        if distance_m <= 0.0:
            raise ChannelError(f"path-loss distance must be > 0, got {distance_m}")
        d = max(distance_m, self.ref_distance_m)
        ref = free_space_path_loss_db(self.ref_distance_m, self.frequency_hz)
        return ref + 10.0 * self.exponent * math.log10(d / self.ref_distance_m)


class ReceptionModel(Enum):
    """Hard threshold at sensitivity, or a logistic edge around it."""

    HARD = "hard"
    SOFT = "soft"


@dataclass(frozen=True)
class Radio:
    """One DSRC radio: TX power class, MCS, and resolved sensitivity.

    ``tx_power_override_dbm`` decouples TX power from the class; the
    scenario loader only permits it behind an explicit flag.
    """

    power_class: PowerClass
    mcs: str = "MCS2"
    sensitivity_dbm: float = math.nan
    tx_power_override_dbm: float | None = None

    def __post_init__(self) -> None:
        if math.isnan(self.sensitivity_dbm):
            if self.mcs not in DEFAULT_SENSITIVITY_DBM:
                raise ChannelError(
                    f"MCS not in sensitivity table: {self.mcs!r}; "
                    f"known: {sorted(DEFAULT_SENSITIVITY_DBM)}"
                )
            object.__setattr__(self, "sensitivity_dbm", DEFAULT_SENSITIVITY_DBM[self.mcs])

    @property
    def tx_power_dbm(self) -> float:
        if self.tx_power_override_dbm is not None:
            return self.tx_power_override_dbm
        return self.power_class.value


def packet_rng(seed: int, seq: int, rx_id: str, tx_id: str, domain: str) -> random.Random:
    """Deterministic per-packet random stream.

    Keyed on the scenario seed plus the packet and link identity, so a
    given reception draws the same randomness regardless of evaluation
    order or interpreter hash seed. ``domain`` separates the shadowing
    draw from the soft-reception draw.
    """
    material = f"{seed}|{seq}|{rx_id}|{tx_id}|{domain}".encode()
    digest = hashlib.sha256(material).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def received_power_dbm(
    tx_power_dbm: float, tx_gain_dbi: float, rx_gain_dbi: float, loss_db: float
) -> float:
    return tx_power_dbm + tx_gain_dbi + rx_gain_dbi - loss_db


def packet_success(
    prx_dbm: float,
    sensitivity_dbm: float,
    reception: ReceptionModel = ReceptionModel.HARD,
    rng: random.Random | None = None,
) -> bool:
    """Decide whether a packet at ``prx_dbm`` decodes.

    Hard model: success iff prx >= sensitivity (equality succeeds).
    Soft model: success with probability 1/(1+exp(-k*margin)); needs the
    per-packet rng stream.
    """
    margin = prx_dbm - sensitivity_dbm
    if reception is ReceptionModel.HARD:
        return margin >= 0.0
    if rng is None:
        raise ChannelError("soft reception model requires a seeded rng")
    p = 1.0 / (1.0 + math.exp(-SOFT_MODEL_K_PER_DB * margin))
    return rng.random() < p


@dataclass(frozen=True)
class LinkResult:
    """Outcome of one transmission attempt over one link."""

    rx_power_dbm: float
    margin_db: float
    received: bool


def evaluate_link(
    tx_power_dbm: float,
    tx_gain_dbi: float,
    rx_gain_dbi: float,
    distance_m: float,
    sensitivity_dbm: float,
    path_loss: PathLossModel,
    reception: ReceptionModel,
    shadow_rng: random.Random | None = None,
    soft_rng: random.Random | None = None,
) -> LinkResult:
    """Run the link budget for one packet and decide reception.

    Coincident endpoints have no defined path loss and are rejected.
    """
    if distance_m <= 0.0:
        raise ChannelError("degenerate link geometry: coincident tx and rx")
    prx = received_power_dbm(
        tx_power_dbm, tx_gain_dbi, rx_gain_dbi, path_loss.mean_loss_db(distance_m)
    )
    if path_loss.shadow_sigma_db > 0.0:
        if shadow_rng is None:
            raise ChannelError("shadowing requires a seeded rng")
        prx += shadow_rng.gauss(0.0, path_loss.shadow_sigma_db)
    ok = packet_success(prx, sensitivity_dbm, reception, soft_rng)
    return LinkResult(rx_power_dbm=prx, margin_db=prx - sensitivity_dbm, received=ok)
