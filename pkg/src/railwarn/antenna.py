"""Antenna gain patterns: omnidirectional and uniform linear arrays.

A pattern maps an angular offset from boresight to a gain in dBi. The
linear array models N identical elements on a single feed line with equal
amplitude and phase (no electronic steering), which concentrates energy
broadside to the array axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .exceptions import RailwarnError

# Array-factor floor; deep pattern nulls are clamped here.
NULL_FLOOR_DB = -60.0


class AntennaError(RailwarnError):
    """Invalid antenna configuration."""


def normalize_offset(offset_deg: float) -> float:
    """Wrap an angle to (-180, 180]."""
    r = math.fmod(offset_deg, 360.0)
    if r <= -180.0:
        r += 360.0
    elif r > 180.0:
        r -= 360.0
    return r


@dataclass(frozen=True)
class OmniAntenna:
    """Uniform gain in azimuth."""

    gain_dbi: float = 0.0

    def gain(self, offset_deg: float) -> float:
        return self.gain_dbi

    @property
    def boresight_gain_dbi(self) -> float:
        return self.gain_dbi


@dataclass(frozen=True)
class LinearArrayAntenna:
    """Uniform linear array of ``elements`` isotropic-fed elements.

    ``element_gain_dbi`` is the gain of one element; the array adds
    20*log10(N) at boresight. ``spacing_wavelengths`` is the inter-element
    pitch in carrier wavelengths, limited to (0, 1] so the visible region
    stays physical.
    """

    elements: int
    element_gain_dbi: float
    spacing_wavelengths: float = 0.5

    def __post_init__(self) -> None:
        # N = 1 degenerates to a bare element (flat 0 dB array factor).
        if self.elements < 1:
            raise AntennaError(f"array needs >= 1 element, got {self.elements}")
        if not 0.0 < self.spacing_wavelengths <= 1.0:
            raise AntennaError(
                f"element spacing {self.spacing_wavelengths} wavelengths outside (0, 1]"
            )

    @property
    def boresight_gain_dbi(self) -> float:
        return self.element_gain_dbi + 20.0 * math.log10(self.elements)

    def array_factor_db(self, offset_deg: float) -> float:
        """Normalized array factor in dB, 0 at boresight, floored at -60 dB."""
        offset = normalize_offset(offset_deg)
        psi = 2.0 * math.pi * self.spacing_wavelengths * math.sin(math.radians(offset))
        half = psi / 2.0
        denom = math.sin(half)
        if abs(denom) < 1e-12:
            # Main lobe or a grating lobe: the N phasors align.
            return 0.0
        af = math.sin(self.elements * half) / (self.elements * denom)
        if af == 0.0:
            return NULL_FLOOR_DB
        return max(NULL_FLOOR_DB, 20.0 * math.log10(abs(af)))

    def gain(self, offset_deg: float) -> float:
        return self.boresight_gain_dbi + self.array_factor_db(offset_deg)


Antenna = OmniAntenna | LinearArrayAntenna
