"""Request and response bodies of the HTTP service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field


class RunRequest(BaseModel):
    """Simulate one scenario given as the raw config mapping."""

    scenario: dict
    seed: int | None = None
    decimate: int = Field(default=1, ge=1)


class ArtifactFiles(BaseModel):
    """The artifact texts a client is expected to persist."""

    packets_csv: str
    trace_kml: str
    stats_json: str | None = None


class RunResponse(BaseModel):
    scenario_hash: str
    stats: dict | None = None
    files: ArtifactFiles
    warnings: list[str] = []


class ReplayRequest(BaseModel):
    """Rebuild artifacts from a packet CSV, optionally with GPS context."""

    packets_csv: str
    nmea: str | None = None
    strict: bool = False
    rsu_position: tuple[float, float] | None = None
    obu_position: tuple[float, float] | None = None
    decimate: int = Field(default=1, ge=1)


class CompareRequest(BaseModel):
    scenario: dict
    axis: Literal["antenna", "relay", "power"]
    seed: int | None = None
    decimate: int = Field(default=1, ge=1)


class CompareLeg(BaseModel):
    label: str
    scenario_hash: str
    stats: dict | None = None
    files: ArtifactFiles
    warnings: list[str] = []


class CompareResponse(BaseModel):
    axis: str
    legs: list[CompareLeg]
    deltas: dict[str, dict[str, float | None]]


class ErrorItem(BaseModel):
    field: str
    message: str


class ErrorResponse(BaseModel):
    errors: list[ErrorItem]
