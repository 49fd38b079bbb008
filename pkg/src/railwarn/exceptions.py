"""Shared exception types."""

from __future__ import annotations

from dataclasses import dataclass


class RailwarnError(Exception):
    """Base class for all errors raised by this package."""


@dataclass(frozen=True)
class ValidationIssue:
    """One problem found while validating a config document."""

    field: str
    message: str

    def __str__(self) -> str:
        return f"{self.field}: {self.message}"


class ScenarioError(RailwarnError):
    """Scenario config rejected; carries every issue found, not just the first."""

    def __init__(self, issues: list[ValidationIssue]):
        self.issues = list(issues)
        super().__init__("; ".join(str(i) for i in self.issues))


class EmptyLogError(RailwarnError):
    """Raised when an analysis step is given a log with no packets."""
