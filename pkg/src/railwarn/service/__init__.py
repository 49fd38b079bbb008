"""HTTP service exposing the run, replay, and compare pipeline."""

from .app import app, create_app

__all__ = ["app", "create_app"]
