"""Bundled search-space fixtures for the initial/intermediate/final phases."""

from importlib import resources
from pathlib import Path

BUNDLED = ("initial_space", "intermediate_space", "final_space")


def bundled_space_path(name: str) -> Path | None:
    """Resolve a bundled space name ("initial_space" or "initial") to its file."""
    stem = name.removesuffix(".json")
    if stem in ("initial", "intermediate", "final"):
        stem = f"{stem}_space"
    if stem not in BUNDLED:
        return None
    return Path(resources.files(__name__) / f"{stem}.json")
