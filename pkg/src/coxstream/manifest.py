"""Run manifests: enough provenance to re-run a command bit-identically."""

from __future__ import annotations

import hashlib
import json
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__

__all__ = ["file_digest", "build_manifest", "write_manifest"]


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return f"sha256:{h.hexdigest()}"


def build_manifest(
    command: list[str],
    config: dict,
    inputs: dict | None = None,
    seeds: dict | None = None,
    duration_seconds: float | None = None,
    deterministic: bool = False,
) -> dict:
    """Assemble the manifest dict; volatile fields (wall-clock duration,
    creation time) are dropped under deterministic mode."""
    manifest = {
        "artifact_version": __version__,
        "command": list(command),
        "config": config,
        "inputs": {k: file_digest(v) for k, v in (inputs or {}).items()},
        "seeds": seeds or {},
    }
    if not deterministic:
        manifest["duration_seconds"] = round(float(duration_seconds or 0.0), 3)
        manifest["created"] = datetime.now(timezone.utc).isoformat()
    return manifest


def write_manifest(out_dir, manifest: dict, name: str = "manifest.json") -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
