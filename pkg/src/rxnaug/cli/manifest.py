"""Run manifests: what a subcommand read, wrote and was configured with."""

from __future__ import annotations

import hashlib
import json
import os
import platform
from pathlib import Path
from typing import Any

import torch

from .. import __version__
from .._core import BACKEND
from ..reactions import atomic_write_text

MANIFEST_VERSION = 1


class ManifestError(ValueError):
    pass


def file_digest(path: str | os.PathLike) -> dict[str, Any]:
    h = hashlib.sha256()
    size = 0
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
            size += len(chunk)
    return {"path": str(Path(path).resolve()), "sha256": h.hexdigest(), "bytes": size}


def build_manifest(command: str, config_text: dict[str, str], args: dict[str, Any], kinds: dict[str, str],
                   inputs: dict[str, str], outputs: dict[str, str], seconds: float,
                   summary: dict[str, Any]) -> dict[str, Any]:
    return {
        "manifest_version": MANIFEST_VERSION,
        "command": command,
        "toolkit_version": __version__,
        "python": platform.python_version(),
        "torch": torch.__version__,
        "refine_backend": BACKEND,
        "config": config_text,
        "args": args,
        "arg_kinds": kinds,
        "inputs": {name: file_digest(p) for name, p in sorted(inputs.items())},
        "outputs": {name: file_digest(p) for name, p in sorted(outputs.items())},
        "timings": {"seconds": round(seconds, 3)},
        "summary": summary,
    }


def write_manifest(manifest: dict[str, Any], path: str | os.PathLike) -> None:
    atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def read_manifest(path: str | os.PathLike) -> dict[str, Any]:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"{path}: not a manifest ({exc})") from None
    version = data.get("manifest_version") if isinstance(data, dict) else None
    if version != MANIFEST_VERSION:
        raise ManifestError(f"{path}: unsupported manifest version {version!r}")
    return data
