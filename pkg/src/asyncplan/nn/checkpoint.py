"""Checkpoints: a JSON manifest plus one little-endian fp64 blob.

manifest.json maps parameter names to shape/dtype/byte-offset into
weights.bin. Save -> load -> save is byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping

import numpy as np

from .modules import Parameter

MANIFEST_NAME = "manifest.json"
BLOB_NAME = "weights.bin"
FORMAT_TAG = "asyncplan-checkpoint-v1"


class CheckpointError(ValueError):
    pass


def save_checkpoint(path: str | Path, params: Mapping[str, object], config: dict | None = None) -> Path:
    """Write parameters (Tensors/Parameters/ndarrays) under `path`."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    entries = {}
    blob = bytearray()
    for name in sorted(params):
        value = params[name]
        data = np.asarray(getattr(value, "data", value), dtype=np.float64)
        if not data.flags.c_contiguous:
            data = data.copy()  # keep 0-d shapes; ascontiguousarray would promote them
        entries[name] = {
            "shape": list(data.shape),
            "dtype": "float64",
            "offset": len(blob),
        }
        blob.extend(data.astype("<f8").tobytes())
    manifest = {
        "format": FORMAT_TAG,
        "blob": BLOB_NAME,
        "config": config or {},
        "params": entries,
    }
    (path / MANIFEST_NAME).write_text(json.dumps(manifest, indent=1, sort_keys=True))
    (path / BLOB_NAME).write_bytes(bytes(blob))
    return path


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    path = Path(path)
    try:
        manifest = json.loads((path / MANIFEST_NAME).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"cannot read checkpoint manifest at {path}: {exc}") from None
    if manifest.get("format") != FORMAT_TAG:
        raise CheckpointError(f"unknown checkpoint format {manifest.get('format')!r}")
    try:
        blob = (path / manifest["blob"]).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint blob: {exc}") from None

    arrays: dict[str, np.ndarray] = {}
    for name, entry in manifest["params"].items():
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        offset = entry["offset"]
        end = offset + count * 8
        if entry.get("dtype") != "float64":
            raise CheckpointError(f"parameter {name!r}: unsupported dtype {entry.get('dtype')!r}")
        if end > len(blob):
            raise CheckpointError(f"parameter {name!r}: blob truncated ({end} > {len(blob)})")
        arrays[name] = np.frombuffer(blob, dtype="<f8", count=count, offset=offset).reshape(shape).copy()
    return arrays, manifest.get("config", {})


def assign_parameters(
    params: Mapping[str, Parameter],
    arrays: Mapping[str, np.ndarray],
    allow_missing: tuple[str, ...] = (),
) -> None:
    """Copy checkpoint arrays into parameters, atomically.

    Model parameters whose name starts with one of `allow_missing` prefixes may
    be absent from the checkpoint (they keep their current values). Any other
    mismatch (unknown checkpoint names, missing model names, shape conflicts)
    raises with the complete offender list and no partial assignment.
    """
    problems = []
    staged = {}
    for name, p in params.items():
        if name not in arrays:
            if not any(name.startswith(prefix) for prefix in allow_missing):
                problems.append(f"missing from checkpoint: {name}")
            continue
        arr = arrays[name]
        if tuple(arr.shape) != tuple(p.data.shape):
            problems.append(f"shape mismatch for {name}: checkpoint {arr.shape} vs model {p.data.shape}")
            continue
        staged[name] = arr
    for name in arrays:
        if name not in params:
            problems.append(f"unknown parameter in checkpoint: {name}")
    if problems:
        raise CheckpointError("checkpoint does not match model:\n  " + "\n  ".join(sorted(problems)))
    for name, arr in staged.items():
        np.copyto(params[name].data, arr)
