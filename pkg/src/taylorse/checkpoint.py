"""Checkpoint = JSON manifest + raw little-endian float32 blob.

Manifest layout::

    {"format_version": 1,
     "model_config": {...TaylorConfig...},
     "blob": "model.bin",
     "params": [{"name", "shape", "dtype": "float32", "byte_offset"}, ...]}

Parameters appear in lexicographic name order and are concatenated in that
order inside the blob.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .model import TaylorConfig, TaylorModel

FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, model: TaylorModel, extra: dict | None = None) -> Path:
    path = Path(path)
    blob_path = path.with_suffix(".bin")
    entries, chunks, offset = [], [], 0
    for name in model.params:
        arr = np.ascontiguousarray(model.params[name].data, dtype="<f4")
        entries.append({"name": name, "shape": list(arr.shape), "dtype": "float32", "byte_offset": offset})
        chunks.append(arr.tobytes())
        offset += arr.nbytes
    manifest = {
        "format_version": FORMAT_VERSION,
        "model_config": model.config.to_dict(),
        "blob": blob_path.name,
        "blob_bytes": offset,
        "params": entries,
    }
    if extra:
        manifest["extra"] = extra
    blob_path.write_bytes(b"".join(chunks))
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def load_checkpoint(path) -> TaylorModel:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint manifest not found: {path}")
    try:
        manifest = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: manifest is not valid JSON ({exc})") from exc
    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format_version {version!r}")
    cfg = TaylorConfig.from_dict(manifest["model_config"])
    blob_path = path.parent / manifest["blob"]
    if not blob_path.is_file():
        raise CheckpointError(f"checkpoint blob not found: {blob_path}")
    blob = blob_path.read_bytes()
    values = {}
    for e in manifest["params"]:
        n = int(np.prod(e["shape"], dtype=np.int64))
        start = e["byte_offset"]
        if e.get("dtype") != "float32" or start + 4 * n > len(blob):
            raise CheckpointError(f"{path}: bad entry for {e['name']}")
        values[e["name"]] = np.frombuffer(blob, dtype="<f4", count=n, offset=start).reshape(e["shape"])
    model = TaylorModel(cfg)
    try:
        model.load_state(values)
    except ValueError as exc:
        raise CheckpointError(f"{path}: checkpoint does not match its model config ({exc})") from exc
    return model
