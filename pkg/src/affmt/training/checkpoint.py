"""Checkpoints: a manifest JSON plus raw little-endian float32 tensor blobs.

Layout of a checkpoint directory:

* ``manifest.json`` - step, config fingerprint, full config, counters,
  base64 RNG state, and a tensor index (name -> offset/shape/dtype).
* ``tensors.bin`` - all tensors concatenated as little-endian float32.

Integer tensors (batch-norm counters) are cast to float32 in the blob and
restored to their original dtype on load; their values stay far below the
float32 exact-integer limit. Restoring resumes bit-identically on the
same platform and precision.
"""

from __future__ import annotations

import base64
import hashlib
import json
from dataclasses import asdict
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
import torch

from affmt.errors import CheckpointError
from affmt.training.config import (
    GANTrainConfig,
    MTTrainConfig,
    config_fingerprint,
    config_from_dict,
)

FORMAT_VERSION = 1


def save_checkpoint(trainer, path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)

    index: Dict[str, dict] = {}
    chunks = []
    offset = 0
    for name, tensor in trainer.named_tensors().items():
        arr = tensor.detach().cpu().numpy()
        blob = arr.astype("<f4").tobytes()
        index[name] = {
            "offset": offset,
            "shape": list(arr.shape),
            "dtype": str(arr.dtype),
        }
        chunks.append(blob)
        offset += len(blob)
    blob = b"".join(chunks)

    manifest = {
        "format": FORMAT_VERSION,
        "kind": trainer.kind,
        "step": trainer.step,
        "fingerprint": config_fingerprint(trainer.config, trainer.kind),
        "config": asdict(trainer.config),
        "counters": trainer.counters(),
        "rng": base64.b64encode(trainer.rng_state()).decode("ascii"),
        "tensors": index,
        "blob_sha256": hashlib.sha256(blob).hexdigest(),
    }
    (path / "tensors.bin").write_bytes(blob)
    (path / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )
    return path


def read_manifest(path) -> dict:
    manifest_path = Path(path) / "manifest.json"
    if not manifest_path.exists():
        raise CheckpointError(f"no manifest at {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as e:
        raise CheckpointError(f"corrupt manifest: {e}") from e
    if manifest.get("format") != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint format {manifest.get('format')}")
    return manifest


def load_checkpoint(
    path,
    config: Optional[Union[GANTrainConfig, MTTrainConfig]] = None,
):
    """Rebuild a trainer from a checkpoint directory.

    If a config is supplied its fingerprint must match the checkpoint's;
    a mismatch is refused rather than silently reinterpreted.
    """
    from affmt.training.gan import GANTrainer
    from affmt.training.multitask import MultiTaskTrainer

    path = Path(path)
    manifest = read_manifest(path)
    kind = manifest["kind"]

    stored_config = config_from_dict(kind, manifest["config"])
    if config is not None:
        if config_fingerprint(config, kind) != manifest["fingerprint"]:
            raise CheckpointError(
                "config fingerprint mismatch: checkpoint was written with a "
                "different configuration"
            )
        stored_config = config

    blob = (path / "tensors.bin").read_bytes()
    if hashlib.sha256(blob).hexdigest() != manifest["blob_sha256"]:
        raise CheckpointError("tensor blob failed its integrity check")

    trainer = (
        GANTrainer(stored_config) if kind == "gan" else MultiTaskTrainer(stored_config)
    )

    tensors: Dict[str, torch.Tensor] = {}
    for name, entry in manifest["tensors"].items():
        count = int(np.prod(entry["shape"])) if entry["shape"] else 1
        start = entry["offset"]
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=start)
        arr = arr.reshape(entry["shape"]).astype(entry["dtype"])
        tensors[name] = torch.from_numpy(arr.copy())
    expected = set(trainer.named_tensors())
    if expected != set(tensors):
        missing = expected ^ set(tensors)
        raise CheckpointError(f"tensor index mismatch: {sorted(missing)[:5]}")
    trainer.load_tensors(tensors)
    trainer.set_counters(manifest["counters"])
    raw = base64.b64decode(manifest["rng"])
    if raw:
        trainer.set_rng_state(raw)
    return trainer
