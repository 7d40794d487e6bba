"""Checkpoint directory format.

A checkpoint is a directory holding:
  meta.json    - model kind, task, dimensions, and a parameter manifest
                 (name, shape, element offset) in declaration order
  weights.bin  - all parameters concatenated as little-endian float32
  vocab.txt    - one token per line, line index = id
"""

from __future__ import annotations

import json
import os
from typing import Optional

import numpy as np

from . import config as cfg
from .config import RunConfig, config_from_dict, config_to_dict
from .data import Vocabulary
from .errors import CheckpointError
from .model import BaseModel, build_model

FORMAT_VERSION = 1

META_FILE = "meta.json"
WEIGHTS_FILE = "weights.bin"
VOCAB_FILE = "vocab.txt"


def save(model: BaseModel, vocab: Vocabulary, directory) -> None:
    os.makedirs(directory, exist_ok=True)
    manifest = []
    chunks = []
    offset = 0
    for name, tensor in model.parameters().items():
        flat = np.ascontiguousarray(tensor.data, dtype="<f4").reshape(-1)
        manifest.append({"name": name, "shape": list(tensor.shape),
                         "offset": offset})
        chunks.append(flat)
        offset += flat.size
    meta = {
        "format_version": FORMAT_VERSION,
        "config": config_to_dict(model.config),
        "vocab_size": len(vocab),
        "manifest": manifest,
    }
    with open(os.path.join(directory, META_FILE), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    np.concatenate(chunks).tofile(os.path.join(directory, WEIGHTS_FILE))
    vocab.save(os.path.join(directory, VOCAB_FILE))


def load(directory) -> tuple[BaseModel, Vocabulary, RunConfig]:
    meta_path = os.path.join(directory, META_FILE)
    if not os.path.isfile(meta_path):
        raise CheckpointError(f"not a checkpoint directory: {directory}")
    with open(meta_path, encoding="utf-8") as fh:
        meta = json.load(fh)
    if meta.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint format {meta.get('format_version')!r}"
        )
    config = config_from_dict(meta["config"])
    vocab = Vocabulary.load(os.path.join(directory, VOCAB_FILE))
    if len(vocab) != meta["vocab_size"]:
        raise CheckpointError(
            f"vocab size {len(vocab)} does not match manifest {meta['vocab_size']}"
        )
    weights = np.fromfile(os.path.join(directory, WEIGHTS_FILE), dtype="<f4")
    model = build_model(config, len(vocab), np.random.default_rng(config.seed))
    params = model.parameters()
    if [m["name"] for m in meta["manifest"]] != list(params):
        raise CheckpointError("manifest parameter names do not match the model")
    total = 0
    for entry in meta["manifest"]:
        tensor = params[entry["name"]]
        shape = tuple(entry["shape"])
        if shape != tensor.shape:
            raise CheckpointError(
                f"{entry['name']}: checkpoint shape {shape} vs model {tensor.shape}"
            )
        size = int(np.prod(shape))
        chunk = weights[entry["offset"]: entry["offset"] + size]
        if chunk.size != size:
            raise CheckpointError(f"{entry['name']}: weights file truncated")
        tensor.data[...] = chunk.reshape(shape).astype(tensor.dtype)
        total += size
    if total != weights.size:
        raise CheckpointError("weights file holds extra data past the manifest")
    return model, vocab, config
