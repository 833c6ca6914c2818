"""Checkpoint container, safetensors files and weight averaging."""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import torch
from safetensors.torch import load_file, safe_open, save_file
from torch import Tensor

from .transformer import ModelConfig, Seq2SeqTransformer
from .vocab import Vocabulary

FORMAT_VERSION = "1"
META_KEY = "rxnaug"


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    params: dict[str, Tensor]
    epoch: int
    train_exact_match: float
    config: ModelConfig | None = None
    vocab: Vocabulary | None = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_model(cls, model: Seq2SeqTransformer, epoch: int, train_exact_match: float,
                   vocab: Vocabulary | None = None) -> Checkpoint:
        params = {k: v.detach().clone() for k, v in model.state_dict().items()}
        return cls(params, epoch, train_exact_match, model.config, vocab)

    def build_model(self) -> Seq2SeqTransformer:
        if self.config is None or self.vocab is None:
            raise CheckpointError("checkpoint lacks the model config or vocabulary needed to rebuild it")
        model = Seq2SeqTransformer(self.config, len(self.vocab))
        model.load_state_dict(self.params)
        model.eval()
        return model


def _contiguous_strides(shape) -> list[int]:
    strides, acc = [], 1
    for dim in reversed(shape):
        strides.append(acc)
        acc *= dim
    return strides[::-1]


def save_checkpoint(ckpt: Checkpoint, path: str | os.PathLike) -> None:
    """Write atomically: a temporary file in the target directory, then rename."""
    tensors = {k: v.detach().contiguous().cpu() for k, v in ckpt.params.items()}
    meta = {
        "format_version": FORMAT_VERSION,
        "epoch": ckpt.epoch,
        "train_exact_match": float(ckpt.train_exact_match),
        "shapes": {k: list(v.shape) for k, v in tensors.items()},
        "strides": {k: list(v.stride()) for k, v in tensors.items()},
        "extra": ckpt.extra,
        "config": None if ckpt.config is None else ckpt.config.to_dict(),
        "vocab": None if ckpt.vocab is None else ckpt.vocab.to_dict(),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=path.name, suffix=".tmp", dir=path.parent)
    os.close(fd)
    try:
        # one metadata key: safetensors writes several keys in hash order, breaking byte-identical reruns
        save_file(tensors, tmp, metadata={META_KEY: json.dumps(meta, sort_keys=True)})
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def load_checkpoint(path: str | os.PathLike) -> Checkpoint:
    path = Path(path)
    try:
        with safe_open(str(path), framework="pt") as f:
            raw = (f.metadata() or {}).get(META_KEY, "{}")
        meta = json.loads(raw)
    except Exception as exc:  # safetensors raises its own error types
        raise CheckpointError(f"{path}: not a readable checkpoint ({exc})") from exc
    version = meta.get("format_version") if isinstance(meta, dict) else None
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint format version {version!r}")
    params = load_file(str(path))
    shapes, strides = meta["shapes"], meta["strides"]
    if set(shapes) != set(params):
        raise CheckpointError(f"{path}: tensor names disagree with the recorded metadata")
    for name, tensor in params.items():
        if list(tensor.shape) != shapes[name] or strides[name] != _contiguous_strides(shapes[name]):
            raise CheckpointError(f"{path}: tensor {name} does not match its recorded shape/strides")
    config = ModelConfig.from_dict(meta["config"]) if meta.get("config") else None
    vocab = Vocabulary.from_dict(meta["vocab"]) if meta.get("vocab") else None
    return Checkpoint(params, int(meta["epoch"]), float(meta["train_exact_match"]), config, vocab,
                      meta.get("extra") or {})


def average_checkpoints(ckpts: Sequence[Checkpoint]) -> Checkpoint:
    """Element-wise mean of every tensor, accumulated in float64.

    The result carries the newest member epoch and an unknown (NaN) train
    accuracy, which the caller measures.
    """
    if not ckpts:
        raise CheckpointError("no checkpoints to average")
    keys = set(ckpts[0].params)
    for c in ckpts[1:]:
        if set(c.params) != keys:
            raise CheckpointError("checkpoints have different parameter names")
    averaged = {}
    for name, first in ckpts[0].params.items():
        for c in ckpts[1:]:
            if c.params[name].shape != first.shape:
                raise CheckpointError(f"shape mismatch for {name}: {tuple(first.shape)} vs {tuple(c.params[name].shape)}")
        if not first.is_floating_point():
            averaged[name] = first.clone()
            continue
        total = torch.zeros(first.shape, dtype=torch.float64)
        for c in ckpts:
            total += c.params[name].double()
        averaged[name] = (total / len(ckpts)).to(first.dtype)
    return Checkpoint(averaged, max(c.epoch for c in ckpts), math.nan, ckpts[0].config, ckpts[0].vocab,
                      {"averaged_epochs": [c.epoch for c in ckpts]})
