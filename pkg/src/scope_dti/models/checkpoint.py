"""Single-file checkpoints: named tensors plus a manifest."""

from __future__ import annotations

from dataclasses import asdict
from pathlib import Path

import torch

from .variants import ModelConfig, ScopeModel

CHECKPOINT_FORMAT_VERSION = 1


def save_checkpoint(model: ScopeModel, path: str | Path, **manifest_extra) -> None:
    manifest = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "config": asdict(model.config),
        **manifest_extra,
    }
    torch.save({"manifest": manifest, "tensors": model.state_dict()}, str(path))


def load_checkpoint(path: str | Path) -> tuple[ScopeModel, dict]:
    payload = torch.load(str(path), map_location="cpu", weights_only=False)
    manifest = payload["manifest"]
    if manifest["format_version"] != CHECKPOINT_FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format {manifest['format_version']}")
    cfg = dict(manifest["config"])
    for key in ("node_hidden", "edge_hidden", "cnn_kernels"):
        if key in cfg and isinstance(cfg[key], list):
            cfg[key] = tuple(cfg[key])
    model = ScopeModel(ModelConfig(**cfg))
    model.load_state_dict(payload["tensors"])
    model.eval()
    return model, manifest
