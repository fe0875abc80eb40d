"""Inference over stored gravity maps, writing predictions in the
interchange format so the evaluation and refinement toolchain can consume
them directly."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from .data import PairData
from .io import Dataset, write_prediction
from .model import build_model
from .specs import NetSpec, TrainConfig


def load_checkpoint(path: Path):
    payload = torch.load(path, map_location="cpu", weights_only=False)
    spec = NetSpec(**payload["spec"])
    cfg = TrainConfig(**{k: tuple(v) if isinstance(v, list) else v for k, v in payload["cfg"].items()})
    model = build_model(spec)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, spec, cfg


def _check_normalized(maps: torch.Tensor) -> None:
    flat = maps.reshape(maps.shape[0], -1)
    mean = flat.mean(dim=1).abs().max()
    std = (flat.std(dim=1, unbiased=False) - 1).abs().max()
    if float(mean) > 1e-3 or float(std) > 1e-2:
        raise ValueError("input maps are not z-scored; predict expects gravity_norm")


def _to_native(volume: torch.Tensor, dims: tuple[int, int, int]) -> torch.Tensor:
    if tuple(volume.shape[-3:]) == dims:
        return volume
    return F.interpolate(volume, size=dims, mode="trilinear", align_corners=False)


def predict(
    checkpoint: Path,
    dataset_root: Path,
    out_dir: Path,
    split: str = "test",
    ids: list[str] | None = None,
) -> list[str]:
    """Predict volumes for a split and write one prediction dir per sample.

    Each directory holds the regression volume (resampled to the dataset's
    native grid), the soft segmentation, the reconstructed map, and the map
    the autoencoder was asked to reconstruct.
    """
    model, spec, cfg = load_checkpoint(checkpoint)
    dataset = Dataset(dataset_root)
    sample_ids = ids if ids is not None else dataset.sample_ids(split)
    if not sample_ids:
        raise ValueError(f"no samples in split {split!r}")
    data = PairData(dataset, sample_ids, target=cfg.target)
    _check_normalized(data.maps)

    volume_name = "density" if cfg.target == "density" else "saturation"
    units = {"density": "kg/m^3", "saturation": "fraction", "seg": "probability"}
    written = []
    with torch.no_grad():
        for i, sid in enumerate(sample_ids):
            maps = data.maps[i : i + 1]
            out = model(maps)
            reg = _to_native(out["reg"], dataset.dims)
            seg = _to_native(out["seg"], dataset.dims).clamp(0.0, 1.0)
            if cfg.target == "saturation":
                reg = reg.clamp(0.0, 1.0)
            fields = {
                volume_name: reg.squeeze().numpy(),
                "seg": seg.squeeze().numpy(),
            }
            if "ae" in out:
                fields["recon_gravity"] = out["ae"].squeeze().numpy()
                fields["target_gravity"] = model.resize_input(maps).squeeze().numpy()
            write_prediction(out_dir, sid, fields, units)
            written.append(sid)
    return written
