"""In-memory tensors for desk-scale training plus paired augmentation."""

from __future__ import annotations

import numpy as np
import torch

from .io import Dataset


class PairData:
    """Gravity maps with their target volumes and masks for a list of samples."""

    def __init__(self, dataset: Dataset, ids: list[str], target: str = "density"):
        if not ids:
            raise ValueError("empty sample list")
        self.ids = list(ids)
        volume_field = "density" if target == "density" else "saturation"
        maps, vols, masks, raws = [], [], [], []
        for sid in self.ids:
            maps.append(dataset.load_map(sid, "gravity_norm"))
            vols.append(dataset.load_volume(sid, volume_field))
            masks.append(dataset.load_volume(sid, "mask"))
            raws.append(dataset.load_map(sid, "gravity_raw"))
        self.maps = torch.from_numpy(np.stack(maps)).unsqueeze(1)
        self.volumes = torch.from_numpy(np.stack(vols)).unsqueeze(1)
        self.masks = torch.from_numpy(np.stack(masks)).unsqueeze(1)
        self.gravity_raw = torch.from_numpy(np.stack(raws)).reshape(len(ids), -1)

    def __len__(self):
        return len(self.ids)

    def batch(self, idx: torch.Tensor) -> dict:
        return {
            "map": self.maps[idx],
            "volume": self.volumes[idx],
            "mask": self.masks[idx],
            "gravity_raw": self.gravity_raw[idx],
        }


class SequenceData:
    """Length-ten map sequences with the target volume at the last step."""

    def __init__(self, dataset: Dataset, target: str = "density"):
        windows = dataset.load_sequences()
        volume_field = "density" if target == "density" else "saturation"
        seqs, vols, masks = [], [], []
        for w in windows:
            frames = [dataset.load_map(sid, "gravity_norm") for sid in w["input_ids"]]
            seqs.append(np.stack(frames))
            vols.append(dataset.load_volume(w["target_id"], volume_field))
            masks.append(dataset.load_volume(w["target_id"], "mask"))
        self.ids = [w["target_id"] for w in windows]
        self.sequences = torch.from_numpy(np.stack(seqs)).unsqueeze(2)  # (N,10,1,H,W)
        self.volumes = torch.from_numpy(np.stack(vols)).unsqueeze(1)
        self.masks = torch.from_numpy(np.stack(masks)).unsqueeze(1)

    def __len__(self):
        return len(self.ids)

    def batch(self, idx: torch.Tensor) -> dict:
        return {
            "map": self.sequences[idx],
            "volume": self.volumes[idx],
            "mask": self.masks[idx],
        }


def augment_batch(batch: dict, gen: torch.Generator, noise_std: float) -> dict:
    """Random x/y flips applied jointly to maps and volumes, plus input noise.

    Map axes are (y, x) = (-2, -1); volume axes are (z, y, x), so the same
    flip hits map axis -1 and volume axis -1 (x), map -2 and volume -2 (y).
    """
    out = dict(batch)
    maps = out["map"]
    vols = out["volume"]
    masks = out["mask"]
    if int(torch.randint(0, 2, (1,), generator=gen)):
        maps = torch.flip(maps, [-1])
        vols = torch.flip(vols, [-1])
        masks = torch.flip(masks, [-1])
        out.pop("gravity_raw", None)  # flipped maps no longer match station order
    if int(torch.randint(0, 2, (1,), generator=gen)):
        maps = torch.flip(maps, [-2])
        vols = torch.flip(vols, [-2])
        masks = torch.flip(masks, [-2])
        out.pop("gravity_raw", None)
    out["map_clean"] = maps
    if noise_std > 0:
        noise = torch.randn(maps.shape, generator=gen) * noise_std
        maps = maps + noise
    out["map"] = maps
    out["volume"] = vols
    out["mask"] = masks
    return out
