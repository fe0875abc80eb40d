"""Training loops for the plain, physics-informed, sequence, and
saturation-target variants. Curves for every constituent loss are logged per
epoch to CSV; the checkpoint keeps the best validation composite loss.
Runs are deterministic under a fixed seed up to framework nondeterminism
(CPU kernels are deterministic in practice; thread count does not change
batch order)."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .data import PairData, SequenceData, augment_batch
from .io import Dataset, read_kernel
from .losses import composite_loss, kernel_misfit
from .model import build_model
from .specs import NetSpec, TrainConfig

CURVE_COLUMNS = ("epoch", "l_gdl", "l_reg", "l_ae", "l_total", "split")


@dataclass
class TrainResult:
    checkpoint: Path
    curves: list[dict] = field(default_factory=list)
    best_val: float = float("inf")
    best_epoch: int = -1

    def series(self, split: str, key: str = "l_total") -> list[float]:
        return [row[key] for row in self.curves if row["split"] == split]


def _batches(n: int, batch_size: int, gen: torch.Generator):
    order = torch.randperm(n, generator=gen)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def _epoch_pass(model, data, cfg, spec, kernel, gen, train: bool, optimizer=None):
    model.train(train)
    sums: dict[str, float] = {}
    count = 0
    for idx in _batches(len(data), cfg.batch_size, gen):
        batch = data.batch(idx)
        if train and cfg.augment:
            batch = augment_batch(batch, gen, cfg.noise_std)
        else:
            batch["map_clean"] = batch["map"]
        targets = {"volume": batch["volume"], "mask": batch["mask"]}
        with torch.set_grad_enabled(train):
            outputs = model(batch["map"])
            if "ae" in outputs:
                src = batch["map_clean"]
                if src.dim() == 5:  # sequences: reconstruct the last frame
                    src = src[:, -1]
                targets["map"] = model.resize_input(src)
            parts = composite_loss(outputs, targets, cfg.loss_weights, cfg.class_weights)
            loss = parts["l_total"]
            if kernel is not None and cfg.data_misfit_weight > 0 and "gravity_raw" in batch:
                parts["l_data"] = kernel_misfit(kernel, outputs["reg"], batch["gravity_raw"])
                loss = loss + cfg.data_misfit_weight * parts["l_data"]
                parts["l_total_with_data"] = loss
        if train:
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
        bs = len(idx)
        count += bs
        for k, v in parts.items():
            sums[k] = sums.get(k, 0.0) + float(v.detach()) * bs
    return {k: v / count for k, v in sums.items()}


def train(
    dataset_root: Path,
    spec: NetSpec,
    cfg: TrainConfig,
    out_dir: Path,
    kernel_root: Path | None = None,
) -> TrainResult:
    """Train one model over a dataset directory; returns curves + checkpoint.

    The physics variant requires the dense kernel side file (kernel_root
    defaults to the dataset directory). Sequence specs train on the windows
    listed in the dataset's sequences.json.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(cfg.seed)
    gen = torch.Generator().manual_seed(cfg.seed + 1)

    dataset = Dataset(dataset_root)
    if cfg.class_weights == (1.0, 1.0):
        cfg.class_weights = tuple(dataset.class_weights)

    if spec.variant == "lstm":
        all_data = SequenceData(dataset, target=cfg.target)
        n_val = max(1, len(all_data) // 10) if len(all_data) > 2 else 0
        train_idx = list(range(len(all_data) - n_val))
        val_idx = list(range(len(all_data) - n_val, len(all_data))) or train_idx
        train_data = _subset_sequences(all_data, train_idx)
        val_data = _subset_sequences(all_data, val_idx)
    else:
        train_ids = dataset.sample_ids("train")
        val_ids = dataset.sample_ids("val") or train_ids
        if not train_ids:
            raise ValueError("dataset has an empty training split")
        train_data = PairData(dataset, train_ids, target=cfg.target)
        val_data = PairData(dataset, val_ids, target=cfg.target)

    kernel = None
    if spec.variant == "physics":
        kernel = torch.from_numpy(
            read_kernel(kernel_root or dataset_root).astype(np.float32)
        )

    model = build_model(spec)
    scale = float(train_data.volumes.abs().amax())
    model.core.reg_gain.fill_(max(scale, 1.0))
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    scheduler = torch.optim.lr_scheduler.CosineAnnealingWarmRestarts(
        optimizer, T_0=cfg.restart_period
    )

    result = TrainResult(checkpoint=out_dir / "checkpoint.pt")
    for epoch in range(cfg.epochs):
        train_losses = _epoch_pass(model, train_data, cfg, spec, kernel, gen, True, optimizer)
        val_losses = _epoch_pass(model, val_data, cfg, spec, kernel, gen, False)
        scheduler.step()
        for split, losses in (("train", train_losses), ("val", val_losses)):
            row = {"epoch": epoch, "split": split}
            row.update({k: losses.get(k, 0.0) for k in ("l_gdl", "l_reg", "l_ae", "l_total")})
            for extra in ("l_data", "l_total_with_data"):
                if extra in losses:
                    row[extra] = losses[extra]
            result.curves.append(row)
        score = val_losses["l_total"]
        if score < result.best_val:
            result.best_val = score
            result.best_epoch = epoch
            torch.save(
                {
                    "state_dict": model.state_dict(),
                    "spec": spec.to_dict(),
                    "cfg": cfg.to_dict(),
                },
                result.checkpoint,
            )

    _write_curves(out_dir / "curves.csv", result.curves)
    return result


def _subset_sequences(data: SequenceData, idx: list[int]) -> SequenceData:
    sub = SequenceData.__new__(SequenceData)
    sub.ids = [data.ids[i] for i in idx]
    sub.sequences = data.sequences[idx]
    sub.volumes = data.volumes[idx]
    sub.masks = data.masks[idx]
    return sub


def _write_curves(path: Path, rows: list[dict]) -> None:
    columns = list(CURVE_COLUMNS)
    for extra in ("l_data", "l_total_with_data"):
        if any(extra in r for r in rows):
            columns.append(extra)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, restval="")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in columns})


def train_dice(model, data: PairData | SequenceData, threshold: float = 0.5) -> float:
    """Mean overlap of thresholded segmentations against the true masks."""
    model.eval()
    scores = []
    with torch.no_grad():
        for i in range(len(data)):
            batch = data.batch(torch.tensor([i]))
            seg = model(batch["map"])["seg"]
            pred = (seg > threshold).float().reshape(-1)
            truth = batch["mask"].reshape(-1)
            denom = pred.sum() + truth.sum()
            scores.append(1.0 if denom == 0 else float(2 * (pred * truth).sum() / denom))
    return float(np.mean(scores))
