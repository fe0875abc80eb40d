"""Training losses: weighted soft-overlap, regression/reconstruction MSE,
their fixed-weight composite, and the station-space kernel misfit used by
the physics-informed variant. Formulas match the evaluation toolchain that
scores the same files."""

from __future__ import annotations

import torch


def gdl_loss(pred_soft: torch.Tensor, truth: torch.Tensor, w_bg: float, w_fg: float) -> torch.Tensor:
    """Two-class weighted soft overlap loss; 0 = perfect, 1 = total miss."""
    p = pred_soft.reshape(-1)
    t = truth.reshape(-1)
    num = w_fg * (t * p).sum() + w_bg * ((1 - t) * (1 - p)).sum()
    den = w_fg * (t * t + p * p).sum() + w_bg * ((1 - t) ** 2 + (1 - p) ** 2).sum()
    return 1.0 - 2.0 * num / den


def gdl_loss_batched(pred_soft: torch.Tensor, truth: torch.Tensor, w_bg: float, w_fg: float) -> torch.Tensor:
    """Overlap loss per batch element, averaged.

    Each element is one full volume instance of the loss formula; averaging
    keeps small plumes from being swamped by large ones in the same batch.
    """
    b = pred_soft.shape[0]
    p = pred_soft.reshape(b, -1)
    t = truth.reshape(b, -1)
    num = w_fg * (t * p).sum(dim=1) + w_bg * ((1 - t) * (1 - p)).sum(dim=1)
    den = w_fg * (t * t + p * p).sum(dim=1) + w_bg * ((1 - t) ** 2 + (1 - p) ** 2).sum(dim=1)
    return (1.0 - 2.0 * num / den).mean()


def mse(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    return ((a - b) ** 2).mean()


def composite_loss(
    outputs: dict,
    targets: dict,
    weights: tuple[float, float, float],
    class_weights: tuple[float, float],
) -> dict:
    """Weighted sum of regression, overlap, and reconstruction terms.

    Returns each constituent plus the total, so callers can log curves.
    """
    w_reg, w_gdl, w_ae = weights
    w_bg, w_fg = class_weights
    seg, mask = outputs["seg"], targets["mask"]
    if seg.dim() >= 2 and seg.shape[0] > 1:
        l_gdl = gdl_loss_batched(seg, mask, w_bg, w_fg)
    else:
        l_gdl = gdl_loss(seg, mask, w_bg, w_fg)
    parts = {
        "l_reg": mse(outputs["reg"], targets["volume"]),
        "l_gdl": l_gdl,
    }
    if "ae" in outputs and "map" in targets:
        parts["l_ae"] = mse(outputs["ae"], targets["map"])
    else:
        parts["l_ae"] = torch.zeros((), dtype=parts["l_reg"].dtype)
    parts["l_total"] = w_reg * parts["l_reg"] + w_gdl * parts["l_gdl"] + w_ae * parts["l_ae"]
    return parts


def kernel_misfit(kernel: torch.Tensor, reg_out: torch.Tensor, gravity_raw: torch.Tensor) -> torch.Tensor:
    """Mean squared station misfit of the forward response of a prediction.

    kernel is (stations, cells) with x-fastest cell columns; reg_out is
    (B, 1, nz, ny, nx), whose flattening is x-fastest; gravity_raw is
    (B, stations) in uGal.
    """
    flat = reg_out.reshape(reg_out.shape[0], -1)
    pred_g = flat @ kernel.T
    return mse(pred_g, gravity_raw)
