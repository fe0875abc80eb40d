"""Evaluation metrics and loss values shared across the toolchain.

Volume metrics (model MSE, R-squared, Dice) compare predicted and true
density models; the data metric compares the gravity response of a
prediction with the observed map. The class-weighted soft-overlap loss and
its class weights live here too so that any trainer scoring the same files
reproduces identical numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .forward import ForwardOperator
from .grids import FieldKind, GravityMap, VolumeField

# Continuous fields count as "plume" where |value| exceeds this, in kg/m^3.
NONZERO_EPS = 1e-6


def _values(x) -> np.ndarray:
    return x.values if isinstance(x, VolumeField) else np.asarray(x, dtype=np.float64).ravel()


def _check_pair(pred: VolumeField, truth: VolumeField):
    if not pred.grid.same_layout(truth.grid):
        raise ValueError("fields are not on the same grid")
    if pred.kind is not truth.kind:
        raise ValueError("fields have different kinds")


def mse_model(pred: VolumeField, truth: VolumeField) -> float:
    """Mean squared error over all cells (kg^2/m^6 for density fields)."""
    _check_pair(pred, truth)
    d = pred.values - truth.values
    return float(np.mean(d * d))


def mse_data(op: ForwardOperator, pred: VolumeField, observed_raw: GravityMap) -> float:
    """Mean squared station misfit (uGal^2) between forward(pred) and the data."""
    if observed_raw.normalized:
        raise ValueError("mse_data requires a raw (uGal) map")
    g = op.forward(pred).values
    d = g - observed_raw.values
    return float(np.mean(d * d))


def r_squared(pred: VolumeField, truth: VolumeField) -> float:
    """Coefficient of determination of pred against truth over all cells."""
    _check_pair(pred, truth)
    t = truth.values
    sst = float(np.sum((t - t.mean()) ** 2))
    if sst == 0.0:
        raise ValueError("r_squared undefined for a constant truth field")
    sse = float(np.sum((t - pred.values) ** 2))
    return 1.0 - sse / sst


def nonzero_mask(model: VolumeField, eps: float = NONZERO_EPS) -> VolumeField:
    """Binary support mask of a continuous field (|value| > eps)."""
    return VolumeField(
        model.grid, (np.abs(model.values) > eps).astype(np.float64), FieldKind.BINARY_MASK
    )


def dice(pred_mask, truth_mask) -> float:
    """Overlap score 2|P&T| / (|P|+|T|); two empty masks agree perfectly (1)."""
    p = _values(pred_mask)
    t = _values(truth_mask)
    if p.size != t.size:
        raise ValueError("masks differ in size")
    for v in (p, t):
        if not np.all((v == 0.0) | (v == 1.0)):
            raise ValueError("dice requires binary masks")
    denom = p.sum() + t.sum()
    if denom == 0.0:
        return 1.0
    return float(2.0 * np.sum(p * t) / denom)


def class_weights(n_bg: int, n_fg: int) -> tuple[float, float]:
    """Inverse-frequency class weights for two classes; they sum to 2."""
    if n_bg <= 0 or n_fg <= 0:
        raise ValueError("both class counts must be positive")
    total = n_bg + n_fg
    return (2.0 * n_fg / total, 2.0 * n_bg / total)


def gdl_loss(pred_soft, truth_mask, weights: tuple[float, float]) -> float:
    """Class-weighted soft overlap loss over background and foreground.

    pred_soft holds per-cell foreground probabilities in [0, 1]; the
    background channel is its complement. Zero for a perfect binary match,
    one for a total miss.
    """
    p = _values(pred_soft)
    t = _values(truth_mask)
    if p.size != t.size:
        raise ValueError("prediction and mask differ in size")
    if p.min() < 0.0 or p.max() > 1.0:
        raise ValueError("soft predictions must lie in [0, 1]")
    w_bg, w_fg = weights
    if w_bg <= 0 or w_fg <= 0:
        raise ValueError("class weights must be positive")
    num = w_fg * np.sum(t * p) + w_bg * np.sum((1.0 - t) * (1.0 - p))
    den = w_fg * np.sum(t * t + p * p) + w_bg * np.sum(
        (1.0 - t) ** 2 + (1.0 - p) ** 2
    )
    return float(1.0 - 2.0 * num / den)


_METRIC_NAMES = ("mse_model", "mse_data", "r_squared", "dice")


@dataclass
class EvalReport:
    """Per-sample metric values plus Table-style aggregates."""

    per_sample: list[dict] = field(default_factory=list)

    def add(self, sample_id: str, **metrics: float):
        row = {"id": sample_id}
        row.update({k: float(v) for k, v in metrics.items()})
        if "dice" in row and not 0.0 <= row["dice"] <= 1.0:
            raise ValueError("dice out of [0, 1]")
        self.per_sample.append(row)

    def metric_names(self) -> list[str]:
        names = [n for n in _METRIC_NAMES if any(n in r for r in self.per_sample)]
        extra = sorted(
            {k for r in self.per_sample for k in r} - set(names) - {"id"}
        )
        return names + extra

    def aggregate(self) -> dict:
        out = {}
        for name in self.metric_names():
            vals = np.array([r[name] for r in self.per_sample if name in r])
            if vals.size == 0:
                continue
            p25, p50, p75 = np.percentile(vals, [25, 50, 75])
            if not p25 <= p50 <= p75:
                raise ValueError("percentiles out of order")
            out[name] = {
                "mean": float(vals.mean()),
                "std": float(vals.std()),
                "median": float(p50),
                "p25": float(p25),
                "p75": float(p75),
            }
        return out

    def to_dict(self) -> dict:
        return {"aggregate": self.aggregate(), "per_sample": self.per_sample}

    def to_csv_rows(self) -> list[list]:
        names = self.metric_names()
        rows = [["id"] + names]
        for r in self.per_sample:
            rows.append([r["id"]] + [r.get(n, "") for n in names])
        return rows
