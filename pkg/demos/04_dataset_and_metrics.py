"""Build a small dataset on disk and score inversions over its test split.

Covers the dataset format (payloads + checksums + manifest), the 90/10
split with validation carve-out and five folds, frozen class weights, and
the evaluation report layout.
"""

import tempfile
from pathlib import Path

from gravplume import EvalReport, InversionConfig, dice, invert, mse_data, mse_model, nonzero_mask, r_squared
from gravplume.dataset import load_dataset, read_sample, sample_dir
from gravplume.forward import ForwardOperator
from gravplume.workbench import WorkbenchConfig, generate_dataset

root = Path(tempfile.mkdtemp()) / "demo_dataset"
cfg = WorkbenchConfig(nx=8, ny=8, nz=8, dz=112.5, sensor_spacing=1000.0)
manifest = generate_dataset(root, n=24, seed=3, cfg=cfg)

print(f"dataset at {root}")
print(f"splits: train {len(manifest.splits['train'])}, "
      f"val {len(manifest.splits['val'])}, test {len(manifest.splits['test'])}")
print(f"folds: {[len(f) for f in manifest.folds]}")
w_bg, w_fg = manifest.class_weights
print(f"frozen class weights: background {w_bg:.4f}, foreground {w_fg:.4f} "
      f"(sum {w_bg + w_fg:.1f})")

manifest, grid, sensors = load_dataset(root)
op = ForwardOperator(grid, sensors)
report = EvalReport()
for sid in manifest.splits["test"]:
    record = read_sample(sample_dir(root, sid), grid, sensors)
    res = invert(op, record.gravity_raw, InversionConfig())
    truth = record.density_change
    report.add(
        sid,
        mse_model=mse_model(res.model, truth),
        mse_data=mse_data(op, res.model, record.gravity_raw),
        r_squared=r_squared(res.model, truth),
        dice=dice(nonzero_mask(res.model), record.plume_mask),
    )

print("\nleast-squares inversion over the test split:")
for name, stats in report.aggregate().items():
    print(f"  {name:>10}: {stats['mean']:10.4g} +/- {stats['std']:.4g} "
          f"(median {stats['median']:.4g}, p25 {stats['p25']:.4g}, p75 {stats['p75']:.4g})")
print("\n(data misfit ~0 while the model metrics stay imperfect: the classic "
      "ill-posedness of potential-field inversion)")
