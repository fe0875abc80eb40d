"""Command-line front end for the gravity workbench.

Subcommands cover the whole synthetic workflow: `generate` a dataset,
`forward` model stored plumes (and export the dense kernel), `invert` and
`refine` observed maps, `evaluate` predictions, compute `split`
assignments, and window a time series into `sequences`. Every JSON output
carries a reproducibility block (seed, config hash, format version).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import dataset as dio
from .forward import ForwardOperator, KernelMode
from .grids import FieldKind, VolumeField
from .inversion import Constraint, InversionConfig, InversionResult, invert, refine
from .metrics import (
    EvalReport,
    dice,
    gdl_loss,
    mse_data,
    mse_model,
    nonzero_mask,
    r_squared,
)
from .inversion import threshold_model
from .workbench import ALLOWED_SPACINGS, WorkbenchConfig, generate_dataset


def _default_threads() -> int:
    env = os.environ.get("GRAVPLUME_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _repro_block(manifest: dio.DatasetManifest) -> dict:
    return manifest.extra.get("reproducibility", {})


def _load_config(args) -> WorkbenchConfig:
    if getattr(args, "config", None):
        cfg = WorkbenchConfig.from_dict(json.loads(Path(args.config).read_text()))
    else:
        cfg = WorkbenchConfig()
    for name in ("nx", "ny", "nz", "dx", "dy", "dz", "depth"):
        val = getattr(args, name, None)
        if val is not None:
            setattr(cfg, name, val)
    if getattr(args, "spacing", None) is not None:
        if args.spacing not in ALLOWED_SPACINGS and not args.any_spacing:
            raise ValueError(
                f"spacing {args.spacing} not in the configured set {ALLOWED_SPACINGS}; "
                "pass --any-spacing to override"
            )
        cfg.sensor_spacing = args.spacing
    if getattr(args, "time_series", False):
        cfg.time_series = True
    if getattr(args, "cadence", None) is not None:
        cfg.cadence_years = args.cadence
    return cfg


def _operator(grid, sensors, mode="dense_matrix") -> ForwardOperator:
    return ForwardOperator(grid, sensors, mode=KernelMode(mode))


def _read_prediction_volume(pred_dir: Path, sample_id: str, grid, name="density"):
    d = Path(pred_dir) / sample_id
    manifest = json.loads((d / "manifest.json").read_text())
    entry = manifest["fields"][name]
    if entry["count"] != grid.n_cells:
        raise dio.FormatError(f"{name}: wrong cell count for the dataset grid")
    return VolumeField(grid, dio.read_payload(d, entry), FieldKind.DENSITY_CHANGE)


def _maybe_read_field(pred_dir: Path, sample_id: str, name: str):
    d = Path(pred_dir) / sample_id
    manifest_path = d / "manifest.json"
    if not manifest_path.exists():
        return None
    manifest = json.loads(manifest_path.read_text())
    entry = manifest["fields"].get(name)
    if entry is None:
        return None
    return dio.read_payload(d, entry)


def _write_model_dir(out_dir: Path, sample_id: str, model: VolumeField, meta: dict):
    d = Path(out_dir) / sample_id
    d.mkdir(parents=True, exist_ok=True)
    entry = dio.write_payload(d, "density.f32", model.values)
    entry["units"] = "kg/m^3"
    manifest = {
        "format_version": dio.FORMAT_VERSION,
        "id": sample_id,
        "grid": dio.grid_spec(model.grid),
        "fields": {"density": entry},
    }
    manifest.update(meta)
    (d / "manifest.json").write_text(json.dumps(manifest, indent=1))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    cfg = _load_config(args)
    threads = args.threads or _default_threads()
    manifest = generate_dataset(args.out, args.n, args.seed, cfg, threads=threads)
    print(
        f"generated {len(manifest.samples)} samples -> {args.out} "
        f"(train {len(manifest.splits['train'])} / val {len(manifest.splits['val'])} "
        f"/ test {len(manifest.splits['test'])})"
    )
    return 0


def cmd_forward(args) -> int:
    manifest, grid, sensors = dio.load_dataset(args.dataset)
    op = _operator(grid, sensors)
    if args.export_kernel:
        meta = dio.write_kernel(op, args.dataset)
        print(f"kernel {meta['rows']}x{meta['cols']} -> {args.dataset}/kernel.f64")
    if args.sample:
        record = dio.read_sample(dio.sample_dir(args.dataset, args.sample), grid, sensors)
        gmap = op.forward(record.density_change)
        out = Path(args.out or args.dataset) / "forward" / args.sample
        out.mkdir(parents=True, exist_ok=True)
        entry = dio.write_payload(out, "gravity_fwd.f32", gmap.values)
        entry["units"] = "uGal"
        check = float(np.mean((gmap.values - record.gravity_raw.values) ** 2))
        (out / "manifest.json").write_text(
            json.dumps(
                {
                    "format_version": dio.FORMAT_VERSION,
                    "id": args.sample,
                    "fields": {"gravity_fwd": entry},
                    "mse_vs_stored_uGal2": check,
                    "reproducibility": _repro_block(manifest),
                },
                indent=1,
            )
        )
        print(f"forward({args.sample}) -> {out} (stored-map MSE {check:.3e} uGal^2)")
    return 0


def _invert_common(args, initial: VolumeField | None) -> tuple[InversionResult, dict]:
    manifest, grid, sensors = dio.load_dataset(args.dataset)
    op = _operator(grid, sensors)
    record = dio.read_sample(dio.sample_dir(args.dataset, args.sample), grid, sensors)
    cfg = InversionConfig(
        max_iters=args.max_iters,
        rel_residual_tol=args.tol,
        constraint=Constraint.UNCONSTRAINED if args.unconstrained else Constraint.MASKED,
        initial_model=initial,
        record_history=True,
    )
    if initial is None:
        result = invert(op, record.gravity_raw, cfg)
    else:
        result = refine(op, record.gravity_raw, initial, cfg)
    meta = {
        "constraint": cfg.constraint.value,
        "iterations": result.iterations,
        "converged": bool(result.converged),
        "data_misfit_history_uGal2": [float(h) for h in result.data_misfit_history],
        "station_mse_uGal2": float(result.data_misfit_history[-1] / sensors.n_stations),
        "reproducibility": _repro_block(manifest),
    }
    return result, meta


def cmd_invert(args) -> int:
    result, meta = _invert_common(args, None)
    _write_model_dir(args.out, args.sample, result.model, {"inversion": meta})
    print(
        f"invert({args.sample}): {meta['iterations']} iters, "
        f"station MSE {meta['station_mse_uGal2']:.3e} uGal^2 -> {args.out}"
    )
    return 0


def cmd_refine(args) -> int:
    _, grid, _ = dio.load_dataset(args.dataset)
    initial = _read_prediction_volume(args.predictions, args.sample, grid)
    result, meta = _invert_common(args, initial)
    _write_model_dir(args.out, args.sample, result.model, {"refinement": meta})
    hist = meta["data_misfit_history_uGal2"]
    print(
        f"refine({args.sample}): misfit {hist[0]:.3e} -> {hist[-1]:.3e} uGal^2 "
        f"in {meta['iterations']} iters -> {args.out}"
    )
    return 0


def cmd_evaluate(args) -> int:
    manifest, grid, sensors = dio.load_dataset(args.dataset)
    op = _operator(grid, sensors)
    w_bg, w_fg = manifest.class_weights
    if args.split == "all":
        ids = [s["id"] for s in manifest.samples]
    else:
        ids = list(manifest.splits[args.split])
    if not ids:
        raise ValueError(f"split '{args.split}' is empty")

    report = EvalReport()
    for sample_id in ids:
        record = dio.read_sample(dio.sample_dir(args.dataset, sample_id), grid, sensors)
        truth = record.density_change
        if args.predictions:
            pred = _read_prediction_volume(args.predictions, sample_id, grid)
        else:
            pred = truth  # identity sanity mode
        if args.threshold is not None:
            pred_mask = threshold_model(pred, args.threshold)
        else:
            pred_mask = nonzero_mask(pred)
        row = {
            "mse_model": mse_model(pred, truth),
            "mse_data": mse_data(op, pred, record.gravity_raw),
            "r_squared": r_squared(pred, truth),
            "dice": dice(pred_mask, record.plume_mask),
            "l_reg": mse_model(pred, truth),
        }
        if args.predictions:
            seg = _maybe_read_field(args.predictions, sample_id, "seg")
            if seg is not None:
                row["l_gdl"] = gdl_loss(seg, record.plume_mask.values, (w_bg, w_fg))
            recon = _maybe_read_field(args.predictions, sample_id, "recon_gravity")
            target = _maybe_read_field(args.predictions, sample_id, "target_gravity")
            if recon is not None:
                ref = target if target is not None else record.gravity_norm.values
                if recon.size == ref.size:
                    row["l_ae"] = float(np.mean((recon - ref) ** 2))
            if "l_gdl" in row and "l_ae" in row:
                row["l_total"] = 0.7 * row["l_reg"] + 0.25 * row["l_gdl"] + 0.05 * row["l_ae"]
        report.add(sample_id, **row)

    payload = report.to_dict()
    payload["class_weights"] = [w_bg, w_fg]
    payload["split"] = args.split
    payload["reproducibility"] = _repro_block(manifest)
    Path(args.report).parent.mkdir(parents=True, exist_ok=True)
    Path(args.report).write_text(json.dumps(payload, indent=1))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            csv.writer(fh).writerows(report.to_csv_rows())
    agg = payload["aggregate"]
    for name in ("mse_model", "mse_data", "r_squared", "dice"):
        a = agg[name]
        print(f"{name:>10}: {a['mean']:.4g} +/- {a['std']:.4g} (median {a['median']:.4g})")
    return 0


def cmd_split(args) -> int:
    split = dio.make_splits(args.n, args.seed)
    out = {
        "n": args.n,
        "seed": args.seed,
        "train": list(split.train),
        "val": list(split.val),
        "test": list(split.test),
        "folds": [list(f) for f in split.folds],
        "format_version": dio.FORMAT_VERSION,
    }
    Path(args.out).write_text(json.dumps(out, indent=1))
    print(
        f"split n={args.n}: train {len(split.train)} (+{len(split.val)} val) "
        f"/ test {len(split.test)}; folds {[len(f) for f in split.folds]}"
    )
    return 0


def cmd_sequences(args) -> int:
    manifest, grid, sensors = dio.load_dataset(args.dataset)
    records = [
        dio.read_sample(dio.sample_dir(args.dataset, s["id"]), grid, sensors)
        for s in manifest.samples
    ]
    records.sort(key=lambda r: r.time_step)
    sequences = dio.build_sequences(records)
    out = {
        "format_version": dio.FORMAT_VERSION,
        "sequence_length": dio.SEQUENCE_LENGTH,
        "sequences": [
            {
                "input_ids": list(s.sample_ids),
                "time_steps": list(s.time_steps),
                "target_id": s.sample_ids[-1],
            }
            for s in sequences
        ],
        "reproducibility": _repro_block(manifest),
    }
    Path(args.out).write_text(json.dumps(out, indent=1))
    print(f"{len(sequences)} sequences -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gravplume",
        description="Synthetic CO2-plume gravity workbench",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_grid_flags(p):
        p.add_argument("--config", help="JSON workbench config file")
        for name in ("nx", "ny", "nz"):
            p.add_argument(f"--{name}", type=int)
        for name in ("dx", "dy", "dz", "depth"):
            p.add_argument(f"--{name}", type=float)
        p.add_argument("--spacing", type=float, help="sensor spacing (m)")
        p.add_argument("--any-spacing", action="store_true",
                       help="allow spacings outside the configured set")

    g = sub.add_parser("generate", help="synthesize a dataset")
    add_grid_flags(g)
    g.add_argument("--out", required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--threads", type=int, default=None)
    g.add_argument("--time-series", action="store_true",
                   help="one realization sampled on a regular time grid")
    g.add_argument("--cadence", type=float, default=None, help="years between snapshots")
    g.set_defaults(func=cmd_generate)

    f = sub.add_parser("forward", help="forward-model a stored sample / export kernel")
    f.add_argument("--dataset", required=True)
    f.add_argument("--sample")
    f.add_argument("--out")
    f.add_argument("--export-kernel", action="store_true")
    f.set_defaults(func=cmd_forward)

    def add_invert_flags(p):
        p.add_argument("--dataset", required=True)
        p.add_argument("--sample", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--unconstrained", action="store_true")
        p.add_argument("--max-iters", type=int, default=500)
        p.add_argument("--tol", type=float, default=1e-8)

    i = sub.add_parser("invert", help="least-squares inversion from a null model")
    add_invert_flags(i)
    i.set_defaults(func=cmd_invert)

    r = sub.add_parser("refine", help="least-squares refinement of a prediction")
    add_invert_flags(r)
    r.add_argument("--predictions", required=True)
    r.set_defaults(func=cmd_refine)

    e = sub.add_parser("evaluate", help="score predictions against a dataset")
    e.add_argument("--dataset", required=True)
    e.add_argument("--predictions", help="omit to score the truth against itself")
    e.add_argument("--split", default="test", choices=["train", "val", "test", "all"])
    e.add_argument("--report", required=True, help="JSON report path")
    e.add_argument("--csv", help="optional per-sample CSV path")
    e.add_argument("--threshold", type=float, default=None,
                   help="density cutoff (kg/m^3) for the Dice mask; default |v|>1e-6")
    e.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("split", help="compute split assignments")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_split)

    q = sub.add_parser("sequences", help="window a time-series dataset")
    q.add_argument("--dataset", required=True)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_sequences)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # CLI boundary: report and signal failure
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
