"""Desk-scale defaults and the end-to-end sample generation pipeline.

The default configuration is a 16^3 grid, 900 m thick, buried at 2200 m,
with a boxy reservoir mask and seabed stations every 500 m. Sample
generation draws a geology realization, fills the plume at a sampled time
step, converts it to a density change, and records the forward gravity
response; every sample is fully determined by (dataset seed, sample index).
"""

from __future__ import annotations

import json
import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dataset as dio
from .forward import ForwardOperator
from .geology import (
    GeoStatsParams,
    InjectionScenario,
    density_change,
    realize_geology,
    sample_time_step,
    simulate_plume,
)
from .grids import ReservoirGrid, SensorGrid, box_mask
from .metrics import class_weights

# Station spacings (m) offered by the default sensor study configuration.
ALLOWED_SPACINGS = (100.0, 250.0, 500.0, 1000.0, 2000.0, 3000.0)


@dataclass
class WorkbenchConfig:
    """Everything needed to build a dataset; JSON-serializable."""

    nx: int = 16
    ny: int = 16
    nz: int = 16
    dx: float = 500.0
    dy: float = 500.0
    dz: float = 56.25
    depth: float = 2200.0
    # None -> scale the box mask with the grid (margin nx//8, layers nz//4 .. 3nz//4)
    mask_margin_xy: int | None = None
    mask_k_min: int | None = None
    mask_k_max: int | None = None
    sensor_spacing: float = 500.0
    geostats: GeoStatsParams = field(default_factory=GeoStatsParams)
    scenario: InjectionScenario = field(default_factory=InjectionScenario)
    sweeps_per_year: float = 1.0
    time_series: bool = False
    cadence_years: float = 1.0

    def grid(self) -> ReservoirGrid:
        grid = ReservoirGrid(
            self.nx, self.ny, self.nz, self.dx, self.dy, self.dz,
            origin=(0.0, 0.0, self.depth),
        )
        margin = max(1, self.nx // 8) if self.mask_margin_xy is None else self.mask_margin_xy
        k_min = self.nz // 4 if self.mask_k_min is None else self.mask_k_min
        k_max = max(k_min + 1, (3 * self.nz) // 4) if self.mask_k_max is None else self.mask_k_max
        mask = box_mask(grid, margin_x=margin, margin_y=margin, k_min=k_min, k_max=k_max)
        return ReservoirGrid(
            self.nx, self.ny, self.nz, self.dx, self.dy, self.dz,
            origin=(0.0, 0.0, self.depth), mask=mask,
        )

    def sensors(self) -> SensorGrid:
        return SensorGrid.regular(
            spacing=self.sensor_spacing,
            x_extent=self.nx * self.dx,
            y_extent=self.ny * self.dy,
        )

    def to_dict(self) -> dict:
        return {
            "nx": self.nx, "ny": self.ny, "nz": self.nz,
            "dx": self.dx, "dy": self.dy, "dz": self.dz,
            "depth": self.depth,
            "mask_margin_xy": self.mask_margin_xy,
            "mask_k_min": self.mask_k_min,
            "mask_k_max": self.mask_k_max,
            "sensor_spacing": self.sensor_spacing,
            "geostats": self.geostats.to_dict(),
            "scenario": self.scenario.to_dict(),
            "sweeps_per_year": self.sweeps_per_year,
            "time_series": self.time_series,
            "cadence_years": self.cadence_years,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WorkbenchConfig":
        d = dict(d)
        d["geostats"] = GeoStatsParams.from_dict(d.get("geostats", {}))
        d["scenario"] = InjectionScenario.from_dict(d.get("scenario", {}))
        return cls(**d)

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


def build_sample(
    grid: ReservoirGrid,
    op: ForwardOperator,
    cfg: WorkbenchConfig,
    index: int,
    seed: int,
    time_step: float | None = None,
    geology: tuple | None = None,
) -> dio.SampleRecord:
    """One fully deterministic sample; `geology` reuses a (poro, perm, seed) realization."""
    ss = np.random.SeedSequence([seed, index])
    geo_ss, t_ss = ss.spawn(2)
    geo_seed = int(geo_ss.generate_state(1)[0])
    if geology is None:
        porosity, logperm = realize_geology(grid, cfg.geostats, geo_seed)
    else:
        porosity, logperm, geo_seed = geology
    if time_step is None:
        time_step = sample_time_step(index, np.random.default_rng(t_ss))
    saturation = simulate_plume(
        grid, porosity, logperm, cfg.scenario, time_step,
        sweeps_per_year=cfg.sweeps_per_year,
    )
    drho = density_change(porosity, saturation, cfg.scenario)
    gravity = op.forward(drho)
    return dio.SampleRecord.create(
        sample_id=f"sample_{index:04d}",
        time_step=time_step,
        gravity_raw=gravity,
        density_change=drho,
        saturation=saturation,
        seed=geo_seed,
        geostats=cfg.geostats.to_dict(),
    )


def generate_dataset(
    out_dir: Path,
    n: int,
    seed: int,
    cfg: WorkbenchConfig | None = None,
    threads: int = 1,
) -> dio.DatasetManifest:
    """Generate n samples, split them, freeze class weights, write everything."""
    cfg = cfg or WorkbenchConfig()
    out_dir = Path(out_dir)
    grid = cfg.grid()
    sensors = cfg.sensors()
    op = ForwardOperator(grid, sensors)
    (out_dir / "samples").mkdir(parents=True, exist_ok=True)

    shared_geology = None
    times = [None] * n
    if cfg.time_series:
        # One realization sampled on a regular time grid, ordered.
        geo_seed = int(np.random.SeedSequence([seed, 0]).spawn(2)[0].generate_state(1)[0])
        porosity, logperm = realize_geology(grid, cfg.geostats, geo_seed)
        shared_geology = (porosity, logperm, geo_seed)
        times = [cfg.cadence_years * (i + 1) for i in range(n)]

    def one(index: int) -> dio.SampleRecord:
        record = build_sample(
            grid, op, cfg, index, seed,
            time_step=times[index], geology=shared_geology,
        )
        dio.write_sample(record, dio.sample_dir(out_dir, record.id))
        return record

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(one, range(n)))
    else:
        records = [one(i) for i in range(n)]

    if n >= 20:
        split = dio.make_splits(n, seed)
    else:  # tiny smoke datasets: everything is a training sample
        folds = tuple(
            tuple(int(i) for i in chunk) for chunk in np.array_split(np.arange(n), 5)
        )
        split = dio.SplitAssignment(train=tuple(range(n)), val=(), test=(), folds=folds)

    ids = [r.id for r in records]
    training_like = list(split.train) + list(split.val)
    n_fg = sum(int(records[i].plume_mask.values.sum()) for i in training_like)
    n_cells = grid.n_cells * len(training_like)
    n_bg = n_cells - n_fg
    weights = class_weights(n_bg, n_fg) if n_fg > 0 and n_bg > 0 else (1.0, 1.0)

    mask_entry = dio.write_reservoir_mask(out_dir, grid)
    manifest = dio.DatasetManifest(
        format_version=dio.FORMAT_VERSION,
        grid=dio.grid_spec(grid),
        sensors=dio.sensor_spec(sensors),
        samples=[{"id": i, "path": f"samples/{i}"} for i in ids],
        splits={
            "train": [ids[i] for i in split.train],
            "val": [ids[i] for i in split.val],
            "test": [ids[i] for i in split.test],
        },
        folds=[[ids[i] for i in fold] for fold in split.folds],
        class_weights=weights,
        extra={
            "reservoir_mask": mask_entry,
            "config": cfg.to_dict(),
            "reproducibility": {
                "seed": seed,
                "n": n,
                "config_hash": cfg.config_hash(),
                "format_version": dio.FORMAT_VERSION,
            },
        },
    )
    dio.write_manifest(out_dir, manifest)
    return manifest
