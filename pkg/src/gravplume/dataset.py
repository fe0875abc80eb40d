"""On-disk dataset format, normalization, split assignment, and sequences.

Layout::

    dataset/
      manifest.json            dataset-level index (grid, sensors, splits,
                               folds, frozen class weights, normalization tag)
      reservoir_mask.f32       reservoir mask, 0/1 float32
      kernel.f64 + kernel.json optional dense forward-kernel export
      samples/<id>/
        gravity_raw.f32  gravity_norm.f32  density.f32  saturation.f32  mask.f32
        manifest.json          per-sample dims, units, kinds, checksums

Payloads are headerless little-endian IEEE-754 float32 (the kernel export is
float64), x-fastest cell order, one file per field, each guarded by a SHA-256
checksum in its manifest. Reads reproduce the stored bytes exactly.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .forward import ForwardOperator
from .grids import FieldKind, GravityMap, ReservoirGrid, SensorGrid, VolumeField

FORMAT_VERSION = "1"

SAMPLE_FIELDS = {
    "gravity_raw": ("gravity_raw.f32", "uGal"),
    "gravity_norm": ("gravity_norm.f32", "zscore"),
    "density": ("density.f32", "kg/m^3"),
    "saturation": ("saturation.f32", "fraction"),
    "mask": ("mask.f32", "binary"),
}


class FormatError(ValueError):
    """Malformed payload or manifest (wrong size, truncated, bad schema)."""


class ChecksumError(IOError):
    """Stored checksum does not match the payload bytes."""


class NormalizationError(ValueError):
    """Z-scoring is undefined (constant map)."""


def zscore(gmap: GravityMap) -> GravityMap:
    """Per-map z-score normalization (population std)."""
    v = gmap.values
    std = float(v.std())
    if std <= 1e-12:
        raise NormalizationError("cannot z-score a constant gravity map")
    return GravityMap(gmap.sensors, (v - v.mean()) / std, normalized=True)


# ---------------------------------------------------------------------------
# Raw payload helpers
# ---------------------------------------------------------------------------


def _sha256(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()


def write_payload(directory: Path, filename: str, values: np.ndarray, dtype: str = "<f4") -> dict:
    """Write one raw payload; returns its manifest entry."""
    data = np.asarray(values).astype(dtype).tobytes()
    path = Path(directory) / filename
    path.write_bytes(data)
    return {
        "file": filename,
        "count": int(np.asarray(values).size),
        "dtype": dtype,
        "checksum": _sha256(data),
    }


def read_payload(directory: Path, entry: dict) -> np.ndarray:
    """Read one raw payload, verifying size then checksum."""
    path = Path(directory) / entry["file"]
    data = path.read_bytes()
    dtype = np.dtype(entry.get("dtype", "<f4"))
    expected = entry["count"] * dtype.itemsize
    if len(data) != expected:
        raise FormatError(
            f"{path.name}: payload is {len(data)} bytes, expected {expected}"
        )
    if _sha256(data) != entry["checksum"]:
        raise ChecksumError(f"{path.name}: checksum mismatch")
    return np.frombuffer(data, dtype=dtype).astype(np.float64)


# ---------------------------------------------------------------------------
# Grid / sensor specs
# ---------------------------------------------------------------------------


def grid_spec(grid: ReservoirGrid) -> dict:
    return {
        "nx": grid.nx,
        "ny": grid.ny,
        "nz": grid.nz,
        "dx": grid.dx,
        "dy": grid.dy,
        "dz": grid.dz,
        "origin": list(grid.origin),
    }


def grid_from_spec(spec: dict, mask: np.ndarray | None = None) -> ReservoirGrid:
    return ReservoirGrid(
        nx=spec["nx"],
        ny=spec["ny"],
        nz=spec["nz"],
        dx=spec["dx"],
        dy=spec["dy"],
        dz=spec["dz"],
        origin=tuple(spec["origin"]),
        mask=mask,
    )


def sensor_spec(sensors: SensorGrid) -> dict:
    return {
        "spacing": sensors.spacing,
        "x_extent": sensors.x_extent,
        "y_extent": sensors.y_extent,
        "z": float(sensors.stations[0, 2]),
        "origin": [float(sensors.stations[0, 0]), float(sensors.stations[0, 1])],
        "m1": sensors.m1,
        "m2": sensors.m2,
    }


def sensors_from_spec(spec: dict) -> SensorGrid:
    return SensorGrid.regular(
        spacing=spec["spacing"],
        x_extent=spec["x_extent"],
        y_extent=spec["y_extent"],
        z=spec.get("z", 0.0),
        origin=tuple(spec.get("origin", (0.0, 0.0))),
    )


# ---------------------------------------------------------------------------
# Sample records
# ---------------------------------------------------------------------------


@dataclass
class SampleRecord:
    """One (gravity, plume) pair plus provenance."""

    id: str
    time_step: float
    gravity_raw: GravityMap
    gravity_norm: GravityMap
    density_change: VolumeField
    saturation: VolumeField
    plume_mask: VolumeField
    seed: int
    geostats: dict

    @classmethod
    def create(
        cls,
        sample_id: str,
        time_step: float,
        gravity_raw: GravityMap,
        density_change: VolumeField,
        saturation: VolumeField,
        seed: int,
        geostats: dict,
    ) -> "SampleRecord":
        mask = VolumeField(
            saturation.grid,
            (saturation.values > 0.0).astype(np.float64),
            FieldKind.BINARY_MASK,
        )
        return cls(
            id=sample_id,
            time_step=time_step,
            gravity_raw=gravity_raw,
            gravity_norm=zscore(gravity_raw),
            density_change=density_change,
            saturation=saturation,
            plume_mask=mask,
            seed=seed,
            geostats=geostats,
        )


def write_sample(record: SampleRecord, directory: Path) -> None:
    """Write one sample directory (payloads + manifest)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    grid = record.density_change.grid
    arrays = {
        "gravity_raw": record.gravity_raw.values,
        "gravity_norm": record.gravity_norm.values,
        "density": record.density_change.values,
        "saturation": record.saturation.values,
        "mask": record.plume_mask.values,
    }
    fields = {}
    for name, values in arrays.items():
        filename, units = SAMPLE_FIELDS[name]
        entry = write_payload(directory, filename, values)
        entry["units"] = units
        fields[name] = entry
    manifest = {
        "format_version": FORMAT_VERSION,
        "id": record.id,
        "time_step": record.time_step,
        "seed": record.seed,
        "geostats": record.geostats,
        "grid": grid_spec(grid),
        "sensors": sensor_spec(record.gravity_raw.sensors),
        "fields": fields,
    }
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=1))


def read_sample(
    directory: Path,
    grid: ReservoirGrid | None = None,
    sensors: SensorGrid | None = None,
) -> SampleRecord:
    """Read one sample directory back, verifying checksums and dimensions."""
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    if grid is None:
        grid = grid_from_spec(manifest["grid"])
    if sensors is None:
        sensors = sensors_from_spec(manifest["sensors"])

    def volume(name, kind):
        entry = manifest["fields"][name]
        if entry["count"] != grid.n_cells:
            raise FormatError(
                f"{name}: {entry['count']} values for a {grid.shape} grid"
            )
        return VolumeField(grid, read_payload(directory, entry), kind)

    def gmap(name, normalized):
        entry = manifest["fields"][name]
        if entry["count"] != sensors.n_stations:
            raise FormatError(
                f"{name}: {entry['count']} values for {sensors.n_stations} stations"
            )
        return GravityMap(sensors, read_payload(directory, entry), normalized=normalized)

    return SampleRecord(
        id=manifest["id"],
        time_step=manifest["time_step"],
        gravity_raw=gmap("gravity_raw", False),
        gravity_norm=gmap("gravity_norm", True),
        density_change=volume("density", FieldKind.DENSITY_CHANGE),
        saturation=volume("saturation", FieldKind.SATURATION),
        plume_mask=volume("mask", FieldKind.BINARY_MASK),
        seed=manifest["seed"],
        geostats=manifest["geostats"],
    )


# ---------------------------------------------------------------------------
# Splits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SplitAssignment:
    train: tuple[int, ...]
    val: tuple[int, ...]
    test: tuple[int, ...]
    folds: tuple[tuple[int, ...], ...]


def make_splits(n: int, seed: int) -> SplitAssignment:
    """Deterministic 90/10 split with 5% of train as validation, plus 5 folds."""
    if n < 20:
        raise ValueError("need at least 20 samples for nonempty splits")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_test = int(round(0.1 * n))
    test = perm[:n_test]
    pool = perm[n_test:]
    n_val = int(round(0.05 * pool.size))
    val = pool[:n_val]
    train = pool[n_val:]
    fold_perm = rng.permutation(n)
    folds = tuple(tuple(int(i) for i in chunk) for chunk in np.array_split(fold_perm, 5))
    return SplitAssignment(
        train=tuple(int(i) for i in train),
        val=tuple(int(i) for i in val),
        test=tuple(int(i) for i in test),
        folds=folds,
    )


# ---------------------------------------------------------------------------
# Sequences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SequenceSample:
    """Ten ordered gravity maps and the plume target at the last step."""

    sample_ids: tuple[str, ...]
    time_steps: tuple[float, ...]
    gravity_maps: tuple[GravityMap, ...]
    target: VolumeField

    def __post_init__(self):
        if len(self.gravity_maps) != 10 or len(self.time_steps) != 10:
            raise ValueError("a sequence holds exactly ten steps")
        if np.any(np.diff(self.time_steps) <= 0):
            raise ValueError("time steps must be strictly increasing")


SEQUENCE_LENGTH = 10


def build_sequences(records: list[SampleRecord]) -> list[SequenceSample]:
    """Sliding windows of ten maps over one ordered simulation."""
    if len(records) < SEQUENCE_LENGTH:
        raise ValueError("need at least ten ordered records")
    times = [r.time_step for r in records]
    if np.any(np.diff(times) <= 0):
        raise ValueError("records must be strictly increasing in time")
    out = []
    for i in range(SEQUENCE_LENGTH - 1, len(records)):
        window = records[i - SEQUENCE_LENGTH + 1 : i + 1]
        out.append(
            SequenceSample(
                sample_ids=tuple(r.id for r in window),
                time_steps=tuple(r.time_step for r in window),
                gravity_maps=tuple(r.gravity_norm for r in window),
                target=records[i].density_change,
            )
        )
    return out


# ---------------------------------------------------------------------------
# Dataset-level manifest
# ---------------------------------------------------------------------------


@dataclass
class DatasetManifest:
    format_version: str
    grid: dict
    sensors: dict
    samples: list[dict]  # {"id", "path"}
    splits: dict  # {"train"/"val"/"test": [ids]}
    folds: list[list[str]]  # five lists of ids
    class_weights: tuple[float, float]
    normalization: str = "zscore_per_map"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        ids = [s["id"] for s in self.samples]
        assigned = (
            list(self.splits["train"]) + list(self.splits["val"]) + list(self.splits["test"])
        )
        if sorted(assigned) != sorted(ids):
            raise FormatError("splits do not partition the sample set")
        fold_ids = [i for f in self.folds for i in f]
        if self.folds and sorted(fold_ids) != sorted(ids):
            raise FormatError("folds do not partition the sample set")

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "grid": self.grid,
            "sensors": self.sensors,
            "samples": self.samples,
            "splits": self.splits,
            "folds": self.folds,
            "class_weights": list(self.class_weights),
            "normalization": self.normalization,
            "extra": self.extra,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetManifest":
        return cls(
            format_version=d["format_version"],
            grid=d["grid"],
            sensors=d["sensors"],
            samples=d["samples"],
            splits=d["splits"],
            folds=d["folds"],
            class_weights=tuple(d["class_weights"]),
            normalization=d.get("normalization", "zscore_per_map"),
            extra=d.get("extra", {}),
        )


def write_manifest(directory: Path, manifest: DatasetManifest) -> None:
    (Path(directory) / "manifest.json").write_text(
        json.dumps(manifest.to_dict(), indent=1)
    )


def read_manifest(directory: Path) -> DatasetManifest:
    return DatasetManifest.from_dict(
        json.loads((Path(directory) / "manifest.json").read_text())
    )


def write_reservoir_mask(directory: Path, grid: ReservoirGrid) -> dict:
    return write_payload(directory, "reservoir_mask.f32", grid.mask_flat.astype(np.float64))


def load_dataset(directory: Path) -> tuple[DatasetManifest, ReservoirGrid, SensorGrid]:
    """Read the manifest and reconstruct the grid (with mask) and sensors."""
    directory = Path(directory)
    manifest = read_manifest(directory)
    mask_entry = manifest.extra.get("reservoir_mask")
    mask = None
    if mask_entry is not None:
        mask = read_payload(directory, mask_entry) > 0.5
    grid = grid_from_spec(manifest.grid, mask=mask)
    sensors = sensors_from_spec(manifest.sensors)
    return manifest, grid, sensors


def sample_dir(directory: Path, sample_id: str) -> Path:
    return Path(directory) / "samples" / sample_id


# ---------------------------------------------------------------------------
# Dense kernel side file (for physics-informed training)
# ---------------------------------------------------------------------------


def write_kernel(op: ForwardOperator, directory: Path) -> dict:
    """Export the dense forward kernel as float64 (row-major stations x cells)."""
    directory = Path(directory)
    K = op.kernel_matrix()
    entry = write_payload(directory, "kernel.f64", K.ravel(), dtype="<f8")
    meta = {
        "rows": K.shape[0],
        "cols": K.shape[1],
        "order": "row_major",
        "units": "uGal per kg/m^3",
        "grid": grid_spec(op.grid),
        "sensors": sensor_spec(op.sensors),
        "payload": entry,
    }
    (directory / "kernel.json").write_text(json.dumps(meta, indent=1))
    return meta


def read_kernel(directory: Path) -> np.ndarray:
    directory = Path(directory)
    meta = json.loads((directory / "kernel.json").read_text())
    flat = read_payload(directory, meta["payload"])
    return flat.reshape(meta["rows"], meta["cols"])
