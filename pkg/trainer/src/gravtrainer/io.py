"""Access to the gravity-dataset interchange format.

The format contract: headerless little-endian float32 payloads (float64 for
the kernel export), x-fastest cell order, one file per field, SHA-256
checksums in JSON manifests. Volumes come back as (nz, ny, nx) arrays so the
z axis maps onto the conv depth dimension; maps come back as (m2, m1).
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np


class ChecksumError(IOError):
    pass


class FormatError(ValueError):
    pass


def read_payload(directory: Path, entry: dict) -> np.ndarray:
    path = Path(directory) / entry["file"]
    data = path.read_bytes()
    dtype = np.dtype(entry.get("dtype", "<f4"))
    expected = entry["count"] * dtype.itemsize
    if len(data) != expected:
        raise FormatError(f"{path.name}: {len(data)} bytes, expected {expected}")
    if hashlib.sha256(data).hexdigest() != entry["checksum"]:
        raise ChecksumError(f"{path.name}: checksum mismatch")
    return np.frombuffer(data, dtype=dtype).copy()


def write_payload(directory: Path, filename: str, values: np.ndarray, dtype: str = "<f4") -> dict:
    data = np.asarray(values).astype(dtype).tobytes()
    path = Path(directory) / filename
    path.write_bytes(data)
    return {
        "file": filename,
        "count": int(np.asarray(values).size),
        "dtype": dtype,
        "checksum": hashlib.sha256(data).hexdigest(),
    }


class Dataset:
    """Read-only view of one dataset directory."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.manifest = json.loads((self.root / "manifest.json").read_text())
        g = self.manifest["grid"]
        self.dims = (g["nz"], g["ny"], g["nx"])  # volume array shape
        s = self.manifest["sensors"]
        self.map_shape = (s["m2"], s["m1"])
        self.class_weights = tuple(self.manifest["class_weights"])
        self.splits = self.manifest["splits"]
        self.normalization = self.manifest.get("normalization", "")

    def sample_ids(self, split: str = "all") -> list[str]:
        if split == "all":
            return [s["id"] for s in self.manifest["samples"]]
        return list(self.splits[split])

    def _sample_manifest(self, sample_id: str) -> tuple[Path, dict]:
        d = self.root / "samples" / sample_id
        return d, json.loads((d / "manifest.json").read_text())

    def load_volume(self, sample_id: str, name: str) -> np.ndarray:
        d, m = self._sample_manifest(sample_id)
        entry = m["fields"][name]
        nz, ny, nx = self.dims
        if entry["count"] != nz * ny * nx:
            raise FormatError(f"{name}: wrong cell count")
        return read_payload(d, entry).astype(np.float32).reshape(self.dims)

    def load_map(self, sample_id: str, name: str = "gravity_norm") -> np.ndarray:
        d, m = self._sample_manifest(sample_id)
        entry = m["fields"][name]
        if entry["count"] != self.map_shape[0] * self.map_shape[1]:
            raise FormatError(f"{name}: wrong station count")
        return read_payload(d, entry).astype(np.float32).reshape(self.map_shape)

    def time_step(self, sample_id: str) -> float:
        _, m = self._sample_manifest(sample_id)
        return float(m["time_step"])

    def load_sequences(self) -> list[dict]:
        path = self.root / "sequences.json"
        if not path.exists():
            raise FormatError("dataset has no sequences.json (run the sequences command)")
        return json.loads(path.read_text())["sequences"]


def read_kernel(root: Path) -> np.ndarray:
    root = Path(root)
    meta = json.loads((root / "kernel.json").read_text())
    flat = read_payload(root, meta["payload"])
    return flat.reshape(meta["rows"], meta["cols"])


def write_prediction(
    out_dir: Path,
    sample_id: str,
    fields: dict[str, np.ndarray],
    units: dict[str, str] | None = None,
) -> Path:
    """One prediction directory in the interchange format."""
    d = Path(out_dir) / sample_id
    d.mkdir(parents=True, exist_ok=True)
    units = units or {}
    entries = {}
    for name, values in fields.items():
        entry = write_payload(d, f"{name}.f32", np.asarray(values).ravel())
        if name in units:
            entry["units"] = units[name]
        entries[name] = entry
    (d / "manifest.json").write_text(
        json.dumps({"format_version": "1", "id": sample_id, "fields": entries}, indent=1)
    )
    return d
