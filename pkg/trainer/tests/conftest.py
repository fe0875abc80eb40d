import json
import subprocess
import sys
from pathlib import Path

import pytest

CLI = [sys.executable, "-m", "gravplume.cli"]


def run_cli(*args) -> subprocess.CompletedProcess:
    proc = subprocess.run(
        CLI + [str(a) for a in args], capture_output=True, text=True
    )
    if proc.returncode != 0:
        raise RuntimeError(f"CLI failed: {proc.stderr}\n{proc.stdout}")
    return proc


GRID_32 = ["--nx", "32", "--ny", "32", "--nz", "32", "--dx", "250", "--dy", "250",
           "--dz", "28.125", "--spacing", "1000"]
GRID_16 = ["--spacing", "1000"]  # default 16^3 grid, coarser stations


@pytest.fixture(scope="session")
def ds8_32(tmp_path_factory):
    """Eight-sample 32^3 dataset for overfit runs."""
    out = tmp_path_factory.mktemp("ds") / "ds8_32"
    run_cli("generate", "--out", out, "--n", "8", "--seed", "11", *GRID_32)
    return out


@pytest.fixture(scope="session")
def ds64_32(tmp_path_factory):
    """64-sample 32^3 dataset with real train/val/test splits."""
    out = tmp_path_factory.mktemp("ds") / "ds64_32"
    run_cli("generate", "--out", out, "--n", "64", "--seed", "12", *GRID_32)
    return out


@pytest.fixture(scope="session")
def ds24_16(tmp_path_factory):
    """24-sample 16^3 dataset (test split of 2) with the kernel exported."""
    out = tmp_path_factory.mktemp("ds") / "ds24_16"
    run_cli("generate", "--out", out, "--n", "24", "--seed", "13", *GRID_16)
    run_cli("forward", "--dataset", out, "--export-kernel")
    return out


@pytest.fixture(scope="session")
def ts13_16(tmp_path_factory):
    """Thirteen-step time series 16^3 dataset with sequence windows.

    Eight-year cadence keeps the windowed targets at a few hundred voxels;
    annual snapshots at this grid scale would give near-empty plumes.
    """
    out = tmp_path_factory.mktemp("ds") / "ts13_16"
    run_cli(
        "generate", "--out", out, "--n", "13", "--seed", "14", "--time-series",
        "--cadence", "8", *GRID_16,
    )
    run_cli("sequences", "--dataset", out, "--out", out / "sequences.json")
    return out


def read_json(path: Path) -> dict:
    return json.loads(Path(path).read_text())
