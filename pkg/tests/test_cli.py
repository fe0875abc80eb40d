import json

import numpy as np
import pytest

from gravplume import dataset as dio
from gravplume.cli import main
from gravplume.dataset import load_dataset, read_kernel, read_sample, sample_dir, write_payload


def small_flags():
    return [
        "--nx", "8", "--ny", "8", "--nz", "8", "--dz", "112.5",
        "--spacing", "1000",
    ]


@pytest.fixture(scope="module")
def small_dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("data") / "ds"
    rc = main(["generate", "--out", str(out), "--n", "4", "--seed", "3"] + small_flags())
    assert rc == 0
    return out


class TestGenerate:
    def test_complete_sample_dirs(self, small_dataset):
        manifest, grid, sensors = load_dataset(small_dataset)
        assert len(manifest.samples) == 4
        for entry in manifest.samples:
            record = read_sample(sample_dir(small_dataset, entry["id"]), grid, sensors)
            assert record.gravity_norm.normalized
            assert record.density_change.values.shape == (grid.n_cells,)

    def test_regenerate_bit_identical(self, small_dataset, tmp_path):
        out2 = tmp_path / "ds2"
        rc = main(["generate", "--out", str(out2), "--n", "4", "--seed", "3"] + small_flags())
        assert rc == 0
        for sid in ("sample_0000", "sample_0003"):
            for f in ("gravity_raw.f32", "density.f32", "saturation.f32"):
                a = (small_dataset / "samples" / sid / f).read_bytes()
                b = (out2 / "samples" / sid / f).read_bytes()
                assert a == b

    def test_spacing_validation(self, tmp_path):
        rc = main(
            ["generate", "--out", str(tmp_path / "x"), "--n", "2", "--seed", "0",
             "--nx", "8", "--ny", "8", "--nz", "8", "--spacing", "333"]
        )
        assert rc != 0

    def test_reproducibility_block(self, small_dataset):
        manifest, _, _ = load_dataset(small_dataset)
        block = manifest.extra["reproducibility"]
        assert block["seed"] == 3
        assert "config_hash" in block
        assert block["format_version"] == dio.FORMAT_VERSION

    def test_worker_pool_deterministic(self, small_dataset, tmp_path):
        out = tmp_path / "threaded"
        rc = main(
            ["generate", "--out", str(out), "--n", "4", "--seed", "3", "--threads", "3"]
            + small_flags()
        )
        assert rc == 0
        for sid in ("sample_0000", "sample_0002"):
            a = (small_dataset / "samples" / sid / "density.f32").read_bytes()
            b = (out / "samples" / sid / "density.f32").read_bytes()
            assert a == b

    def test_n500_split_sizes(self, tmp_path):
        # full-size dataset: 450 train+val (including ~22 val) / 50 test
        out = tmp_path / "big"
        rc = main(
            ["generate", "--out", str(out), "--n", "500", "--seed", "1"] + small_flags()
        )
        assert rc == 0
        manifest, _, _ = load_dataset(out)
        assert len(manifest.splits["test"]) == 50
        assert len(manifest.splits["train"]) + len(manifest.splits["val"]) == 450
        assert 20 <= len(manifest.splits["val"]) <= 25
        assert sorted(len(f) for f in manifest.folds) == [100] * 5


class TestSplitCommand:
    def test_default_500(self, tmp_path):
        out = tmp_path / "split.json"
        assert main(["split", "--n", "500", "--seed", "0", "--out", str(out)]) == 0
        d = json.loads(out.read_text())
        assert len(d["train"]) + len(d["val"]) == 450
        assert len(d["test"]) == 50
        assert sorted(sum(d["folds"], [])) == list(range(500))


class TestForwardCommand:
    def test_forward_matches_stored(self, small_dataset, tmp_path):
        rc = main(
            ["forward", "--dataset", str(small_dataset), "--sample", "sample_0000",
             "--out", str(tmp_path)]
        )
        assert rc == 0
        meta = json.loads((tmp_path / "forward" / "sample_0000" / "manifest.json").read_text())
        # stored map is float32-quantized; recomputed forward agrees to that precision
        assert meta["mse_vs_stored_uGal2"] < 1e-6

    def test_export_kernel(self, small_dataset):
        rc = main(["forward", "--dataset", str(small_dataset), "--export-kernel"])
        assert rc == 0
        K = read_kernel(small_dataset)
        _, grid, sensors = load_dataset(small_dataset)
        assert K.shape == (sensors.n_stations, grid.n_cells)


class TestInvertRefineEvaluate:
    def test_invert_writes_model_and_history(self, small_dataset, tmp_path):
        out = tmp_path / "inv"
        rc = main(
            ["invert", "--dataset", str(small_dataset), "--sample", "sample_0001",
             "--out", str(out)]
        )
        assert rc == 0
        meta = json.loads((out / "sample_0001" / "manifest.json").read_text())
        hist = meta["inversion"]["data_misfit_history_uGal2"]
        assert all(b <= a for a, b in zip(hist, hist[1:]))
        assert meta["inversion"]["station_mse_uGal2"] < 1e-4

    def test_refine_null_equals_invert(self, small_dataset, tmp_path):
        _, grid, _ = load_dataset(small_dataset)
        preds = tmp_path / "preds"
        d = preds / "sample_0001"
        d.mkdir(parents=True)
        entry = write_payload(d, "density.f32", np.zeros(grid.n_cells))
        (d / "manifest.json").write_text(
            json.dumps({"format_version": "1", "id": "sample_0001", "fields": {"density": entry}})
        )
        out_i = tmp_path / "inv"
        out_r = tmp_path / "ref"
        assert main(["invert", "--dataset", str(small_dataset), "--sample", "sample_0001",
                     "--out", str(out_i)]) == 0
        assert main(["refine", "--dataset", str(small_dataset), "--sample", "sample_0001",
                     "--predictions", str(preds), "--out", str(out_r)]) == 0
        a = json.loads((out_i / "sample_0001" / "manifest.json").read_text())["inversion"]
        b = json.loads((out_r / "sample_0001" / "manifest.json").read_text())["refinement"]
        assert a["data_misfit_history_uGal2"] == b["data_misfit_history_uGal2"]
        va = (out_i / "sample_0001" / "density.f32").read_bytes()
        vb = (out_r / "sample_0001" / "density.f32").read_bytes()
        assert va == vb

    def test_evaluate_truth_is_perfect(self, small_dataset, tmp_path):
        report = tmp_path / "report.json"
        csv_path = tmp_path / "report.csv"
        rc = main(
            ["evaluate", "--dataset", str(small_dataset), "--split", "all",
             "--report", str(report), "--csv", str(csv_path)]
        )
        assert rc == 0
        d = json.loads(report.read_text())
        agg = d["aggregate"]
        assert agg["mse_model"]["mean"] == pytest.approx(0.0, abs=1e-10)
        assert agg["r_squared"]["mean"] == pytest.approx(1.0, abs=1e-6)
        assert agg["dice"]["mean"] == pytest.approx(1.0, abs=1e-12)
        # forward of the float32-stored truth vs float32-stored map
        assert agg["mse_data"]["mean"] < 1e-6
        assert csv_path.exists()

    def test_invert_then_evaluate(self, small_dataset, tmp_path):
        out = tmp_path / "inv"
        for sid in ("sample_0000", "sample_0001", "sample_0002", "sample_0003"):
            assert main(["invert", "--dataset", str(small_dataset), "--sample", sid,
                         "--out", str(out)]) == 0
        report = tmp_path / "report.json"
        rc = main(
            ["evaluate", "--dataset", str(small_dataset), "--predictions", str(out),
             "--split", "all", "--report", str(report)]
        )
        assert rc == 0
        d = json.loads(report.read_text())
        assert d["aggregate"]["mse_data"]["mean"] < 1e-4


class TestSequencesCommand:
    def test_time_series_windows(self, tmp_path):
        ds = tmp_path / "ts"
        rc = main(
            ["generate", "--out", str(ds), "--n", "12", "--seed", "5", "--time-series"]
            + small_flags()
        )
        assert rc == 0
        out = tmp_path / "seq.json"
        assert main(["sequences", "--dataset", str(ds), "--out", str(out)]) == 0
        d = json.loads(out.read_text())
        assert len(d["sequences"]) == 3
        assert all(len(s["input_ids"]) == 10 for s in d["sequences"])

    def test_too_short_series_fails(self, small_dataset, tmp_path):
        rc = main(["sequences", "--dataset", str(small_dataset), "--out", str(tmp_path / "s.json")])
        assert rc != 0


class TestErrorPaths:
    def test_missing_dataset(self, tmp_path):
        rc = main(["invert", "--dataset", str(tmp_path / "nope"), "--sample", "x",
                   "--out", str(tmp_path / "o")])
        assert rc == 1
