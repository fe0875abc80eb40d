import numpy as np
import pytest

from gravplume import (
    FieldKind,
    GravityMap,
    ReservoirGrid,
    SensorGrid,
    VolumeField,
    cell_center,
    trilinear_resample,
)


def grid(n=4, d=1.0, origin=(0.0, 0.0, 0.0)):
    return ReservoirGrid(n, n, n, d, d, d, origin=origin)


class TestCellCenter:
    def test_origin_offset(self):
        g = ReservoirGrid(4, 4, 4, 50, 50, 50, origin=(0, 0, 2200))
        assert cell_center(g, 0, 0, 0) == (25, 25, 2225)

    def test_unit_grid(self):
        assert cell_center(grid(8), 2, 3, 4) == (2.5, 3.5, 4.5)

    def test_last_cell(self):
        g = ReservoirGrid(4, 4, 4, 100, 100, 100)
        assert cell_center(g, 3, 3, 3) == (350, 350, 350)

    def test_out_of_bounds(self):
        with pytest.raises(IndexError):
            cell_center(grid(4), 4, 0, 0)
        with pytest.raises(IndexError):
            cell_center(grid(4), 0, -1, 0)

    def test_affine_in_each_index(self):
        g = ReservoirGrid(6, 5, 4, 7.0, 11.0, 13.0, origin=(1.0, 2.0, 3.0))
        for axis, step in enumerate((g.dx, g.dy, g.dz)):
            idx = [1, 1, 1]
            a = np.array(cell_center(g, *idx))
            idx[axis] += 2
            b = np.array(cell_center(g, *idx))
            assert b[axis] - a[axis] == pytest.approx(2 * step)
            others = [i for i in range(3) if i != axis]
            assert np.all(a[others] == b[others])


class TestValidation:
    def test_positive_dims(self):
        with pytest.raises(ValueError):
            ReservoirGrid(0, 4, 4, 1, 1, 1)
        with pytest.raises(ValueError):
            ReservoirGrid(4, 4, 4, 1, -1, 1)

    def test_origin_depth(self):
        with pytest.raises(ValueError):
            ReservoirGrid(4, 4, 4, 1, 1, 1, origin=(0, 0, -5))

    def test_mask_size(self):
        with pytest.raises(ValueError):
            ReservoirGrid(4, 4, 4, 1, 1, 1, mask=np.ones(63, dtype=bool))

    def test_field_length(self):
        with pytest.raises(ValueError):
            VolumeField(grid(4), np.zeros(63), FieldKind.DENSITY_CHANGE)

    def test_saturation_range(self):
        with pytest.raises(ValueError):
            VolumeField(grid(2), np.full(8, 1.5), FieldKind.SATURATION)

    def test_porosity_range(self):
        with pytest.raises(ValueError):
            VolumeField(grid(2), np.full(8, 0.05), FieldKind.POROSITY)
        VolumeField(grid(2), np.full(8, 0.25), FieldKind.POROSITY)

    def test_binary_values(self):
        with pytest.raises(ValueError):
            VolumeField(grid(2), np.full(8, 0.5), FieldKind.BINARY_MASK)

    def test_gravity_map_length(self):
        s = SensorGrid.regular(100.0, 300.0, 300.0)
        with pytest.raises(ValueError):
            GravityMap(s, np.zeros(15))

    def test_normalized_invariant(self):
        s = SensorGrid.regular(100.0, 100.0, 0.0)
        GravityMap(s, np.array([-1.0, 1.0]), normalized=True)
        with pytest.raises(ValueError):
            GravityMap(s, np.array([0.0, 2.0]), normalized=True)

    def test_sensor_uniformity(self):
        bad = np.array([[0, 0, 0], [100, 0, 0], [250, 0, 0]], dtype=float)
        with pytest.raises(ValueError):
            SensorGrid(100.0, 200.0, 0.0, bad, 3, 1)


class TestStorageOrder:
    def test_x_fastest(self):
        g = ReservoirGrid(3, 4, 5, 1, 1, 1)
        arr = np.arange(60.0).reshape(3, 4, 5)
        f = VolumeField.from_3d(g, arr, FieldKind.DENSITY_CHANGE)
        for i, j, k in [(0, 0, 0), (2, 0, 0), (1, 3, 0), (2, 1, 4)]:
            assert f.values[i + 3 * (j + 4 * k)] == arr[i, j, k]
        assert np.array_equal(f.values3d, arr)


def oracle_resample_point(S, src, x, y, z):
    """Independent pointwise stencil-and-weights interpolation oracle."""
    out_idx = []
    out_w = []
    for axis, (coord, d, n) in enumerate(
        [
            (x, src.dx, src.nx),
            (y, src.dy, src.ny),
            (z, src.dz, src.nz),
        ]
    ):
        u = (coord - src.origin[axis]) / d - 0.5
        if n == 1:
            out_idx.append((0, 0))
            out_w.append(0.0)
            continue
        i0 = int(np.floor(u))
        i0 = min(max(i0, 0), n - 2)
        out_idx.append((i0, i0 + 1))
        out_w.append(u - i0)
    total = 0.0
    for a in (0, 1):
        for b in (0, 1):
            for c in (0, 1):
                w = (
                    (out_w[0] if a else 1 - out_w[0])
                    * (out_w[1] if b else 1 - out_w[1])
                    * (out_w[2] if c else 1 - out_w[2])
                )
                total += w * S[out_idx[0][a], out_idx[1][b], out_idx[2][c]]
    return total


def oracle_resample(field, target):
    src = field.grid
    S = field.values3d
    out = np.zeros(target.shape)
    for i in range(target.nx):
        for j in range(target.ny):
            for k in range(target.nz):
                x, y, z = cell_center(target, i, j, k)
                out[i, j, k] = oracle_resample_point(S, src, x, y, z)
    return out


class TestTrilinearResample:
    def test_constant(self):
        g8 = grid(8)
        g12 = ReservoirGrid(12, 12, 12, 8 / 12, 8 / 12, 8 / 12)
        f = VolumeField(g8, np.full(512, 2.5), FieldKind.DENSITY_CHANGE)
        r = trilinear_resample(f, g12)
        assert np.allclose(r.values, 2.5, rtol=0, atol=1e-12)

    def test_linear_ramp(self):
        g8 = grid(8)
        g16 = ReservoirGrid(16, 16, 16, 0.5, 0.5, 0.5)
        f = VolumeField(g8, g8.cell_centers()[:, 0], FieldKind.DENSITY_CHANGE)
        r = trilinear_resample(f, g16)
        assert np.abs(r.values - g16.cell_centers()[:, 0]).max() < 1e-6

    def test_trilinear_exact(self):
        g8 = grid(8)
        g16 = ReservoirGrid(16, 16, 16, 0.5, 0.5, 0.5)

        def f(c):
            return (1 + 2 * c[:, 0]) * (0.5 - c[:, 1]) * (3 + 0.25 * c[:, 2])

        fld = VolumeField(g8, f(g8.cell_centers()), FieldKind.DENSITY_CHANGE)
        r = trilinear_resample(fld, g16)
        assert np.abs(r.values - f(g16.cell_centers())).max() < 1e-10

    def test_round_trip_matches_oracle(self, rng):
        g4 = grid(4)
        g2 = ReservoirGrid(2, 2, 2, 2, 2, 2)
        f = VolumeField(g4, rng.standard_normal(64), FieldKind.DENSITY_CHANGE)
        down = trilinear_resample(f, g2)
        assert np.allclose(down.values3d, oracle_resample(f, g2), atol=1e-12)
        up = trilinear_resample(down, g4)
        assert np.allclose(up.values3d, oracle_resample(down, g4), atol=1e-12)

    def test_extent_mismatch(self):
        f = VolumeField.zeros(grid(4), FieldKind.DENSITY_CHANGE)
        with pytest.raises(ValueError):
            trilinear_resample(f, ReservoirGrid(4, 4, 4, 2, 2, 2))

    def test_binary_mask_rebinarized(self):
        g4 = grid(4)
        g8 = ReservoirGrid(8, 8, 8, 0.5, 0.5, 0.5)
        v = np.zeros(64)
        v[:32] = 1.0
        f = VolumeField(g4, v, FieldKind.BINARY_MASK)
        r = trilinear_resample(f, g8)
        assert set(np.unique(r.values)) <= {0.0, 1.0}
