import numpy as np
import pytest

from gravplume import (
    FieldKind,
    ForwardOperator,
    GRAVITATIONAL_CONSTANT,
    GravityMap,
    KernelMode,
    ReservoirGrid,
    SensorGrid,
    SingularGeometryError,
    VolumeField,
    subsample_sensors,
)


def single_station(x=0.0, y=0.0, z=0.0):
    return SensorGrid(1.0, 0.0, 0.0, np.array([[x, y, z]]), 1, 1)


def small_setup(seed=0, mode=KernelMode.DENSE_MATRIX):
    grid = ReservoirGrid(8, 8, 8, 100, 100, 100, origin=(0, 0, 500))
    sensors = SensorGrid.regular(250.0, 750.0, 750.0)  # 4x4
    return grid, sensors, ForwardOperator(grid, sensors, mode=mode)


class TestForward:
    def test_zero_density(self):
        _, sensors, op = small_setup()
        grid = op.grid
        g = op.forward(VolumeField.zeros(grid, FieldKind.DENSITY_CHANGE))
        assert np.all(g.values == 0.0)

    def test_point_mass_analytic(self):
        # Single 50 m cell, -30 kg/m^3, station 1000 m directly above.
        grid = ReservoirGrid(1, 1, 1, 50, 50, 50, origin=(-25, -25, 975))
        op = ForwardOperator(grid, single_station())
        rho = VolumeField(grid, np.array([-30.0]), FieldKind.DENSITY_CHANGE)
        got = op.forward(rho).values[0]
        expected = 1e8 * GRAVITATIONAL_CONSTANT * (-30.0 * 50.0**3) / 1000.0**2
        assert got == pytest.approx(expected, rel=1e-6)
        assert got == pytest.approx(-0.02503, abs=5e-6)
        assert got < 0  # negative anomaly below the station pulls g_z down

    def test_superposition(self, rng):
        grid, _, op = small_setup()
        a = VolumeField(grid, rng.standard_normal(grid.n_cells), FieldKind.DENSITY_CHANGE)
        b = VolumeField(grid, rng.standard_normal(grid.n_cells), FieldKind.DENSITY_CHANGE)
        ab = VolumeField(grid, a.values + b.values, FieldKind.DENSITY_CHANGE)
        lhs = op.forward(ab).values
        rhs = op.forward(a).values + op.forward(b).values
        assert np.allclose(lhs, rhs, rtol=1e-10)

    def test_scaling_exact_dense(self, rng):
        grid, _, op = small_setup()
        x = VolumeField(grid, rng.standard_normal(grid.n_cells), FieldKind.DENSITY_CHANGE)
        x2 = VolumeField(grid, 2.0 * x.values, FieldKind.DENSITY_CHANGE)
        assert np.array_equal(op.forward(x2).values, 2.0 * op.forward(x).values)

    def test_decay_along_axis(self):
        # Stations marching away horizontally from a compact anomaly.
        grid = ReservoirGrid(4, 4, 4, 100, 100, 100, origin=(0, 0, 800))
        v = np.zeros(grid.n_cells)
        v[grid.ravel_index(1, 1, 1)] = -50.0
        v[grid.ravel_index(2, 2, 2)] = -50.0
        rho = VolumeField(grid, v, FieldKind.DENSITY_CHANGE)
        stations = np.array([[200.0 + 300.0 * i, 200.0, 0.0] for i in range(8)])
        sensors = SensorGrid(300.0, 2100.0, 0.0, stations, 8, 1)
        g = ForwardOperator(grid, sensors).forward(rho).values
        mags = np.abs(g)
        assert np.all(np.diff(mags) <= 1e-15)

    def test_uniform_ball_oracle(self):
        # Voxelized ball vs the analytic point-mass far field gamma*M/d^2.
        h = 50.0
        grid = ReservoirGrid(32, 32, 32, h, h, h, origin=(-800, -800, 200))
        centers = grid.cell_centers()
        R = 4 * h
        ball_center = np.array([0.0, 0.0, 1000.0])
        inside = np.sum((centers - ball_center) ** 2, axis=1) <= R * R
        assert inside.sum() >= 200  # comfortably resolved
        rho = VolumeField(grid, np.where(inside, -30.0, 0.0), FieldKind.DENSITY_CHANGE)
        mass = -30.0 * inside.sum() * grid.cell_volume
        for d in (3 * R, 5 * R):
            op = ForwardOperator(grid, single_station(z=ball_center[2] - d))
            got = op.forward(rho).values[0]
            expected = 1e8 * GRAVITATIONAL_CONSTANT * mass / d**2
            assert got == pytest.approx(expected, rel=0.01)

    def test_modes_agree(self, rng):
        grid, sensors, dense = small_setup()
        onfly = ForwardOperator(grid, sensors, mode=KernelMode.ON_THE_FLY)
        x = VolumeField(grid, rng.standard_normal(grid.n_cells), FieldKind.DENSITY_CHANGE)
        gd = dense.forward(x).values
        gf = onfly.forward(x).values
        assert np.allclose(gd, gf, rtol=1e-12, atol=1e-15)
        r = GravityMap(sensors, rng.standard_normal(sensors.n_stations))
        assert np.allclose(
            dense.adjoint(r).values, onfly.adjoint(r).values, rtol=1e-12, atol=1e-15
        )

    def test_singular_geometry(self):
        grid = ReservoirGrid(2, 2, 2, 100, 100, 100, origin=(0, 0, 0))
        # station exactly at the (0,0,0) cell center
        with pytest.raises(SingularGeometryError):
            ForwardOperator(grid, single_station(50.0, 50.0, 50.0))


class TestAdjoint:
    def test_zero_residual(self):
        _, sensors, op = small_setup()
        out = op.adjoint(GravityMap(sensors, np.zeros(sensors.n_stations)))
        assert np.all(out.values == 0.0)

    def test_dot_product_identity(self, rng):
        grid, sensors, op = small_setup()
        for _ in range(20):
            x = rng.standard_normal(grid.n_cells)
            y = rng.standard_normal(sensors.n_stations)
            fx = op.forward(VolumeField(grid, x, FieldKind.DENSITY_CHANGE)).values
            aty = op.adjoint(GravityMap(sensors, y)).values
            err = abs(fx @ y - x @ aty) / (np.linalg.norm(x) * np.linalg.norm(y))
            assert err < 1e-6

    def test_unit_residual_gives_kernel_row(self):
        grid, sensors, op = small_setup()
        K = op.kernel_matrix()
        for s in (0, 7, 15):
            e = np.zeros(sensors.n_stations)
            e[s] = 1.0
            assert np.array_equal(op.adjoint(GravityMap(sensors, e)).values, K[s])


class TestSubsample:
    def test_identity_at_base(self):
        _, _, op = small_setup()
        assert subsample_sensors(op, 250.0) is op

    def test_decimation_coordinates(self):
        grid = ReservoirGrid(8, 8, 8, 100, 100, 100, origin=(0, 0, 500))
        sensors = SensorGrid.regular(500.0, 1500.0, 1500.0)  # 4x4
        op = ForwardOperator(grid, sensors)
        sub = subsample_sensors(op, 1000.0)
        assert (sub.sensors.m1, sub.sensors.m2) == (2, 2)
        fine_xy = {tuple(p[:2]) for p in sensors.stations}
        assert all(tuple(p[:2]) in fine_xy for p in sub.sensors.stations)

    def test_restriction_bit_exact(self, rng):
        grid, sensors, op = small_setup()
        x = VolumeField(grid, rng.standard_normal(grid.n_cells), FieldKind.DENSITY_CHANGE)
        fine = op.forward(x).values
        sub = subsample_sensors(op, 500.0)
        coarse = sub.forward(x).values
        sel = [i + sensors.m1 * j for j in range(0, sensors.m2, 2) for i in range(0, sensors.m1, 2)]
        assert np.array_equal(coarse, fine[sel])

    def test_non_multiple_spacing(self):
        _, _, op = small_setup()
        with pytest.raises(ValueError):
            subsample_sensors(op, 600.0)
