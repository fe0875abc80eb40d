"""Linear forward operator: density-change volume -> vertical surface gravity.

Each cell acts as a point mass at its center; the vertical component picked
up by a station at r' is

    g_z(r') = unit_scale * gamma * sum_c drho_c * V_c * (z_c - z') / |r_c - r'|^3

with z positive downward, so a negative density change directly below a
station produces a negative g_z. Computation runs in SI and is reported in
uGal (1 uGal = 1e-8 m/s^2).
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .grids import FieldKind, GravityMap, ReservoirGrid, SensorGrid, VolumeField

GRAVITATIONAL_CONSTANT = 6.6738480e-11  # m^3 kg^-1 s^-2
UGAL_PER_MS2 = 1e8


class KernelMode(Enum):
    ON_THE_FLY = "on_the_fly"
    DENSE_MATRIX = "dense_matrix"


class SingularGeometryError(ValueError):
    """A station (nearly) coincides with a cell center."""


class ForwardOperator:
    """Discrete gravity operator between a grid and a sensor layout.

    dense_matrix mode materializes the (stations x cells) coefficient
    matrix once; on_the_fly recomputes station rows per call. Both modes
    use the same coefficients and a fixed per-row summation order.
    """

    def __init__(
        self,
        grid: ReservoirGrid,
        sensors: SensorGrid,
        mode: KernelMode | str = KernelMode.DENSE_MATRIX,
        gamma: float = GRAVITATIONAL_CONSTANT,
        unit_scale: float = UGAL_PER_MS2,
    ):
        self.grid = grid
        self.sensors = sensors
        self.mode = KernelMode(mode)
        self.gamma = gamma
        self.unit_scale = unit_scale
        self._centers = grid.cell_centers()
        self._matrix: np.ndarray | None = None
        self._check_geometry()
        if self.mode is KernelMode.DENSE_MATRIX:
            self._matrix = self._kernel_rows(np.arange(sensors.n_stations))

    def _check_geometry(self):
        limit = self.grid.dz / 10.0
        st = self.sensors.stations
        for s in range(st.shape[0]):
            d2 = np.sum((self._centers - st[s]) ** 2, axis=1)
            if d2.min() < limit * limit:
                raise SingularGeometryError(
                    f"station {s} is within dz/10 of a cell center"
                )

    def _kernel_rows(self, station_idx: np.ndarray) -> np.ndarray:
        """Coefficient rows (uGal per unit kg/m^3) for the given stations."""
        st = self.sensors.stations[station_idx]
        diff = self._centers[None, :, :] - st[:, None, :]
        r2 = np.sum(diff * diff, axis=2)
        scale = self.unit_scale * self.gamma * self.grid.cell_volume
        return scale * diff[:, :, 2] / (r2 * np.sqrt(r2))

    def kernel_matrix(self, cells: np.ndarray | None = None) -> np.ndarray:
        """Dense kernel over all stations and the requested cell columns."""
        if self._matrix is not None:
            K = self._matrix
        else:
            K = self._kernel_rows(np.arange(self.sensors.n_stations))
        return K if cells is None else K[:, cells]

    def forward(self, density: VolumeField) -> GravityMap:
        """Vertical gravity response (uGal, raw) of a density-change volume."""
        if density.grid is not self.grid and not density.grid.same_layout(self.grid):
            raise ValueError("density field is not on the operator grid")
        if not np.all(np.isfinite(density.values)):
            raise ValueError("density field contains non-finite values")
        if self._matrix is not None:
            g = self._matrix @ density.values
        else:
            g = np.empty(self.sensors.n_stations)
            for s in range(self.sensors.n_stations):
                row = self._kernel_rows(np.array([s]))[0]
                g[s] = row @ density.values
        return GravityMap(self.sensors, g, normalized=False)

    def adjoint(self, residual: GravityMap) -> VolumeField:
        """Exact transpose of the forward coefficients applied to a map."""
        if residual.sensors is not self.sensors and (
            residual.sensors.n_stations != self.sensors.n_stations
        ):
            raise ValueError("residual map is not on the operator sensors")
        if not np.all(np.isfinite(residual.values)):
            raise ValueError("residual map contains non-finite values")
        if self._matrix is not None:
            v = self._matrix.T @ residual.values
        else:
            v = np.zeros(self.grid.n_cells)
            for s in range(self.sensors.n_stations):
                row = self._kernel_rows(np.array([s]))[0]
                v += residual.values[s] * row
        return VolumeField(self.grid, v, FieldKind.DENSITY_CHANGE)


def subsample_sensors(op: ForwardOperator, spacing: float) -> ForwardOperator:
    """Operator over the station subset at a coarser (multiple) spacing."""
    base = op.sensors
    ratio = spacing / base.spacing
    factor = int(round(ratio))
    if factor < 1 or abs(ratio - factor) > 1e-9:
        raise ValueError("spacing must be an integer multiple of the base spacing")
    if factor == 1:
        return op
    keep_i = np.arange(0, base.m1, factor)
    keep_j = np.arange(0, base.m2, factor)
    sel = (keep_i[None, :] + base.m1 * keep_j[:, None]).ravel()
    stations = base.stations[sel]
    coarse = SensorGrid(
        spacing=spacing,
        x_extent=(keep_i.size - 1) * spacing if keep_i.size > 1 else 0.0,
        y_extent=(keep_j.size - 1) * spacing if keep_j.size > 1 else 0.0,
        stations=stations,
        m1=keep_i.size,
        m2=keep_j.size,
    )
    sub = ForwardOperator.__new__(ForwardOperator)
    sub.grid = op.grid
    sub.sensors = coarse
    sub.mode = op.mode
    sub.gamma = op.gamma
    sub.unit_scale = op.unit_scale
    sub._centers = op._centers
    sub._matrix = op._matrix[sel] if op._matrix is not None else None
    return sub
