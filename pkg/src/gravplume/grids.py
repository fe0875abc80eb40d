"""Voxel grids, volume fields, sensor layouts, and gravity maps.

Conventions shared by the whole package:

* z is positive downward; the sensor plane sits at z = 0 and the reservoir
  below it (origin z0 >= 0).
* Fields are cell-centered and stored flat in x-fastest order, i.e.
  ``flat[i + nx*(j + ny*k)]`` holds cell (i, j, k).
* All containers are immutable after construction and safe to share.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class FieldKind(Enum):
    DENSITY_CHANGE = "density_change"  # kg/m^3
    SATURATION = "saturation"  # fraction
    POROSITY = "porosity"  # fraction
    LOG_PERMEABILITY = "permeability_log"
    BINARY_MASK = "binary_mask"


# Porosity fields are clipped into this range at construction time.
POROSITY_RANGE = (0.10, 0.40)

_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class ReservoirGrid:
    """Regular 3D voxel grid with an inside-reservoir mask.

    Parameters
    ----------
    nx, ny, nz : int
        Cell counts per axis.
    dx, dy, dz : float
        Cell sizes in meters.
    origin : (x0, y0, z0)
        Coordinates of the grid's minimum corner; z0 is depth below the
        sensor plane and must be >= 0.
    mask : array of bool, optional
        One entry per cell (x-fastest). ``None`` means every cell is
        inside the reservoir.
    """

    nx: int
    ny: int
    nz: int
    dx: float
    dy: float
    dz: float
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    mask: np.ndarray | None = None

    def __post_init__(self):
        for name in ("nx", "ny", "nz"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("dx", "dy", "dz"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.origin[2] < 0.0:
            raise ValueError("grid origin depth z0 must be >= 0 (below the sensor plane)")
        if self.mask is not None:
            m = np.asarray(self.mask, dtype=bool).ravel()
            if m.size != self.n_cells:
                raise ValueError(
                    f"mask has {m.size} entries, expected {self.n_cells}"
                )
            m.setflags(write=False)
            object.__setattr__(self, "mask", m)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny * self.nz

    @property
    def cell_volume(self) -> float:
        return self.dx * self.dy * self.dz

    @property
    def extent(self) -> tuple[float, float, float]:
        return (self.nx * self.dx, self.ny * self.dy, self.nz * self.dz)

    @property
    def mask_flat(self) -> np.ndarray:
        """Boolean mask, one entry per cell, x-fastest."""
        if self.mask is None:
            return np.ones(self.n_cells, dtype=bool)
        return self.mask

    @property
    def mask3d(self) -> np.ndarray:
        return self.mask_flat.reshape(self.shape, order="F")

    @property
    def mask_indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask_flat)

    def axis_centers(self, axis: int) -> np.ndarray:
        n = self.shape[axis]
        d = (self.dx, self.dy, self.dz)[axis]
        return self.origin[axis] + (np.arange(n) + 0.5) * d

    def cell_centers(self) -> np.ndarray:
        """(n_cells, 3) array of cell-center coordinates, x-fastest order."""
        cx, cy, cz = (self.axis_centers(a) for a in range(3))
        X, Y, Z = np.meshgrid(cx, cy, cz, indexing="ij")
        return np.column_stack(
            [X.ravel(order="F"), Y.ravel(order="F"), Z.ravel(order="F")]
        )

    def ravel_index(self, i: int, j: int, k: int) -> int:
        return i + self.nx * (j + self.ny * k)

    def same_layout(self, other: "ReservoirGrid") -> bool:
        return (
            self.shape == other.shape
            and np.allclose((self.dx, self.dy, self.dz), (other.dx, other.dy, other.dz))
            and np.allclose(self.origin, other.origin)
        )

    def same_extent(self, other: "ReservoirGrid") -> bool:
        return np.allclose(self.origin, other.origin) and np.allclose(
            self.extent, other.extent
        )


def box_mask(
    grid: ReservoirGrid,
    margin_x: int = 0,
    margin_y: int = 0,
    k_min: int = 0,
    k_max: int | None = None,
) -> np.ndarray:
    """Axis-aligned box mask (flat, x-fastest): handy default reservoir shape."""
    k_max = grid.nz if k_max is None else k_max
    m = np.zeros(grid.shape, dtype=bool)
    m[margin_x : grid.nx - margin_x, margin_y : grid.ny - margin_y, k_min:k_max] = True
    return m.ravel(order="F")


@dataclass(frozen=True, eq=False)
class VolumeField:
    """One scalar per grid cell, flat x-fastest storage."""

    grid: ReservoirGrid
    values: np.ndarray
    kind: FieldKind

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).ravel()
        if v.size != self.grid.n_cells:
            raise ValueError(
                f"field has {v.size} values, expected {self.grid.n_cells}"
            )
        if self.kind is FieldKind.SATURATION:
            if v.min() < -_EPS or v.max() > 1.0 + _EPS:
                raise ValueError("saturation values must lie in [0, 1]")
        elif self.kind is FieldKind.POROSITY:
            lo, hi = POROSITY_RANGE
            if v.min() < lo - _EPS or v.max() > hi + _EPS:
                raise ValueError(f"porosity values must lie in [{lo}, {hi}]")
        elif self.kind is FieldKind.BINARY_MASK:
            if not np.all((v == 0.0) | (v == 1.0)):
                raise ValueError("binary mask values must be 0 or 1")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def values3d(self) -> np.ndarray:
        """(nx, ny, nz) view of the flat storage."""
        return self.values.reshape(self.grid.shape, order="F")

    @classmethod
    def from_3d(cls, grid: ReservoirGrid, arr: np.ndarray, kind: FieldKind) -> "VolumeField":
        arr = np.asarray(arr, dtype=np.float64)
        if arr.shape != grid.shape:
            raise ValueError(f"array shape {arr.shape} does not match grid {grid.shape}")
        return cls(grid, arr.ravel(order="F"), kind)

    @classmethod
    def zeros(cls, grid: ReservoirGrid, kind: FieldKind) -> "VolumeField":
        return cls(grid, np.zeros(grid.n_cells), kind)


@dataclass(frozen=True, eq=False)
class SensorGrid:
    """Uniform planar station layout; station s = i + m1*j (x-fastest)."""

    spacing: float
    x_extent: float
    y_extent: float
    stations: np.ndarray  # (m1*m2, 3)
    m1: int
    m2: int

    def __post_init__(self):
        st = np.asarray(self.stations, dtype=np.float64).reshape(-1, 3)
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")
        if self.m1 * self.m2 != st.shape[0]:
            raise ValueError("m1*m2 must equal the number of stations")
        # Uniformity: x varies fastest with constant step, y per block.
        xs = st[: self.m1, 0]
        if self.m1 > 1 and not np.allclose(np.diff(xs), self.spacing):
            raise ValueError("stations are not uniform at `spacing` along x")
        ys = st[:: self.m1, 1]
        if self.m2 > 1 and not np.allclose(np.diff(ys), self.spacing):
            raise ValueError("stations are not uniform at `spacing` along y")
        st.setflags(write=False)
        object.__setattr__(self, "stations", st)

    @property
    def n_stations(self) -> int:
        return self.m1 * self.m2

    @classmethod
    def regular(
        cls,
        spacing: float,
        x_extent: float,
        y_extent: float,
        z: float = 0.0,
        origin: tuple[float, float] = (0.0, 0.0),
    ) -> "SensorGrid":
        """Stations every `spacing` meters covering [0, extent] per axis."""
        if spacing <= 0:
            raise ValueError("spacing must be positive")
        m1 = int(round(x_extent / spacing)) + 1
        m2 = int(round(y_extent / spacing)) + 1
        if abs((m1 - 1) * spacing - x_extent) > 1e-6 or abs((m2 - 1) * spacing - y_extent) > 1e-6:
            raise ValueError("extents must be integer multiples of spacing")
        xs = origin[0] + spacing * np.arange(m1)
        ys = origin[1] + spacing * np.arange(m2)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        st = np.column_stack(
            [X.ravel(order="F"), Y.ravel(order="F"), np.full(m1 * m2, float(z))]
        )
        return cls(spacing, x_extent, y_extent, st, m1, m2)


@dataclass(frozen=True, eq=False)
class GravityMap:
    """Per-station vertical gravity (uGal raw, dimensionless when z-scored)."""

    sensors: SensorGrid
    values: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).ravel()
        if v.size != self.sensors.n_stations:
            raise ValueError(
                f"map has {v.size} values, expected {self.sensors.n_stations}"
            )
        if self.normalized:
            if abs(v.mean()) >= 1e-6 or abs(v.std() - 1.0) >= 1e-6:
                raise ValueError("normalized map must have mean 0 and std 1")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def values2d(self) -> np.ndarray:
        """(m1, m2) view with x along axis 0."""
        return self.values.reshape((self.sensors.m2, self.sensors.m1)).T


def cell_center(grid: ReservoirGrid, i: int, j: int, k: int) -> tuple[float, float, float]:
    """Center coordinates of cell (i, j, k) in meters."""
    if not (0 <= i < grid.nx and 0 <= j < grid.ny and 0 <= k < grid.nz):
        raise IndexError(f"cell index ({i}, {j}, {k}) out of bounds for {grid.shape}")
    x0, y0, z0 = grid.origin
    return (x0 + (i + 0.5) * grid.dx, y0 + (j + 0.5) * grid.dy, z0 + (k + 0.5) * grid.dz)


def _axis_stencil(n_src: int, centers_frac: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Lower corner index and affine weight per target position.

    The stencil is clamped to the source grid; weights stay affine, so the
    boundary pair linearly extends past the outermost cell centers. That keeps
    the scheme exact on globally (tri)linear fields.
    """
    if n_src == 1:
        return np.zeros(centers_frac.size, dtype=int), np.zeros(centers_frac.size)
    i0 = np.clip(np.floor(centers_frac).astype(int), 0, n_src - 2)
    return i0, centers_frac - i0


def trilinear_resample(field: VolumeField, target: ReservoirGrid) -> VolumeField:
    """Resample a field onto a target grid covering the same physical extent.

    Values are interpolated trilinearly at the target cell centers. Binary
    masks are re-binarized at 0.5 after interpolation.
    """
    src = field.grid
    if not src.same_extent(target):
        raise ValueError("source and target grids must cover the same physical extent")

    S = field.values3d
    idx, wts = [], []
    for axis in range(3):
        d_src = (src.dx, src.dy, src.dz)[axis]
        d_tgt = (target.dx, target.dy, target.dz)[axis]
        n_tgt = target.shape[axis]
        # Target cell centers in fractional source-index coordinates.
        u = ((np.arange(n_tgt) + 0.5) * d_tgt) / d_src - 0.5
        i0, w = _axis_stencil(src.shape[axis], u)
        idx.append(i0)
        wts.append(w)

    ix, jy, kz = idx
    wx = wts[0][:, None, None]
    wy = wts[1][None, :, None]
    wz = wts[2][None, None, :]
    ix1 = np.minimum(ix + 1, src.nx - 1)
    jy1 = np.minimum(jy + 1, src.ny - 1)
    kz1 = np.minimum(kz + 1, src.nz - 1)

    out = np.zeros(target.shape)
    for ia, wa in ((ix, 1.0 - wx), (ix1, wx)):
        for jb, wb in ((jy, 1.0 - wy), (jy1, wy)):
            for kc, wc in ((kz, 1.0 - wz), (kz1, wz)):
                out += S[np.ix_(ia, jb, kc)] * (wa * wb * wc)

    if field.kind is FieldKind.BINARY_MASK:
        out = (out >= 0.5).astype(np.float64)
    return VolumeField.from_3d(target, out, field.kind)
