"""Geostatistical porosity/permeability realizations and CO2 plume synthesis.

A realization is a pair of correlated Gaussian random fields clipped into
physical bounds. The plume filler is a reduced-order stand-in for a flow
simulator: injected CO2 occupies pore space greedily from the well outward
(shallowest first, then most permeable), and after injection stops the
occupied volume relaxes upward toward the top of the reservoir mask. Total
CO2 volume is conserved exactly at every time.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .grids import FieldKind, ReservoirGrid, VolumeField

DAYS_PER_YEAR = 365.25


@dataclass(frozen=True)
class GeoStatsParams:
    """Geostatistics configuration (stds, bounds, correlation structure)."""

    porosity_std: float = 0.03
    porosity_bounds: tuple[float, float] = (0.10, 0.40)
    logperm_std: float = 2.0
    logperm_bounds: tuple[float, float] = (-5.0, 10.0)
    corr_length_mean: float = 26.0  # cells
    corr_length_std: float = 2.0
    poro_perm_corr: float = 0.30
    porosity_mean: float = 0.25
    logperm_mean: float = 2.5
    seed: int = 0

    def __post_init__(self):
        if self.porosity_bounds[0] >= self.porosity_bounds[1]:
            raise ValueError("porosity bounds must be ordered")
        if self.logperm_bounds[0] >= self.logperm_bounds[1]:
            raise ValueError("log-permeability bounds must be ordered")
        for name in ("porosity_std", "logperm_std", "corr_length_mean", "corr_length_std"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if abs(self.poro_perm_corr) > 1.0:
            raise ValueError("|poro_perm_corr| must be <= 1")

    def to_dict(self) -> dict:
        return {
            "porosity_std": self.porosity_std,
            "porosity_bounds": list(self.porosity_bounds),
            "logperm_std": self.logperm_std,
            "logperm_bounds": list(self.logperm_bounds),
            "corr_length_mean": self.corr_length_mean,
            "corr_length_std": self.corr_length_std,
            "poro_perm_corr": self.poro_perm_corr,
            "porosity_mean": self.porosity_mean,
            "logperm_mean": self.logperm_mean,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GeoStatsParams":
        d = dict(d)
        d["porosity_bounds"] = tuple(d["porosity_bounds"])
        d["logperm_bounds"] = tuple(d["logperm_bounds"])
        return cls(**d)


@dataclass(frozen=True)
class InjectionScenario:
    """Injection schedule and fluid densities."""

    rate: float = 14400.0  # m^3/day
    injection_years: float = 100.0
    migration_years: float = 400.0
    well_cell: tuple[int, int, int] | None = None  # None = deepest mask column center
    rho_co2: float = 700.0  # kg/m^3
    rho_brine: float = 1030.0  # kg/m^3
    s_max: float = 0.8

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("injection rate must be positive")
        if self.injection_years < 0 or self.migration_years < 0:
            raise ValueError("scenario years must be >= 0")
        if not 0 < self.s_max <= 1:
            raise ValueError("s_max must lie in (0, 1]")

    def to_dict(self) -> dict:
        return {
            "rate": self.rate,
            "injection_years": self.injection_years,
            "migration_years": self.migration_years,
            "well_cell": list(self.well_cell) if self.well_cell else None,
            "rho_co2": self.rho_co2,
            "rho_brine": self.rho_brine,
            "s_max": self.s_max,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InjectionScenario":
        d = dict(d)
        if d.get("well_cell") is not None:
            d["well_cell"] = tuple(d["well_cell"])
        return cls(**d)


def sample_gaussian_field(grid: ReservoirGrid, corr_length: float, seed: int) -> VolumeField:
    """Stationary Gaussian random field with Gaussian covariance.

    The target covariance is exp(-r^2 / (2 * corr_length^2)) with r in cell
    units; realized by smoothing white noise with a Gaussian kernel of
    sigma = corr_length / sqrt(2) (periodic boundaries). Each realization is
    standardized to zero mean and unit std over the volume, so the sample
    statistics hold even when the correlation length rivals the domain size.
    """
    if corr_length <= 0:
        raise ValueError("corr_length must be positive")
    rng = np.random.default_rng(seed)
    white = rng.standard_normal(grid.shape)
    smooth = gaussian_filter(white, sigma=corr_length / math.sqrt(2.0), mode="wrap")
    std = smooth.std()
    if std == 0.0:  # degenerate only for pathological inputs
        raise ValueError("degenerate field realization (zero variance)")
    standardized = (smooth - smooth.mean()) / std
    return VolumeField.from_3d(grid, standardized, FieldKind.LOG_PERMEABILITY)


def realize_geology(
    grid: ReservoirGrid, params: GeoStatsParams, seed: int | None = None
) -> tuple[VolumeField, VolumeField]:
    """Draw one correlated (porosity, log-permeability) realization.

    Both fields share the correlation length drawn from
    N(corr_length_mean, corr_length_std^2) clipped to >= 1 cell; correlation
    between the fields comes from mixing two independent unit fields.
    """
    seed = params.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    corr = max(1.0, rng.normal(params.corr_length_mean, params.corr_length_std))
    sub = rng.integers(0, 2**32 - 1, size=2)
    z1 = sample_gaussian_field(grid, corr, int(sub[0])).values3d
    z2 = sample_gaussian_field(grid, corr, int(sub[1])).values3d

    c = params.poro_perm_corr
    poro = np.clip(
        params.porosity_mean + params.porosity_std * z1, *params.porosity_bounds
    )
    mix = c * z1 + math.sqrt(1.0 - c * c) * z2
    logperm = np.clip(
        params.logperm_mean + params.logperm_std * mix, *params.logperm_bounds
    )
    return (
        VolumeField.from_3d(grid, poro, FieldKind.POROSITY),
        VolumeField.from_3d(grid, logperm, FieldKind.LOG_PERMEABILITY),
    )


def default_well_cell(grid: ReservoirGrid) -> tuple[int, int, int]:
    """Deepest mask layer, cell nearest that layer's centroid."""
    m3 = grid.mask3d
    if not m3.any():
        raise ValueError("grid mask is empty")
    k = int(np.max(np.nonzero(m3.any(axis=(0, 1)))[0]))
    ii, jj = np.nonzero(m3[:, :, k])
    ci, cj = ii.mean(), jj.mean()
    best = int(np.argmin((ii - ci) ** 2 + (jj - cj) ** 2))
    return (int(ii[best]), int(jj[best]), k)


def injected_volume(scenario: InjectionScenario, t: float) -> float:
    """Cumulative injected CO2 volume (m^3) at time t years."""
    return scenario.rate * DAYS_PER_YEAR * min(t, scenario.injection_years)


def simulate_plume(
    grid: ReservoirGrid,
    porosity: VolumeField,
    logperm: VolumeField,
    scenario: InjectionScenario,
    t: float,
    sweeps_per_year: float = 1.0,
) -> VolumeField:
    """Saturation field after t years of the injection/migration scenario.

    Fill phase: CO2 claims pore volume outward from the well, visiting
    mask-interior neighbors shallowest-first (ties broken by higher
    log-permeability); the last cell takes a fractional saturation so the
    total volume matches the injected volume exactly. Migration phase
    (t > injection_years): saturation relaxes upward to the strictly
    shallower in-mask neighbor, one cell per sweep, with
    round(sweeps_per_year * (t - injection_years)) sweeps.
    """
    if not 0 <= t <= scenario.injection_years + scenario.migration_years:
        raise ValueError("t outside the scenario horizon")
    if porosity.kind is not FieldKind.POROSITY:
        raise ValueError("porosity field required")

    sat = np.zeros(grid.shape)
    v_target = injected_volume(scenario, t)
    if v_target == 0.0:
        return VolumeField.from_3d(grid, sat, FieldKind.SATURATION)

    mask3 = grid.mask3d
    phi = porosity.values3d
    kperm = logperm.values3d
    capacity = phi * scenario.s_max * grid.cell_volume  # m^3 of CO2 at s_max
    if v_target > capacity[mask3].sum() * (1.0 + 1e-12):
        raise ValueError("injected volume exceeds the fillable pore volume of the mask")

    well = scenario.well_cell or default_well_cell(grid)
    if not mask3[well]:
        raise ValueError("well cell lies outside the reservoir mask")

    z0 = grid.origin[2]
    co2 = np.zeros(grid.shape)  # CO2 volume per cell
    visited = np.zeros(grid.shape, dtype=bool)
    counter = 0
    frontier: list[tuple[float, float, int, tuple[int, int, int]]] = []

    def push(cell):
        nonlocal counter
        i, j, k = cell
        depth = z0 + (k + 0.5) * grid.dz
        heapq.heappush(frontier, (depth, -kperm[cell], counter, cell))
        counter += 1
        visited[cell] = True

    push(well)
    remaining = v_target
    while remaining > 0.0 and frontier:
        _, _, _, cell = heapq.heappop(frontier)
        take = min(capacity[cell], remaining)
        co2[cell] = take
        remaining -= take
        i, j, k = cell
        for di, dj, dk in ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)):
            nb = (i + di, j + dj, k + dk)
            if (
                0 <= nb[0] < grid.nx
                and 0 <= nb[1] < grid.ny
                and 0 <= nb[2] < grid.nz
                and mask3[nb]
                and not visited[nb]
            ):
                push(nb)
    if remaining > 1e-9 * v_target:
        raise ValueError(
            "injected volume exceeds the pore volume connected to the well"
        )

    if t > scenario.injection_years:
        # On a uniform grid the only strictly shallower neighbor is (i, j, k-1),
        # which is trivially the highest-permeability candidate.
        sweeps = int(round(sweeps_per_year * (t - scenario.injection_years)))
        recv = mask3[:, :, :-1] & mask3[:, :, 1:]  # can move k -> k-1
        for _ in range(sweeps):
            moved = 0.0
            for k in range(1, grid.nz):
                headroom = np.maximum(capacity[:, :, k - 1] - co2[:, :, k - 1], 0.0)
                move = np.where(recv[:, :, k - 1], np.minimum(co2[:, :, k], headroom), 0.0)
                co2[:, :, k] -= move
                co2[:, :, k - 1] += move
                moved += move.sum()
            if moved == 0.0:
                break

    nonzero = co2 > 0.0
    sat[nonzero] = co2[nonzero] / (phi[nonzero] * grid.cell_volume)
    return VolumeField.from_3d(grid, sat, FieldKind.SATURATION)


def density_change(
    porosity: VolumeField, delta_saturation: VolumeField, scenario: InjectionScenario
) -> VolumeField:
    """Bulk density change from a CO2 saturation change; zero outside the mask."""
    if porosity.kind is not FieldKind.POROSITY:
        raise ValueError("first field must be porosity")
    if delta_saturation.kind is not FieldKind.SATURATION:
        raise ValueError("second field must be a saturation change")
    if porosity.grid is not delta_saturation.grid and not porosity.grid.same_layout(
        delta_saturation.grid
    ):
        raise ValueError("fields must share a grid")
    grid = porosity.grid
    drho = (
        porosity.values
        * delta_saturation.values
        * (scenario.rho_co2 - scenario.rho_brine)
    )
    drho = np.where(grid.mask_flat, drho, 0.0)
    return VolumeField(grid, drho, FieldKind.DENSITY_CHANGE)


def sample_time_step(sample_index: int, rng: np.random.Generator) -> float:
    """Time step (years) for dataset sample `sample_index`.

    The first 100 samples draw from the injection period (0, 100]; later
    samples draw from the full horizon (0, 500].
    """
    if sample_index < 0:
        raise ValueError("sample_index must be >= 0")
    horizon = 100.0 if sample_index < 100 else 500.0
    return horizon * (1.0 - rng.random())
