"""Forward-model surface gravity for a plume and sanity-check the operator.

Shows the vertical-component response at the seabed station grid, verifies
the adjoint identity numerically, and compares the far field of a compact
anomaly against the analytic point-mass formula.
"""

import numpy as np

from gravplume import (
    FieldKind,
    ForwardOperator,
    GRAVITATIONAL_CONSTANT,
    GravityMap,
    ReservoirGrid,
    SensorGrid,
    VolumeField,
    density_change,
    realize_geology,
    simulate_plume,
)
from gravplume.workbench import WorkbenchConfig

cfg = WorkbenchConfig()
grid, sensors = cfg.grid(), cfg.sensors()
op = ForwardOperator(grid, sensors)

porosity, logperm = realize_geology(grid, cfg.geostats, seed=7)
sat = simulate_plume(grid, porosity, logperm, cfg.scenario, 80.0)
drho = density_change(porosity, sat, cfg.scenario)
gmap = op.forward(drho)
print(f"{sensors.n_stations} stations every {sensors.spacing:.0f} m")
print(f"gravity response: min {gmap.values.min():.1f}, "
      f"max {gmap.values.max():.1f} uGal (negative over the plume)")

# adjoint identity <F x, y> == <x, F^T y>
rng = np.random.default_rng(0)
x = rng.standard_normal(grid.n_cells)
y = rng.standard_normal(sensors.n_stations)
fx = op.forward(VolumeField(grid, x, FieldKind.DENSITY_CHANGE)).values
aty = op.adjoint(GravityMap(sensors, y)).values
err = abs(fx @ y - x @ aty) / (np.linalg.norm(x) * np.linalg.norm(y))
print(f"\nadjoint identity relative error: {err:.2e}")

# far field of a single buried cell vs gamma*m/d^2
cell = ReservoirGrid(1, 1, 1, 50, 50, 50, origin=(-25, -25, 975))
station = SensorGrid(1.0, 0.0, 0.0, np.array([[0.0, 0.0, 0.0]]), 1, 1)
tiny = ForwardOperator(cell, station)
gz = tiny.forward(VolumeField(cell, np.array([-30.0]), FieldKind.DENSITY_CHANGE)).values[0]
ref = 1e8 * GRAVITATIONAL_CONSTANT * (-30.0 * 50.0**3) / 1000.0**2
print(f"single 50 m cell, station 1 km above: {gz:.6f} uGal "
      f"(analytic {ref:.6f} uGal)")

# decay along a profile away from the plume center
profile = gmap.values2d[:, sensors.m2 // 2]
peak = int(np.argmin(profile))
print("\n|g_z| along the x profile through the map minimum:")
for i in range(peak, min(peak + 6, sensors.m1)):
    print(f"  x={i * sensors.spacing:6.0f} m: {abs(profile[i]):7.2f} uGal")
