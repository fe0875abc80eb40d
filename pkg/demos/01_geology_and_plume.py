"""Synthesize a geology realization and watch a CO2 plume grow through it.

Walks the generative side of the workbench: correlated porosity and
log-permeability fields, the greedy vertical-equilibrium plume filler, and
the conversion from saturation change to bulk density change.
"""

import numpy as np

from gravplume import density_change, injected_volume, realize_geology, simulate_plume
from gravplume.workbench import WorkbenchConfig

cfg = WorkbenchConfig()
grid = cfg.grid()
print(f"grid: {grid.shape} cells of {grid.dx:.0f}x{grid.dy:.0f}x{grid.dz:.2f} m, "
      f"top at {grid.origin[2]:.0f} m depth")
print(f"reservoir mask: {grid.mask_indices.size} of {grid.n_cells} cells")

porosity, logperm = realize_geology(grid, cfg.geostats, seed=2024)
print(f"\nporosity:  mean {porosity.values.mean():.3f}, "
      f"range [{porosity.values.min():.3f}, {porosity.values.max():.3f}]")
print(f"log-perm:  mean {logperm.values.mean():.2f}, "
      f"range [{logperm.values.min():.2f}, {logperm.values.max():.2f}]")
corr = np.corrcoef(porosity.values, logperm.values)[0, 1]
print(f"poro/perm sample correlation: {corr:.2f} (target 0.30)")

print("\nplume evolution (injection 100 y, migration 400 y):")
zc = grid.cell_centers()[:, 2]
for t in (5, 25, 50, 100, 300, 500):
    sat = simulate_plume(grid, porosity, logperm, cfg.scenario, t)
    occupied = sat.values > 0
    volume = float((porosity.values * sat.values).sum() * grid.cell_volume)
    com = float((porosity.values * sat.values * zc).sum()
                / (porosity.values * sat.values).sum())
    print(f"  t={t:3d} y: {occupied.sum():4d} cells, "
          f"{volume:.3e} m^3 CO2 (target {injected_volume(cfg.scenario, t):.3e}), "
          f"center of mass {com:.0f} m")

sat = simulate_plume(grid, porosity, logperm, cfg.scenario, 60.0)
drho = density_change(porosity, sat, cfg.scenario)
inside = drho.values[drho.values < 0]
print(f"\ndensity change at t=60 y: {inside.size} active cells, "
      f"mean {inside.mean():.1f} kg/m^3, min {inside.min():.1f} kg/m^3")
print("(negative: CO2 is lighter than the brine it displaces)")
