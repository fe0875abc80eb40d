"""Constrained least-squares inversion of surface gravity.

Minimizes 0.5 * ||F(rho) - G||^2 by conjugate-gradient least squares (CGLS)
over the free cells only. In masked mode the free set is the reservoir mask
and every other cell keeps its initial value bit-exactly; unconstrained mode
frees every cell. The recorded data-misfit history is nonincreasing: CGLS
residual norms decrease monotonically and the loop stops at the first
floating-point stall instead of recording an uptick.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .forward import ForwardOperator, KernelMode
from .grids import FieldKind, GravityMap, VolumeField


class Constraint(Enum):
    MASKED = "masked"
    UNCONSTRAINED = "unconstrained"


@dataclass(frozen=True)
class InversionConfig:
    max_iters: int = 500
    rel_residual_tol: float = 1e-8
    constraint: Constraint | str = Constraint.MASKED
    initial_model: VolumeField | None = None
    record_history: bool = True

    def __post_init__(self):
        object.__setattr__(self, "constraint", Constraint(self.constraint))
        if self.rel_residual_tol <= 0:
            raise ValueError("rel_residual_tol must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")


@dataclass(frozen=True)
class InversionResult:
    model: VolumeField
    data_misfit_history: np.ndarray  # ||F(rho_k) - G||^2 per iteration, uGal^2
    iterations: int
    converged: bool

    def __post_init__(self):
        h = np.asarray(self.data_misfit_history, dtype=np.float64)
        if h.size and np.any(np.diff(h) > 0):
            raise ValueError("data misfit history must be nonincreasing")
        object.__setattr__(self, "data_misfit_history", h)


def invert(
    op: ForwardOperator, observed: GravityMap, cfg: InversionConfig
) -> InversionResult:
    """CGLS solution of F(rho) = observed restricted to the free cells."""
    if observed.normalized:
        raise ValueError("inversion requires a raw (uGal) gravity map")
    if observed.sensors.n_stations != op.sensors.n_stations:
        raise ValueError("observed map is not on the operator sensor grid")
    if not np.all(np.isfinite(observed.values)):
        raise ValueError("observed map contains non-finite values")

    grid = op.grid
    if cfg.constraint is Constraint.MASKED:
        free = grid.mask_indices
        if free.size == 0:
            raise ValueError("masked inversion requires a nonempty reservoir mask")
    else:
        free = np.arange(grid.n_cells)

    if cfg.initial_model is None:
        model0 = np.zeros(grid.n_cells)
    else:
        if not cfg.initial_model.grid.same_layout(grid):
            raise ValueError("initial model is not on the operator grid")
        if not np.all(np.isfinite(cfg.initial_model.values)):
            raise ValueError("initial model contains non-finite values")
        model0 = cfg.initial_model.values.copy()

    G = observed.values
    g_norm = np.linalg.norm(G)

    def result(x, history, iters, converged):
        out = model0.copy()
        out[free] = x
        kept = history if cfg.record_history else history[-1:]
        return InversionResult(
            model=VolumeField(grid, out, FieldKind.DENSITY_CHANGE),
            data_misfit_history=np.asarray(kept),
            iterations=iters,
            converged=converged,
        )

    x = model0[free].copy()
    if g_norm == 0.0:
        frozen = model0.copy()
        misfit = float(np.sum(op.forward(VolumeField(grid, frozen, FieldKind.DENSITY_CHANGE)).values ** 2))
        return result(x, [misfit], 0, True)

    # Data seen by the free cells: subtract the frozen cells' response once.
    frozen = model0.copy()
    frozen[free] = 0.0
    b = G - op.forward(VolumeField(grid, frozen, FieldKind.DENSITY_CHANGE)).values

    if op.mode is KernelMode.DENSE_MATRIX:
        A = op.kernel_matrix(cells=free)

        def matvec(v):
            return A @ v

        def rmatvec(r):
            return A.T @ r

    else:
        def matvec(v):
            full = np.zeros(grid.n_cells)
            full[free] = v
            return op.forward(VolumeField(grid, full, FieldKind.DENSITY_CHANGE)).values

        def rmatvec(r):
            return op.adjoint(GravityMap(op.sensors, r)).values[free]

    r = b - matvec(x)
    history = [float(r @ r)]
    tol_norm = cfg.rel_residual_tol * g_norm
    if np.linalg.norm(r) <= tol_norm:
        return result(x, history, 0, True)

    s = rmatvec(r)
    p = s.copy()
    gamma = float(s @ s)
    iters = 0
    converged = False
    for _ in range(cfg.max_iters):
        if gamma == 0.0:  # normal equations solved; least-squares optimum
            break
        q = matvec(p)
        qq = float(q @ q)
        if qq == 0.0:
            break
        alpha = gamma / qq
        x_new = x + alpha * p
        r_new = r - alpha * q
        misfit_new = float(r_new @ r_new)
        if misfit_new > history[-1]:  # floating-point stall: keep the last iterate
            break
        x, r = x_new, r_new
        iters += 1
        history.append(misfit_new)
        if np.sqrt(misfit_new) <= tol_norm:
            converged = True
            break
        s = rmatvec(r)
        gamma_new = float(s @ s)
        p = s + (gamma_new / gamma) * p
        gamma = gamma_new

    return result(x, history, iters, converged)


def refine(
    op: ForwardOperator,
    observed: GravityMap,
    dl_prediction: VolumeField,
    cfg: InversionConfig,
) -> InversionResult:
    """Least-squares refinement seeded by a learned prediction."""
    if not dl_prediction.grid.same_layout(op.grid):
        raise ValueError("prediction is not on the operator grid")
    return invert(op, observed, replace(cfg, initial_model=dl_prediction))


def threshold_model(model: VolumeField, cutoff: float = -7.0) -> VolumeField:
    """Binary plume mask: cells at or below `cutoff` kg/m^3 (anomalies are negative)."""
    if model.kind is not FieldKind.DENSITY_CHANGE:
        raise ValueError("threshold_model expects a density-change field")
    mask = (model.values <= cutoff).astype(np.float64)
    return VolumeField(model.grid, mask, FieldKind.BINARY_MASK)
