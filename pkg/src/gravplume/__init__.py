"""Synthetic CO2-plume density models, time-lapse surface gravity, and inversion."""

from .grids import (
    FieldKind,
    GravityMap,
    ReservoirGrid,
    SensorGrid,
    VolumeField,
    box_mask,
    cell_center,
    trilinear_resample,
)
from .geology import (
    GeoStatsParams,
    InjectionScenario,
    default_well_cell,
    density_change,
    injected_volume,
    realize_geology,
    sample_gaussian_field,
    sample_time_step,
    simulate_plume,
)
from .forward import (
    GRAVITATIONAL_CONSTANT,
    ForwardOperator,
    KernelMode,
    SingularGeometryError,
    subsample_sensors,
)
from .inversion import (
    Constraint,
    InversionConfig,
    InversionResult,
    invert,
    refine,
    threshold_model,
)
from .metrics import (
    EvalReport,
    class_weights,
    dice,
    gdl_loss,
    mse_data,
    mse_model,
    nonzero_mask,
    r_squared,
)
from .workbench import ALLOWED_SPACINGS, WorkbenchConfig, generate_dataset

__version__ = "0.1.0"

__all__ = [
    "ALLOWED_SPACINGS",
    "Constraint",
    "EvalReport",
    "FieldKind",
    "ForwardOperator",
    "GRAVITATIONAL_CONSTANT",
    "GeoStatsParams",
    "GravityMap",
    "InjectionScenario",
    "InversionConfig",
    "InversionResult",
    "KernelMode",
    "ReservoirGrid",
    "SensorGrid",
    "SingularGeometryError",
    "VolumeField",
    "WorkbenchConfig",
    "box_mask",
    "cell_center",
    "class_weights",
    "default_well_cell",
    "density_change",
    "dice",
    "gdl_loss",
    "generate_dataset",
    "injected_volume",
    "invert",
    "mse_data",
    "mse_model",
    "nonzero_mask",
    "r_squared",
    "realize_geology",
    "refine",
    "sample_gaussian_field",
    "sample_time_step",
    "simulate_plume",
    "subsample_sensors",
    "threshold_model",
    "trilinear_resample",
]
