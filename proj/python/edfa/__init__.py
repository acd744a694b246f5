"""Python access to the EDFA surrogate oracle, gain model and CLI."""

from ._edfa import (
    CalibrationError,
    Device,
    Model,
    NumericFailure,
    default_power_grid,
    derive_seed,
    frequencies_thz,
    gradient_check,
    load_model,
    make_device,
    normalize,
    run_cli,
)

__all__ = [
    "CalibrationError",
    "Device",
    "Model",
    "NumericFailure",
    "default_power_grid",
    "derive_seed",
    "frequencies_thz",
    "gradient_check",
    "load_model",
    "make_device",
    "normalize",
    "run_cli",
]
