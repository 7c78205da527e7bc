"""Label generation for electrode localization from a robot-held phantom."""

from ._calibforge import (
    InputError,
    IoError,
    derive_seed,
    evaluate_calibration,
    evaluate_predictions,
    lift_to_endeffector,
    propagate,
    regression_report,
    run_pipeline,
    solve_qr24,
)

__all__ = [
    "InputError",
    "IoError",
    "derive_seed",
    "evaluate_calibration",
    "evaluate_predictions",
    "lift_to_endeffector",
    "propagate",
    "regression_report",
    "run_pipeline",
    "solve_qr24",
]
__version__ = "0.1.0"
