"""Non-Markovianity datasets and support-vector regression."""

from ._core import (
    ConfigError,
    DataTable,
    IoError,
    NumericError,
    SvrModel,
    __version__,
    bloch_features,
    evaluate,
    fit,
    generate,
    generate_driven,
    load_csv,
    load_model,
    measure,
    run_pipeline,
    split,
    sweep_measure,
)

__all__ = [
    "ConfigError",
    "DataTable",
    "IoError",
    "NumericError",
    "SvrModel",
    "__version__",
    "bloch_features",
    "evaluate",
    "fit",
    "generate",
    "generate_driven",
    "load_csv",
    "load_model",
    "measure",
    "run_pipeline",
    "split",
    "sweep_measure",
]
