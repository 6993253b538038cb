"""Echo state networks with a seeded benchmark, tuning and profiling harness."""
from .core import (
    Activation,
    Distribution,
    EsnConfig,
    ReadoutVariant,
    ReservoirState,
    Stream,
    WeightSet,
    build,
    child_rng,
    concatenate,
    readout,
    spectral_radius,
    step,
)
from .errors import EchoStateWarning, EsnError
from .training import (
    TrainedModel,
    classify,
    fit_classifier,
    fit_ridge,
    harvest,
    predict,
    train,
)
from .models import ModelSpec, enumerate_models, get_preset, heuristic_defaults, heuristic_params

__version__ = "0.1.0"

__all__ = [
    "Activation", "Distribution", "EsnConfig", "ReadoutVariant", "ReservoirState", "Stream",
    "WeightSet", "build", "child_rng", "concatenate", "readout", "spectral_radius", "step",
    "EchoStateWarning", "EsnError", "TrainedModel", "classify", "fit_classifier", "fit_ridge",
    "harvest", "predict", "train", "ModelSpec", "enumerate_models", "get_preset",
    "heuristic_defaults", "heuristic_params",
]
