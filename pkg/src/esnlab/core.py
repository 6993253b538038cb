"""Echo state network primitives.

Configuration, seeded weight construction with spectral-radius scaling, the
leaky-integrator state update and the four readout wirings. Training and
inference loops live in :mod:`esnlab.training`; they reuse the pieces here.
"""
from __future__ import annotations

import dataclasses
import enum
import math
import warnings
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np
import scipy.sparse as sp

from .errors import (
    ConfigError,
    DegenerateReservoir,
    DimensionMismatch,
    EchoStateWarning,
    NonFiniteState,
)

EIG_EPS = 1e-12
MAX_RESAMPLES = 8
SINC_SERIES_CUTOFF = 1e-8


class Activation(str, enum.Enum):
    TANH = "tanh"
    SINC = "sinc"
    IDENTITY = "identity"


class ReadoutVariant(str, enum.Enum):
    """Which vectors are concatenated before the trained readout.

    ``STATE_ONLY`` reads ``x``; ``INPUT_STATE`` reads ``[1, u, x]``;
    ``STATE_FEEDBACK`` reads ``[x, y_prev]``; ``INPUT_STATE_FEEDBACK`` reads
    ``[1, u, x, y_prev]``.
    """

    STATE_ONLY = "state_only"
    INPUT_STATE = "input_state"
    STATE_FEEDBACK = "state_feedback"
    INPUT_STATE_FEEDBACK = "input_state_feedback"

    @property
    def reads_input(self) -> bool:
        return self in (ReadoutVariant.INPUT_STATE, ReadoutVariant.INPUT_STATE_FEEDBACK)

    @property
    def reads_output(self) -> bool:
        return self in (ReadoutVariant.STATE_FEEDBACK, ReadoutVariant.INPUT_STATE_FEEDBACK)

    @property
    def code(self) -> int:
        return list(ReadoutVariant).index(self) + 1


class Distribution(str, enum.Enum):
    UNIFORM = "uniform"
    BIVALUED = "bivalued"
    LAPLACE = "laplace"


class Stream(enum.IntEnum):
    """Fixed child-stream indices derived from one root seed.

    New consumers get new indices; existing indices never move, so adding a
    consumer cannot perturb the draws of the others.
    """

    RESERVOIR = 0
    INPUT = 1
    FEEDBACK = 2
    NOISE = 3
    INITIAL_STATE = 4
    PREDICTION_NOISE = 5


def child_rng(root_seed: int, stream: int, attempt: int = 0) -> np.random.Generator:
    seq = np.random.SeedSequence(int(root_seed), spawn_key=(int(stream), int(attempt)))
    return np.random.default_rng(seq)


@dataclass(frozen=True)
class EsnConfig:
    """Hyperparameters and architecture switches for one ESN variant."""

    n_inputs: int
    n_reservoir: int
    n_outputs: int
    spectral_radius: float = 0.9
    leak_rate: float = 1.0
    density_reservoir: float = 0.15
    density_input: float = 1.0
    density_feedback: float = 0.0
    input_scale: float = 1.0
    feedback_scale: float = 0.0
    noise_scale: float = 0.0
    reservoir_activation: Activation = Activation.TANH
    output_activation: Activation = Activation.IDENTITY
    readout_variant: ReadoutVariant = ReadoutVariant.INPUT_STATE
    weight_distribution: Distribution = Distribution.UNIFORM
    bias_enabled: bool = True
    classifier_mode: bool = False

    def __post_init__(self):
        # accept plain strings (JSON configs, CLI)
        for name, enum_type in (
            ("reservoir_activation", Activation),
            ("output_activation", Activation),
            ("readout_variant", ReadoutVariant),
            ("weight_distribution", Distribution),
        ):
            value = getattr(self, name)
            try:
                object.__setattr__(self, name, enum_type(value))
            except ValueError:
                raise ConfigError(f"{name}={value!r} is not one of {[e.value for e in enum_type]}")
        self._validate()

    def _validate(self):
        if self.n_reservoir < 1:
            raise ConfigError("n_reservoir must be >= 1")
        if self.n_outputs < 1:
            raise ConfigError("n_outputs must be >= 1")
        if self.n_inputs < 0:
            raise ConfigError("n_inputs must be >= 0")
        if not 0.0 < self.leak_rate <= 1.0:
            raise ConfigError(f"leak_rate must lie in (0, 1], got {self.leak_rate}")
        if not self.spectral_radius > 0.0:
            raise ConfigError(f"spectral_radius must be > 0, got {self.spectral_radius}")
        for name in ("density_reservoir", "density_input", "density_feedback"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {value}")
        for name in ("input_scale", "feedback_scale", "noise_scale"):
            value = getattr(self, name)
            if not value >= 0.0:
                raise ConfigError(f"{name} must be >= 0, got {value}")
        if self.reservoir_activation is Activation.IDENTITY:
            raise ConfigError("reservoir_activation must be tanh or sinc")
        if self.output_activation is Activation.SINC:
            raise ConfigError("output_activation must be tanh or identity")
        if self.spectral_radius >= 1.0:
            warnings.warn(
                f"spectral_radius={self.spectral_radius} >= 1; echo state property not expected",
                EchoStateWarning,
                stacklevel=3,
            )

    @property
    def uses_feedback(self) -> bool:
        """Whether output-to-reservoir weights W_fb are instantiated."""
        return self.density_feedback > 0.0 and self.feedback_scale > 0.0

    @property
    def has_output_path(self) -> bool:
        return self.uses_feedback or self.readout_variant.reads_output

    @property
    def input_columns(self) -> int:
        return self.n_inputs + (1 if self.bias_enabled else 0)

    @property
    def concat_length(self) -> int:
        n = self.n_reservoir
        if self.readout_variant.reads_input:
            n += 1 + self.n_inputs
        if self.readout_variant.reads_output:
            n += self.n_outputs
        return n

    def replace(self, **changes) -> "EsnConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        for key, value in out.items():
            if isinstance(value, enum.Enum):
                out[key] = value.value
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "EsnConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True, eq=False)
class WeightSet:
    W_in: np.ndarray
    W: sp.csr_matrix
    W_fb: np.ndarray
    root_seed: int
    realized_spectral_radius: float

    @property
    def has_feedback(self) -> bool:
        return bool(np.any(self.W_fb))


@dataclass(frozen=True, eq=False)
class ReservoirState:
    x: np.ndarray
    y_prev: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, config: EsnConfig) -> "ReservoirState":
        return cls(np.zeros(config.n_reservoir), np.zeros(config.n_outputs), 0)

    @classmethod
    def random(cls, config: EsnConfig, rng: np.random.Generator) -> "ReservoirState":
        return cls(rng.uniform(-1.0, 1.0, config.n_reservoir), np.zeros(config.n_outputs), 0)


# -- weights -----------------------------------------------------------------

def sample_matrix(distribution, rows: int, cols: int, density: float,
                  rng: np.random.Generator) -> np.ndarray:
    """Dense matrix whose entries are independently nonzero with probability `density`.

    Nonzero values come from a zero-centered unit distribution: uniform on
    [-1, 1), equiprobable {-1, +1}, or Laplace with scale 1.
    """
    distribution = Distribution(distribution)
    shape = (rows, cols)
    mask = rng.random(shape) < density
    if distribution is Distribution.UNIFORM:
        values = rng.uniform(-1.0, 1.0, shape)
    elif distribution is Distribution.BIVALUED:
        values = np.where(rng.random(shape) < 0.5, -1.0, 1.0)
    else:
        values = rng.laplace(0.0, 1.0, shape)
    return np.where(mask, values, 0.0)


def spectral_radius(W) -> float:
    dense = W.toarray() if sp.issparse(W) else np.asarray(W, dtype=float)
    if dense.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(dense))))


def scale_to_spectral_radius(W0, target: float, eps: float = EIG_EPS) -> np.ndarray:
    W0 = np.asarray(W0, dtype=float)
    if W0.ndim != 2 or W0.shape[0] != W0.shape[1]:
        raise DimensionMismatch(f"reservoir matrix must be square, got {W0.shape}")
    rho0 = spectral_radius(W0)
    if rho0 <= eps:
        raise DegenerateReservoir(f"|lambda_max| = {rho0:.3g} <= {eps:g}")
    return (target / rho0) * W0


def build(config: EsnConfig, root_seed: int) -> WeightSet:
    """Sample and scale all weight matrices for one seeded instantiation.

    The reservoir is resampled from fresh child streams up to
    ``MAX_RESAMPLES`` times if it comes out degenerate.
    """
    N = config.n_reservoir
    dist = config.weight_distribution
    for attempt in range(MAX_RESAMPLES + 1):
        W0 = sample_matrix(dist, N, N, config.density_reservoir,
                           child_rng(root_seed, Stream.RESERVOIR, attempt))
        rho0 = spectral_radius(W0)
        if rho0 > EIG_EPS:
            break
    else:
        raise DegenerateReservoir(
            f"reservoir degenerate after {MAX_RESAMPLES} resamples (seed={root_seed})")
    scale = config.spectral_radius / rho0
    W = sp.csr_matrix(scale * W0)

    W_in = config.input_scale * sample_matrix(
        dist, N, config.input_columns, config.density_input,
        child_rng(root_seed, Stream.INPUT))
    if config.uses_feedback:
        W_fb = config.feedback_scale * sample_matrix(
            dist, N, config.n_outputs, config.density_feedback,
            child_rng(root_seed, Stream.FEEDBACK))
    else:
        W_fb = np.zeros((N, config.n_outputs))

    for arr in (W_in, W_fb):
        arr.setflags(write=False)
    return WeightSet(W_in, W, W_fb, int(root_seed), float(scale * rho0))


# -- activations ---------------------------------------------------------------

def sinc(x):
    """Normalized sinc with a series branch near zero."""
    x = np.asarray(x, dtype=float)
    px = np.pi * x
    small = np.abs(x) < SINC_SERIES_CUTOFF
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.sin(px) / np.where(small, 1.0, px)
    return np.where(small, 1.0 - px * px / 6.0, out)


def _identity(x):
    return x


_ACTIVATIONS: dict[Activation, Callable] = {
    Activation.TANH: np.tanh,
    Activation.SINC: sinc,
    Activation.IDENTITY: _identity,
}


def activation_fn(kind) -> Callable:
    return _ACTIVATIONS[Activation(kind)]


def activate(kind, x):
    out = activation_fn(kind)(np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


# -- state update and readout ----------------------------------------------------

def augment_input(u, config: EsnConfig) -> np.ndarray:
    """Input vector as seen by W_in: bias 1.0 prepended when enabled."""
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.shape[0] != config.n_inputs:
        raise DimensionMismatch(f"expected {config.n_inputs} inputs, got {u.shape[0]}")
    return np.concatenate(([1.0], u)) if config.bias_enabled else u


def step(state: ReservoirState, u, v, weights: WeightSet, config: EsnConfig) -> ReservoirState:
    """One leaky-integrator update.

    ``x(t+1) = (1-a) x(t) + a f(W_in [1; u] + W x(t) + W_fb y_prev) + s_v v``.
    ``y_prev`` is carried over unchanged; the readout caller updates it.
    """
    pre = weights.W_in @ augment_input(u, config) + weights.W @ state.x
    if config.uses_feedback:
        pre = pre + weights.W_fb @ state.y_prev
    a = config.leak_rate
    x = (1.0 - a) * state.x + a * activation_fn(config.reservoir_activation)(pre)
    if v is not None and config.noise_scale > 0.0:
        x = x + config.noise_scale * np.asarray(v, dtype=float)
    if not np.all(np.isfinite(x)):
        raise NonFiniteState(f"non-finite reservoir state at t={state.t + 1}")
    return ReservoirState(x, state.y_prev, state.t + 1)


def concatenate(variant, u, x, y_prev) -> np.ndarray:
    variant = ReadoutVariant(variant)
    parts = []
    if variant.reads_input:
        parts += [[1.0], np.asarray(u, dtype=float).reshape(-1)]
    parts.append(np.asarray(x, dtype=float).reshape(-1))
    if variant.reads_output:
        parts.append(np.asarray(y_prev, dtype=float).reshape(-1))
    return np.concatenate(parts)


def readout(variant, state: ReservoirState, u, W_out, g) -> tuple[np.ndarray, ReservoirState]:
    """Apply the trained readout; returns ``(y, state with y_prev = y)``."""
    z = concatenate(variant, u, state.x, state.y_prev)
    W_out = np.atleast_2d(np.asarray(W_out, dtype=float))
    if W_out.shape[1] != z.shape[0]:
        raise DimensionMismatch(
            f"W_out has {W_out.shape[1]} columns, {ReadoutVariant(variant).value} needs {z.shape[0]}")
    y = activation_fn(g)(W_out @ z)
    return y, ReservoirState(state.x, y, state.t)


def check_finite(arr, what: str):
    if not math.isfinite(float(np.sum(arr))):
        raise NonFiniteState(f"non-finite {what}")


__all__ = [
    "Activation", "ReadoutVariant", "Distribution", "Stream", "EsnConfig", "WeightSet",
    "ReservoirState", "child_rng", "sample_matrix", "spectral_radius",
    "scale_to_spectral_radius", "build", "sinc", "activate", "activation_fn",
    "augment_input", "step", "concatenate", "readout",
]
