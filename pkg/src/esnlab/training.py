"""Readout training and inference.

All sequence work goes through :func:`drive`, a single loop that handles
teacher forcing (feedback path fed with the true previous output) and free
running (fed with the model's own previous output). Harvesting, prediction
and classification only differ in what they feed and what they keep.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import (
    Activation,
    EsnConfig,
    ReservoirState,
    Stream,
    WeightSet,
    activation_fn,
    child_rng,
)
from .errors import (
    DimensionMismatch,
    EmptyGroup,
    FreeRunWithoutFeedback,
    NonFiniteState,
    SingularSystem,
    WashoutTooLarge,
)

TANH_TARGET_CLIP = 0.99999
SINGULAR_COND = 1e12


@dataclass(frozen=True, eq=False)
class HarvestResult:
    Z: np.ndarray          # concat_length x (T - washout)
    Y_target: np.ndarray   # L x (T - washout)
    final_state: ReservoirState


@dataclass(frozen=True, eq=False)
class TrainedModel:
    config: EsnConfig
    weights: WeightSet
    W_out: np.ndarray
    ridge: float
    washout: int
    final_state: ReservoirState | None = None

    def readouts(self, Z: np.ndarray) -> np.ndarray:
        return apply_readout(self.W_out, Z, self.config.output_activation)


def apply_readout(W_out: np.ndarray, Z: np.ndarray, g) -> np.ndarray:
    """``g(W_out Z)`` with a fixed per-column summation order.

    A BLAS product may round a column differently depending on which other
    columns share the call; accumulating feature by feature keeps every
    column's result independent of slicing.
    """
    W_out = np.atleast_2d(W_out)
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        return activation_fn(g)(W_out @ Z)
    acc = np.zeros((W_out.shape[0], Z.shape[1]))
    for d in range(Z.shape[0]):
        acc += W_out[:, d:d + 1] * Z[d]
    return activation_fn(g)(acc)


def _as_2d(arr, rows: int | None = None, name: str = "array") -> np.ndarray:
    arr = np.asarray(arr, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D (features x time), got shape {arr.shape}")
    if rows is not None and arr.shape[0] != rows:
        raise DimensionMismatch(f"{name} has {arr.shape[0]} rows, expected {rows}")
    return arr


def drive(weights: WeightSet, config: EsnConfig, inputs, state: ReservoirState, *,
          steps: int | None = None, teacher=None, W_out=None,
          noise_scale: float = 0.0, noise_rng: np.random.Generator | None = None,
          ) -> tuple[np.ndarray, np.ndarray, ReservoirState]:
    """Run the reservoir over ``steps`` time steps.

    With ``teacher`` the feedback/readout path sees the true previous output.
    Otherwise ``W_out`` is applied at every step and its output is fed back.

    Returns ``(Z, Y, final_state)`` where ``Z`` holds the readout
    concatenation for every step (``concat_length x T``) and ``Y`` the
    outputs that were fed forward (the teacher, or the generated outputs).
    """
    K, N, L = config.n_inputs, config.n_reservoir, config.n_outputs
    if teacher is not None:
        teacher = _as_2d(teacher, L, "teacher")
        T = teacher.shape[1]
    elif steps is not None:
        T = int(steps)
    else:
        T = np.asarray(inputs).reshape(K, -1).shape[1] if K else 0
    if K:
        inputs = _as_2d(inputs, K, "inputs")
        if inputs.shape[1] < T:
            raise DimensionMismatch(f"need {T} input columns, got {inputs.shape[1]}")
        inputs = inputs[:, :T]
    else:
        inputs = np.zeros((0, T))
    if teacher is None:
        if W_out is None:
            raise ValueError("free running needs W_out")
        W_out = np.atleast_2d(np.asarray(W_out, dtype=float))
        if W_out.shape != (L, config.concat_length):
            raise DimensionMismatch(
                f"W_out shape {W_out.shape}, expected {(L, config.concat_length)}")

    variant = config.readout_variant
    D = config.concat_length
    ZT = np.empty((T, D))
    x_lo = 1 + K if variant.reads_input else 0
    x_hi = x_lo + N
    if variant.reads_input:
        ZT[:, 0] = 1.0
        ZT[:, 1:x_lo] = inputs.T
    U = np.vstack([np.ones((1, T)), inputs]) if config.bias_enabled else inputs
    drive_T = U.T @ weights.W_in.T  # T x N
    if noise_scale > 0.0:
        noise_rng = noise_rng if noise_rng is not None else child_rng(weights.root_seed, Stream.NOISE)
        noise_T = noise_scale * noise_rng.uniform(-1.0, 1.0, (T, N))
    else:
        noise_T = None

    W = weights.W
    W_fb = weights.W_fb if config.uses_feedback else None
    a = config.leak_rate
    keep = 1.0 - a
    f = activation_fn(config.reservoir_activation)
    g = activation_fn(config.output_activation)
    reads_output = variant.reads_output
    free_run = teacher is None
    Y = np.empty((L, T)) if free_run else teacher

    x = np.array(state.x, dtype=float)
    y = np.array(state.y_prev, dtype=float)
    for t in range(T):
        pre = drive_T[t] + W @ x
        if W_fb is not None:
            pre += W_fb @ y
        x = keep * x + a * f(pre)
        if noise_T is not None:
            x = x + noise_T[t]
        if not math.isfinite(x.sum()):
            raise NonFiniteState(f"non-finite reservoir state at step {state.t + t + 1}")
        z = ZT[t]
        z[x_lo:x_hi] = x
        if reads_output:
            z[x_hi:] = y
        if free_run:
            y = g(W_out @ z)
            if not math.isfinite(y.sum()):
                raise NonFiniteState(f"non-finite output at step {state.t + t + 1}")
            Y[:, t] = y
        else:
            y = teacher[:, t]
    final = ReservoirState(x, np.array(y, dtype=float), state.t + T)
    return ZT.T, Y, final


def harvest(weights: WeightSet, config: EsnConfig, inputs, teacher, washout: int,
            noise_rng: np.random.Generator | None = None,
            initial_state: ReservoirState | None = None) -> HarvestResult:
    """Collect readout concatenations under teacher forcing, dropping the washout."""
    teacher = _as_2d(teacher, config.n_outputs, "teacher")
    T = teacher.shape[1]
    if washout >= T or washout < 0:
        raise WashoutTooLarge(f"washout {washout} must lie in [0, {T})")
    state = initial_state if initial_state is not None else ReservoirState.zeros(config)
    Z, _, final = drive(weights, config, inputs, state, teacher=teacher,
                        noise_scale=config.noise_scale, noise_rng=noise_rng)
    return HarvestResult(Z[:, washout:], teacher[:, washout:], final)


def output_inverse_transform(g, targets) -> np.ndarray:
    targets = np.asarray(targets, dtype=float)
    if Activation(g) is Activation.TANH:
        return np.arctanh(np.clip(targets, -TANH_TARGET_CLIP, TANH_TARGET_CLIP))
    return targets


def fit_ridge(Z, Y_target, ridge: float) -> np.ndarray:
    """``W_out = Y Z^T (Z Z^T + ridge I)^-1`` via a symmetric solve."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    Y = np.atleast_2d(np.asarray(Y_target, dtype=float))
    if Z.shape[1] != Y.shape[1]:
        raise DimensionMismatch(f"Z has {Z.shape[1]} columns, targets have {Y.shape[1]}")
    if Z.shape[1] == 0:
        raise DimensionMismatch("no samples to fit")
    if ridge < 0:
        raise ValueError("ridge must be >= 0")
    A = Z @ Z.T
    if ridge > 0:
        A[np.diag_indices_from(A)] += ridge
    B = Z @ Y.T
    if ridge == 0:
        cond = np.linalg.cond(A)
        if not cond <= SINGULAR_COND:
            raise SingularSystem(f"Z Z^T condition number {cond:.3g} > {SINGULAR_COND:g}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        try:
            W_t = scipy.linalg.solve(A, B, assume_a="pos")
        except np.linalg.LinAlgError:
            W_t = scipy.linalg.solve(A, B, assume_a="sym")
    return np.ascontiguousarray(W_t.T)


def fit_sequence(weights: WeightSet, config: EsnConfig, inputs, targets, washout: int,
                 ridge: float, noise_rng: np.random.Generator | None = None) -> TrainedModel:
    h = harvest(weights, config, inputs, targets, washout, noise_rng=noise_rng)
    W_out = fit_ridge(h.Z, output_inverse_transform(config.output_activation, h.Y_target), ridge)
    if not np.all(np.isfinite(W_out)):
        raise NonFiniteState("non-finite readout weights")
    return TrainedModel(config, weights, W_out, float(ridge), int(washout), h.final_state)


def train(weights: WeightSet, config: EsnConfig, dataset, washout: int | None = None,
          ridge: float = 1e-6, noise_rng: np.random.Generator | None = None) -> TrainedModel:
    """Train on the training split of a :class:`~esnlab.benchmarks.SequenceDataset`."""
    if washout is None:
        washout = dataset.washout_train
    return fit_sequence(weights, config, dataset.train_inputs, dataset.train_targets,
                        washout, ridge, noise_rng)


def predict(model: TrainedModel, inputs=None, mode: str = "teacher_forced",
            horizon: int | None = None, prediction_noise_scale: float | None = None,
            initial_state: ReservoirState | None = None, teacher=None,
            noise_rng: np.random.Generator | None = None) -> np.ndarray:
    """Run a trained model; returns an ``L x horizon`` output array.

    ``teacher_forced`` feeds ``teacher`` as the previous output; ``free_run``
    feeds the model's own previous prediction. Noise is injected at
    ``prediction_noise_scale`` (the config's ``noise_scale`` when None).
    Without ``initial_state`` a zero state is used.
    """
    config = model.config
    if mode not in ("teacher_forced", "free_run"):
        raise ValueError(f"unknown mode {mode!r}")
    scale = config.noise_scale if prediction_noise_scale is None else float(prediction_noise_scale)
    if noise_rng is None:
        noise_rng = child_rng(model.weights.root_seed, Stream.PREDICTION_NOISE)
    state = initial_state if initial_state is not None else ReservoirState.zeros(config)

    if mode == "teacher_forced":
        if teacher is None:
            if config.has_output_path:
                raise ValueError("teacher_forced prediction needs a teacher stream")
            T = horizon if horizon is not None else (
                _as_2d(inputs, config.n_inputs, "inputs").shape[1] if config.n_inputs else 0)
            teacher = np.zeros((config.n_outputs, T))
        teacher = _as_2d(teacher, config.n_outputs, "teacher")
        if horizon is not None:
            teacher = teacher[:, :horizon]
        if teacher.shape[1] == 0:
            return np.zeros((config.n_outputs, 0))
        Z, _, _ = drive(model.weights, config, inputs, state, teacher=teacher,
                        noise_scale=scale, noise_rng=noise_rng)
        return model.readouts(Z)

    if not (model.weights.has_feedback or config.readout_variant.reads_output):
        raise FreeRunWithoutFeedback("model has no output-to-reservoir or output-to-readout path")
    if horizon is None:
        horizon = _as_2d(inputs, config.n_inputs, "inputs").shape[1] if config.n_inputs else 0
    if horizon == 0:
        return np.zeros((config.n_outputs, 0))
    _, Y, _ = drive(model.weights, config, inputs, state, steps=horizon, W_out=model.W_out,
                    noise_scale=scale, noise_rng=noise_rng)
    return Y


# -- classification ------------------------------------------------------------

def one_hot_targets(label: int, n_classes: int, g) -> np.ndarray:
    hot = TANH_TARGET_CLIP if Activation(g) is Activation.TANH else 1.0
    out = np.zeros(n_classes)
    out[label] = hot
    return out


def _group_average(weights, config, features, washout: int, teacher_vec=None, W_out=None):
    features = _as_2d(features, config.n_inputs, "group features")
    tau = features.shape[1]
    if tau == 0 or washout >= tau:
        raise EmptyGroup(f"group of {tau} samples leaves nothing after washout {washout}")
    state = ReservoirState.zeros(config)
    if config.has_output_path and teacher_vec is None:
        Z, _, _ = drive(weights, config, features, state, steps=tau, W_out=W_out)
    else:
        teacher = np.tile(np.reshape(teacher_vec if teacher_vec is not None
                                     else np.zeros(config.n_outputs), (-1, 1)), (1, tau))
        Z, _, _ = drive(weights, config, features, state, teacher=teacher)
    return Z[:, washout:].mean(axis=1)


def fit_classifier(weights: WeightSet, config: EsnConfig, grouped_dataset,
                   washout_per_group: int = 0, ridge: float = 1e-6) -> TrainedModel:
    """One design column per group: the time-averaged concatenation.

    The reservoir is reset to zero at the start of every group. Output
    feedback (when wired) sees the group's one-hot target under teacher forcing.
    """
    groups = list(grouped_dataset.groups)
    if not groups:
        raise EmptyGroup("no groups to train on")
    L = config.n_outputs
    g = config.output_activation
    columns, targets = [], []
    for group in groups:
        target = one_hot_targets(group.label, L, g)
        columns.append(_group_average(weights, config, group.features, washout_per_group,
                                      teacher_vec=target))
        targets.append(target)
    Z = np.column_stack(columns)
    Y = output_inverse_transform(g, np.column_stack(targets))
    W_out = fit_ridge(Z, Y, ridge)
    return TrainedModel(config, weights, W_out, float(ridge), int(washout_per_group))


def classify(model: TrainedModel, group, washout: int | None = None) -> tuple[np.ndarray, int]:
    """Scores for one group and the argmax label (ties go to the lowest index)."""
    features = getattr(group, "features", group)
    washout = model.washout if washout is None else washout
    z = _group_average(model.weights, model.config, features, washout, W_out=model.W_out)
    scores = apply_readout(model.W_out, z, model.config.output_activation)
    return scores, int(np.argmax(scores))


def classify_all(model: TrainedModel, groups) -> tuple[np.ndarray, np.ndarray]:
    scores, labels = [], []
    for group in groups:
        s, label = classify(model, group)
        scores.append(s)
        labels.append(label)
    L = model.config.n_outputs
    return (np.array(scores).reshape(-1, L), np.array(labels, dtype=int))


def resync(model: TrainedModel, teacher, inputs=None, initial_state: ReservoirState | None = None,
           noise_scale: float = 0.0, noise_rng: np.random.Generator | None = None,
           ) -> ReservoirState:
    """Teacher-force the reservoir over ``teacher`` and return the final state.

    Used to wash out transients before handing over to free running.
    """
    state = initial_state if initial_state is not None else ReservoirState.zeros(model.config)
    if noise_rng is None:
        noise_rng = child_rng(model.weights.root_seed, Stream.PREDICTION_NOISE)
    _, _, final = drive(model.weights, model.config, inputs, state, teacher=teacher,
                        noise_scale=noise_scale, noise_rng=noise_rng)
    return final
