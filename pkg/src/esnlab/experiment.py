"""Build, train and score one seeded model on one benchmark."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import benchmarks, metrics
from .core import EsnConfig, Stream, build, child_rng
from .models import BenchmarkPreset, ModelSpec, get_preset, make_config
from .training import (
    classify_all,
    fit_classifier,
    fit_sequence,
    predict,
    resync,
)


@dataclass
class RunResult:
    score: float
    metrics: dict[str, float] = field(default_factory=dict)
    train_s: float = math.nan
    predict_s: float = math.nan
    prediction: np.ndarray | None = field(default=None, repr=False)  # scored test outputs


def load_benchmark(preset: BenchmarkPreset | str, seed: int = 0, features_path=None,
                   class_separation: float = 10.0):
    """Dataset for a preset's default protocol.

    Grouped benchmarks return a ``(train, test)`` pair of grouped datasets; the
    synthetic surrogate is used unless ``features_path`` points at a feature file.
    """
    if isinstance(preset, str):
        preset = get_preset(preset)
    if preset.name == "narma10":
        return benchmarks.gen_narma10(preset.total_len, seed)
    if preset.name == "figure8":
        return benchmarks.gen_figure8(preset.total_len)
    if preset.name == "mackey-glass":
        return benchmarks.gen_mackey_glass(preset.total_len)
    if preset.name == "digits":
        if features_path is not None:
            data = benchmarks.load_digit_features(features_path)
        else:
            data = benchmarks.gen_synthetic_digits(class_separation=class_separation, seed=seed)
        return benchmarks.split_grouped(data, preset.train_frac, preset.test_frac, seed)
    raise ValueError(f"no loader for {preset.name}")


def _regression_scores(pred: np.ndarray, actual: np.ndarray) -> RunResult:
    report = metrics.regression_report(pred, actual)
    return RunResult(report["rmse"], report)


def run_config(config: EsnConfig, ridge: float, preset: BenchmarkPreset, dataset,
               root_seed: int) -> RunResult:
    """Train on the training split and score on the test split.

    ``train_s`` covers weight construction plus readout fitting; ``predict_s``
    covers the test-split run only.
    """
    t0 = time.perf_counter()
    weights = build(config, root_seed)

    if preset.kind == "classification":
        train_set, test_set = dataset
        model = fit_classifier(weights, config, train_set, 0, ridge)
        t1 = time.perf_counter()
        scores, predicted = classify_all(model, test_set.groups)
        t2 = time.perf_counter()
        report = metrics.classification_report(scores, predicted, test_set.labels,
                                               config.n_outputs)
        return RunResult(report["f1"], report, t1 - t0, t2 - t1)

    model = fit_sequence(weights, config, dataset.train_inputs, dataset.train_targets,
                         dataset.washout_train, ridge,
                         noise_rng=child_rng(root_seed, Stream.NOISE))
    t1 = time.perf_counter()
    noise_rng = child_rng(root_seed, Stream.PREDICTION_NOISE)
    test_in, test_out = dataset.test_inputs, dataset.test_targets
    w = dataset.washout_test

    if preset.kind == "prediction":
        mode = "free_run" if config.has_output_path else "teacher_forced"
        pred = predict(model, test_in, mode=mode, horizon=test_out.shape[1],
                       prediction_noise_scale=preset.predict_noise, noise_rng=noise_rng)
        t2 = time.perf_counter()
        result = _regression_scores(pred[:, w:], test_out[:, w:])
        result.prediction = pred[:, w:]
    elif preset.kind == "generation":
        # fresh state, teacher-forced through the test washout, then free run
        state = resync(model, test_out[:, :w], test_in[:, :w],
                       noise_scale=preset.predict_noise, noise_rng=noise_rng)
        pred = predict(model, test_in[:, w:], mode="free_run", horizon=test_out.shape[1] - w,
                       prediction_noise_scale=preset.predict_noise, initial_state=state,
                       noise_rng=noise_rng)
        t2 = time.perf_counter()
        result = _regression_scores(pred, test_out[:, w:])
        result.prediction = pred
    else:
        # chaotic: carry the training state straight into free running
        pred = predict(model, test_in, mode="free_run", horizon=test_out.shape[1],
                       prediction_noise_scale=preset.predict_noise,
                       initial_state=model.final_state, noise_rng=noise_rng)
        t2 = time.perf_counter()
        result = _regression_scores(pred[:, w:], test_out[:, w:])
        result.prediction = pred[:, w:]
        one_step = predict(model, test_in, mode="teacher_forced", teacher=test_out,
                           prediction_noise_scale=0.0, initial_state=model.final_state)
        result.metrics["rmse_one_step"] = metrics.rmse(one_step[:, w:], test_out[:, w:])
    result.train_s, result.predict_s = t1 - t0, t2 - t1
    return result


def run_trial(spec: ModelSpec, params: dict, preset: BenchmarkPreset, dataset, root_seed: int,
              n_reservoir: int | None = None) -> RunResult:
    config, ridge = make_config(spec, preset, params, n_reservoir)
    return run_config(config, ridge, preset, dataset, root_seed)
