import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from esnlab import metrics
from esnlab.benchmarks import Group, GroupedDataset, gen_narma10, gen_synthetic_digits
from esnlab.core import EsnConfig, ReservoirState, Stream, WeightSet, build, child_rng
from esnlab.errors import (
    DimensionMismatch,
    EmptyGroup,
    FreeRunWithoutFeedback,
    SingularSystem,
    WashoutTooLarge,
)
from esnlab.models import heuristic_defaults
from esnlab.training import (
    TrainedModel,
    _group_average,
    classify,
    classify_all,
    drive,
    fit_classifier,
    fit_ridge,
    harvest,
    one_hot_targets,
    output_inverse_transform,
    predict,
    train,
)


def _cfg(**kw):
    base = dict(n_inputs=1, n_reservoir=10, n_outputs=1, spectral_radius=0.9)
    base.update(kw)
    return EsnConfig(**base)


def _normal_equations(Z, Y, beta):
    # independent oracle: explicit inverse of the regularized Gram matrix
    return Y @ Z.T @ np.linalg.inv(Z @ Z.T + beta * np.eye(Z.shape[0]))


# -- harvest ----------------------------------------------------------------------

def test_harvest_shape_state_only():
    cfg = _cfg(n_reservoir=3, readout_variant="state_only")
    h = harvest(build(cfg, 0), cfg, np.ones((1, 10)), np.zeros((1, 10)), washout=2)
    assert h.Z.shape == (3, 8) and h.Y_target.shape == (1, 8)
    assert h.final_state.t == 10


def test_harvest_last_column_only():
    cfg = _cfg()
    h = harvest(build(cfg, 0), cfg, np.ones((1, 6)), np.zeros((1, 6)), washout=5)
    assert h.Z.shape[1] == 1


def test_harvest_washout_too_large():
    cfg = _cfg()
    with pytest.raises(WashoutTooLarge):
        harvest(build(cfg, 0), cfg, np.ones((1, 6)), np.zeros((1, 6)), washout=6)


def test_harvest_deterministic_without_noise():
    cfg = _cfg()
    u = np.random.default_rng(0).uniform(0, 0.5, (1, 50))
    a = harvest(build(cfg, 4), cfg, u, np.zeros((1, 50)), 5)
    b = harvest(build(cfg, 4), cfg, u, np.zeros((1, 50)), 5)
    assert np.array_equal(a.Z, b.Z)


def test_harvest_matches_stepwise_recomputation():
    cfg = _cfg(n_reservoir=5, readout_variant="input_state_feedback", leak_rate=0.7,
               density_feedback=1.0, feedback_scale=0.3)
    ws = build(cfg, 2)
    u = np.linspace(-1, 1, 12).reshape(1, -1)
    y = np.cos(np.arange(12.0)).reshape(1, -1)
    h = harvest(ws, cfg, u, y, 0)
    x, prev = np.zeros(5), np.zeros(1)
    W = ws.W.toarray()
    for t in range(12):
        pre = ws.W_in @ np.array([1.0, u[0, t]]) + W @ x + ws.W_fb @ prev
        x = 0.3 * x + 0.7 * np.tanh(pre)
        assert np.allclose(h.Z[:, t], np.concatenate(([1.0, u[0, t]], x, prev)), atol=1e-13)
        prev = y[:, t]


def test_drive_needs_readout_for_free_run():
    cfg = _cfg()
    with pytest.raises(ValueError):
        drive(build(cfg, 0), cfg, np.ones((1, 3)), ReservoirState.zeros(cfg), steps=3)


# -- inverse output transform -----------------------------------------------------

def test_inverse_transform_values():
    assert np.array_equal(output_inverse_transform("identity", [0.3]), [0.3])
    assert output_inverse_transform("tanh", [0.0])[0] == 0.0
    v = output_inverse_transform("tanh", [1.0])[0]
    assert v == pytest.approx(math.atanh(0.99999), abs=1e-12)
    assert v == pytest.approx(6.1030, abs=1e-4)


# -- ridge ------------------------------------------------------------------------

def test_ridge_identity_exact():
    assert np.allclose(fit_ridge(np.eye(2), [[3.0, 4.0]], 0.0), [[3.0, 4.0]])


def test_ridge_identity_shrunk():
    assert np.allclose(fit_ridge(np.eye(2), [[3.0, 4.0]], 1.0), [[1.5, 2.0]])


def test_ridge_matches_oracle_5x50():
    rng = np.random.default_rng(11)
    Z, Y = rng.normal(size=(5, 50)), rng.normal(size=(2, 50))
    assert np.max(np.abs(fit_ridge(Z, Y, 0.1) - _normal_equations(Z, Y, 0.1))) < 1e-8


@given(n=st.integers(1, 20), extra=st.integers(0, 180), L=st.integers(1, 3),
       beta=st.floats(1e-6, 10.0), seed=st.integers(0, 2**32 - 1))
def test_ridge_oracle_property(n, extra, L, beta, seed):
    rng = np.random.default_rng(seed)
    T = n + extra
    Z, Y = rng.uniform(-1, 1, (n, T)), rng.uniform(-1, 1, (L, T))
    assert np.max(np.abs(fit_ridge(Z, Y, beta) - _normal_equations(Z, Y, beta))) < 1e-8


def test_ridge_singular_at_zero_beta():
    Z = np.vstack([np.ones(10), np.ones(10)])
    with pytest.raises(SingularSystem):
        fit_ridge(Z, np.ones((1, 10)), 0.0)
    fit_ridge(Z, np.ones((1, 10)), 1e-3)  # regularized system is fine


def test_ridge_shape_checks():
    with pytest.raises(DimensionMismatch):
        fit_ridge(np.ones((2, 5)), np.ones((1, 4)), 0.1)


def test_ridge_norm_monotone_in_beta():
    rng = np.random.default_rng(3)
    Z, Y = rng.normal(size=(8, 40)), rng.normal(size=(1, 40))
    norms = [np.sum(fit_ridge(Z, Y, b) ** 2) for b in (0.0, 1e-6, 1e-3, 1.0, 1e3)]
    assert all(a >= b for a, b in zip(norms, norms[1:]))


def test_ridge_square_full_rank_interpolates():
    rng = np.random.default_rng(8)
    Z, Y = rng.normal(size=(6, 6)), rng.normal(size=(1, 6))
    assert np.max(np.abs(fit_ridge(Z, Y, 0.0) @ Z - Y)) <= 1e-8


# -- train / predict ----------------------------------------------------------------

def _dataset_from(u, y, washout=5):
    from esnlab.benchmarks import SequenceDataset
    T = u.shape[1]
    return SequenceDataset(u, y, T, 0, washout, 0, "custom")


def test_realizable_linear_teacher():
    cfg = _cfg(n_reservoir=1, readout_variant="state_only")
    ws = build(cfg, 0)
    u = np.random.default_rng(0).uniform(-1, 1, (1, 60))
    Z, _, _ = drive(ws, cfg, u, ReservoirState.zeros(cfg), teacher=np.zeros((1, 60)))
    target = 2.0 * Z
    model = train(ws, cfg, _dataset_from(u, target), washout=5, ridge=0.0)
    fitted = predict(model, u, teacher=np.zeros((1, 60)))
    assert metrics.rmse(fitted[:, 5:], target[:, 5:]) < 1e-8
    assert model.W_out[0, 0] == pytest.approx(2.0)


def test_heavy_ridge_shrinks():
    cfg = _cfg()
    ws = build(cfg, 1)
    u = np.random.default_rng(1).uniform(0, 0.5, (1, 200))
    ds = _dataset_from(u, np.sin(np.arange(200.0)).reshape(1, -1))
    heavy = train(ws, cfg, ds, ridge=1e9).W_out
    h = harvest(ws, cfg, ds.train_inputs, ds.train_targets, ds.washout_train)
    free = np.linalg.lstsq(h.Z.T, h.Y_target.T, rcond=None)[0].T  # minimum-norm beta=0 fit
    assert np.linalg.norm(heavy) < 1e-6 * np.linalg.norm(free)


def test_narma_reference_generalization_gap():
    ds = gen_narma10()
    cfg = heuristic_defaults("prediction").replace(noise_scale=1e-4)
    wins = 0
    for seed in range(15):
        ws = build(cfg, seed)
        model = train(ws, cfg, ds, ridge=1e-6, noise_rng=child_rng(seed, Stream.NOISE))
        h = harvest(ws, cfg, ds.train_inputs, ds.train_targets, ds.washout_train,
                    noise_rng=child_rng(seed, Stream.NOISE))
        train_rmse = metrics.rmse(model.readouts(h.Z), h.Y_target)
        pred = predict(model, ds.test_inputs, prediction_noise_scale=0.0)
        test_rmse = metrics.rmse(pred[:, ds.washout_test:], ds.test_targets[:, ds.washout_test:])
        wins += train_rmse < test_rmse
    assert wins >= 12


def test_teacher_forcing_reproduces_harvest_bitwise():
    cfg = _cfg(readout_variant="input_state_feedback", density_feedback=0.5,
               feedback_scale=0.4, noise_scale=1e-3)
    ws = build(cfg, 9)
    rng = np.random.default_rng(2)
    u, y = rng.uniform(0, 0.5, (1, 80)), rng.uniform(-0.5, 0.5, (1, 80))
    model = train(ws, cfg, _dataset_from(u, y, 10), ridge=1e-4,
                  noise_rng=child_rng(9, Stream.NOISE))
    h = harvest(ws, cfg, u, y, 10, noise_rng=child_rng(9, Stream.NOISE))
    replay = predict(model, u, teacher=y, prediction_noise_scale=cfg.noise_scale,
                     noise_rng=child_rng(9, Stream.NOISE))
    assert np.array_equal(replay[:, 10:], model.readouts(h.Z))


def test_predict_horizon_zero():
    cfg = _cfg(density_feedback=1.0, feedback_scale=0.5)
    model = TrainedModel(cfg, build(cfg, 0), np.zeros((1, cfg.concat_length)), 0.0, 0)
    assert predict(model, np.zeros((1, 0)), mode="free_run", horizon=0).shape == (1, 0)
    assert predict(model, teacher=np.zeros((1, 5)), horizon=0).shape == (1, 0)


def test_free_run_without_feedback_raises():
    cfg = _cfg()
    model = TrainedModel(cfg, build(cfg, 0), np.zeros((1, cfg.concat_length)), 0.0, 0)
    with pytest.raises(FreeRunWithoutFeedback):
        predict(model, np.zeros((1, 5)), mode="free_run")


def test_free_run_feeds_back_own_output():
    # a 1-neuron V3 loop with hand-set weights, checked step by step
    cfg = EsnConfig(0, 1, 1, spectral_radius=0.5, density_feedback=1.0, feedback_scale=1.0,
                    readout_variant="state_feedback")
    ws = WeightSet(np.array([[0.1]]), sp.csr_matrix([[0.5]]), np.array([[0.8]]), 0, 0.5)
    model = TrainedModel(cfg, ws, np.array([[0.7, 0.2]]), 0.0, 0)
    out = predict(model, mode="free_run", horizon=4, prediction_noise_scale=0.0)
    x, y = 0.0, 0.0
    for t in range(4):
        x = math.tanh(0.1 + 0.5 * x + 0.8 * y)
        y = 0.7 * x + 0.2 * y
        assert out[0, t] == pytest.approx(y, abs=1e-15)


def test_predict_teacher_required_for_output_models():
    cfg = _cfg(readout_variant="state_feedback")
    model = TrainedModel(cfg, build(cfg, 0), np.zeros((1, cfg.concat_length)), 0.0, 0)
    with pytest.raises(ValueError):
        predict(model, np.zeros((1, 4)))


# -- classification ----------------------------------------------------------------

def _sinc_weights():
    # sinc reservoir, no recurrence: x = sinc(b + w u) with b=(0,1), w=(1,-1)
    return WeightSet(np.array([[0.0, 1.0], [1.0, -1.0]]), sp.csr_matrix((2, 2)),
                     np.zeros((2, 1)), 0, 0.0)


def test_group_average_of_two_states():
    cfg = EsnConfig(1, 2, 1, reservoir_activation="sinc", readout_variant="state_only",
                    classifier_mode=True)
    z = _group_average(_sinc_weights(), cfg, np.array([[0.0, 1.0]]), 0)
    assert np.allclose(z, [0.5, 0.5], atol=1e-15)


def test_group_average_constant_concatenation():
    cfg = EsnConfig(1, 2, 1, reservoir_activation="sinc", readout_variant="input_state",
                    classifier_mode=True)
    z = _group_average(_sinc_weights(), cfg, np.zeros((1, 7)), 0)
    assert np.allclose(z, [1.0, 0.0, 1.0, 0.0], atol=1e-15)


def test_empty_group_raises():
    cfg = EsnConfig(1, 2, 1, reservoir_activation="sinc", classifier_mode=True)
    with pytest.raises(EmptyGroup):
        _group_average(_sinc_weights(), cfg, np.zeros((1, 0)), 0)
    with pytest.raises(EmptyGroup):
        _group_average(_sinc_weights(), cfg, np.zeros((1, 3)), 3)


def _constant_score_model(w_col):
    # sinc reservoir with zero input weights: x = sinc(0) = 1 at every step
    L = len(w_col)
    cfg = EsnConfig(1, 1, L, reservoir_activation="sinc", readout_variant="state_only",
                    classifier_mode=True)
    ws = WeightSet(np.zeros((1, 2)), sp.csr_matrix((1, 1)), np.zeros((1, L)), 0, 0.0)
    return TrainedModel(cfg, ws, np.array(w_col, dtype=float).reshape(L, 1), 0.0, 0)


def test_classify_argmax_and_tie_break():
    group = np.zeros((1, 3))
    scores, label = classify(_constant_score_model([0.1, 0.9, 0.1, 0.1, 0.1]), group)
    assert label == 1 and np.allclose(scores, [0.1, 0.9, 0.1, 0.1, 0.1])
    assert classify(_constant_score_model([0.5, 0.5, 0, 0, 0]), group)[1] == 0


def _two_class_set(seed=0):
    data = gen_synthetic_digits(n_classes=2, n_channels=6, groups_per_class=12,
                                samples_per_group=8, class_separation=12.0, seed=seed)
    return data


@pytest.mark.parametrize("variant,g", [("input_state", "identity"), ("state_only", "tanh"),
                                       ("input_state_feedback", "identity")])
def test_separable_training_f1(variant, g):
    data = _two_class_set()
    cfg = EsnConfig(6, 30, 2, spectral_radius=0.5, leak_rate=0.9, input_scale=0.1,
                    readout_variant=variant, output_activation=g, classifier_mode=True,
                    density_feedback=0.5 if "feedback" in variant else 0.0,
                    feedback_scale=0.1 if "feedback" in variant else 0.0)
    model = fit_classifier(build(cfg, 0), cfg, data, ridge=1e-6)
    _, predicted = classify_all(model, data.groups)
    cm = metrics.confusion(data.labels, predicted, 2)
    assert metrics.f1_macro(cm) == 1.0
    assert classify(model, data.groups[0])[1] == data.groups[0].label


def test_classification_is_independent_of_batch():
    data = _two_class_set(1)
    cfg = EsnConfig(6, 20, 2, classifier_mode=True)
    model = fit_classifier(build(cfg, 0), cfg, data)
    alone, _ = classify_all(model, data.groups[3:4])
    batch, _ = classify_all(model, data.groups)
    assert np.array_equal(alone[0], batch[3])


def test_one_hot_targets():
    assert np.array_equal(one_hot_targets(2, 4, "identity"), [0, 0, 1, 0])
    assert one_hot_targets(0, 3, "tanh")[0] == 0.99999


def test_fit_classifier_needs_groups():
    cfg = EsnConfig(2, 5, 2, classifier_mode=True)
    with pytest.raises(EmptyGroup):
        fit_classifier(build(cfg, 0), cfg, GroupedDataset([], n_classes=2, n_channels=2))
