import numpy as np
import pytest

from esnlab.benchmarks import gen_figure8, gen_mackey_glass, gen_narma10
from esnlab.experiment import load_benchmark, run_trial
from esnlab.models import ModelSpec, get_preset, heuristic_params


def test_prediction_run_scores_after_washout():
    ds = gen_narma10(680)
    p = get_preset("narma10")
    r = run_trial(ModelSpec.from_label("V2-FT-GI-DU"), heuristic_params("prediction"), p, ds, 0, 30)
    assert r.prediction.shape == (1, ds.test_len - ds.washout_test)
    assert set(r.metrics) == {"rmse", "mae", "r2"} and r.score == r.metrics["rmse"]
    assert r.train_s > 0 and r.predict_s > 0


def test_prediction_run_deterministic():
    ds = gen_narma10(680)
    p = get_preset("narma10")
    spec = ModelSpec.from_label("V4-FT-GI-DU")
    a = run_trial(spec, heuristic_params("prediction"), p, ds, 3, 30)
    b = run_trial(spec, heuristic_params("prediction"), p, ds, 3, 30)
    assert a.score == b.score


def test_generation_run_shapes():
    ds = gen_figure8(2300)
    p = get_preset("figure8")
    r = run_trial(ModelSpec.from_label("V4-FT-GI-DU"), heuristic_params("generation"), p, ds, 0)
    assert r.prediction.shape == (2, ds.test_len - ds.washout_test)
    assert np.isfinite(r.score)


def test_chaotic_run_reports_one_step_rmse():
    ds = gen_mackey_glass(800)
    p = get_preset("mackey-glass")
    params = dict(heuristic_params("chaotic"), leak_rate=1.0, feedback_scale=0.1, ridge=1e-4,
                  spectral_radius=0.8)
    r = run_trial(ModelSpec.from_label("V4-FT-GI-DU"), params, p, ds, 0, 50)
    assert r.metrics["rmse_one_step"] < 0.05
    assert r.prediction.shape == (1, ds.test_len)


def test_classification_run():
    p = get_preset("digits")
    train, test = load_benchmark(p, seed=0)
    assert len(train) == 120 and len(test) == 40
    r = run_trial(ModelSpec.from_label("V2-FT-GI-DB"), heuristic_params("classification"), p,
                  (train, test), 0)
    assert set(r.metrics) == {"f1", "accuracy", "auc"} and 0 <= r.score <= 1


def test_unknown_loader():
    from esnlab.models import BenchmarkPreset
    bogus = BenchmarkPreset("bogus", "prediction", 1, 1, 10, 10, 5, 5, 1, 1, 0, 0, 1, False)
    with pytest.raises(ValueError):
        load_benchmark(bogus)
