import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from esnlab import hpo
from esnlab.benchmarks import gen_narma10
from esnlab.errors import AllSeedsFailed, NonFiniteState
from esnlab.experiment import RunResult
from esnlab.hpo import (
    Prior,
    SearchSpace,
    StudyRecord,
    best_index,
    evaluate_config,
    random_sampler,
    run_seed,
    run_study,
    sample_trial,
    tpe_sampler,
)
from esnlab.models import ModelSpec, get_preset, heuristic_params

NARMA = get_preset("narma10")
SPEC = ModelSpec.from_label("V2-FT-GI-DU")
SPACE = SearchSpace.for_preset(NARMA)


@pytest.fixture(scope="module")
def narma_small():
    return gen_narma10(680)


# -- sampling -----------------------------------------------------------------------

def test_sample_deterministic():
    assert sample_trial(SPACE, 0, 5) == sample_trial(SPACE, 0, 5)
    assert sample_trial(SPACE, 0, 5) != sample_trial(SPACE, 0, 6)
    assert sample_trial(SPACE, 0, 5) != sample_trial(SPACE, 1, 5)


def test_degenerate_prior():
    space = SearchSpace({"leak_rate": Prior(0.3, 0.3)})
    assert all(sample_trial(space, 0, i)["leak_rate"] == 0.3 for i in range(20))


def test_negative_trial_index():
    with pytest.raises(ValueError):
        sample_trial(SPACE, 0, -1)


def test_feedback_priors_only_when_needed():
    assert "feedback_scale" not in SPACE.priors
    assert {"density_feedback", "feedback_scale"} <= set(
        SearchSpace.for_preset(get_preset("figure8")).priors)


def test_ridge_log_uniform_ks():
    logs = [math.log10(sample_trial(SPACE, 0, i)["ridge"]) for i in range(10_000)]
    ks = stats.kstest(logs, stats.uniform(loc=-9, scale=9).cdf).statistic
    assert ks < 0.02


@given(seed=st.integers(0, 2**31), idx=st.integers(0, 10_000))
def test_samples_within_bounds(seed, idx):
    p = sample_trial(SPACE, seed, idx)
    assert 0.01 < p["spectral_radius"] <= 1.25
    assert 0.01 < p["leak_rate"] <= 1.0
    assert 0.05 <= p["density_reservoir"] <= 1.0
    assert 1e-3 <= p["input_scale"] <= 10.0 and 1e-9 <= p["ridge"] <= 1.0


def test_prior_validation():
    with pytest.raises(ValueError):
        Prior(2.0, 1.0)
    with pytest.raises(ValueError):
        Prior(0.0, 1.0, log=True)


def test_run_seed_distinct():
    seeds = {run_seed(0, t, k) for t in range(20) for k in range(10)}
    assert len(seeds) == 200 and run_seed(0, 3, 4) == run_seed(0, 3, 4)


# -- evaluate_config ----------------------------------------------------------------

def _scripted(monkeypatch, outcomes):
    it = iter(outcomes)

    def fake(spec, params, preset, dataset, seed, n_reservoir=None):
        o = next(it)
        if isinstance(o, Exception):
            raise o
        return RunResult(o)
    monkeypatch.setattr(hpo, "run_trial", fake)


def test_single_seed_best(monkeypatch):
    _scripted(monkeypatch, [0.42])
    assert evaluate_config({}, SPEC, None, NARMA, n_seeds=1) == (0.42, [0.42])


def test_min_with_sentinel(monkeypatch):
    _scripted(monkeypatch, [0.5, 0.2, math.inf])
    best, scores = evaluate_config({}, SPEC, None, NARMA, n_seeds=3)
    assert best == 0.2 and scores == [0.5, 0.2, math.inf]


def test_errored_run_becomes_sentinel(monkeypatch):
    _scripted(monkeypatch, [NonFiniteState("boom"), 0.3, math.nan])
    best, scores = evaluate_config({}, SPEC, None, NARMA, n_seeds=3)
    assert best == 0.3 and scores == [math.inf, 0.3, math.inf]


def test_classification_sentinel_is_zero(monkeypatch):
    _scripted(monkeypatch, [NonFiniteState("x"), 0.7])
    best, scores = evaluate_config({}, SPEC, None, get_preset("digits"), n_seeds=2)
    assert best == 0.7 and scores == [0.0, 0.7]


def test_all_seeds_failed(monkeypatch):
    _scripted(monkeypatch, [NonFiniteState("a"), NonFiniteState("b")])
    with pytest.raises(AllSeedsFailed):
        evaluate_config({}, SPEC, None, NARMA, n_seeds=2)


def test_reference_config_best_below_median(narma_small):
    best, scores = evaluate_config(heuristic_params("prediction"), SPEC, narma_small, NARMA,
                                   n_seeds=5)
    assert best <= float(np.median(scores)) and len(scores) == 5


# -- run_study ----------------------------------------------------------------------

def _rho_objective(params, trial_index):
    return params["spectral_radius"], [params["spectral_radius"]]


def test_single_trial_study():
    rec = run_study(SPACE, SPEC, None, NARMA, n_trials=1, objective=_rho_objective)
    assert rec.best_trial_index == 0 and len(rec.trials) == 1


def test_stub_objective_picks_min_rho():
    rec = run_study(SPACE, SPEC, None, NARMA, n_trials=30, objective=_rho_objective)
    rhos = [t.params["spectral_radius"] for t in rec.trials]
    assert rec.best_trial_index == int(np.argmin(rhos))
    assert len(rec.trials) == 30


def test_monotone_budget():
    rec = run_study(SPACE, SPEC, None, NARMA, n_trials=25, objective=_rho_objective)
    for k in range(1, 25):
        head = run_study(SPACE, SPEC, None, NARMA, n_trials=k, objective=_rho_objective)
        assert rec.best_score <= head.best_score


def test_enqueued_trial_overrides_draw():
    pinned = {"spectral_radius": 0.5, "leak_rate": 0.25}
    rec = run_study(SPACE, SPEC, None, NARMA, n_trials=2, enqueued=[pinned],
                    objective=_rho_objective)
    assert rec.trials[0].params["spectral_radius"] == 0.5
    assert rec.trials[0].params["ridge"] == sample_trial(SPACE, 0, 0)["ridge"]
    assert rec.trials[1].params == sample_trial(SPACE, 0, 1)


def test_failed_trial_recorded_not_aborted():
    def objective(params, i):
        if i == 1:
            raise AllSeedsFailed("diverged")
        return 0.5, [0.5]
    rec = run_study(SPACE, SPEC, None, NARMA, n_trials=3, objective=objective)
    assert rec.trials[1].best_score == math.inf and rec.trials[1].error == "diverged"
    assert len(rec.trials) == 3


def test_study_deterministic_and_round_trip(narma_small):
    kw = dict(n_trials=3, n_seeds=2, study_seed=4)
    a = run_study(SPACE, SPEC, narma_small, NARMA, **kw)
    b = run_study(SPACE, SPEC, narma_small, NARMA, **kw)
    assert a.to_json() == b.to_json()
    back = StudyRecord.from_dict(json.loads(a.to_json()))
    assert back.to_json() == a.to_json()
    assert back.trials[0].seed_scores == a.trials[0].seed_scores


def test_best_index_ties_and_direction():
    assert best_index([0.3, 0.1, 0.1], maximize=False) == 1
    assert best_index([0.3, 0.9, 0.9], maximize=True) == 1
    with pytest.raises(ValueError):
        best_index([], False)


# -- TPE sampler --------------------------------------------------------------------

def test_tpe_startup_is_random():
    rec = run_study(SPACE, SPEC, None, NARMA, n_trials=10, objective=_rho_objective,
                    sampler=tpe_sampler)
    assert [t.params for t in rec.trials] == [sample_trial(SPACE, 0, i) for i in range(10)]


def test_tpe_deterministic_and_bounded():
    def run():
        return run_study(SPACE, SPEC, None, NARMA, n_trials=30, objective=_rho_objective,
                         sampler=tpe_sampler)
    a, b = run(), run()
    assert a.to_json() == b.to_json()
    for t in a.trials:
        assert 0.01 < t.params["spectral_radius"] <= 1.25
        assert 1e-9 <= t.params["ridge"] <= 1.0


def test_tpe_concentrates_near_optimum():
    def objective(params, i):
        score = abs(params["spectral_radius"] - 0.3) + abs(math.log10(params["ridge"]) + 4) / 10
        return score, [score]
    tpe = run_study(SPACE, SPEC, None, NARMA, n_trials=60, objective=objective,
                    sampler=tpe_sampler)
    rnd = run_study(SPACE, SPEC, None, NARMA, n_trials=60, objective=objective,
                    sampler=random_sampler)
    late = lambda rec: np.median([t.best_score for t in rec.trials[30:]])  # noqa: E731
    assert late(tpe) < late(rnd)


def test_tpe_maximize_direction():
    def objective(params, i):
        return params["leak_rate"], [params["leak_rate"]]
    rec = run_study(SPACE, SPEC, None, get_preset("digits"), n_trials=40, objective=objective,
                    sampler=tpe_sampler)
    late = np.median([t.params["leak_rate"] for t in rec.trials[20:]])
    assert late > 0.5
