"""Seeded hyperparameter studies.

A study runs ``n_trials`` trials. Each trial draws one parameter set and
instantiates the model with several seeds, keeping the best score. All
randomness derives from ``(study_seed, trial_index, seed_index)``, so trials
can run in any order and a study is a pure function of its arguments.
"""
from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Protocol

import numpy as np

from .errors import AllSeedsFailed, EchoStateWarning, EsnError
from .experiment import run_trial
from .models import BenchmarkPreset, ModelSpec

log = logging.getLogger(__name__)

# errors that mark a run as failed instead of aborting the trial
RUN_FAILURES = (EsnError, ArithmeticError, np.linalg.LinAlgError)


@dataclass(frozen=True)
class Prior:
    low: float
    high: float
    log: bool = False
    open_low: bool = False  # sample from (low, high] instead of [low, high)

    def __post_init__(self):
        if self.low > self.high:
            raise ValueError(f"prior low {self.low} > high {self.high}")
        if self.log and self.low <= 0:
            raise ValueError("log prior needs a positive lower bound")

    def draw(self, u: float) -> float:
        if self.low == self.high:
            return float(self.low)
        if self.log:
            lo, hi = math.log(self.low), math.log(self.high)
            return float(math.exp(lo + u * (hi - lo)))
        if self.open_low:
            return float(self.high - u * (self.high - self.low))
        return float(self.low + u * (self.high - self.low))


@dataclass(frozen=True)
class SearchSpace:
    priors: dict[str, Prior]

    @classmethod
    def default(cls, feedback: bool) -> "SearchSpace":
        priors = {
            "spectral_radius": Prior(0.01, 1.25, open_low=True),
            "leak_rate": Prior(0.01, 1.0, open_low=True),
            "density_reservoir": Prior(0.05, 1.0),
            "density_input": Prior(0.05, 1.0),
            "input_scale": Prior(1e-3, 10.0, log=True),
            "ridge": Prior(1e-9, 1.0, log=True),
        }
        if feedback:
            priors["density_feedback"] = Prior(0.05, 1.0)
            priors["feedback_scale"] = Prior(1e-3, 10.0, log=True)
        return cls(priors)

    @classmethod
    def for_preset(cls, preset: BenchmarkPreset) -> "SearchSpace":
        return cls.default(preset.feedback)


class Sampler(Protocol):
    def __call__(self, space: SearchSpace, study_seed: int, trial_index: int,
                 history: list["TrialRecord"], maximize: bool) -> dict[str, float]: ...


def trial_rng(study_seed: int, trial_index: int, *extra: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(int(study_seed), spawn_key=(int(trial_index),) + tuple(extra)))


def sample_trial(space: SearchSpace, study_seed: int, trial_index: int) -> dict[str, float]:
    """Random draw for one trial; log priors are sampled uniformly in log space."""
    if trial_index < 0:
        raise ValueError("trial_index must be >= 0")
    rng = trial_rng(study_seed, trial_index)
    u = rng.random(len(space.priors))
    return {name: prior.draw(float(ui)) for (name, prior), ui in zip(space.priors.items(), u)}


def random_sampler(space, study_seed, trial_index, history, maximize=False):
    return sample_trial(space, study_seed, trial_index)


TPE_STARTUP = 10
TPE_CANDIDATES = 24
TPE_GAMMA, TPE_GAMMA_CAP = 0.1, 25


def _to_unit(prior: Prior, value: float) -> float:
    if prior.low == prior.high:
        return 0.5
    if prior.log:
        lo, hi = math.log(prior.low), math.log(prior.high)
        return (math.log(value) - lo) / (hi - lo)
    return (value - prior.low) / (prior.high - prior.low)


def _parzen(points: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mixture on [0, 1]: one truncated Gaussian per point plus a flat prior component."""
    n = points.size
    if n == 0:
        return np.empty(0), np.empty(0), np.ones(1)
    order = np.sort(points)
    padded = np.concatenate(([0.0], order, [1.0]))
    gaps = np.maximum(padded[1:-1] - padded[:-2], padded[2:] - padded[1:-1])
    # each point gets the sigma of its sorted position
    sigma = np.empty(n)
    sigma[np.argsort(points, kind="stable")] = gaps
    sigma = np.clip(sigma, 1.0 / min(100, n + 1), 1.0)
    weights = np.full(n + 1, 1.0 / (n + 1))
    return points, sigma, weights


def _parzen_logpdf(x: np.ndarray, mix) -> np.ndarray:
    from scipy.special import ndtr
    mu, sigma, w = mix
    flat = np.full(x.shape, w[-1])  # uniform density 1 on [0, 1]
    if mu.size == 0:
        return np.log(flat)
    z = (x[:, None] - mu[None, :]) / sigma[None, :]
    mass = ndtr((1.0 - mu) / sigma) - ndtr(-mu / sigma)
    dens = np.exp(-0.5 * z ** 2) / (sigma * math.sqrt(2 * math.pi) * mass)
    return np.log(flat + dens @ w[:-1])


def _parzen_sample(rng: np.random.Generator, mix, size: int) -> np.ndarray:
    mu, sigma, w = mix
    comp = rng.choice(w.size, size=size, p=w)
    out = rng.random(size)
    for i, c in enumerate(comp):
        if c < mu.size:
            while True:  # rejection keeps the Gaussian truncated to [0, 1]
                v = rng.normal(mu[c], sigma[c])
                if 0.0 <= v <= 1.0:
                    out[i] = v
                    break
    return out


def tpe_sampler(space: SearchSpace, study_seed: int, trial_index: int,
                history: list["TrialRecord"], maximize: bool = False) -> dict[str, float]:
    """Independent tree-structured Parzen sampler.

    The first ``TPE_STARTUP`` trials are random draws. Later trials split the
    history into the best ``ceil(0.1 n)`` (at most 25) trials and the rest,
    fit a Parzen mixture to each per parameter and keep the candidate with
    the highest density ratio. Unlike :func:`random_sampler` a draw depends on
    earlier results, so trials must run in index order.
    """
    if len(history) < TPE_STARTUP:
        return sample_trial(space, study_seed, trial_index)
    rng = trial_rng(study_seed, trial_index, 1)
    scores = np.array([-t.best_score if maximize else t.best_score for t in history])
    scores = np.where(np.isfinite(scores), scores, np.inf)
    n_good = min(math.ceil(TPE_GAMMA * len(history)), TPE_GAMMA_CAP)
    order = np.argsort(scores, kind="stable")
    good, bad = order[:n_good], order[n_good:]
    params = {}
    for name, prior in space.priors.items():
        if prior.low == prior.high:
            params[name] = float(prior.low)
            continue
        unit = np.array([_to_unit(prior, t.params[name]) for t in history])
        l_mix, g_mix = _parzen(unit[good]), _parzen(unit[bad])
        cand = _parzen_sample(rng, l_mix, TPE_CANDIDATES)
        ratio = _parzen_logpdf(cand, l_mix) - _parzen_logpdf(cand, g_mix)
        u = float(cand[int(np.argmax(ratio))])
        if prior.open_low:
            u = min(1.0 - u, 1.0 - 1e-12)  # draw() maps u=0 to the upper bound
        params[name] = prior.draw(min(max(u, 0.0), 1.0))
    return params


SAMPLERS = {"random": random_sampler, "tpe": tpe_sampler}


def run_seed(study_seed: int, trial_index: int, seed_index: int) -> int:
    """Root seed for one instantiation inside a trial."""
    seq = np.random.SeedSequence([int(study_seed), int(trial_index), int(seed_index)])
    return int(seq.generate_state(1)[0])


def failure_score(maximize: bool) -> float:
    return 0.0 if maximize else math.inf


def evaluate_config(params: dict, model_spec: ModelSpec, dataset, preset: BenchmarkPreset,
                    n_seeds: int = 10, study_seed: int = 0, trial_index: int = 0,
                    n_reservoir: int | None = None) -> tuple[float, list[float]]:
    """Best score over ``n_seeds`` instantiations and the per-seed scores.

    Failed or non-finite runs get the failure sentinel (+inf for RMSE, 0 for
    F1). Raises :class:`AllSeedsFailed` when every run raised.
    """
    if n_seeds < 1:
        raise ValueError("n_seeds must be >= 1")
    maximize = preset.maximize
    scores, errors = [], []
    for k in range(n_seeds):
        seed = run_seed(study_seed, trial_index, k)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", EchoStateWarning)
                warnings.simplefilter("ignore", RuntimeWarning)
                score = run_trial(model_spec, params, preset, dataset, seed, n_reservoir).score
        except RUN_FAILURES as exc:
            errors.append(f"{type(exc).__name__}: {exc}")
            score = math.nan
        scores.append(score if math.isfinite(score) else failure_score(maximize))
    if len(errors) == n_seeds:
        raise AllSeedsFailed(f"all {n_seeds} seeds failed; first: {errors[0]}")
    best = max(scores) if maximize else min(scores)
    return best, scores


def _num(x: float) -> str:
    return repr(float(x))


@dataclass
class TrialRecord:
    trial_index: int
    params: dict[str, float]
    seed_scores: list[float]
    best_score: float
    error: str | None = None

    def to_dict(self) -> dict:
        return {"trial_index": self.trial_index,
                "params": {k: _num(v) for k, v in self.params.items()},
                "seed_scores": [_num(s) for s in self.seed_scores],
                "best_score": _num(self.best_score),
                "error": self.error}

    @classmethod
    def from_dict(cls, d: dict) -> "TrialRecord":
        return cls(int(d["trial_index"]), {k: float(v) for k, v in d["params"].items()},
                   [float(s) for s in d["seed_scores"]], float(d["best_score"]), d.get("error"))


@dataclass
class StudyRecord:
    study_label: str
    benchmark: str
    model_spec: str
    study_seed: int
    maximize: bool
    trials: list[TrialRecord] = field(default_factory=list)
    n_reservoir: int | None = None

    @property
    def best_trial_index(self) -> int:
        return best_index([t.best_score for t in self.trials], self.maximize)

    @property
    def best_trial(self) -> TrialRecord:
        return self.trials[self.best_trial_index]

    @property
    def best_score(self) -> float:
        return self.best_trial.best_score

    def to_dict(self) -> dict:
        return {"record_type": "study", "study_label": self.study_label,
                "benchmark": self.benchmark, "model_spec": self.model_spec,
                "study_seed": self.study_seed, "maximize": self.maximize,
                "n_reservoir": self.n_reservoir,
                "best_trial_index": self.best_trial_index if self.trials else None,
                "trials": [t.to_dict() for t in self.trials]}

    @classmethod
    def from_dict(cls, d: dict) -> "StudyRecord":
        return cls(d["study_label"], d["benchmark"], d["model_spec"], int(d["study_seed"]),
                   bool(d["maximize"]), [TrialRecord.from_dict(t) for t in d["trials"]],
                   d.get("n_reservoir"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def best_index(scores: list[float], maximize: bool) -> int:
    """Index of the best score; ties resolve to the earliest trial."""
    if not scores:
        raise ValueError("no trials")
    key = (lambda i: -scores[i]) if maximize else (lambda i: scores[i])
    return min(range(len(scores)), key=key)


Objective = Callable[[dict, int], "tuple[float, list[float]]"]


def run_study(space: SearchSpace, model_spec: ModelSpec, dataset, preset: BenchmarkPreset,
              n_trials: int | None = None, study_seed: int = 0, *,
              n_seeds: int | None = None, enqueued: Iterable[dict] = (),
              objective: Objective | None = None, sampler: Sampler = random_sampler,
              n_reservoir: int | None = None, study_label: str | None = None) -> StudyRecord:
    """Run trials ``0..n_trials-1`` and collect a :class:`StudyRecord`.

    ``enqueued`` parameter dicts pin the leading trials: their values
    override the sampler's draw for those trials. ``objective(params,
    trial_index)`` replaces the default build/train/score objective.
    """
    n_trials = preset.n_trials if n_trials is None else n_trials
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    n_seeds = preset.seeds_per_trial if n_seeds is None else n_seeds
    enqueued = list(enqueued)
    if objective is None:
        def objective(params, trial_index):
            return evaluate_config(params, model_spec, dataset, preset, n_seeds,
                                   study_seed, trial_index, n_reservoir)

    record = StudyRecord(study_label or f"study_{model_spec.label}", preset.name,
                         model_spec.label, int(study_seed), preset.maximize,
                         n_reservoir=n_reservoir or preset.n_reservoir)
    for i in range(n_trials):
        params = sampler(space, study_seed, i, record.trials, preset.maximize)
        if i < len(enqueued):
            params = {**params, **enqueued[i]}
        try:
            best, scores = objective(params, i)
            error = None
        except AllSeedsFailed as exc:
            best, scores, error = failure_score(preset.maximize), [], str(exc)
            log.info("trial %d failed: %s", i, exc)
        record.trials.append(TrialRecord(i, params, list(scores), float(best), error))
        log.debug("trial %d best=%r", i, best)
    return record
