"""Architecture catalogue, guideline defaults and benchmark protocol presets."""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass

from .core import Activation, Distribution, EsnConfig, ReadoutVariant
from .errors import ConfigError

_F_CODES = {Activation.TANH: "T", Activation.SINC: "S"}
_G_CODES = {Activation.TANH: "T", Activation.IDENTITY: "I"}
_D_CODES = {Distribution.UNIFORM: "U", Distribution.BIVALUED: "B", Distribution.LAPLACE: "L"}
_LABEL_RE = re.compile(r"^V([1-4])-F([TS])-G([TI])-D([UBL])$")


@dataclass(frozen=True)
class ModelSpec:
    """One leaf of the architecture tree.

    Labels read ``V{1-4}-F{T|S}-G{T|I}-D{U|B|L}``:

    ====  =====================================
    V1    readout sees ``x``
    V2    readout sees ``[1, u, x]``
    V3    readout sees ``[x, y_prev]``
    V4    readout sees ``[1, u, x, y_prev]``
    F     reservoir activation, tanh or sinc
    G     output activation, tanh or identity
    D     weight distribution, uniform / bivalued / Laplace
    ====  =====================================
    """

    readout_variant: ReadoutVariant
    reservoir_activation: Activation
    output_activation: Activation
    weight_distribution: Distribution

    @property
    def label(self) -> str:
        return (f"V{self.readout_variant.code}-F{_F_CODES[self.reservoir_activation]}"
                f"-G{_G_CODES[self.output_activation]}-D{_D_CODES[self.weight_distribution]}")

    @classmethod
    def from_label(cls, label: str) -> "ModelSpec":
        m = _LABEL_RE.match(label.strip().upper())
        if not m:
            raise ConfigError(f"bad model label {label!r}; expected e.g. 'V2-FT-GI-DU'")
        v, f, g, d = m.groups()
        inv = lambda table, code: next(k for k, c in table.items() if c == code)  # noqa: E731
        return cls(list(ReadoutVariant)[int(v) - 1], inv(_F_CODES, f), inv(_G_CODES, g),
                   inv(_D_CODES, d))

    def apply(self, config: EsnConfig) -> EsnConfig:
        return config.replace(readout_variant=self.readout_variant,
                              reservoir_activation=self.reservoir_activation,
                              output_activation=self.output_activation,
                              weight_distribution=self.weight_distribution)


def enumerate_models() -> list[ModelSpec]:
    """All 48 specs ordered by (variant, f, g, distribution)."""
    return [ModelSpec(*combo) for combo in itertools.product(
        list(ReadoutVariant), list(_F_CODES), list(_G_CODES), list(_D_CODES))]


PROBLEM_KINDS = ("prediction", "generation", "chaotic", "classification")

# hyperparameter names that a study may tune (plus "ridge")
TUNABLE = ("spectral_radius", "leak_rate", "density_reservoir", "density_input",
           "density_feedback", "input_scale", "feedback_scale")

_HEURISTIC_RIDGE = {
    "prediction": 1e-6,
    "generation": 1e-4,
    "chaotic": 1e-6,
    "classification": 1e-2,
}


def heuristic_defaults(problem_kind: str) -> EsnConfig:
    """Guideline-derived starting configuration for a class of problem.

    Sparse reservoir (0.15) and dense input weights (0.95) everywhere.
    Pattern generation and chaotic prediction get output feedback, a slow
    leak, a spectral radius close to one and a self-recurrent readout.
    Short-memory prediction uses moderate leak and radius; classification a
    fast leak and small radius.
    """
    common = dict(density_reservoir=0.15, density_input=0.95,
                  reservoir_activation=Activation.TANH,
                  output_activation=Activation.IDENTITY)
    if problem_kind == "prediction":
        return EsnConfig(1, 100, 1, spectral_radius=0.8, leak_rate=0.5, input_scale=0.5,
                         density_feedback=0.0, feedback_scale=0.0,
                         readout_variant=ReadoutVariant.INPUT_STATE, **common)
    if problem_kind in ("generation", "chaotic"):
        n_res, n_out = (20, 2) if problem_kind == "generation" else (100, 1)
        return EsnConfig(0, n_res, n_out, spectral_radius=0.95, leak_rate=0.1,
                         input_scale=0.5, density_feedback=0.95, feedback_scale=0.5,
                         readout_variant=ReadoutVariant.INPUT_STATE_FEEDBACK, **common)
    if problem_kind == "classification":
        return EsnConfig(85, 50, 5, spectral_radius=0.5, leak_rate=0.9, input_scale=0.1,
                         density_feedback=0.0, feedback_scale=0.0,
                         readout_variant=ReadoutVariant.INPUT_STATE,
                         weight_distribution=Distribution.BIVALUED,
                         classifier_mode=True, **common)
    raise ConfigError(f"unknown problem kind {problem_kind!r}; choose from {PROBLEM_KINDS}")


def heuristic_params(problem_kind: str) -> dict[str, float]:
    """Tunable values of :func:`heuristic_defaults` plus a ridge coefficient."""
    cfg = heuristic_defaults(problem_kind)
    params = {name: getattr(cfg, name) for name in TUNABLE}
    params["ridge"] = _HEURISTIC_RIDGE[problem_kind]
    return params


@dataclass(frozen=True)
class BenchmarkPreset:
    """Named protocol for one benchmark: sizes, splits, washouts, noise, budget."""

    name: str
    kind: str
    n_inputs: int
    n_outputs: int
    n_reservoir: int          # reservoir size held fixed during optimization
    total_len: int
    train_len: int
    test_len: int
    washout_train: int
    washout_test: int
    train_noise: float
    predict_noise: float
    n_trials: int
    feedback: bool
    seeds_per_trial: int = 10
    train_frac: float = 0.0   # grouped benchmarks only
    test_frac: float = 0.0

    @property
    def score_name(self) -> str:
        return "f1" if self.kind == "classification" else "rmse"

    @property
    def maximize(self) -> bool:
        return self.kind == "classification"


PRESETS: dict[str, BenchmarkPreset] = {
    # 3400 samples: 1200 train / 2200 test, washout 200 on both; training noise 1e-4
    "narma10": BenchmarkPreset("narma10", "prediction", 1, 1, 100, 3400, 1200, 2200, 200, 200,
                               train_noise=1e-4, predict_noise=0.0, n_trials=150,
                               feedback=False),
    # 23000 samples: 3000 train / 20000 test, washout 1000; noise 0.01 at prediction only
    "figure8": BenchmarkPreset("figure8", "generation", 0, 2, 20, 23000, 3000, 20000, 1000, 1000,
                               train_noise=0.0, predict_noise=0.01, n_trials=150,
                               feedback=True),
    # 4100 generated, first 100 dropped: 2000 train / 2000 test, washout 100 on training only
    "mackey-glass": BenchmarkPreset("mackey-glass", "chaotic", 0, 1, 100, 4000, 2000, 2000, 100, 0,
                                    train_noise=0.0, predict_noise=0.0, n_trials=150,
                                    feedback=True),
    # 85 channels, digits 0-4, 60% train / 20% test of the groups, N = 50
    "digits": BenchmarkPreset("digits", "classification", 85, 5, 50, 0, 0, 0, 0, 0,
                              train_noise=0.0, predict_noise=0.0, n_trials=50,
                              feedback=False, train_frac=0.6, test_frac=0.2),
}
PRESET_ALIASES = {"digits-synthetic": "digits", "mackey_glass": "mackey-glass",
                  "mg17": "mackey-glass", "narma": "narma10", "figure-8": "figure8"}


def get_preset(name: str) -> BenchmarkPreset:
    key = PRESET_ALIASES.get(name, name)
    try:
        return PRESETS[key]
    except KeyError:
        raise ConfigError(f"unknown benchmark {name!r}; choose from {sorted(PRESETS)}") from None


def make_config(spec: ModelSpec, preset: BenchmarkPreset, params: dict,
                n_reservoir: int | None = None) -> tuple[EsnConfig, float]:
    """Concrete config and ridge coefficient for ``spec`` on ``preset``.

    Starts from the guideline template for the preset's problem kind; values
    in ``params`` override it. Feedback weights are zeroed on benchmarks that
    do not use them.
    """
    params = dict(params)
    ridge = float(params.pop("ridge", _HEURISTIC_RIDGE[preset.kind]))
    unknown = set(params) - set(TUNABLE)
    if unknown:
        raise ConfigError(f"unknown tuned parameters: {sorted(unknown)}")
    base = heuristic_defaults(preset.kind)
    changes = dict(n_inputs=preset.n_inputs, n_outputs=preset.n_outputs,
                   n_reservoir=n_reservoir or preset.n_reservoir,
                   noise_scale=preset.train_noise,
                   classifier_mode=preset.kind == "classification")
    changes.update({k: float(v) for k, v in params.items()})
    if not preset.feedback:
        changes.update(density_feedback=0.0, feedback_scale=0.0)
    return spec.apply(base.replace(**changes)), ridge
