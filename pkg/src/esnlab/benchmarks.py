"""Benchmark datasets: NARMA-10, lazy figure-8, Mackey-Glass and spoken digits.

Sequence datasets are stored as full ``features x time`` arrays plus split
bookkeeping; the test split is the contiguous continuation of the training
split. Digit data is grouped: one group per utterance.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidFractions, LengthTooShort, MalformedRecord, UnknownLabel

log = logging.getLogger(__name__)

# Starting history for the Mackey-Glass delay buffer (18 integer-spaced samples).
MACKEY_GLASS_HISTORY = (
    0.9697, 0.9699, 0.9794, 1.0003, 1.0319, 1.0703, 1.1076,
    1.1352, 1.1485, 1.1482, 1.1383, 1.1234, 1.1072,
    1.0928, 1.0820, 1.0756, 1.0739, 1.0759,
)

NARMA_ORDER = 10
NARMA_DIVERGENCE_BOUND = 10.0
NARMA_RESEED_OFFSET = 1000
NARMA_MAX_RESEEDS = 100

FIGURE8_SAMPLES_PER_UNIT = 100
FIGURE8_PERIOD = 2 * FIGURE8_SAMPLES_PER_UNIT

DIGIT_CHANNELS = 85
DIGIT_CLASSES = 5


@dataclass(frozen=True, eq=False)
class SequenceDataset:
    inputs: np.ndarray   # K x T
    targets: np.ndarray  # L x T
    train_len: int
    test_len: int
    washout_train: int
    washout_test: int
    benchmark_name: str
    generator_seed: int | None = None

    def __post_init__(self):
        T = self.targets.shape[1]
        if self.inputs.shape[1] != T:
            raise ValueError("inputs and targets must have the same length")
        if self.train_len + self.test_len > T:
            raise ValueError(f"splits {self.train_len}+{self.test_len} exceed length {T}")
        if not 0 <= self.washout_train < self.train_len:
            raise ValueError("training washout must be shorter than the training split")
        if self.test_len and not 0 <= self.washout_test < self.test_len:
            raise ValueError("test washout must be shorter than the test split")

    @property
    def n_inputs(self) -> int:
        return self.inputs.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.targets.shape[0]

    @property
    def train_inputs(self) -> np.ndarray:
        return self.inputs[:, :self.train_len]

    @property
    def train_targets(self) -> np.ndarray:
        return self.targets[:, :self.train_len]

    @property
    def test_inputs(self) -> np.ndarray:
        return self.inputs[:, self.train_len:self.train_len + self.test_len]

    @property
    def test_targets(self) -> np.ndarray:
        return self.targets[:, self.train_len:self.train_len + self.test_len]

    def to_dict(self) -> dict:
        return {
            "benchmark_name": self.benchmark_name,
            "generator_seed": self.generator_seed,
            "train_len": self.train_len,
            "test_len": self.test_len,
            "washout_train": self.washout_train,
            "washout_test": self.washout_test,
            "inputs": self.inputs.tolist(),
            "targets": self.targets.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SequenceDataset":
        targets = np.asarray(data["targets"], dtype=float)
        inputs = np.asarray(data["inputs"], dtype=float).reshape(-1, targets.shape[1])
        return cls(inputs, targets, data["train_len"], data["test_len"],
                   data["washout_train"], data["washout_test"],
                   data["benchmark_name"], data.get("generator_seed"))


def _scaled_splits(total_len, train_len, test_len, washout_train, washout_test,
                   protocol: tuple[int, int, int, int]):
    """Fill unspecified splits from the protocol proportions."""
    p_total, p_train, p_wtrain, p_wtest = protocol
    if train_len is None:
        train_len = total_len * p_train // p_total
    if test_len is None:
        test_len = total_len - train_len
    if washout_train is None:
        washout_train = train_len * p_wtrain // max(p_train, 1)
    if washout_test is None:
        p_test = p_total - p_train
        washout_test = test_len * p_wtest // max(p_test, 1)
    return train_len, test_len, washout_train, washout_test


# -- NARMA-10 ------------------------------------------------------------------

def narma10_response(m) -> np.ndarray:
    """Tenth-order NARMA output for input sequence ``m``.

    ``d(n+1) = 0.3 d(n) + 0.05 d(n) sum_{i=0..9} d(n-i) + 1.5 m(n-9) m(n) + 0.1``
    with ``d(0..9) = 0``.
    """
    m = np.asarray(m, dtype=float)
    d = np.zeros(m.shape[0])
    window = 0.0  # running sum of d(n-9..n)
    for n in range(NARMA_ORDER - 1, m.shape[0] - 1):
        d[n + 1] = (0.3 * d[n] + 0.05 * d[n] * window
                    + 1.5 * m[n - 9] * m[n] + 0.1)
        window = d[n - 8:n + 2].sum()
    return d


def gen_narma10(total_len: int = 3400, seed: int = 0, *, train_len: int | None = None,
                test_len: int | None = None, washout_train: int | None = None,
                washout_test: int | None = None) -> SequenceDataset:
    """NARMA-10 with ``m ~ U[0, 0.5)``. Defaults: 1200 train / 2200 test, washout 200.

    A sequence whose output leaves ``|d| <= 10`` is rejected and regenerated
    with ``seed + k * 1000``; the seed actually used is recorded.
    """
    if total_len < 2 * NARMA_ORDER:
        raise LengthTooShort(f"NARMA-10 needs at least {2 * NARMA_ORDER} samples")
    splits = _scaled_splits(total_len, train_len, test_len, washout_train, washout_test,
                            (3400, 1200, 200, 200))
    for k in range(NARMA_MAX_RESEEDS):
        used = seed + k * NARMA_RESEED_OFFSET
        m = np.random.default_rng(used).uniform(0.0, 0.5, total_len)
        with np.errstate(over="ignore", invalid="ignore"):
            d = narma10_response(m)
        if np.all(np.isfinite(d)) and np.max(np.abs(d)) <= NARMA_DIVERGENCE_BOUND:
            break
        log.warning("NARMA-10 seed %d diverged, regenerating", used)
    else:
        raise RuntimeError(f"NARMA-10 diverged for {NARMA_MAX_RESEEDS} seeds from {seed}")
    return SequenceDataset(m.reshape(1, -1), d.reshape(1, -1), *splits,
                           benchmark_name="narma10", generator_seed=used)


# -- lazy figure-8 --------------------------------------------------------------

def figure8_points(k) -> np.ndarray:
    """``(sin(2 pi t), cos(pi t))`` at ``t = k / 100``; period 200 samples."""
    t = np.asarray(k, dtype=float) / FIGURE8_SAMPLES_PER_UNIT
    return np.vstack([np.sin(2.0 * np.pi * t), np.cos(np.pi * t)])


def gen_figure8(total_len: int = 23000, *, train_len: int | None = None,
                test_len: int | None = None, washout_train: int | None = None,
                washout_test: int | None = None) -> SequenceDataset:
    if total_len < FIGURE8_PERIOD:
        raise LengthTooShort(f"figure-8 needs at least one period ({FIGURE8_PERIOD} samples)")
    splits = _scaled_splits(total_len, train_len, test_len, washout_train, washout_test,
                            (23000, 3000, 1000, 1000))
    # exact reduction modulo the period keeps k and k + 200 bitwise identical
    k = np.arange(total_len) % FIGURE8_PERIOD
    return SequenceDataset(np.zeros((0, total_len)), figure8_points(k), *splits,
                           benchmark_name="figure8")


# -- Mackey-Glass -----------------------------------------------------------------

def mackey_glass_series(n: int, tau: int = 17) -> np.ndarray:
    """Forward-Euler (dt = 1) Mackey-Glass series seeded with the stored history.

    ``y(t+1) = y(t) + 0.2 y(t-tau) / (1 + y(t-tau)^10) - 0.1 y(t)``. Lags
    reaching before the stored history reuse its first value.
    """
    if tau < 1:
        raise ValueError("tau must be >= 1")
    hist = len(MACKEY_GLASS_HISTORY)
    y = np.empty(max(n, hist))
    y[:hist] = MACKEY_GLASS_HISTORY
    for t in range(hist - 1, y.shape[0] - 1):
        lagged = y[max(t - tau, 0)]
        y[t + 1] = y[t] + 0.2 * lagged / (1.0 + lagged ** 10) - 0.1 * y[t]
    return y[:n]


def gen_mackey_glass(total_len: int = 4000, tau: int = 17, drop: int = 100, *,
                     train_len: int | None = None, test_len: int | None = None,
                     washout_train: int | None = None,
                     washout_test: int | None = None) -> SequenceDataset:
    """``total_len + drop`` samples generated, first ``drop`` discarded.

    Defaults: 2000 train / 2000 test, washout 100 on training only.
    """
    if total_len < 4:
        raise LengthTooShort("Mackey-Glass dataset needs at least 4 samples")
    if drop < 0:
        raise ValueError("drop must be >= 0")
    y = mackey_glass_series(total_len + drop, tau)[drop:]
    if washout_test is None:
        washout_test = 0
    splits = _scaled_splits(total_len, train_len, test_len, washout_train, washout_test,
                            (4000, 2000, 100, 0))
    return SequenceDataset(np.zeros((0, total_len)), y.reshape(1, -1), *splits,
                           benchmark_name="mackey-glass")


# -- isolated digits ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Group:
    group_id: int
    label: int
    features: np.ndarray  # K x tau

    @property
    def length(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True, eq=False)
class GroupedDataset:
    groups: list[Group] = field(default_factory=list)
    n_classes: int = DIGIT_CLASSES
    n_channels: int = DIGIT_CHANNELS

    def __post_init__(self):
        for g in self.groups:
            if g.length == 0:
                raise ValueError(f"group {g.group_id} is empty")
            if not 0 <= g.label < self.n_classes:
                raise UnknownLabel(f"group {g.group_id} label {g.label} out of range")
            if g.features.shape[0] != self.n_channels:
                raise MalformedRecord(
                    f"group {g.group_id} has {g.features.shape[0]} channels, "
                    f"expected {self.n_channels}")

    def __len__(self) -> int:
        return len(self.groups)

    @property
    def labels(self) -> np.ndarray:
        return np.array([g.label for g in self.groups], dtype=int)

    @property
    def class_counts(self) -> list[int]:
        return np.bincount(self.labels, minlength=self.n_classes).tolist()

    def same_as(self, other: "GroupedDataset") -> bool:
        if (self.n_classes, self.n_channels, len(self)) != (other.n_classes, other.n_channels, len(other)):
            return False
        return all(a.group_id == b.group_id and a.label == b.label
                   and np.array_equal(a.features, b.features)
                   for a, b in zip(self.groups, other.groups))


def _is_int(text: str) -> bool:
    try:
        int(text)
    except ValueError:
        return False
    return True


def load_digit_features(path, n_channels: int = DIGIT_CHANNELS,
                        n_classes: int = DIGIT_CLASSES) -> GroupedDataset:
    """Read a comma-separated feature file: ``group_id, label, f_1 .. f_85`` per row.

    Rows of one group must be contiguous. Digits outside ``0..n_classes-1``
    (but within 0-9) are skipped; anything else is an :class:`UnknownLabel`.
    """
    groups: list[Group] = []
    seen: set[int] = set()
    current_id = current_label = None
    rows: list[list[float]] = []

    def flush():
        if current_id is not None and current_label < n_classes:
            groups.append(Group(current_id, current_label, np.array(rows, dtype=float).T))

    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if lineno == 1 and not _is_int(row[0].strip()):
                continue  # header
            if len(row) != 2 + n_channels:
                raise MalformedRecord(
                    f"line {lineno}: expected {2 + n_channels} columns, got {len(row)}")
            try:
                gid, label = int(row[0]), int(row[1])
                values = [float(c) for c in row[2:]]
            except ValueError as exc:
                raise MalformedRecord(f"line {lineno}: {exc}") from None
            if not 0 <= label <= 9:
                raise UnknownLabel(f"line {lineno}: label {label} is not a digit")
            if gid != current_id:
                if gid in seen:
                    raise MalformedRecord(f"line {lineno}: group {gid} is not contiguous")
                flush()
                seen.add(gid)
                current_id, current_label, rows = gid, label, []
            elif label != current_label:
                raise MalformedRecord(f"line {lineno}: label changes inside group {gid}")
            rows.append(values)
    flush()
    return GroupedDataset(groups, n_classes, n_channels)


def export_digit_features(dataset: GroupedDataset, path, header: bool = True) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow(["group_id", "label"] + [f"ch{i}" for i in range(dataset.n_channels)])
        for g in dataset.groups:
            for sample in g.features.T:
                writer.writerow([g.group_id, g.label] + [repr(float(v)) for v in sample])


def gen_synthetic_digits(n_classes: int = DIGIT_CLASSES, n_channels: int = DIGIT_CHANNELS,
                         groups_per_class: int = 40, samples_per_group: int = 30,
                         class_separation: float = 10.0, seed: int = 0,
                         noise_std: float = 1.0) -> GroupedDataset:
    """Surrogate for precomputed cochleagram features.

    Each class gets a random channel-mean template whose expected Euclidean
    norm is ``class_separation * noise_std``; every sample is its class
    template plus white noise of std ``noise_std``. Groups are interleaved
    by class so file order carries no label information.
    """
    for name, value in (("n_classes", n_classes), ("n_channels", n_channels),
                        ("groups_per_class", groups_per_class),
                        ("samples_per_group", samples_per_group)):
        if value < 1:
            raise ValueError(f"{name} must be >= 1")
    if class_separation < 0:
        raise ValueError("class_separation must be >= 0")
    rng = np.random.default_rng(seed)
    templates = (class_separation * noise_std / math.sqrt(n_channels)
                 * rng.standard_normal((n_classes, n_channels)))
    order = rng.permutation(np.repeat(np.arange(n_classes), groups_per_class))
    groups = []
    for gid, label in enumerate(order):
        noise = noise_std * rng.standard_normal((n_channels, samples_per_group))
        groups.append(Group(gid, int(label), templates[label][:, None] + noise))
    return GroupedDataset(groups, n_classes, n_channels)


def split_grouped(dataset: GroupedDataset, train_frac: float = 0.6, test_frac: float = 0.2,
                  seed: int = 0) -> tuple[GroupedDataset, GroupedDataset]:
    """Shuffle whole groups, then take floor-sized train and test partitions."""
    if train_frac < 0 or test_frac < 0 or train_frac + test_frac > 1.0 + 1e-12:
        raise InvalidFractions(f"fractions ({train_frac}, {test_frac}) invalid")
    n = len(dataset.groups)
    order = np.random.default_rng(seed).permutation(n)
    n_train = math.floor(n * train_frac + 1e-9)
    n_test = min(math.floor(n * test_frac + 1e-9), n - n_train)
    train = [dataset.groups[i] for i in order[:n_train]]
    test = [dataset.groups[i] for i in order[n_train:n_train + n_test]]
    return (GroupedDataset(train, dataset.n_classes, dataset.n_channels),
            GroupedDataset(test, dataset.n_classes, dataset.n_channels))
