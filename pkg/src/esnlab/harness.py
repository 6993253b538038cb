"""Reservoir-size sweeps, runtime profiling and result export."""
from __future__ import annotations

import csv
import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EchoStateWarning, IoFailure, NonPositiveTime, TooFewValues
from .experiment import run_trial
from .hpo import RUN_FAILURES, StudyRecord
from .models import (  # noqa: F401  (re-exported)
    PRESETS,
    BenchmarkPreset,
    ModelSpec,
    enumerate_models,
    heuristic_defaults,
    heuristic_params,
)

log = logging.getLogger(__name__)

CSV_COLUMNS = ("model_label", "benchmark", "N", "seed", "score_name", "score",
               "train_ms", "predict_ms")
IQR_FENCE = 1.5


def trimmed_mean(values, fence: float = IQR_FENCE) -> float:
    """Mean after dropping values outside ``[Q1 - 1.5 IQR, Q3 + 1.5 IQR]``.

    Quartiles come from the empirical CDF and the sum is exactly rounded, so
    the result does not depend on the order of ``values`` or on duplicating them.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size < 3:
        raise TooFewValues(f"need at least 3 values, got {v.size}")
    q1, q3 = np.percentile(v, [25, 75], method="inverted_cdf")
    iqr = q3 - q1
    kept = v[(v >= q1 - fence * iqr) & (v <= q3 + fence * iqr)]
    return math.fsum(kept) / kept.size


def _trimmed_or_nan(values) -> float:
    finite = [x for x in values if math.isfinite(x)]
    if len(finite) >= 3:
        return trimmed_mean(finite)
    return math.fsum(finite) / len(finite) if finite else math.nan


@dataclass
class SweepRow:
    n_reservoir: int
    seeds: list[int]
    scores: list[float]
    train_ms: list[float]
    predict_ms: list[float]

    @property
    def failed_seeds(self) -> list[int]:
        return [s for s, x in zip(self.seeds, self.scores) if not math.isfinite(x)]

    @property
    def trimmed_score(self) -> float:
        return _trimmed_or_nan(self.scores)

    def _valid_times(self, times):
        return [t for t, x in zip(times, self.scores) if math.isfinite(x)]

    @property
    def trimmed_train_ms(self) -> float:
        return _trimmed_or_nan(self._valid_times(self.train_ms))

    @property
    def trimmed_predict_ms(self) -> float:
        return _trimmed_or_nan(self._valid_times(self.predict_ms))


@dataclass
class SweepRecord:
    """Per-size results of one model on one benchmark.

    Failed seeds keep a non-finite score and are left out of every trimmed mean.
    """

    model_label: str
    benchmark: str
    score_name: str
    rows: list[SweepRow] = field(default_factory=list)

    @property
    def sizes(self) -> list[int]:
        return [r.n_reservoir for r in self.rows]

    def to_dict(self) -> dict:
        return {
            "record_type": "sweep",
            "model_label": self.model_label,
            "benchmark": self.benchmark,
            "score_name": self.score_name,
            "rows": [{
                "N": r.n_reservoir,
                "seeds": r.seeds,
                "scores": [repr(float(x)) for x in r.scores],
                "train_ms": [repr(float(x)) for x in r.train_ms],
                "predict_ms": [repr(float(x)) for x in r.predict_ms],
                "failed_seeds": r.failed_seeds,
                "trimmed_score": repr(r.trimmed_score),
                "trimmed_train_ms": repr(r.trimmed_train_ms),
                "trimmed_predict_ms": repr(r.trimmed_predict_ms),
            } for r in self.rows],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SweepRecord":
        rows = [SweepRow(int(r["N"]), [int(s) for s in r["seeds"]],
                         [float(x) for x in r["scores"]],
                         [float(x) for x in r["train_ms"]],
                         [float(x) for x in r["predict_ms"]]) for r in d["rows"]]
        return cls(d["model_label"], d["benchmark"], d["score_name"], rows)

    def same_as(self, other: "SweepRecord") -> bool:
        return json.dumps(self.to_dict()) == json.dumps(other.to_dict())


def size_sweep(model_spec: ModelSpec, tuned_params: dict, preset: BenchmarkPreset, dataset,
               sizes, n_seeds: int = 15, seeds=None, warm_up: bool = True) -> SweepRecord:
    """Train and score the model at every reservoir size with seeds ``0..n_seeds-1``.

    Runs are serial so the recorded timings are not skewed by contention;
    one discarded warm-up run precedes the sweep when ``warm_up`` is set.
    """
    sizes = [int(n) for n in sizes]
    if not sizes or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("sizes must be non-empty and strictly increasing")
    seeds = list(range(n_seeds)) if seeds is None else [int(s) for s in seeds]
    record = SweepRecord(model_spec.label, preset.name, preset.score_name)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EchoStateWarning)
        warnings.simplefilter("ignore", RuntimeWarning)
        if warm_up:
            try:
                run_trial(model_spec, tuned_params, preset, dataset, seeds[0], sizes[0])
            except RUN_FAILURES:
                pass
        for n in sizes:
            row = SweepRow(n, seeds, [], [], [])
            for seed in seeds:
                try:
                    res = run_trial(model_spec, tuned_params, preset, dataset, seed, n)
                    score, tr, pr = res.score, res.train_s * 1e3, res.predict_s * 1e3
                except RUN_FAILURES as exc:
                    log.info("N=%d seed=%d failed: %s", n, seed, exc)
                    score, tr, pr = math.nan, math.nan, math.nan
                row.scores.append(float(score))
                row.train_ms.append(float(tr))
                row.predict_ms.append(float(pr))
            log.info("%s N=%d trimmed %s=%.5g", model_spec.label, n, preset.score_name,
                     row.trimmed_score)
            record.rows.append(row)
    return record


@dataclass(frozen=True)
class ComplexityFit:
    phase: str
    exponent: float
    residual: float
    sizes: tuple[int, ...]
    intercept: float = 0.0

    def to_dict(self) -> dict:
        return {"phase": self.phase, "exponent": repr(self.exponent),
                "residual": repr(self.residual), "intercept": repr(self.intercept),
                "sizes": list(self.sizes)}


def fit_complexity(sizes, times, phase: str = "train") -> ComplexityFit:
    """Least-squares slope of ``log(time)`` against ``log(N)``.

    ``residual`` is the RMS deviation of the fit in natural-log units.
    """
    n = np.asarray(sizes, dtype=float)
    t = np.asarray(times, dtype=float)
    if n.shape != t.shape or n.size < 4:
        raise ValueError("need at least 4 (size, time) pairs")
    if np.any(~(t > 0)) or np.any(~(n > 0)):
        raise NonPositiveTime("sizes and times must be positive")
    x, y = np.log(n), np.log(t)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return ComplexityFit(phase, float(slope), float(np.sqrt(np.mean(resid ** 2))),
                         tuple(int(s) for s in sizes), float(intercept))


@dataclass
class ProfileResult:
    sweep: SweepRecord
    train_fit: ComplexityFit
    predict_fit: ComplexityFit

    def to_dict(self) -> dict:
        return {"record_type": "profile", "sweep": self.sweep.to_dict(),
                "train_fit": self.train_fit.to_dict(), "predict_fit": self.predict_fit.to_dict()}


def profile(model_spec: ModelSpec, tuned_params: dict, preset: BenchmarkPreset, dataset,
            sizes, n_seeds: int = 5) -> ProfileResult:
    """Timing sweep followed by power-law fits for the training and prediction phases."""
    sweep = size_sweep(model_spec, tuned_params, preset, dataset, sizes, n_seeds)
    ns = sweep.sizes
    train = fit_complexity(ns, [r.trimmed_train_ms for r in sweep.rows], "train")
    pred = fit_complexity(ns, [r.trimmed_predict_ms for r in sweep.rows], "predict")
    return ProfileResult(sweep, train, pred)


# -- export / import ---------------------------------------------------------------

def _csv_rows(records):
    for rec in records:
        if not isinstance(rec, SweepRecord):
            raise TypeError("CSV export holds sweep records only; use JSON for studies")
        for row in rec.rows:
            for seed, score, tr, pr in zip(row.seeds, row.scores, row.train_ms, row.predict_ms):
                yield [rec.model_label, rec.benchmark, row.n_reservoir, seed, rec.score_name,
                       repr(float(score)), repr(float(tr)), repr(float(pr))]


def export_results(records, path, format: str | None = None) -> Path:
    """Write sweep/study records as CSV (one line per seed) or JSON."""
    path = Path(path)
    format = format or ("csv" if path.suffix.lower() == ".csv" else "json")
    try:
        if format == "csv":
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(CSV_COLUMNS)
                writer.writerows(_csv_rows(records))
        elif format == "json":
            payload = {"records": [r.to_dict() for r in records]}
            path.write_text(json.dumps(payload, indent=1))
        else:
            raise ValueError(f"unknown format {format!r}")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


def _record_from_dict(d: dict):
    kind = d.get("record_type")
    if kind == "sweep":
        return SweepRecord.from_dict(d)
    if kind == "study":
        return StudyRecord.from_dict(d)
    if kind == "profile":
        return SweepRecord.from_dict(d["sweep"])
    raise ValueError(f"unknown record type {kind!r}")


def import_results(path, format: str | None = None) -> list:
    path = Path(path)
    format = format or ("csv" if path.suffix.lower() == ".csv" else "json")
    try:
        text = path.read_text()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if format == "json":
        data = json.loads(text)
        items = data["records"] if isinstance(data, dict) and "records" in data else [data]
        return [_record_from_dict(d) for d in items]

    records: dict[tuple[str, str], SweepRecord] = {}
    reader = csv.DictReader(text.splitlines())
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    for line in reader:
        key = (line["model_label"], line["benchmark"])
        rec = records.setdefault(key, SweepRecord(key[0], key[1], line["score_name"]))
        n = int(line["N"])
        if not rec.rows or rec.rows[-1].n_reservoir != n:
            rec.rows.append(SweepRow(n, [], [], [], []))
        row = rec.rows[-1]
        row.seeds.append(int(line["seed"]))
        row.scores.append(float(line["score"]))
        row.train_ms.append(float(line["train_ms"]))
        row.predict_ms.append(float(line["predict_ms"]))
    return list(records.values())


# -- reporting ---------------------------------------------------------------------

def report_table(records) -> list[dict]:
    """Plot-ready rows: trimmed score and timings against N per model."""
    table = []
    for rec in records:
        if isinstance(rec, StudyRecord):
            for t in rec.trials:
                table.append({"model_label": rec.model_spec, "benchmark": rec.benchmark,
                              "trial": t.trial_index, "best_score": t.best_score, **t.params})
            continue
        for row in rec.rows:
            table.append({"model_label": rec.model_label, "benchmark": rec.benchmark,
                          "N": row.n_reservoir, "score_name": rec.score_name,
                          "score": row.trimmed_score, "train_ms": row.trimmed_train_ms,
                          "predict_ms": row.trimmed_predict_ms,
                          "n_valid": len(row.scores) - len(row.failed_seeds)})
    return table


def rank_models(records: list[SweepRecord], top: int = 10) -> dict[str, list[str]]:
    """Two rankings of swept models.

    ``best_mean`` orders by the mean trimmed score over all sizes;
    ``most_improved`` by the change from the smallest to the largest size.
    """
    summary = []
    for rec in records:
        if not isinstance(rec, SweepRecord) or not rec.rows:
            continue
        sign = -1.0 if rec.score_name == "f1" else 1.0  # lower key = better
        scores = [r.trimmed_score for r in rec.rows]
        finite = [s for s in scores if math.isfinite(s)]
        mean = sign * (sum(finite) / len(finite)) if finite else math.inf
        gain = sign * (scores[-1] - scores[0]) if len(finite) == len(scores) else math.inf
        summary.append((rec.model_label, mean, gain))
    by_mean = [m for m, _, _ in sorted(summary, key=lambda s: (s[1], s[0]))][:top]
    by_gain = [m for m, _, _ in sorted(summary, key=lambda s: (s[2], s[0]))][:top]
    return {"best_mean": by_mean, "most_improved": by_gain}
