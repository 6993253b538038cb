"""``esnlab`` command line.

Exit codes: 0 success, 1 usage error, 2 run failure. ``ESNLAB_SEED``
overrides the default root seed.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import benchmarks, harness, hpo
from .core import EsnConfig, build
from .errors import ConfigError, EsnError
from .experiment import load_benchmark, run_config
from .models import ModelSpec, get_preset, heuristic_params

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2
GEN_CHOICES = ("narma10", "figure8", "mackey-glass", "digits-synthetic")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_seed() -> int:
    raw = os.environ.get("ESNLAB_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"ESNLAB_SEED must be an integer, got {raw!r}") from None


def _sizes(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size list {text!r}") from None


def _write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=1))


def _load_params(path) -> dict:
    """Tuned parameters from a plain JSON dict, a study record or an export file."""
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict) and "records" in data:
        studies = [d for d in data["records"] if d.get("record_type") == "study"]
        if not studies:
            raise UsageError(f"{path} holds no study record")
        data = studies[0]
    if isinstance(data, dict) and "trials" in data:
        return hpo.StudyRecord.from_dict(data).best_trial.params
    if not isinstance(data, dict):
        raise UsageError(f"{path} is not a parameter object")
    return {k: float(v) for k, v in data.items()}


def cmd_gen(args) -> int:
    seed = args.seed
    out = Path(args.out)
    if args.benchmark == "digits-synthetic":
        data = benchmarks.gen_synthetic_digits(seed=seed, class_separation=args.separation)
        benchmarks.export_digit_features(data, out)
        return EXIT_OK
    ds = load_benchmark(args.benchmark, seed=seed)
    _write_json(out, ds.to_dict())
    return EXIT_OK


def cmd_train(args) -> int:
    preset = get_preset(args.benchmark)
    raw = json.loads(Path(args.config).read_text())
    ridge = float(raw.pop("ridge", heuristic_params(preset.kind)["ridge"]))
    config = EsnConfig.from_dict(raw)
    dataset = load_benchmark(preset, seed=args.seed)
    result = run_config(config, ridge, preset, dataset, args.seed)
    _write_json(args.out, {"benchmark": preset.name, "seed": args.seed, "ridge": ridge,
                           "config": config.to_dict(), "score_name": preset.score_name,
                           "score": result.score, "metrics": result.metrics,
                           "train_ms": result.train_s * 1e3,
                           "predict_ms": result.predict_s * 1e3,
                           "realized_spectral_radius":
                               build(config, args.seed).realized_spectral_radius})
    print(f"{preset.score_name}={result.score:.6g}")
    return EXIT_OK


def cmd_optimize(args) -> int:
    preset = get_preset(args.benchmark)
    spec = ModelSpec.from_label(args.model)
    dataset = load_benchmark(preset, seed=args.data_seed, features_path=args.features)
    enqueued = [heuristic_params(preset.kind)] if args.start_from_defaults else []
    record = hpo.run_study(hpo.SearchSpace.for_preset(preset), spec, dataset, preset,
                           n_trials=args.trials, study_seed=args.study_seed,
                           n_seeds=args.seeds_per_trial, enqueued=enqueued,
                           n_reservoir=args.n_reservoir, sampler=hpo.SAMPLERS[args.sampler])
    harness.export_results([record], args.out, "json")
    print(f"best trial {record.best_trial_index}: {preset.score_name}={record.best_score:.6g}")
    return EXIT_OK


def _params_or_defaults(args, preset) -> dict:
    return _load_params(args.params) if args.params else heuristic_params(preset.kind)


def cmd_sweep(args) -> int:
    preset = get_preset(args.benchmark)
    spec = ModelSpec.from_label(args.model)
    dataset = load_benchmark(preset, seed=args.data_seed, features_path=args.features)
    record = harness.size_sweep(spec, _params_or_defaults(args, preset), preset, dataset,
                                args.sizes, n_seeds=args.seeds)
    harness.export_results([record], args.out)
    for row in record.rows:
        print(f"N={row.n_reservoir} {record.score_name}={row.trimmed_score:.6g}")
    return EXIT_OK


def cmd_profile(args) -> int:
    preset = get_preset(args.benchmark)
    spec = ModelSpec.from_label(args.model)
    dataset = load_benchmark(preset, seed=args.data_seed, features_path=args.features)
    result = harness.profile(spec, _params_or_defaults(args, preset), preset, dataset,
                             args.sizes, n_seeds=args.seeds)
    _write_json(args.out, result.to_dict())
    print(f"train exponent {result.train_fit.exponent:.3f}, "
          f"predict exponent {result.predict_fit.exponent:.3f}")
    return EXIT_OK


def cmd_report(args) -> int:
    records = harness.import_results(args.inp)
    table = harness.report_table(records)
    if args.format == "json":
        sweeps = [r for r in records if isinstance(r, harness.SweepRecord)]
        _write_json(args.out, {"table": table, "rankings": harness.rank_models(sweeps)})
    else:
        import csv
        columns = list(dict.fromkeys(k for row in table for k in row))
        with open(args.out, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=columns)
            writer.writeheader()
            writer.writerows(table)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="esnlab", description="Echo state network benchmark harness")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, sizes=False):
        sp.add_argument("--benchmark", required=True)
        sp.add_argument("--model", required=True, help="label such as V2-FT-GI-DU")
        sp.add_argument("--out", required=True)
        sp.add_argument("--data-seed", type=int, default=0)
        sp.add_argument("--features", help="digit feature file (default: synthetic surrogate)")
        if sizes:
            sp.add_argument("--sizes", type=_sizes, required=True)
            sp.add_argument("--params", help="JSON of tuned parameters or a study record")

    g = sub.add_parser("gen", help="generate a benchmark dataset")
    g.add_argument("--benchmark", required=True, choices=GEN_CHOICES)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--separation", type=float, default=10.0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="train and score one configuration")
    t.add_argument("--config", required=True)
    t.add_argument("--benchmark", required=True)
    t.add_argument("--seed", type=int, default=None)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    o = sub.add_parser("optimize", help="run a seeded hyperparameter study")
    common(o)
    o.add_argument("--trials", type=int, default=None,
                   help="default: 150 (50 for digits)")
    o.add_argument("--study-seed", type=int, default=None)
    o.add_argument("--seeds-per-trial", type=int, default=None)
    o.add_argument("--n-reservoir", type=int, default=None)
    o.add_argument("--sampler", choices=sorted(hpo.SAMPLERS), default="random")
    o.add_argument("--start-from-defaults", action="store_true",
                   help="pin trial 0 to the guideline defaults")
    o.set_defaults(func=cmd_optimize)

    s = sub.add_parser("sweep", help="reservoir-size sweep")
    common(s, sizes=True)
    s.add_argument("--seeds", type=int, default=15)
    s.set_defaults(func=cmd_sweep)

    pr = sub.add_parser("profile", help="runtime scaling fit")
    common(pr, sizes=True)
    pr.add_argument("--seeds", type=int, default=5)
    pr.set_defaults(func=cmd_profile)

    r = sub.add_parser("report", help="plot-ready tables from exported records")
    r.add_argument("--in", dest="inp", required=True)
    r.add_argument("--format", choices=("csv", "json"), default="csv")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                         format="%(levelname)s %(name)s: %(message)s")
    try:
        default_seed = _default_seed()
        for name in ("seed", "study_seed"):
            if getattr(args, name, 0) is None:
                setattr(args, name, default_seed)
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"esnlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EsnError, OSError, ValueError, KeyError) as exc:
        print(f"esnlab: run failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
