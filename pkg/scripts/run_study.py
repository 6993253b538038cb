#!/usr/bin/env python3
"""Tune one architecture on one benchmark and write the study record as JSON."""
import argparse
import logging

from esnlab import hpo
from esnlab.experiment import load_benchmark
from esnlab.harness import export_results
from esnlab.models import ModelSpec, get_preset, heuristic_params


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--benchmark", default="narma10")
    ap.add_argument("--model", default="V2-FT-GI-DU")
    ap.add_argument("--trials", type=int, default=None)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--sampler", choices=sorted(hpo.SAMPLERS), default="tpe")
    ap.add_argument("--out", default="study.json")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    preset = get_preset(args.benchmark)
    record = hpo.run_study(hpo.SearchSpace.for_preset(preset), ModelSpec.from_label(args.model),
                           load_benchmark(preset, seed=args.seed), preset,
                           n_trials=args.trials, study_seed=args.seed,
                           enqueued=[heuristic_params(preset.kind)],
                           sampler=hpo.SAMPLERS[args.sampler])
    export_results([record], args.out, "json")
    print(f"best trial {record.best_trial_index}: {record.best_score:.5g}")
    for name, value in record.best_trial.params.items():
        print(f"  {name} = {value:.5g}")


if __name__ == "__main__":
    main()
