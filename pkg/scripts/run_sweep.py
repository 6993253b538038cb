#!/usr/bin/env python3
"""Reservoir-size sweep for several architectures, exported as CSV plus a ranking.

Parameters come from a study file when given, otherwise from the guideline defaults.
"""
import argparse
import json

from esnlab.cli import _load_params
from esnlab.experiment import load_benchmark
from esnlab.harness import export_results, rank_models, size_sweep
from esnlab.models import ModelSpec, enumerate_models, get_preset, heuristic_params


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--benchmark", default="narma10")
    ap.add_argument("--models", default="V1-FT-GI-DU,V2-FT-GI-DU,V2-FS-GI-DU,V2-FT-GI-DL",
                    help="comma list of labels, or 'all' for the full 48")
    ap.add_argument("--sizes", default="50,150,250,350,450")
    ap.add_argument("--seeds", type=int, default=15)
    ap.add_argument("--params", help="study or parameter JSON")
    ap.add_argument("--out", default="sweep.csv")
    args = ap.parse_args()

    preset = get_preset(args.benchmark)
    dataset = load_benchmark(preset)
    params = _load_params(args.params) if args.params else heuristic_params(preset.kind)
    specs = (enumerate_models() if args.models == "all"
             else [ModelSpec.from_label(m) for m in args.models.split(",")])
    sizes = [int(s) for s in args.sizes.split(",")]
    records = []
    for spec in specs:
        rec = size_sweep(spec, params, preset, dataset, sizes, n_seeds=args.seeds)
        records.append(rec)
        cells = "  ".join(f"{r.trimmed_score:.4g}" for r in rec.rows)
        print(f"{spec.label}: {cells}")
    export_results(records, args.out)
    print(json.dumps(rank_models(records), indent=1))


if __name__ == "__main__":
    main()
