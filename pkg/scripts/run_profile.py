#!/usr/bin/env python3
"""Fit runtime exponents for training and prediction against reservoir size."""
import argparse
import json

from esnlab.experiment import load_benchmark
from esnlab.harness import profile
from esnlab.models import ModelSpec, get_preset, heuristic_params


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--benchmark", default="narma10")
    ap.add_argument("--model", default="V2-FT-GI-DU")
    ap.add_argument("--sizes", default="100,200,400,800,1600")
    ap.add_argument("--seeds", type=int, default=15)
    ap.add_argument("--out", default="profile.json")
    args = ap.parse_args()

    preset = get_preset(args.benchmark)
    result = profile(ModelSpec.from_label(args.model), heuristic_params(preset.kind), preset,
                     load_benchmark(preset), [int(s) for s in args.sizes.split(",")],
                     n_seeds=args.seeds)
    for row in result.sweep.rows:
        print(f"N={row.n_reservoir:5d} train {row.trimmed_train_ms:9.2f} ms  "
              f"predict {row.trimmed_predict_ms:9.2f} ms")
    for fit in (result.train_fit, result.predict_fit):
        print(f"{fit.phase}: exponent {fit.exponent:.3f}, log residual {fit.residual:.3f}")
    with open(args.out, "w") as fh:
        json.dump(result.to_dict(), fh, indent=1)


if __name__ == "__main__":
    main()
