"""Short GP-EI hyperparameter search on a generated corpus.

Prints the trace as it goes and the best configuration at the end. The
default budget is far below a real search; raise --iterations for that.
"""

import argparse
import json

from sdprel.cnn import HyperParams
from sdprel.evaluation import cross_validate
from sdprel.gp_tuner import Integer, SearchSpace, config_to_hp, hyperparam_space, tune
from sdprel.pipeline import extract_samples
from sdprel.synthetic import generate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=120)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--iterations", type=int, default=15)
    ap.add_argument("--folds", type=int, default=3)
    args = ap.parse_args()

    corpus = generate(args.n, args.seed)
    samples = extract_samples(corpus.graphs["stanford_basic"], corpus.spans, corpus.relations)
    # small models keep each evaluation to a second or two
    base = HyperParams(embedding_dim=16, epochs=5)
    space = SearchSpace(tuple(
        Integer("feature_maps", 10, 64) if d.name == "feature_maps" else d for d in hyperparam_space().dims
    ))

    def objective(config):
        hp = config_to_hp(config, base)
        return cross_validate(samples, "sdp", hp, args.seed, args.folds).mean_macro_f1

    def show(entry):
        print(f"{entry.iteration:3d}  f1={entry.value:.4f}  best={entry.best:.4f}  {json.dumps(entry.config, sort_keys=True)}")

    result = tune(objective, space, args.iterations, args.seed, callback=show)
    print("best:", json.dumps(result.best_config, sort_keys=True))


if __name__ == "__main__":
    main()
