"""With/without-path comparison on a generated corpus.

The label of every instance is carried by one marker token that sits on the
entity-to-entity path; two other markers sit elsewhere in the sentence.
"""

import argparse

from sdprel.cnn import HyperParams
from sdprel.evaluation import compare_representations
from sdprel.pipeline import extract_samples
from sdprel.synthetic import generate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=600)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--folds", type=int, default=5)
    ap.add_argument("--embedding-dim", type=int, default=50)
    ap.add_argument("--aggregate", default="mean", choices=("pooled", "mean", "best"))
    args = ap.parse_args()

    corpus = generate(args.n, args.seed)
    samples = extract_samples(corpus.graphs["stanford_basic"], corpus.spans, corpus.relations)
    hp = HyperParams(embedding_dim=args.embedding_dim)
    cmp = compare_representations(
        {"stanford_basic": samples}, hp, args.seed, args.folds, baseline=True, aggregate=args.aggregate
    )
    print(cmp.sdp_effect.to_text(), end="")


if __name__ == "__main__":
    main()
