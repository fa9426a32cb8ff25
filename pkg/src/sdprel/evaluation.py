"""Stratified cross-validation, macro-F1 and per-relation comparison tables."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from . import cnn
from .errors import MisalignedInstances, TooFewInstances
from .features import Sample, build_vocab, default_max_len, encode_tokens, load_pretrained, sample_tokens
from .seeding import rng_for, subseed
from .treebank_io import LABELS

log = logging.getLogger(__name__)

N_CLASSES = len(LABELS)
MACRO_ROW = "macro-averaged"
AGGREGATES = ("pooled", "mean", "best")


def class_weights(labels: Sequence[int], n_classes: int = N_CLASSES) -> np.ndarray:
    """``N / (n_classes * N_c)`` per class."""
    counts = np.bincount(np.asarray(labels, dtype=np.int64), minlength=n_classes)
    if np.any(counts == 0):
        missing = [LABELS[i] for i in np.flatnonzero(counts == 0)]
        raise TooFewInstances(f"no training instances for {missing}")
    return counts.sum() / (n_classes * counts)


def stratified_folds(labels: Sequence[int], k: int = 5, seed: int = 0) -> list[np.ndarray]:
    """Shuffle each class by ``seed`` and deal its members round-robin.

    The dealing position carries over between classes so fold sizes stay
    balanced overall as well as per class.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if k < 2:
        raise ValueError("need at least 2 folds")
    if len(labels) < k:
        raise TooFewInstances(f"{len(labels)} instances cannot fill {k} folds")
    rng = rng_for(seed, "folds")
    folds: list[list[int]] = [[] for _ in range(k)]
    pos = 0
    for c in np.unique(labels):
        members = rng.permutation(np.flatnonzero(labels == c))
        for i in members:
            folds[pos % k].append(int(i))
            pos += 1
    return [np.array(sorted(f), dtype=np.int64) for f in folds]


def confusion_matrix(gold, pred, n_classes: int = N_CLASSES) -> np.ndarray:
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(gold, dtype=np.int64), np.asarray(pred, dtype=np.int64)), 1)
    return cm


@dataclass
class Metrics:
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    macro_f1: float

    def to_json(self) -> dict:
        return {
            "precision": dict(zip(LABELS, map(float, self.precision))),
            "recall": dict(zip(LABELS, map(float, self.recall))),
            "f1": dict(zip(LABELS, map(float, self.f1))),
            "macro_f1": float(self.macro_f1),
        }


def macro_f1(cm: np.ndarray) -> Metrics:
    """Per-class P/R/F1 from a gold x predicted matrix; macro is the plain mean."""
    cm = np.asarray(cm, dtype=np.float64)
    tp = np.diag(cm)
    pred_tot = cm.sum(axis=0)
    gold_tot = cm.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(pred_tot > 0, tp / pred_tot, 0.0)
        r = np.where(gold_tot > 0, tp / gold_tot, 0.0)
        f = np.where(p + r > 0, 2 * p * r / (p + r), 0.0)
    return Metrics(p, r, f, float(f.mean()))


@dataclass
class CVResult:
    pooled: Metrics
    folds: list[Metrics]
    confusions: list[np.ndarray]
    fold_weights: list[np.ndarray]
    predictions: np.ndarray
    seed: int
    hp: cnn.HyperParams
    mode: str

    @property
    def pooled_confusion(self) -> np.ndarray:
        return sum(self.confusions)

    @property
    def mean_macro_f1(self) -> float:
        return float(np.mean([m.macro_f1 for m in self.folds]))

    @property
    def best_fold(self) -> int:
        return int(np.argmax([m.macro_f1 for m in self.folds]))

    @property
    def best_macro_f1(self) -> float:
        return self.folds[self.best_fold].macro_f1

    def per_relation(self, aggregate: str = "best") -> tuple[np.ndarray, float]:
        """Per-relation F1 and the macro figure under one aggregate flavour.

        ``pooled`` scores the summed confusion matrix, ``mean`` averages the
        folds, ``best`` takes each relation's best fold and the best fold's macro.
        """
        if aggregate == "pooled":
            return self.pooled.f1, self.pooled.macro_f1
        per_fold = np.array([m.f1 for m in self.folds])
        if aggregate == "mean":
            return per_fold.mean(axis=0), self.mean_macro_f1
        if aggregate == "best":
            return per_fold.max(axis=0), self.best_macro_f1
        raise ValueError(f"unknown aggregate {aggregate!r}")

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "hyperparams": self.hp.to_json(),
            "pooled": self.pooled.to_json(),
            "pooled_confusion": self.pooled_confusion.tolist(),
            "mean_macro_f1": self.mean_macro_f1,
            "best_macro_f1": self.best_macro_f1,
            "best_fold": self.best_fold,
            "folds": [
                {"metrics": m.to_json(), "confusion": cm.tolist(), "class_weights": w.tolist()}
                for m, cm, w in zip(self.folds, self.confusions, self.fold_weights)
            ],
        }


def fit_fold(
    train: Sequence[Sample],
    mode: str,
    hp: cnn.HyperParams,
    embeddings=None,
    mark_reversed: bool = False,
):
    """Build vocab/embeddings from ``train`` only and train a model.

    Returns ``(model, vocab, max_len, class_weights)``.
    """
    toks = [sample_tokens(s, mode, mark_reversed) for s in train]
    vocab = build_vocab(toks)
    max_len = max(default_max_len([len(t) for t in toks], mode), max(hp.filter_widths))
    labels = [s.label_index for s in train]
    weights = class_weights(labels)
    static = None
    if embeddings is not None:
        static = load_pretrained(embeddings, vocab, hp.embedding_dim, subseed(hp.seed, "vocab-init"))
    encoded = [encode_tokens(t, vocab, max_len, y) for t, y in zip(toks, labels)]
    model = cnn.train(encoded, hp, weights, len(vocab), static)
    return model, vocab, max_len, weights


def predict_samples(model, vocab, max_len, samples, mode, hp, mark_reversed=False) -> np.ndarray:
    encoded = [
        encode_tokens(sample_tokens(s, mode, mark_reversed), vocab, max_len, s.label_index)
        for s in samples
    ]
    if not encoded:
        return np.zeros(0, dtype=np.int64)
    return np.atleast_1d(cnn.predict(model, encoded, hp))


def _run_fold(args):
    train, test, mode, hp, embeddings, mark_reversed = args
    model, vocab, max_len, weights = fit_fold(train, mode, hp, embeddings, mark_reversed)
    return predict_samples(model, vocab, max_len, test, mode, hp, mark_reversed), weights


def cross_validate(
    samples: Sequence[Sample],
    mode: str,
    hp: cnn.HyperParams,
    seed: int = 0,
    k: int = 5,
    embeddings=None,
    jobs: int = 1,
    mark_reversed: bool = False,
) -> CVResult:
    """Stratified k-fold training/prediction; class weights come from the training folds."""
    labels = np.array([s.label_index for s in samples], dtype=np.int64)
    folds = stratified_folds(labels, k, seed)
    tasks = []
    for i, test_idx in enumerate(folds):
        train_idx = np.setdiff1d(np.arange(len(samples)), test_idx)
        fold_hp = replace(hp, seed=subseed(seed, f"train/{i}"))
        tasks.append((
            [samples[j] for j in train_idx], [samples[j] for j in test_idx],
            mode, fold_hp, embeddings, mark_reversed,
        ))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_fold, tasks))
    else:
        outcomes = [_run_fold(t) for t in tasks]

    predictions = np.zeros(len(samples), dtype=np.int64)
    confusions, metrics, weights = [], [], []
    for test_idx, (pred, w) in zip(folds, outcomes):
        predictions[test_idx] = pred
        cm = confusion_matrix(labels[test_idx], pred)
        confusions.append(cm)
        metrics.append(macro_f1(cm))
        weights.append(w)
    pooled = macro_f1(sum(confusions))
    return CVResult(pooled, metrics, confusions, weights, predictions, seed, hp, mode)


@dataclass
class ComparisonTable:
    """Rows are the six relations plus the macro row; one column per run."""

    columns: list[str]
    rows: list[str]
    values: np.ndarray  # (len(rows), len(columns)), F1 in [0, 1]
    frequencies: list[int] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]

    def to_tsv(self) -> str:
        head = ["Relation"] + (["Frq."] if self.frequencies else []) + self.columns
        lines = ["\t".join(head)]
        for i, row in enumerate(self.rows):
            cells = [row]
            if self.frequencies:
                cells.append(str(self.frequencies[i]) if i < len(self.frequencies) else "")
            cells += [f"{100 * v:.2f}" for v in self.values[i]]
            lines.append("\t".join(cells))
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        grid = [line.split("\t") for line in self.to_tsv().splitlines()]
        widths = [max(len(r[j]) for r in grid) for j in range(len(grid[0]))]
        out = []
        for n, r in enumerate(grid):
            cells = [r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
            out.append("  ".join(cells).rstrip())
            if n == 0 or n == len(grid) - 2:
                out.append("-" * len(out[-1]))
        return "\n".join(out) + "\n"

    def to_json(self) -> dict:
        return {
            "columns": self.columns,
            "rows": self.rows,
            "values": self.values.tolist(),
            "frequencies": self.frequencies,
        }


def _table(results: Mapping[str, CVResult], aggregate: str, frequencies=()) -> ComparisonTable:
    cols, data = [], []
    for name, res in results.items():
        per_rel, macro = res.per_relation(aggregate)
        cols.append(name)
        data.append(list(per_rel) + [macro])
    return ComparisonTable(cols, list(LABELS) + [MACRO_ROW], np.array(data).T, list(frequencies))


@dataclass
class Comparison:
    results: dict[str, CVResult]
    table: ComparisonTable
    sdp_effect: ComparisonTable | None = None
    baseline: CVResult | None = None


def _check_aligned(runs: Mapping[str, Sequence[Sample]]) -> dict[str, list[Sample]]:
    names = list(runs)
    ref = [s.instance.key for s in runs[names[0]]]
    ref_set = set(ref)
    aligned = {names[0]: list(runs[names[0]])}
    for name in names[1:]:
        by_key = {s.instance.key: s for s in runs[name]}
        if set(by_key) != ref_set or len(by_key) != len(runs[name]):
            raise MisalignedInstances(f"relation set of {name!r} differs from {names[0]!r}")
        aligned[name] = [by_key[key] for key in ref]
    return aligned


def compare_representations(
    runs: Mapping[str, Sequence[Sample]],
    hp,
    seed: int = 0,
    k: int = 5,
    baseline: bool = False,
    aggregate: str = "best",
    embeddings=None,
    jobs: int = 1,
) -> Comparison:
    """Cross-validate each representation and tabulate per-relation F1.

    ``hp`` is one :class:`HyperParams` or a map from run name to one. With
    ``baseline`` the first run's sentences are also scored in sentence mode
    and a with/without-path table with a difference column is added.
    """
    if not runs:
        raise ValueError("no representations to compare")
    runs = _check_aligned(runs)
    hps = hp if isinstance(hp, Mapping) else {name: hp for name in runs}
    results = {name: cross_validate(s, "sdp", hps[name], seed, k, embeddings, jobs) for name, s in runs.items()}
    first = next(iter(runs))
    freqs = np.bincount([s.label_index for s in runs[first]], minlength=N_CLASSES).tolist()
    table = _table(results, aggregate, freqs)
    out = Comparison(results, table)
    if baseline:
        base = cross_validate(runs[first], "sentence", hps[first], seed, k, embeddings, jobs)
        effect = _table({"without sdp": base, "with sdp": results[first]}, aggregate)
        diff = effect.values[:, 1] - effect.values[:, 0]
        effect.columns.append("Diff.")
        effect.values = np.column_stack([effect.values, diff])
        out.sdp_effect, out.baseline = effect, base
    return out
