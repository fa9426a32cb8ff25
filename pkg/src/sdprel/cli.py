"""Command-line entry point: ``sdprel {extract,train,eval,baseline,tune,compare}``.

Options come from flags, optionally preloaded from a JSON ``--config`` file
whose keys are the long flag names with underscores (flags win). Every output
is a function of the inputs, flags and ``--seed``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__
from .cnn import HyperParams, format_widths, load_checkpoint, save_checkpoint
from .errors import SdprelError
from .evaluation import (
    AGGREGATES,
    ComparisonTable,
    compare_representations,
    confusion_matrix,
    cross_validate,
    fit_fold,
    macro_f1,
    predict_samples,
)
from .features import read_embeddings
from .gp_tuner import (
    Categorical,
    Integer,
    Real,
    SearchSpace,
    config_to_hp,
    hp_to_config,
    hyperparam_space,
    tune,
    write_trace,
)
from .pipeline import length_histogram, load_inputs, read_extracted, write_extracted
from .seeding import subseed
from .treebank_io import LABELS, normalize_scheme

log = logging.getLogger("sdprel")

COMMANDS = ("extract", "train", "eval", "baseline", "tune", "compare")
SCHEME_CHOICES = ("conll08", "sb", "ud", "stanford_basic")
HP_FLAGS = (
    "filter_widths", "feature_maps", "activation", "pooling", "l2", "learning_rate",
    "dropout_keep", "epochs", "batch_size", "embedding_dim",
)
DEFAULTS = {
    "parses": [], "scheme": "conll08", "entities": None, "relations": None, "embeddings": None,
    "extracted": None, "mode": "sdp", "folds": 5, "seed": None, "out": None, "iterations": 100,
    "jobs": 1, "checkpoint": None, "aggregate": "best", "baseline": False, "mark_reversed": False,
    "space": None,
}
MIN_TUNE_BUDGET = 11


@dataclass
class RunConfig:
    command: str
    parses: list = field(default_factory=list)
    scheme: str = "conll08"
    entities: str | None = None
    relations: str | None = None
    embeddings: str | None = None
    extracted: str | None = None
    mode: str = "sdp"
    folds: int = 5
    seed: int = 0
    out: str = "."
    iterations: int = 100
    jobs: int = 1
    checkpoint: str | None = None
    aggregate: str = "best"
    baseline: bool = False
    mark_reversed: bool = False
    space: dict | None = None
    hyperparams: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)

    def hp(self) -> HyperParams:
        return HyperParams.from_json({**HyperParams().to_json(), **self.hyperparams})


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    io = common.add_argument_group("inputs and outputs")
    io.add_argument("--parses", action="append", metavar="[NAME=]FILE",
                    help="CoNLL-X/U parse file; repeat with NAME=FILE to compare representations")
    io.add_argument("--scheme", choices=SCHEME_CHOICES)
    io.add_argument("--entities", metavar="FILE", help="entity span TSV")
    io.add_argument("--relations", metavar="FILE", help="relation TSV")
    io.add_argument("--embeddings", metavar="FILE", help="pretrained vectors for the static channel")
    io.add_argument("--extracted", metavar="DIR", help="read samples written by 'extract'")
    io.add_argument("--checkpoint", metavar="FILE", help="evaluate this model instead of cross-validating")
    io.add_argument("--out", metavar="DIR")
    io.add_argument("--config", metavar="FILE", help="JSON file with default option values")

    run = common.add_argument_group("run")
    run.add_argument("--mode", choices=("sdp", "sentence"))
    run.add_argument("--folds", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--iterations", type=int, help="tuning budget (objective evaluations)")
    run.add_argument("--jobs", type=int, help="folds trained in parallel")
    run.add_argument("--aggregate", choices=AGGREGATES, help="per-relation F1 aggregate for tables")
    run.add_argument("--baseline", action="store_true", default=None,
                     help="compare: add the sentence-mode baseline table")
    run.add_argument("--mark-reversed", action="store_true", default=None,
                     help="prefix reversed instances with a marker token")
    run.add_argument("-v", "--verbose", action="store_true")

    hp = common.add_argument_group("hyperparameters")
    hp.add_argument("--filter-widths", metavar="W[-W...]")
    hp.add_argument("--feature-maps", type=int)
    hp.add_argument("--activation", choices=("sigmoid", "relu", "tanh", "softplus", "identity"))
    hp.add_argument("--pooling", choices=("max", "avg"))
    hp.add_argument("--l2", type=float)
    hp.add_argument("--learning-rate", type=float)
    hp.add_argument("--dropout-keep", type=float)
    hp.add_argument("--epochs", type=int)
    hp.add_argument("--batch-size", type=int)
    hp.add_argument("--embedding-dim", type=int)

    parser = argparse.ArgumentParser(prog="sdprel", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"sdprel {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "extract": "write shortest dependency paths, labels and sentences",
        "train": "train one model on all instances and save a checkpoint",
        "eval": "k-fold cross-validation (or score a checkpoint)",
        "baseline": "eval in sentence mode",
        "tune": "Gaussian-process hyperparameter search",
        "compare": "per-relation F1 across representations",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge built-in defaults < config file < explicit flags."""
    file_cfg = {}
    if args.config:
        with open(args.config, encoding="utf-8") as f:
            file_cfg = json.load(f)
    values = {}
    for key, default in DEFAULTS.items():
        flag = getattr(args, key, None)
        values[key] = flag if flag is not None else file_cfg.get(key, default)
    hp = {}
    for key in HP_FLAGS:
        flag = getattr(args, key)
        if flag is not None:
            hp[key] = flag
        elif key in file_cfg:
            hp[key] = file_cfg[key]
    if "hyperparams" in file_cfg:
        hp = {**file_cfg["hyperparams"], **hp}
    if values["seed"] is None:
        raise SdprelError("--seed is required (flag or config file)")
    if values["out"] is None:
        raise SdprelError("--out is required (flag or config file)")
    if args.command == "baseline":
        values["mode"] = "sentence"
    cfg = RunConfig(command=args.command, hyperparams=hp, **values)
    cfg.scheme = normalize_scheme(cfg.scheme)
    for path in [p.partition("=")[2] or p for p in cfg.parses] + [
        cfg.entities, cfg.relations, cfg.embeddings, cfg.checkpoint
    ]:
        if path and not os.path.exists(path):
            raise SdprelError(f"input file not found: {path}")
    return cfg


def _parse_entries(cfg: RunConfig) -> list[tuple[str, str, str]]:
    """``(name, scheme, path)`` per ``--parses`` entry."""
    out = []
    for entry in cfg.parses:
        name, sep, path = entry.partition("=")
        if not sep:
            name, path = cfg.scheme, entry
        try:
            scheme = normalize_scheme(name)
        except ValueError:
            scheme = cfg.scheme
        out.append((name, scheme, path))
    return out


def _load_samples(cfg: RunConfig, entry=None):
    if entry is None and cfg.extracted:
        return read_extracted(cfg.extracted)
    entries = _parse_entries(cfg)
    if entry is None:
        if not entries:
            raise SdprelError("need --parses (with --relations) or --extracted")
        entry = entries[0]
    if not cfg.relations:
        raise SdprelError("--relations is required with --parses")
    _, scheme, path = entry
    return load_inputs(path, cfg.entities, cfg.relations, scheme)


def _embeddings(cfg: RunConfig):
    """Parsed vectors (or None) and the hyperparameters with a matching dimension."""
    hp = cfg.hp()
    if not cfg.embeddings:
        return None, hp
    vectors, d = read_embeddings(cfg.embeddings, cfg.hyperparams.get("embedding_dim"))
    return vectors, replace(hp, embedding_dim=d)


def _write(cfg: RunConfig, name: str, text: str) -> str:
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, name)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    return path


def _report(cfg: RunConfig, **body) -> str:
    config = {k: v for k, v in cfg.to_json().items() if k != "out"}
    data = {"toolkit_version": __version__, "config": config, **body}
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def cmd_extract(cfg: RunConfig) -> None:
    samples = _load_samples(cfg)
    write_extracted(cfg.out, samples)
    hist = length_histogram(samples)
    _write(cfg, "extract.json", _report(cfg, instances=len(samples), path_lengths=hist))
    lengths = " ".join(f"{k}:{v}" for k, v in hist.items()) or "-"
    print(f"{len(samples)} instances; path length histogram (arcs:count) {lengths}")


def _aggregate_table(res) -> ComparisonTable:
    cols, data = [], []
    for agg in AGGREGATES:
        f1, macro = res.per_relation(agg)
        cols.append(agg)
        data.append(list(f1) + [macro])
    return ComparisonTable(cols, list(LABELS) + ["macro-averaged"], np.array(data).T)


def cmd_train(cfg: RunConfig) -> None:
    samples = _load_samples(cfg)
    vectors, hp = _embeddings(cfg)
    hp = replace(hp, seed=subseed(cfg.seed, "train"))
    model, vocab, max_len, weights = fit_fold(samples, cfg.mode, hp, vectors, cfg.mark_reversed)
    meta = {"mode": cfg.mode, "max_len": max_len, "mark_reversed": cfg.mark_reversed}
    os.makedirs(cfg.out, exist_ok=True)
    save_checkpoint(os.path.join(cfg.out, "model.bin"), model, hp, vocab, meta)
    gold = np.array([s.label_index for s in samples])
    pred = predict_samples(model, vocab, max_len, samples, cfg.mode, hp, cfg.mark_reversed)
    metrics = macro_f1(confusion_matrix(gold, pred))
    _write(cfg, "train.json", _report(
        cfg,
        hyperparams=hp.to_json(),
        vocab_size=len(vocab),
        max_len=max_len,
        class_weights=weights.tolist(),
        loss_history=model.history,
        training_metrics=metrics.to_json(),
    ))
    print(f"trained on {len(samples)} instances; training macro-F1 {metrics.macro_f1:.4f}")


def cmd_eval(cfg: RunConfig) -> None:
    samples = _load_samples(cfg)
    if cfg.checkpoint:
        model, hp, vocab, meta = load_checkpoint(cfg.checkpoint)
        mode = meta.get("mode", cfg.mode)
        pred = predict_samples(model, vocab, meta["max_len"], samples, mode, hp, meta.get("mark_reversed", False))
        gold = np.array([s.label_index for s in samples])
        cm = confusion_matrix(gold, pred)
        metrics = macro_f1(cm)
        _write(cfg, "eval.json", _report(cfg, metrics=metrics.to_json(), confusion=cm.tolist()))
        print(f"checkpoint macro-F1 {metrics.macro_f1:.4f} on {len(samples)} instances")
        return
    vectors, hp = _embeddings(cfg)
    res = cross_validate(samples, cfg.mode, hp, cfg.seed, cfg.folds, vectors, cfg.jobs, cfg.mark_reversed)
    table = _aggregate_table(res)
    _write(cfg, "eval.json", _report(cfg, result=res.to_json()))
    _write(cfg, "eval.tsv", table.to_tsv())
    _write(cfg, "eval.txt", table.to_text())
    print(table.to_text(), end="")
    print(f"{cfg.mode} mode: mean {cfg.folds}-fold macro-F1 {res.mean_macro_f1:.4f}")


def restrict_space(overrides: dict | None) -> SearchSpace:
    """Tuning space with optional per-dimension overrides from the config file.

    Categorical overrides are choice lists, numeric overrides ``[low, high]``.
    """
    space = hyperparam_space()
    if not overrides:
        return space
    dims = []
    for d in space.dims:
        o = overrides.get(d.name)
        if o is None:
            dims.append(d)
        elif isinstance(d, Categorical):
            dims.append(Categorical(d.name, tuple(o)))
        elif isinstance(d, Integer):
            dims.append(Integer(d.name, int(o[0]), int(o[1])))
        else:
            dims.append(Real(d.name, float(o[0]), float(o[1]), d.log))
    return SearchSpace(tuple(dims))


SUMMARY_HEADER = (
    "Representation", "Filter size", "Num. Feature maps", "Activation func.", "Pooling",
    "L2 Reg.", "Learning rate", "Dropout Prob.", "F1 default", "F1 optimal",
)


def cmd_tune(cfg: RunConfig) -> None:
    samples = _load_samples(cfg)
    vectors, base = _embeddings(cfg)
    space = restrict_space(cfg.space)
    if cfg.iterations < MIN_TUNE_BUDGET and not space.is_singleton():
        raise SdprelError(f"--iterations must be at least {MIN_TUNE_BUDGET}")

    def objective(config):
        hp = config_to_hp(config, base)
        return cross_validate(samples, cfg.mode, hp, cfg.seed, cfg.folds, vectors, cfg.jobs, cfg.mark_reversed).mean_macro_f1

    def progress(entry):
        log.info("iteration %d value %.4f best %.4f", entry.iteration, entry.value, entry.best)

    default_f1 = objective(hp_to_config(base))
    result = tune(objective, space, cfg.iterations, subseed(cfg.seed, "tuner"), callback=progress)
    best_hp = config_to_hp(result.best_config, base)
    scheme = _parse_entries(cfg)[0][0] if cfg.parses else "extracted"
    row = (
        scheme, format_widths(best_hp.filter_widths), str(best_hp.feature_maps),
        best_hp.activation, best_hp.pooling, f"{best_hp.l2:.2e}", f"{best_hp.learning_rate:.2e}",
        f"{best_hp.dropout_keep:.2f}", f"{100 * default_f1:.2f}", f"{100 * result.best_value:.2f}",
    )
    _write(cfg, "trace.tsv", write_trace(result.trace))
    _write(cfg, "best_config.json", json.dumps(hp_to_config(best_hp), indent=2, sort_keys=True) + "\n")
    _write(cfg, "tuning_summary.tsv", "\t".join(SUMMARY_HEADER) + "\n" + "\t".join(row) + "\n")
    _write(cfg, "tune.json", _report(
        cfg,
        default_f1=default_f1,
        best_f1=result.best_value,
        best_hyperparams=best_hp.to_json(),
        evaluations=len(result.trace),
    ))
    print(f"{len(result.trace)} evaluations; default F1 {default_f1:.4f}, best F1 {result.best_value:.4f}")


def cmd_compare(cfg: RunConfig) -> None:
    entries = _parse_entries(cfg)
    if not entries:
        raise SdprelError("compare needs at least one --parses entry")
    runs = {}
    for entry in entries:
        if entry[0] in runs:
            raise SdprelError(f"duplicate representation name {entry[0]!r}")
        runs[entry[0]] = _load_samples(cfg, entry)
    vectors, hp = _embeddings(cfg)
    cmp = compare_representations(
        runs, hp, cfg.seed, cfg.folds, cfg.baseline, cfg.aggregate, vectors, cfg.jobs
    )
    body = {
        "schemes": cmp.table.to_json(),
        "results": {name: r.to_json() for name, r in cmp.results.items()},
    }
    _write(cfg, "schemes.tsv", cmp.table.to_tsv())
    _write(cfg, "schemes.txt", cmp.table.to_text())
    print(cmp.table.to_text(), end="")
    if cmp.sdp_effect is not None:
        body["sdp_effect"] = cmp.sdp_effect.to_json()
        body["baseline"] = cmp.baseline.to_json()
        _write(cfg, "sdp_effect.tsv", cmp.sdp_effect.to_tsv())
        _write(cfg, "sdp_effect.txt", cmp.sdp_effect.to_text())
        print(cmp.sdp_effect.to_text(), end="")
    _write(cfg, "compare.json", _report(cfg, **body))


HANDLERS = {
    "extract": cmd_extract,
    "train": cmd_train,
    "eval": cmd_eval,
    "baseline": cmd_eval,
    "tune": cmd_tune,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = resolve_config(args)
        HANDLERS[cfg.command](cfg)
    except (SdprelError, OSError, json.JSONDecodeError) as exc:
        print(f"sdprel {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
