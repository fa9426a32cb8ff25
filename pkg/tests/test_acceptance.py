"""Acceptance criteria, one test each, at their stated tolerances.

Each test prints a ``PASS``/``FAIL`` line (shown even under captured output).
Run directly with ``python3 tests/test_acceptance.py`` for just the summary.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import bfs_path, finite_difference_check, naive_depth, naive_macro_f1, random_tree  # noqa: E402
from sdprel import cnn, fixtures  # noqa: E402
from sdprel.cli import main as cli_main  # noqa: E402
from sdprel.evaluation import confusion_matrix, cross_validate, macro_f1  # noqa: E402
from sdprel.features import EncodedInstance  # noqa: E402
from sdprel.gp_tuner import (  # noqa: E402
    FILTER_CATALOGUE,
    GpState,
    Real,
    SearchSpace,
    decode_config,
    encode_config,
    expected_improvement,
    gp_posterior,
    hp_to_config,
    hyperparam_space,
    tune,
)
from sdprel.errors import OutOfSpace  # noqa: E402
from sdprel.pipeline import extract_samples  # noqa: E402
from sdprel.sdp import lowest_common_ancestor, serialize_sdp, shortest_path  # noqa: E402
from sdprel.synthetic import generate  # noqa: E402
from sdprel.treebank_io import load_relations, load_spans, parse_conll, write_relations, write_spans  # noqa: E402

RESULTS: dict[int, tuple[bool, str]] = {}


def report(n: int, ok: bool, detail: str) -> None:
    RESULTS[n] = (ok, detail)
    print(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}", flush=True)


# -- 1 -------------------------------------------------------------------


def criterion_1():
    t0 = time.perf_counter()
    paths = {}
    for scheme in ("conll08", "ud"):
        samples = extract_samples(
            parse_conll(fixtures.conll_text(scheme), scheme),
            load_spans(fixtures.spans_text()),
            load_relations(fixtures.relations_text()),
        )
        paths[scheme] = {s.instance.sentence_ref: serialize_sdp(s.path) for s in samples}
    elapsed = time.perf_counter() - t0
    fig = paths["conll08"]["S1"] == (
        "knowledge_sources <- SBJ <- are -> VC -> treated -> ADV -> as -> PMOD -> feature_functions"
    )
    ud = paths["ud"]["S3"] == "formal_definition -> nmod -> parsing"
    ok = fig and ud and elapsed < 1.0
    return ok, f"example path {'exact' if fig else 'WRONG'}, UD path {'exact' if ud else 'WRONG'}, {elapsed:.3f}s"


# -- 2 -------------------------------------------------------------------


def criterion_2():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20)
    bad = 0
    for _ in range(1000):
        g = random_tree(rng, 20)
        a, b = (int(v) for v in rng.integers(1, len(g) + 1, 2))
        p = shortest_path(g, a, b)
        lca = lowest_common_ancestor(g, a, b)
        ok = (
            p.nodes == [g.token(i).form for i in bfs_path(g, a, b)]
            and shortest_path(g, b, a) == p.reversed()
            and len(p) == naive_depth(g, a) + naive_depth(g, b) - 2 * naive_depth(g, lca)
        )
        bad += not ok
    elapsed = time.perf_counter() - t0
    return bad == 0 and elapsed < 5.0, f"{1000 - bad}/1000 trees agree with BFS and invariants, {elapsed:.2f}s"


# -- 3 -------------------------------------------------------------------


def criterion_3():
    from oracles import small_problem

    t0 = time.perf_counter()
    worst = 0.0
    for act in cnn.ACTIVATIONS:
        for pool in cnn.POOLINGS:
            worst = max(worst, finite_difference_check(*small_problem(act, pool), h=1e-4))
    elapsed = time.perf_counter() - t0
    return worst < 1e-4 and elapsed < 30, f"max relative error {worst:.2e} over 10 configurations, {elapsed:.2f}s"


# -- 4 -------------------------------------------------------------------


def criterion_4():
    from oracles import small_problem

    rng = np.random.default_rng(4)
    worst = 0.0
    for i in range(1000):
        act = cnn.ACTIVATIONS[i % 5]
        pool = cnn.POOLINGS[(i // 5) % 2]
        model, hp, X, lengths, _, _ = small_problem(act, pool, seed=i)
        model.fc_w *= rng.uniform(0.1, 50)
        probs, _ = cnn.forward_arrays(model, X, lengths, hp, bool(i % 2), rng)
        worst = max(worst, float(np.abs(probs.sum(axis=1) - 1).max()))
    softmax_ok = worst <= 1e-12

    hp = cnn.HyperParams(filter_widths=(2, 3), feature_maps=5, embedding_dim=6, epochs=5, batch_size=4)
    data = []
    for i in range(20):
        n = int(rng.integers(3, 9))
        idx = np.zeros(8, dtype=np.int64)
        idx[:n] = rng.integers(1, 15, n)
        data.append(EncodedInstance(idx, n, i % 6))
    static = rng.uniform(-0.25, 0.25, (15, 6))
    before = hashlib.sha256(static.tobytes()).hexdigest()
    model = cnn.train(data, hp, np.ones(6), 15, static.copy())
    static_ok = hashlib.sha256(model.static.tobytes()).hexdigest() == before

    model.fc_w[:] = rng.normal(0, 1, model.fc_w.shape)
    X = np.stack([d.indices for d in data])
    lengths = np.array([d.true_len for d in data])
    hp1 = replace(hp, dropout_keep=1.0)
    p_train, _ = cnn.forward_arrays(model, X, lengths, hp1, True, rng)
    p_eval, _ = cnn.forward_arrays(model, X, lengths, hp1, False)
    keep_ok = np.array_equal(p_train, p_eval)

    _, c1 = cnn.forward_arrays(model, X, lengths, hp)
    model.static[0] = rng.normal(0, 10, 6)
    model.nonstatic[0] = rng.normal(0, 10, 6)
    _, c2 = cnn.forward_arrays(model, X, lengths, hp)
    pad_ok = np.array_equal(c1["P"], c2["P"])

    ok = softmax_ok and static_ok and keep_ok and pad_ok
    return ok, (
        f"softmax error {worst:.1e}, static hash {'unchanged' if static_ok else 'CHANGED'}, "
        f"keep=1 {'equal' if keep_ok else 'DIFFERS'}, PAD {'independent' if pad_ok else 'DEPENDENT'}"
    )


# -- 5 -------------------------------------------------------------------


def criterion_5():
    t0 = time.perf_counter()
    corpus = generate(600, seed=0)
    samples = extract_samples(corpus.graphs["stanford_basic"], corpus.spans, corpus.relations)
    hp = cnn.HyperParams(embedding_dim=50)
    sdp = cross_validate(samples, "sdp", hp, seed=0, k=5).mean_macro_f1
    sent = cross_validate(samples, "sentence", hp, seed=0, k=5).mean_macro_f1
    elapsed = time.perf_counter() - t0
    ok = sdp >= 0.95 and sdp - sent >= 0.10 and elapsed < 120
    return ok, f"sdp macro-F1 {sdp:.4f}, sentence {sent:.4f}, delta {100 * (sdp - sent):+.2f} points, {elapsed:.1f}s"


# -- 6 -------------------------------------------------------------------


def criterion_6():
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(50):
        cm = rng.integers(0, 30, (6, 6)) * (rng.random((6, 6)) < 0.8)
        worst = max(worst, abs(macro_f1(cm).macro_f1 - naive_macro_f1(cm)))
    gold = np.repeat(np.arange(6), 50)
    constant = macro_f1(confusion_matrix(gold, np.zeros_like(gold))).macro_f1
    ok = worst <= 1e-12 and abs(constant - 0.0476) < 1e-4 and abs(constant - 1 / 21) <= 1e-6
    return ok, f"max deviation from naive {worst:.1e}; constant predictor {constant:.6f} (1/21 = {1 / 21:.6f})"


# -- 7 -------------------------------------------------------------------


def _matern(a, b, ls, s2):
    r = math.sqrt(sum(((x - y) / l) ** 2 for x, y, l in zip(a, b, ls)))
    return s2 * (1 + math.sqrt(5) * r + 5 * r * r / 3) * math.exp(-math.sqrt(5) * r)


def criterion_7():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    ei_err = 0.0
    for _ in range(20):
        mu, sigma, best = rng.normal(), rng.uniform(0.01, 1.0), rng.normal()
        f = rng.normal(mu, sigma, 1_000_000)
        mc = float(np.maximum(f - best - 0.01, 0.0).mean())
        ei_err = max(ei_err, abs(expected_improvement(mu, sigma, best, 0.01) - mc))

    X = rng.random((3, 2))
    y = rng.normal(size=3)
    ls = np.array([0.5, 0.8])
    state = GpState(X, y, ls, signal_var=1.1, noise_var=1e-4)
    ys = (y - y.mean()) / y.std()
    K = np.array([[_matern(a, b, ls, 1.1) for b in X] for a in X]) + 1e-4 * np.eye(3)
    gp_err = 0.0
    for x in rng.random((5, 2)):
        k = np.array([_matern(x, b, ls, 1.1) for b in X])
        mu = y.mean() + y.std() * k @ np.linalg.solve(K, ys)
        sd = y.std() * math.sqrt(1.1 - k @ np.linalg.solve(K, k))
        got_mu, got_sd = gp_posterior(state, x)
        gp_err = max(gp_err, abs(got_mu - mu), abs(got_sd - sd))

    space = SearchSpace((Real("x", 0.0, 1.0),))
    hits = sum(
        abs(tune(lambda c: -((c["x"] - 0.3) ** 2), space, iterations=30, seed=s).best_config["x"] - 0.3) < 0.05
        for s in range(100)
    )
    elapsed = time.perf_counter() - t0
    ok = ei_err <= 1e-2 and gp_err <= 1e-10 and hits >= 95 and elapsed < 60
    return ok, f"EI vs MC {ei_err:.1e}, GP vs solve {gp_err:.1e}, quadratic {hits}/100 within 0.05, {elapsed:.1f}s"


# -- 8 -------------------------------------------------------------------


def criterion_8():
    space = hyperparam_space()
    base = hp_to_config(cnn.HyperParams())
    trips = sum(
        decode_config(encode_config({**base, "filter_widths": w}, space), space)["filter_widths"] == w
        for w in FILTER_CATALOGUE
    )
    bounds = {
        "feature_maps": (10, 1000, 9, 1001),
        "l2": (1e-4, 1e2, math.nextafter(1e-4, 0), math.nextafter(1e2, math.inf)),
        "learning_rate": (1e-6, 1e-2, math.nextafter(1e-6, 0), math.nextafter(1e-2, math.inf)),
        "dropout_keep": (0.1, 1.0, math.nextafter(0.1, 0), math.nextafter(1.0, math.inf)),
    }
    exact = 0
    for name, (lo, hi, below, above) in bounds.items():
        accepted = rejected = 0
        for v in (lo, hi):
            try:
                encode_config({**base, name: v}, space)
                accepted += 1
            except OutOfSpace:
                pass
        for v in (below, above):
            try:
                encode_config({**base, name: v}, space)
            except OutOfSpace:
                rejected += 1
        exact += accepted == 2 and rejected == 2
    ok = len(FILTER_CATALOGUE) == 18 and trips == 18 and exact == 4
    return ok, f"{trips}/18 filter entries round-trip, {exact}/4 numeric bounds exact"


# -- 9 -------------------------------------------------------------------


def _snapshot(root: Path) -> dict[str, str]:
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def criterion_9(tmp: Path):
    c = generate(60, seed=9)
    (tmp / "sb.conllu").write_text(c.conll("stanford_basic"))
    (tmp / "ents.tsv").write_text(write_spans(c.spans))
    (tmp / "rels.tsv").write_text(write_relations(c.relations))
    (tmp / "cfg.json").write_text(json.dumps({"space": {"feature_maps": [4, 8]}, "epochs": 1, "embedding_dim": 4}))
    inputs = [
        "--parses", str(tmp / "sb.conllu"), "--scheme", "sb",
        "--entities", str(tmp / "ents.tsv"), "--relations", str(tmp / "rels.tsv"),
    ]
    hp = ["--epochs", "2", "--embedding-dim", "6", "--feature-maps", "5", "--filter-widths", "2-3"]
    snaps = []
    for run in ("a", "b"):
        out = tmp / run
        codes = [
            cli_main(["extract", *inputs, "--seed", "3", "--out", str(out / "extract")]),
            cli_main(["train", *inputs, *hp, "--seed", "3", "--out", str(out / "train")]),
            cli_main(["eval", *inputs, *hp, "--seed", "3", "--folds", "3", "--out", str(out / "eval")]),
            cli_main(["tune", *inputs, "--seed", "3", "--folds", "2", "--iterations", "11",
                      "--config", str(tmp / "cfg.json"), "--out", str(out / "tune")]),
        ]
        if any(codes):
            return False, f"command exit codes {codes}"
        snaps.append(_snapshot(out))
    same = snaps[0] == snaps[1]
    return same, f"{len(snaps[0])} output files, {'byte-identical' if same else 'DIFFER'} across reruns"


# -- pytest entry points ---------------------------------------------------


def _run(n, fn, *args):
    ok, detail = fn(*args)
    report(n, ok, detail)
    assert ok, detail


def test_criterion_1_path_fixture():
    _run(1, criterion_1)


def test_criterion_2_sdp_oracle():
    _run(2, criterion_2)


def test_criterion_3_gradients():
    _run(3, criterion_3)


def test_criterion_4_model_invariants():
    _run(4, criterion_4)


def test_criterion_5_end_to_end_learning():
    _run(5, criterion_5)


def test_criterion_6_metrics_oracle():
    _run(6, criterion_6)


def test_criterion_7_tuner():
    _run(7, criterion_7)


def test_criterion_8_search_space():
    _run(8, criterion_8)


def test_criterion_9_determinism(tmp_path):
    _run(9, criterion_9, tmp_path)


if __name__ == "__main__":
    import tempfile

    checks = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8]
    for n, fn in enumerate(checks, start=1):
        report(n, *fn())
    with tempfile.TemporaryDirectory() as d:
        report(9, *criterion_9(Path(d)))
    sys.exit(0 if all(ok for ok, _ in RESULTS.values()) else 1)
