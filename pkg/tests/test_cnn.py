import hashlib
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import finite_difference_check, small_problem
from sdprel import cnn
from sdprel.errors import CheckpointError, EmptyDataset, ShapeMismatch
from sdprel.features import EncodedInstance, build_vocab

ALL_MODES = [(a, p) for a in cnn.ACTIVATIONS for p in cnn.POOLINGS]


def _dataset(n=24, L=10, vocab=12, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        true_len = int(rng.integers(2, L + 1))
        idx = np.zeros(L, dtype=np.int64)
        idx[:true_len] = rng.integers(1, vocab, true_len)
        out.append(EncodedInstance(idx, true_len, i % 6))
    return out


def test_widths_round_trip():
    assert cnn.parse_widths("3-4-5") == (3, 4, 5)
    assert cnn.format_widths((7, 8)) == "7-8"
    with pytest.raises(ValueError):
        cnn.parse_widths("3-x")


def test_hyperparams_json_round_trip():
    hp = cnn.HyperParams(filter_widths=(2, 6), activation="tanh", l2=0.01)
    assert cnn.HyperParams.from_json(hp.to_json()) == hp
    assert hp.n_features == 2 * hp.feature_maps


@pytest.mark.parametrize("activation, pooling", ALL_MODES)
def test_gradients_match_finite_differences(activation, pooling):
    assert finite_difference_check(*small_problem(activation, pooling)) < 1e-4


def test_untrained_model_is_uniform_and_predicts_first_label():
    hp = cnn.HyperParams(embedding_dim=5, feature_maps=4)
    model = cnn.init_model(12, hp)
    data = _dataset()
    probs = cnn.predict_proba(model, data, hp)
    assert np.allclose(probs, 1 / 6, atol=1e-15)
    assert (cnn.predict(model, data, hp) == 0).all()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(ALL_MODES))
def test_softmax_normalized(seed, mode):
    model, hp, X, lengths, _, _ = small_problem(*mode, seed=seed % 1000)
    model.fc_w *= 40  # push logits far apart
    probs, _ = cnn.forward_arrays(model, X, lengths, hp)
    assert np.abs(probs.sum(axis=1) - 1).max() <= 1e-12
    assert (probs >= 0).all()


@pytest.mark.parametrize("pooling", cnn.POOLINGS)
def test_pad_row_and_padding_do_not_matter(pooling):
    model, hp, X, lengths, _, _ = small_problem("tanh", pooling)
    before, cache = cnn.forward_arrays(model, X, lengths, hp)
    model.static[0] = 5.0
    model.nonstatic[0] = -5.0
    after, cache2 = cnn.forward_arrays(model, X, lengths, hp)
    assert np.array_equal(cache["P"], cache2["P"])
    assert np.array_equal(before, after)


def test_keep_one_makes_training_forward_deterministic():
    model, hp, X, lengths, _, _ = small_problem("relu", "max")
    hp = replace(hp, dropout_keep=1.0)
    train_probs, _ = cnn.forward_arrays(model, X, lengths, hp, True, np.random.default_rng(1))
    eval_probs, _ = cnn.forward_arrays(model, X, lengths, hp)
    assert np.array_equal(train_probs, eval_probs)


def test_training_leaves_static_channel_and_reduces_loss():
    hp = cnn.HyperParams(filter_widths=(2, 3), feature_maps=8, embedding_dim=6, epochs=15, batch_size=8, l2=1e-3, learning_rate=1e-2)
    static = np.random.default_rng(5).uniform(-1, 1, (12, 6))
    digest = hashlib.sha256(static.tobytes()).hexdigest()
    model = cnn.train(_dataset(), hp, np.ones(6), 12, static)
    assert hashlib.sha256(model.static.tobytes()).hexdigest() == digest
    assert model.history[-1] < model.history[0]


def test_training_is_deterministic():
    hp = cnn.HyperParams(filter_widths=(2,), feature_maps=4, embedding_dim=4, epochs=3, batch_size=5)
    a = cnn.train(_dataset(), hp, np.ones(6), 12)
    b = cnn.train(_dataset(), hp, np.ones(6), 12)
    for name, value in a.params().items():
        assert np.array_equal(value, b.params()[name])


def test_shape_errors():
    hp = cnn.HyperParams(filter_widths=(5,), feature_maps=2, embedding_dim=3)
    model = cnn.init_model(12, hp)
    with pytest.raises(ShapeMismatch):
        cnn.forward_arrays(model, np.ones((1, 4), dtype=np.int64), np.array([4]), hp)
    with pytest.raises(ShapeMismatch):
        cnn.forward_arrays(model, np.full((1, 6), 40), np.array([6]), hp)
    with pytest.raises(ShapeMismatch):
        cnn.init_model(12, hp, static=np.zeros((12, 4)))
    with pytest.raises(EmptyDataset):
        cnn.train([], hp, np.ones(6), 12)


def test_checkpoint_round_trip(tmp_path):
    hp = cnn.HyperParams(filter_widths=(2, 3), feature_maps=4, embedding_dim=4, epochs=2, batch_size=6)
    model = cnn.train(_dataset(), hp, np.ones(6), 12)
    vocab = build_vocab([[f"w{i}" for i in range(10)]])
    path = tmp_path / "m.bin"
    cnn.save_checkpoint(path, model, hp, vocab, {"mode": "sdp", "max_len": 10})
    loaded, hp2, vocab2, meta = cnn.load_checkpoint(path)
    assert hp2 == hp and vocab2 == vocab and meta == {"mode": "sdp", "max_len": 10}
    data = _dataset()
    assert np.array_equal(cnn.predict_proba(model, data, hp), cnn.predict_proba(loaded, data, hp2))
    assert loaded.opt_state["t"] == model.opt_state["t"]

    raw = path.read_bytes()
    (tmp_path / "bad.bin").write_bytes(b"XXXXXXXX" + raw[8:])
    with pytest.raises(CheckpointError):
        cnn.load_checkpoint(tmp_path / "bad.bin")
    (tmp_path / "short.bin").write_bytes(raw[:-8])
    with pytest.raises(CheckpointError):
        cnn.load_checkpoint(tmp_path / "short.bin")


def test_zero_class_weight_leaves_only_the_l2_gradient():
    model, hp, X, lengths, gold, _ = small_problem("tanh", "max")
    _, cache = cnn.forward_arrays(model, X, lengths, hp)
    grads = cnn.backward(model, cache, gold, np.zeros(6), hp)
    assert np.allclose(grads["fc_w"], hp.l2 * model.fc_w)
    for name, g in grads.items():
        if name != "fc_w":
            assert not g.any(), name
