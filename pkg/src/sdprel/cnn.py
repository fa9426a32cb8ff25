"""Two-channel convolutional relation classifier with analytic gradients.

Each input position looks up a frozen (static) and a trainable (non-static)
embedding; the two vectors are concatenated, convolved with one filter bank
per width, passed through an activation and pooled over the valid positions.
The pooled features go through dropout into a softmax layer over the six
relation labels. Everything runs in float64 numpy on batches.
"""

from __future__ import annotations

import io
import json
import logging
import struct
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import CheckpointError, EmptyDataset, ShapeMismatch
from .features import PAD_INDEX, EncodedInstance, Vocab, random_embeddings, stack
from .seeding import rng_for

log = logging.getLogger(__name__)

N_CLASSES = 6
ACTIVATIONS = ("sigmoid", "relu", "tanh", "softplus", "identity")
POOLINGS = ("max", "avg")

ADAM_BETA1, ADAM_BETA2, ADAM_EPS = 0.9, 0.999, 1e-8
CONV_INIT_STD = 0.1
PROB_FLOOR = 1e-30


def parse_widths(text: str) -> tuple[int, ...]:
    """``"3-4-5"`` -> ``(3, 4, 5)``."""
    return tuple(int(w) for w in str(text).split("-"))


def format_widths(widths: Sequence[int]) -> str:
    return "-".join(str(w) for w in widths)


@dataclass(frozen=True)
class HyperParams:
    """Tunable settings plus fixed training settings.

    Defaults are the untuned configuration: widths 3-4-5, 128 maps, ReLU, max
    pooling, L2 3, learning rate 1e-3, keep probability 0.5.
    """

    filter_widths: tuple[int, ...] = (3, 4, 5)
    feature_maps: int = 128
    activation: str = "relu"
    pooling: str = "max"
    l2: float = 3.0
    learning_rate: float = 1e-3
    dropout_keep: float = 0.5
    epochs: int = 30
    batch_size: int = 50
    seed: int = 0
    embedding_dim: int = 300

    def __post_init__(self):
        if isinstance(self.filter_widths, str):
            object.__setattr__(self, "filter_widths", parse_widths(self.filter_widths))
        else:
            object.__setattr__(self, "filter_widths", tuple(int(w) for w in self.filter_widths))
        if not self.filter_widths or min(self.filter_widths) < 1:
            raise ValueError("filter widths must be positive")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.pooling not in POOLINGS:
            raise ValueError(f"unknown pooling {self.pooling!r}")
        if self.feature_maps < 1 or self.embedding_dim < 1 or self.batch_size < 1:
            raise ValueError("feature_maps, embedding_dim and batch_size must be positive")
        if not 0.0 < self.dropout_keep <= 1.0:
            raise ValueError("dropout_keep must lie in (0, 1]")
        if self.l2 < 0 or self.learning_rate <= 0 or self.epochs < 0:
            raise ValueError("l2 >= 0, learning_rate > 0 and epochs >= 0 required")

    @property
    def n_features(self) -> int:
        return self.feature_maps * len(self.filter_widths)

    def to_json(self) -> dict:
        d = asdict(self)
        d["filter_widths"] = format_widths(self.filter_widths)
        return d

    @classmethod
    def from_json(cls, data: Mapping) -> "HyperParams":
        return cls(**data)


@dataclass
class CnnModel:
    static: np.ndarray
    nonstatic: np.ndarray
    kernels: dict[int, np.ndarray]  # width -> (width, 2d, maps)
    conv_bias: dict[int, np.ndarray]  # width -> (maps,)
    fc_w: np.ndarray  # (n_features, 6)
    fc_b: np.ndarray  # (6,)
    opt_state: dict = field(default_factory=dict)
    history: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.static.shape[1]

    @property
    def vocab_size(self) -> int:
        return self.static.shape[0]

    def params(self) -> dict[str, np.ndarray]:
        """Trainable tensors by name (the arrays themselves, not copies)."""
        p = {"nonstatic": self.nonstatic}
        for w in sorted(self.kernels):
            p[f"kernel{w}"] = self.kernels[w]
            p[f"bias{w}"] = self.conv_bias[w]
        p["fc_w"] = self.fc_w
        p["fc_b"] = self.fc_b
        return p

    def copy(self) -> "CnnModel":
        return CnnModel(
            self.static.copy(),
            self.nonstatic.copy(),
            {w: k.copy() for w, k in self.kernels.items()},
            {w: b.copy() for w, b in self.conv_bias.items()},
            self.fc_w.copy(),
            self.fc_b.copy(),
            {k: v.copy() if isinstance(v, np.ndarray) else v for k, v in self.opt_state.items()},
            list(self.history),
        )


def init_model(
    vocab_size: int, hp: HyperParams, static: np.ndarray | None = None, rng=None
) -> CnnModel:
    """Fresh model. The softmax layer starts at zero, so an untrained model
    predicts the uniform distribution (and label 0 after tie-breaking)."""
    rng = rng if rng is not None else rng_for(hp.seed, "init")
    d = hp.embedding_dim
    if static is None:
        static = random_embeddings(vocab_size, d, rng)
    if static.shape != (vocab_size, d):
        raise ShapeMismatch(f"static embeddings {static.shape}, expected {(vocab_size, d)}")
    nonstatic = random_embeddings(vocab_size, d, rng)
    kernels, biases = {}, {}
    for w in hp.filter_widths:
        kernels[w] = rng.normal(0.0, CONV_INIT_STD, size=(w, 2 * d, hp.feature_maps))
        biases[w] = np.zeros(hp.feature_maps)
    return CnnModel(
        np.array(static, dtype=np.float64),
        nonstatic,
        kernels,
        biases,
        np.zeros((hp.n_features, N_CLASSES)),
        np.zeros(N_CLASSES),
    )


def _activate(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "sigmoid":
        return 0.5 * (1.0 + np.tanh(0.5 * z))
    if name == "tanh":
        return np.tanh(z)
    if name == "softplus":
        return np.logaddexp(0.0, z)
    return z


def _activation_grad(name: str, z: np.ndarray, h: np.ndarray) -> np.ndarray:
    if name == "relu":
        return (z > 0).astype(z.dtype)
    if name == "sigmoid":
        return h * (1.0 - h)
    if name == "tanh":
        return 1.0 - h * h
    if name == "softplus":
        return 0.5 * (1.0 + np.tanh(0.5 * z))
    return np.ones_like(z)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _check_shapes(model: CnnModel, hp: HyperParams, X: np.ndarray) -> None:
    if X.ndim != 2:
        raise ShapeMismatch("indices must be a (batch, length) array")
    if X.shape[1] < max(hp.filter_widths):
        raise ShapeMismatch(
            f"sequence length {X.shape[1]} shorter than widest filter {max(hp.filter_widths)}"
        )
    if set(model.kernels) != set(hp.filter_widths):
        raise ShapeMismatch("model filter widths differ from hyperparameters")
    if model.fc_w.shape != (hp.n_features, N_CLASSES):
        raise ShapeMismatch(f"fc weights {model.fc_w.shape} vs {hp.n_features} features")
    if X.size and (X.min() < 0 or X.max() >= model.vocab_size):
        raise ShapeMismatch("index outside the embedding matrix")


def forward_arrays(
    model: CnnModel,
    X: np.ndarray,
    lengths: np.ndarray,
    hp: HyperParams,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, dict]:
    """Batched forward pass; returns ``(probs (B, 6), cache)``."""
    _check_shapes(model, hp, X)
    B, L = X.shape
    lengths = np.asarray(lengths)
    pos_mask = (np.arange(L)[None, :] < lengths[:, None]).astype(np.float64)
    # zeroing padded positions keeps the output independent of the PAD rows
    E = np.concatenate([model.static[X], model.nonstatic[X]], axis=2) * pos_mask[..., None]
    D2 = E.shape[2]

    pooled, layers = [], []
    for w in hp.filter_widths:
        T = L - w + 1
        win = sliding_window_view(E, w, axis=1).transpose(0, 1, 3, 2).reshape(B, T, w * D2)
        K = model.kernels[w].reshape(w * D2, -1)
        # 2-D matmul hits BLAS directly; the stacked 3-D form is ~20x slower
        Z = (win.reshape(B * T, w * D2) @ K).reshape(B, T, -1) + model.conv_bias[w]
        H = _activate(hp.activation, Z)
        valid = np.maximum(lengths - w + 1, 1)
        vmask = np.arange(T)[None, :] < valid[:, None]
        if hp.pooling == "max":
            arg = np.where(vmask[..., None], H, -np.inf).argmax(axis=1)
            p = np.take_along_axis(H, arg[:, None, :], axis=1)[:, 0, :]
        else:
            arg = None
            p = (H * vmask[..., None]).sum(axis=1) / valid[:, None]
        pooled.append(p)
        layers.append({"w": w, "win": win, "Z": Z, "H": H, "arg": arg, "valid": valid, "vmask": vmask})

    P = np.concatenate(pooled, axis=1)
    if train_mode:
        rng = rng if rng is not None else np.random.default_rng()
        mask = (rng.random(P.shape) < hp.dropout_keep) / hp.dropout_keep
    else:
        mask = np.ones_like(P)
    Pd = P * mask
    logits = Pd @ model.fc_w + model.fc_b
    probs = softmax(logits)
    cache = {
        "X": X, "lengths": lengths, "pos_mask": pos_mask, "layers": layers,
        "P": P, "mask": mask, "Pd": Pd, "logits": logits, "probs": probs, "L": L, "D2": D2,
    }
    return probs, cache


def forward(model, encoded, hp, train_mode=False, rng=None):
    """Forward pass on one :class:`EncodedInstance` or a sequence of them."""
    if isinstance(encoded, EncodedInstance):
        probs, cache = forward_arrays(
            model, encoded.indices[None, :], np.array([encoded.true_len]), hp, train_mode, rng
        )
        return probs[0], cache
    X, lengths, _ = stack(encoded)
    return forward_arrays(model, X, lengths, hp, train_mode, rng)


def loss(probs, gold, class_weights, model: CnnModel, hp: HyperParams) -> float:
    """Class-weighted cross-entropy (batch mean) plus ``l2/2 * ||fc_w||^2``."""
    probs = np.atleast_2d(probs)
    gold = np.atleast_1d(gold)
    weights = np.asarray(class_weights, dtype=np.float64)[gold]
    p_gold = np.maximum(probs[np.arange(len(gold)), gold], PROB_FLOOR)
    ce = float(np.mean(weights * -np.log(p_gold)))
    return ce + 0.5 * hp.l2 * float(np.sum(model.fc_w * model.fc_w))


def _loss_from_cache(cache, gold, class_weights, model, hp) -> float:
    logits = cache["logits"]
    m = logits.max(axis=1, keepdims=True)
    lse = (m + np.log(np.exp(logits - m).sum(axis=1, keepdims=True)))[:, 0]
    nll = lse - logits[np.arange(len(gold)), gold]
    weights = np.asarray(class_weights, dtype=np.float64)[gold]
    return float(np.mean(weights * nll)) + 0.5 * hp.l2 * float(np.sum(model.fc_w**2))


def backward(model: CnnModel, cache: dict, gold, class_weights, hp: HyperParams) -> dict:
    """Gradients of :func:`loss` for every tensor in ``model.params()``.

    The static channel has no entry: its gradient is discarded.
    """
    gold = np.atleast_1d(gold)
    probs = cache["probs"]
    B = probs.shape[0]
    weights = np.asarray(class_weights, dtype=np.float64)[gold]
    dlogits = probs.copy()
    dlogits[np.arange(B), gold] -= 1.0
    dlogits *= weights[:, None] / B

    grads = {
        "fc_w": cache["Pd"].T @ dlogits + hp.l2 * model.fc_w,
        "fc_b": dlogits.sum(axis=0),
    }
    dP = (dlogits @ model.fc_w.T) * cache["mask"]

    L, D2 = cache["L"], cache["D2"]
    dE = np.zeros((B, L, D2))
    m = hp.feature_maps
    for i, layer in enumerate(cache["layers"]):
        w, Z, H = layer["w"], layer["Z"], layer["H"]
        T = Z.shape[1]
        dPw = dP[:, i * m : (i + 1) * m]
        if hp.pooling == "max":
            dH = np.zeros_like(H)
            np.put_along_axis(dH, layer["arg"][:, None, :], dPw[:, None, :], axis=1)
        else:
            dH = dPw[:, None, :] * (layer["vmask"][..., None] / layer["valid"][:, None, None])
        dZ = dH * _activation_grad(hp.activation, Z, H)
        flat_win = layer["win"].reshape(B * T, w * D2)
        flat_dZ = dZ.reshape(B * T, m)
        grads[f"kernel{w}"] = (flat_win.T @ flat_dZ).reshape(w, D2, m)
        grads[f"bias{w}"] = flat_dZ.sum(axis=0)
        dwin = (flat_dZ @ model.kernels[w].reshape(w * D2, m).T).reshape(B, T, w, D2)
        for k in range(w):
            dE[:, k : k + T, :] += dwin[:, :, k, :]

    d = D2 // 2
    dnon = (dE[:, :, d:] * cache["pos_mask"][..., None]).reshape(-1, d)
    g_non = np.zeros_like(model.nonstatic)
    np.add.at(g_non, cache["X"].reshape(-1), dnon)
    g_non[PAD_INDEX] = 0.0
    grads["nonstatic"] = g_non
    return grads


def _adam_step(model: CnnModel, grads: dict, lr: float) -> None:
    state = model.opt_state
    t = state.get("t", 0) + 1
    state["t"] = t
    c1 = 1.0 - ADAM_BETA1**t
    c2 = 1.0 - ADAM_BETA2**t
    for name, param in model.params().items():
        g = grads[name]
        m = state.get(f"m.{name}")
        if m is None:
            m = state[f"m.{name}"] = np.zeros_like(param)
            state[f"v.{name}"] = np.zeros_like(param)
        v = state[f"v.{name}"]
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * g * g
        param -= lr * (m / c1) / (np.sqrt(v / c2) + ADAM_EPS)


def train(
    dataset: Sequence[EncodedInstance],
    hp: HyperParams,
    class_weights,
    vocab_size: int,
    static: np.ndarray | None = None,
) -> CnnModel:
    """Mini-batch Adam training; deterministic given ``hp.seed``.

    ``static`` is the frozen channel (pretrained vectors); when omitted it is
    drawn at random and stays frozen all the same.
    """
    if len(dataset) == 0:
        raise EmptyDataset("cannot train on an empty dataset")
    X, lengths, y = stack(dataset)
    model = init_model(vocab_size, hp, static, rng_for(hp.seed, "init"))
    shuffle_rng = rng_for(hp.seed, "shuffle")
    dropout_rng = rng_for(hp.seed, "dropout")
    weights = np.asarray(class_weights, dtype=np.float64)

    n = len(y)
    for epoch in range(hp.epochs):
        order = shuffle_rng.permutation(n)
        total = 0.0
        for start in range(0, n, hp.batch_size):
            idx = order[start : start + hp.batch_size]
            probs, cache = forward_arrays(model, X[idx], lengths[idx], hp, True, dropout_rng)
            total += _loss_from_cache(cache, y[idx], weights, model, hp) * len(idx)
            grads = backward(model, cache, y[idx], weights, hp)
            _adam_step(model, grads, hp.learning_rate)
        model.history.append(total / n)
        log.debug("epoch %d loss %.6f", epoch + 1, total / n)
    return model


def predict_proba(model: CnnModel, encoded, hp: HyperParams, batch_size: int = 256) -> np.ndarray:
    if isinstance(encoded, EncodedInstance):
        return forward(model, encoded, hp)[0]
    X, lengths, _ = stack(encoded)
    out = [
        forward_arrays(model, X[s : s + batch_size], lengths[s : s + batch_size], hp)[0]
        for s in range(0, len(X), batch_size)
    ]
    return np.concatenate(out) if out else np.zeros((0, N_CLASSES))


def predict(model: CnnModel, encoded, hp: HyperParams):
    """Most probable label; ties go to the lowest label index."""
    probs = predict_proba(model, encoded, hp)
    return int(np.argmax(probs)) if probs.ndim == 1 else np.argmax(probs, axis=1)


# checkpoints: 8-byte magic, u32 version, u64 header length, JSON header,
# then every array as little-endian float64 in header order
MAGIC = b"SDPRCNN\x00"
CHECKPOINT_VERSION = 1


def save_checkpoint(
    path, model: CnnModel, hp: HyperParams, vocab: Vocab | None = None, meta: dict | None = None
) -> None:
    arrays = {"static": model.static, **model.params()}
    for key, value in sorted(model.opt_state.items()):
        if isinstance(value, np.ndarray):
            arrays[f"opt.{key}"] = value
    header = {
        "hyperparams": hp.to_json(),
        "vocab_size": model.vocab_size,
        "dim": model.dim,
        "vocab_digest": vocab.digest() if vocab is not None else None,
        "vocab": vocab.to_json() if vocab is not None else None,
        "adam_t": model.opt_state.get("t", 0),
        "meta": meta or {},
        "arrays": [[name, list(a.shape)] for name, a in arrays.items()],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<IQ", CHECKPOINT_VERSION, len(blob)))
        f.write(blob)
        for a in arrays.values():
            f.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def load_checkpoint(path) -> tuple[CnnModel, HyperParams, Vocab | None, dict]:
    with open(path, "rb") as f:
        data = f.read()
    if data[:8] != MAGIC:
        raise CheckpointError("not a model checkpoint (bad magic)")
    version, hlen = struct.unpack("<IQ", data[8:20])
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    header = json.loads(data[20 : 20 + hlen].decode("utf-8"))
    buf = io.BytesIO(data[20 + hlen :])
    arrays = {}
    for name, shape in header["arrays"]:
        count = int(np.prod(shape)) if shape else 1
        raw = buf.read(8 * count)
        if len(raw) != 8 * count:
            raise CheckpointError(f"truncated checkpoint at array {name}")
        arrays[name] = np.frombuffer(raw, dtype="<f8").reshape(shape).astype(np.float64)
    hp = HyperParams.from_json(header["hyperparams"])
    vocab = Vocab.from_json(header["vocab"]) if header.get("vocab") else None
    if vocab is not None and vocab.digest() != header["vocab_digest"]:
        raise CheckpointError("vocabulary digest mismatch")
    model = CnnModel(
        arrays["static"],
        arrays["nonstatic"],
        {w: arrays[f"kernel{w}"] for w in hp.filter_widths},
        {w: arrays[f"bias{w}"] for w in hp.filter_widths},
        arrays["fc_w"],
        arrays["fc_b"],
    )
    opt = {k[4:]: a for k, a in arrays.items() if k.startswith("opt.")}
    if opt:
        opt["t"] = header["adam_t"]
        model.opt_state = opt
    return model, hp, vocab, header.get("meta", {})
