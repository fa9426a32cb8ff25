"""Vocabularies, embedding matrices and index encoding of paths or sentences."""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch, MalformedLine, MissingPath
from .sdp import LEFT_ARROW, RIGHT_ARROW, Sdp, path_tokens
from .treebank_io import RelationInstance

log = logging.getLogger(__name__)

PAD, UNK = "<pad>", "<unk>"
PAD_INDEX, UNK_INDEX = 0, 1
REVERSED_TOKEN = "<reversed>"
ARROWS = (LEFT_ARROW, RIGHT_ARROW)

MODES = ("sdp", "sentence")
MAX_LEN_CAP = {"sdp": 50, "sentence": 100}
# widest filter in the tuning catalogue; shorter tensors cannot be convolved
MIN_LEN = 9

INIT_RANGE = 0.25


class Vocab:
    """Item <-> index map with PAD at 0 and UNK at 1.

    Each item is tagged ``word``, ``label`` or ``arrow``; the tag of the first
    occurrence wins. Labels and arrows never take pretrained vectors.
    """

    def __init__(self):
        self.items: list[str] = [PAD, UNK]
        self.kinds: list[str] = ["special", "special"]
        self.index: dict[str, int] = {PAD: PAD_INDEX, UNK: UNK_INDEX}

    def add(self, item: str, kind: str = "word") -> int:
        idx = self.index.get(item)
        if idx is None:
            idx = len(self.items)
            self.items.append(item)
            self.kinds.append(kind)
            self.index[item] = idx
        return idx

    def lookup(self, item: str) -> int:
        return self.index.get(item, UNK_INDEX)

    def __len__(self) -> int:
        return len(self.items)

    def __contains__(self, item: str) -> bool:
        return item in self.index

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocab) and self.items == other.items and self.kinds == other.kinds

    def digest(self) -> str:
        h = hashlib.sha256()
        for item, kind in zip(self.items, self.kinds):
            h.update(f"{kind}\t{item}\n".encode("utf-8"))
        return h.hexdigest()

    def to_json(self) -> dict:
        return {"items": self.items[2:], "kinds": self.kinds[2:]}

    @classmethod
    def from_json(cls, data: Mapping) -> "Vocab":
        v = cls()
        for item, kind in zip(data["items"], data["kinds"]):
            v.add(item, kind)
        return v


def _is_path(seq: Sequence[str]) -> bool:
    """True for ``node arrow label arrow node ...`` with matching arrow pairs."""
    if len(seq) % 4 != 1:
        return False
    return all(
        seq[i] in ARROWS and seq[i] == seq[i + 2] for i in range(1, len(seq), 4)
    )


def _kinds(seq: Sequence[str]) -> list[str]:
    if seq and seq[0] == REVERSED_TOKEN:
        return ["word"] + _kinds(seq[1:])
    if _is_path(seq):
        return ["word" if i % 4 == 0 else "label" if i % 4 == 2 else "arrow" for i in range(len(seq))]
    return ["arrow" if tok in ARROWS else "word" for tok in seq]


def build_vocab(sequences: Iterable[Sequence[str]]) -> Vocab:
    """First-seen indexing over token sequences (serialized paths or sentences)."""
    vocab = Vocab()
    for seq in sequences:
        for tok, kind in zip(seq, _kinds(seq)):
            if tok not in vocab:
                vocab.add(tok, kind)
    return vocab


def random_embeddings(n_rows: int, d: int, rng: np.random.Generator) -> np.ndarray:
    m = rng.uniform(-INIT_RANGE, INIT_RANGE, size=(n_rows, d))
    m[PAD_INDEX] = 0.0
    return m


def read_embeddings(path, d: int | None = None) -> tuple[dict[str, np.ndarray], int]:
    with open(path, encoding="utf-8") as f:
        return parse_embeddings(f.read(), d)


def parse_embeddings(text: str, d: int | None = None) -> tuple[dict[str, np.ndarray], int]:
    """Parse word2vec-style text; an optional ``V d`` header line is honoured.

    Returns ``(vectors, d)``.
    """
    vectors: dict[str, np.ndarray] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        parts = line.split()
        if not parts:
            continue
        if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
            header_d = int(parts[1])
            if d is not None and header_d != d:
                raise DimensionMismatch(f"header declares d={header_d}, expected {d}", lineno)
            d = header_d
            continue
        if len(parts) < 2:
            raise MalformedLine("word without vector", lineno)
        word, values = parts[0], parts[1:]
        if d is None:
            d = len(values)
        if len(values) != d:
            raise DimensionMismatch(f"{len(values)} values, expected {d}", lineno)
        try:
            vec = np.array([float(v) for v in values])
        except ValueError:
            raise MalformedLine(f"non-numeric vector for {word!r}", lineno) from None
        if not np.all(np.isfinite(vec)):
            raise MalformedLine(f"non-finite vector for {word!r}", lineno)
        vectors[word] = vec
    return vectors, (d or 0)


def load_pretrained(source, vocab: Vocab, d: int, seed: int = 0) -> np.ndarray:
    """Embedding matrix for ``vocab``: pretrained rows where available.

    ``source`` is an embedding file path or an already parsed word -> vector
    map. Words missing from it, labels and arrows get uniform [-0.25, 0.25]
    rows drawn from ``seed``; the PAD row is zero.
    """
    if isinstance(source, Mapping):
        vectors = source
        for word, vec in vectors.items():
            if len(vec) != d:
                raise DimensionMismatch(f"vector for {word!r} has {len(vec)} values, expected {d}")
    else:
        vectors, _ = read_embeddings(source, d)

    m = random_embeddings(len(vocab), d, np.random.default_rng(seed))
    hits = 0
    for i, (item, kind) in enumerate(zip(vocab.items, vocab.kinds)):
        if kind == "word" and item in vectors:
            m[i] = vectors[item]
            hits += 1
    log.debug("pretrained coverage: %d of %d items", hits, len(vocab) - 2)
    return m


@dataclass(frozen=True)
class Sample:
    """A relation instance together with its extracted inputs."""

    instance: RelationInstance
    path: Sdp | None
    sentence: tuple[str, ...] = ()

    @property
    def label_index(self) -> int:
        return self.instance.label_index


@dataclass(frozen=True)
class EncodedInstance:
    indices: np.ndarray
    true_len: int
    label_index: int
    reversed: bool = False


def sample_tokens(sample: Sample, mode: str, mark_reversed: bool = False) -> list[str]:
    if mode == "sdp":
        if sample.path is None:
            raise MissingPath(f"no path for relation {sample.instance.key}")
        toks = path_tokens(sample.path)
    elif mode == "sentence":
        toks = list(sample.sentence)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if mark_reversed and sample.instance.reversed:
        toks = [REVERSED_TOKEN] + toks
    return toks


def encode_tokens(
    tokens: Sequence[str], vocab: Vocab, max_len: int, label_index: int = 0, reversed: bool = False
) -> EncodedInstance:
    if len(tokens) > max_len:
        log.warning("sequence of length %d truncated to %d", len(tokens), max_len)
        tokens = tokens[:max_len]
    idx = np.zeros(max_len, dtype=np.int64)
    idx[: len(tokens)] = [vocab.lookup(t) for t in tokens]
    return EncodedInstance(idx, len(tokens), label_index, reversed)


def encode(
    sample: Sample, mode: str, vocab: Vocab, max_len: int, mark_reversed: bool = False
) -> EncodedInstance:
    toks = sample_tokens(sample, mode, mark_reversed)
    return encode_tokens(toks, vocab, max_len, sample.label_index, sample.instance.reversed)


def default_max_len(lengths: Sequence[int], mode: str) -> int:
    """99th percentile of lengths, capped per mode and floored at the widest filter."""
    if len(lengths) == 0:
        return MIN_LEN
    p99 = int(math.ceil(np.percentile(np.asarray(lengths), 99)))
    return max(min(p99, MAX_LEN_CAP[mode]), MIN_LEN)


def stack(encoded: Sequence[EncodedInstance]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batch arrays ``(indices, true_lens, labels)``."""
    X = np.stack([e.indices for e in encoded])
    lengths = np.array([e.true_len for e in encoded], dtype=np.int64)
    y = np.array([e.label_index for e in encoded], dtype=np.int64)
    return X, lengths, y
