"""Generated corpora with a known answer, for learning checks and demos.

Every sentence holds two entities connected through a preposition-like
marker token; the marker alone determines the relation label. Each sentence
also holds two other markers attached off the path, and the token order is
shuffled, so the marker that matters is only recoverable from the tree.

In the ``stanford_basic`` rendering the marker heads its object and lies on
the entity-to-entity path. In the ``ud`` rendering the marker is a case
dependent of the second entity and drops off the path, which removes the
label signal from the path altogether.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .treebank_io import LABELS, DependencyGraph, EntitySpan, RelationInstance, Token, check_tree, write_conll

MARKERS = ("for", "of", "in", "with", "on", "by")
VERBS = ("use", "apply", "propose", "evaluate", "present", "describe", "extend", "train")
NOUNS = (
    "model", "parser", "corpus", "feature", "method", "system", "grammar", "lexicon",
    "tagger", "score", "task", "network", "algorithm", "treebank", "dataset", "approach",
)
ADJECTIVES = ("new", "large", "robust", "simple", "neural", "formal", "statistical", "efficient")


@dataclass
class SyntheticCorpus:
    graphs: dict[str, list[DependencyGraph]]
    spans: dict[str, list[EntitySpan]]
    relations: list[RelationInstance]
    marker_of: dict[str, str] = field(default_factory=dict)

    def conll(self, scheme: str) -> str:
        return write_conll(self.graphs[scheme], conllu=True)


def _entity_words(rng) -> list[str]:
    n = int(rng.integers(1, 3))
    return [str(w) for w in rng.choice(ADJECTIVES, size=n - 1)] + [str(rng.choice(NOUNS))]


def _sentence(i: int, label: int, rng):
    """Abstract nodes plus arcs for both schemes; order is assigned later."""
    true_marker = MARKERS[label]
    others = [m for m in MARKERS if m != true_marker]
    distractors = [str(m) for m in rng.choice(others, size=2, replace=False)]

    # node: name -> (form, pos); units are contiguous groups of nodes
    nodes = {"verb": (str(rng.choice(VERBS)), "VBZ"), "mark": (true_marker, "IN")}
    units = [["verb"], ["mark"]]
    sb, ud = {"verb": (None, "root")}, {"verb": (None, "root")}

    def entity(tag):
        words = _entity_words(rng)
        names = [f"{tag}{k}" for k in range(len(words))]
        for name, w in zip(names, words):
            nodes[name] = (w, "NN" if name == names[-1] else "JJ")
        for name in names[:-1]:
            sb[name] = ud[name] = (names[-1], "amod")
        units.append(names)
        return names[-1], words

    e1, e1_words = entity("e1_")
    e2, e2_words = entity("e2_")
    sb[e1] = ud[e1] = ("verb", "nsubj")

    # optionally route the second entity through an object noun
    anchor = "verb"
    if rng.random() < 0.5:
        nodes["obj"] = (str(rng.choice(NOUNS)), "NN")
        units.append(["obj"])
        sb["obj"] = ud["obj"] = ("verb", "dobj")
        anchor = "obj"
    sb["mark"], sb[e2] = (anchor, "prep"), ("mark", "pobj")
    ud["mark"], ud[e2] = (e2, "case"), (anchor, "nmod")

    for k, m in enumerate(distractors):
        d, obj = f"d{k}", f"dobj{k}"
        nodes[d] = (m, "IN")
        nodes[obj] = (str(rng.choice(NOUNS)), "NN")
        units += [[d], [obj]]
        host = str(rng.choice(["verb", e1]))
        sb[d], sb[obj] = (host, "prep"), (d, "pobj")
        ud[d], ud[obj] = (obj, "case"), (host, "nmod")

    for k in range(int(rng.integers(0, 3))):
        f = f"f{k}"
        nodes[f] = (str(rng.choice(ADJECTIVES)), "JJ")
        units.append([f])
        host = str(rng.choice([e1, e2]))
        sb[f] = ud[f] = (host, "amod")

    order = [name for u in (units[j] for j in rng.permutation(len(units))) for name in u]
    return nodes, order, {"stanford_basic": sb, "ud": ud}, (e1_words, e2_words)


def generate(n: int = 600, seed: int = 0) -> SyntheticCorpus:
    """``n`` instances, labels assigned round-robin so classes are balanced."""
    rng = np.random.default_rng(seed)
    graphs = {"stanford_basic": [], "ud": []}
    spans, relations = {}, []
    for i in range(n):
        label = i % len(LABELS)
        nodes, order, arcs, (w1, w2) = _sentence(i, label, rng)
        pos = {name: k + 1 for k, name in enumerate(order)}
        sid = f"S{i + 1}"
        for scheme, heads in arcs.items():
            toks = []
            for name in order:
                head, rel = heads[name]
                form, tag = nodes[name]
                toks.append(Token(pos[name], form, tag, 0 if head is None else pos[head], rel))
            check_tree(toks)
            graphs[scheme].append(DependencyGraph(tuple(toks), scheme, sid))
        codes = []
        for tag, words in (("e1_", w1), ("e2_", w2)):
            start = pos[f"{tag}0"]
            code = f"E{i + 1}_{tag[1]}"
            spans.setdefault(sid, []).append(EntitySpan(code, start, start + len(words) - 1, " ".join(words)))
            codes.append(code)
        relations.append(RelationInstance(codes[0], codes[1], LABELS[label], False, sid))
    return SyntheticCorpus(graphs, spans, relations, dict(zip(LABELS, MARKERS)))
