"""From parsed files to classifier samples, and the extracted-file formats."""

from __future__ import annotations

import os
from collections import Counter
from typing import Mapping, Sequence

from .errors import DanglingEntityError, FormatError
from .features import Sample
from .sdp import decode_entities, read_sdp_file, shortest_path, write_sdp_file
from .treebank_io import (
    REVERSE_FLAG,
    LABEL_INDEX,
    DependencyGraph,
    EntitySpan,
    RelationInstance,
    build_corpus,
    link_relation,
    load_relations,
    load_spans,
    parse_conll,
    write_relations,
)

PATHS_FILE = "paths.sdp"
LABELS_FILE = "labels.tsv"
SENTENCES_FILE = "sentences.txt"
RELATIONS_FILE = "relations.tsv"


def _token(form: str) -> str:
    return "_".join(form.split())


def extract_samples(
    graphs: Sequence[DependencyGraph],
    spans: Mapping[str, Sequence[EntitySpan]],
    relations: Sequence[RelationInstance],
) -> list[Sample]:
    """Encode entities, extract one decoded path per relation (first -> second
    entity in annotation order) and keep the decoded sentence for the baseline.

    Entity surfaces are joined with underscores so each stays one token.
    """
    corpus = build_corpus(graphs, spans)
    surfaces = {code: _token(surface) for code, surface in corpus.codes.items()}
    samples = []
    for rel in relations:
        g = corpus.graphs.get(rel.sentence_ref)
        if g is None:
            raise DanglingEntityError(f"relation refers to unknown sentence {rel.sentence_ref}")
        a, b = link_relation(rel, g)
        path = decode_entities(shortest_path(g, a, b), surfaces)
        sentence = tuple(surfaces.get(f, _token(f)) for f in g.forms)
        samples.append(Sample(rel, path, sentence))
    return samples


def _read(path) -> str:
    with open(path, encoding="utf-8") as f:
        return f.read()


def load_inputs(parses, entities, relations, scheme: str = "conll08") -> list[Sample]:
    """Read parse, entity and relation files and extract samples."""
    try:
        graphs = parse_conll(_read(parses), scheme)
    except FormatError as exc:
        wrapped = type(exc)(f"{parses}: {exc}")
        wrapped.line = exc.line
        raise wrapped from exc
    spans = load_spans(_read(entities)) if entities else {}
    return extract_samples(graphs, spans, load_relations(_read(relations)))


def write_extracted(out_dir, samples: Sequence[Sample]) -> None:
    os.makedirs(out_dir, exist_ok=True)
    files = {
        PATHS_FILE: write_sdp_file([s.path for s in samples]),
        LABELS_FILE: "".join(
            f"{s.instance.label}\t{REVERSE_FLAG if s.instance.reversed else ''}\n" for s in samples
        ),
        SENTENCES_FILE: "".join(" ".join(s.sentence) + "\n" for s in samples),
        RELATIONS_FILE: write_relations([s.instance for s in samples]),
    }
    for name, text in files.items():
        with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="\n") as f:
            f.write(text)


def read_extracted(in_dir) -> list[Sample]:
    """Samples back from :func:`write_extracted` output.

    Without a relations file, instances are rebuilt from the labels file with
    line numbers as sentence references.
    """
    paths = read_sdp_file(_read(os.path.join(in_dir, PATHS_FILE)))
    sent_file = os.path.join(in_dir, SENTENCES_FILE)
    sentences = [tuple(line.split()) for line in _read(sent_file).splitlines()] if os.path.exists(sent_file) else None
    rel_file = os.path.join(in_dir, RELATIONS_FILE)
    if os.path.exists(rel_file):
        instances = load_relations(_read(rel_file))
    else:
        instances = []
        for n, line in enumerate(_read(os.path.join(in_dir, LABELS_FILE)).splitlines(), start=1):
            label, _, flag = line.partition("\t")
            if label not in LABEL_INDEX:
                raise FormatError(f"unknown label {label!r}", n)
            instances.append(RelationInstance("e1", "e2", label, flag == REVERSE_FLAG, f"L{n}"))
    if len(paths) != len(instances) or (sentences is not None and len(sentences) != len(paths)):
        raise FormatError("extracted files have different line counts")
    return [
        Sample(inst, path, sentences[i] if sentences is not None else ())
        for i, (inst, path) in enumerate(zip(instances, paths))
    ]


def length_histogram(samples: Sequence[Sample]) -> dict[int, int]:
    """Number of arcs per path -> count."""
    return dict(sorted(Counter(len(s.path) for s in samples if s.path is not None).items()))
