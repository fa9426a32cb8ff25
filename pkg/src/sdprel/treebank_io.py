"""Readers and writers for dependency treebanks, entity spans and relation files.

Dependency input is CoNLL-X or CoNLL-U. Both layouts go through
:func:`parse_conll`, which decides per block which column holds the POS tag.
Entity spans can be collapsed into single code tokens with
:func:`encode_entities` so each entity occupies exactly one tree node.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .errors import (
    CycleError,
    DanglingEntityError,
    FormatError,
    MultiRootError,
    NoSpanHeadError,
    OverlapError,
    UnknownLabelError,
)

log = logging.getLogger(__name__)

# label index order follows corpus frequency (most frequent first)
LABELS = ("USAGE", "MODEL-FEATURE", "PART_WHOLE", "TOPIC", "RESULT", "COMPARE")
LABEL_INDEX = {label: i for i, label in enumerate(LABELS)}

SCHEMES = ("conll08", "stanford_basic", "ud")
_SCHEME_ALIASES = {
    "conll08": "conll08",
    "conll": "conll08",
    "stanford_basic": "stanford_basic",
    "sb": "stanford_basic",
    "ud": "ud",
}

REVERSE_FLAG = "REVERSE"


def normalize_scheme(scheme: str) -> str:
    try:
        return _SCHEME_ALIASES[scheme.lower()]
    except KeyError:
        raise ValueError(f"unknown dependency scheme {scheme!r}") from None


@dataclass(frozen=True)
class Token:
    id: int
    form: str
    pos: str
    head: int
    deprel: str


@dataclass(frozen=True)
class DependencyGraph:
    """One sentence as a rooted tree; ``tokens[i].id == i + 1``."""

    tokens: tuple[Token, ...]
    scheme: str = "conll08"
    sent_id: str | None = None

    def __len__(self) -> int:
        return len(self.tokens)

    def token(self, token_id: int) -> Token:
        return self.tokens[token_id - 1]

    @property
    def forms(self) -> list[str]:
        return [t.form for t in self.tokens]

    @property
    def root(self) -> int:
        return next(t.id for t in self.tokens if t.head == 0)

    def find_form(self, form: str) -> int | None:
        for t in self.tokens:
            if t.form == form:
                return t.id
        return None


@dataclass(frozen=True)
class EntitySpan:
    code: str
    start: int
    end: int
    surface: str = ""


@dataclass(frozen=True)
class RelationInstance:
    first_entity: str
    second_entity: str
    label: str
    reversed: bool = False
    sentence_ref: str = ""

    @property
    def label_index(self) -> int:
        return LABEL_INDEX[self.label]

    @property
    def key(self) -> tuple[str, str, str, str]:
        return (self.sentence_ref, self.first_entity, self.second_entity, self.label)


def check_tree(tokens: Sequence[Token], line: int | None = None) -> None:
    """Raise unless ``tokens`` form a single-rooted tree with ids 1..n."""
    n = len(tokens)
    for i, t in enumerate(tokens, start=1):
        if t.id != i:
            raise FormatError(f"token ids are not contiguous: expected {i}, got {t.id}", line)
        if not 0 <= t.head <= n:
            raise FormatError(f"token {t.id} has head {t.head} outside 0..{n}", line)
        if t.head == t.id:
            raise CycleError(f"token {t.id} is its own head", line)
        if not t.deprel:
            raise FormatError(f"token {t.id} has an empty dependency label", line)
    roots = [t.id for t in tokens if t.head == 0]
    if len(roots) != 1:
        raise MultiRootError(f"expected exactly one root, found {len(roots)}", line)
    heads = [0] + [t.head for t in tokens]
    for t in tokens:
        node, steps = t.id, 0
        while node != 0:
            node = heads[node]
            steps += 1
            if steps > n:
                raise CycleError(f"token {t.id} does not reach the root", line)


def _is_conllu_id(value: str) -> bool:
    return "-" in value or "." in value


def _parse_block(rows, scheme, sent_id, conllu):
    tokens = []
    for lineno, cols in rows:
        if _is_conllu_id(cols[0]):
            # multiword ranges and empty nodes carry no tree arcs
            continue
        try:
            tid = int(cols[0])
        except ValueError:
            raise FormatError(f"non-numeric token id {cols[0]!r}", lineno) from None
        try:
            head = int(cols[6])
        except ValueError:
            raise FormatError(f"non-numeric head {cols[6]!r}", lineno) from None
        pos = cols[3] if conllu else cols[4]
        tokens.append(Token(tid, cols[1], "" if pos == "_" else pos, head, cols[7]))
    if not tokens:
        raise FormatError("sentence block without tokens", rows[0][0])
    check_tree(tokens, rows[0][0])
    return DependencyGraph(tuple(tokens), scheme, sent_id)


def parse_conll(text: str, scheme: str = "conll08") -> list[DependencyGraph]:
    """Parse CoNLL-X / CoNLL-U text into dependency graphs.

    A block is read as CoNLL-U when the file has ``#`` comment lines or one of
    the block's ids is a range or decimal; otherwise POS comes from column 5.
    Sentence ids come from ``# sent_id = ...`` comments, else ``S1..Sn``.
    """
    scheme = normalize_scheme(scheme)
    lines = text.splitlines()
    file_has_comments = any(line.startswith("#") for line in lines)

    graphs = []
    rows: list[tuple[int, list[str]]] = []
    sent_id = None

    def flush():
        nonlocal rows, sent_id
        if rows:
            conllu = file_has_comments or any(_is_conllu_id(c[0]) for _, c in rows)
            sid = sent_id if sent_id is not None else f"S{len(graphs) + 1}"
            graphs.append(_parse_block(rows, scheme, sid, conllu))
        rows, sent_id = [], None

    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            flush()
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            if key.strip() == "sent_id" and value.strip():
                sent_id = value.strip()
            continue
        cols = line.split("\t")
        if len(cols) < 8:
            raise FormatError(f"expected at least 8 tab-separated columns, got {len(cols)}", lineno)
        rows.append((lineno, cols))
    flush()
    return graphs


def write_conll(graphs: Iterable[DependencyGraph], conllu: bool = False) -> str:
    """Serialize graphs as 10-column CoNLL text, one blank line after each block."""
    out = []
    for g in graphs:
        if conllu and g.sent_id is not None:
            out.append(f"# sent_id = {g.sent_id}")
        for t in g.tokens:
            pos = t.pos or "_"
            out.append(f"{t.id}\t{t.form}\t_\t{pos}\t{pos}\t_\t{t.head}\t{t.deprel}\t_\t_")
        out.append("")
    return "".join(line + "\n" for line in out)


def encode_entities(
    graph: DependencyGraph, spans: Sequence[EntitySpan]
) -> tuple[DependencyGraph, dict[str, str]]:
    """Collapse every entity span into one token whose form is the entity code.

    The collapsed token takes the head and label of the span's externally
    governed token, and arcs pointing into the span are redirected to it.
    Returns the new graph and a ``code -> surface`` table.
    """
    n = len(graph)
    ordered = sorted(spans, key=lambda s: (s.start, s.end))
    for s in ordered:
        if not 1 <= s.start <= s.end <= n:
            raise FormatError(f"span {s.code} [{s.start}, {s.end}] outside sentence of {n} tokens")
    for a, b in zip(ordered, ordered[1:]):
        if b.start <= a.end:
            raise OverlapError(f"spans {a.code} and {b.code} overlap")

    span_of = {}
    span_head = {}
    for s in ordered:
        inside = range(s.start, s.end + 1)
        external = [i for i in inside if not s.start <= graph.token(i).head <= s.end]
        if len(external) != 1:
            raise NoSpanHeadError(
                f"span {s.code} has {len(external)} tokens governed from outside, expected 1"
            )
        span_head[s.code] = external[0]
        for i in inside:
            span_of[i] = s

    new_id = {0: 0}
    next_id = 0
    for t in graph.tokens:
        s = span_of.get(t.id)
        if s is None or t.id == s.start:
            next_id += 1
        new_id[t.id] = next_id

    tokens = []
    for t in graph.tokens:
        s = span_of.get(t.id)
        if s is None:
            tokens.append(replace(t, id=new_id[t.id], head=new_id[t.head]))
        elif t.id == s.start:
            h = graph.token(span_head[s.code])
            tokens.append(Token(new_id[t.id], s.code, h.pos, new_id[h.head], h.deprel))

    table = {}
    for s in ordered:
        surface = s.surface or " ".join(graph.token(i).form for i in range(s.start, s.end + 1))
        table[s.code] = surface
    return DependencyGraph(tuple(tokens), graph.scheme, graph.sent_id), table


def load_relations(text: str) -> list[RelationInstance]:
    """Read the relation TSV: LABEL, ENT1, ENT2, FLAGS, SENT_ID."""
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != 5:
            raise FormatError(f"expected 5 tab-separated columns, got {len(cols)}", lineno)
        label, first, second, flags, sent = (c.strip() for c in cols)
        if label not in LABEL_INDEX:
            raise UnknownLabelError(f"unknown relation label {label!r}", lineno)
        if flags not in ("", REVERSE_FLAG):
            raise FormatError(f"unknown flag {flags!r}", lineno)
        if not first or not second or not sent:
            raise FormatError("empty entity code or sentence id", lineno)
        out.append(RelationInstance(first, second, label, flags == REVERSE_FLAG, sent))
    return out


def write_relations(instances: Iterable[RelationInstance]) -> str:
    return "".join(
        f"{r.label}\t{r.first_entity}\t{r.second_entity}\t"
        f"{REVERSE_FLAG if r.reversed else ''}\t{r.sentence_ref}\n"
        for r in instances
    )


def load_spans(text: str) -> dict[str, list[EntitySpan]]:
    """Read the entity-span TSV: SENT_ID, CODE, START, END, SURFACE."""
    out: dict[str, list[EntitySpan]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != 5:
            raise FormatError(f"expected 5 tab-separated columns, got {len(cols)}", lineno)
        sent, code, start, end, surface = cols
        try:
            span = EntitySpan(code, int(start), int(end), surface)
        except ValueError:
            raise FormatError("non-numeric span offsets", lineno) from None
        out.setdefault(sent, []).append(span)
    return out


def write_spans(spans: Mapping[str, Sequence[EntitySpan]]) -> str:
    return "".join(
        f"{sent}\t{s.code}\t{s.start}\t{s.end}\t{s.surface}\n"
        for sent, items in spans.items()
        for s in items
    )


def link_relation(instance: RelationInstance, graph: DependencyGraph) -> tuple[int, int]:
    """Token ids of the two entity codes of ``instance`` inside ``graph``."""
    ids = []
    for code in (instance.first_entity, instance.second_entity):
        tid = graph.find_form(code)
        if tid is None:
            raise DanglingEntityError(
                f"entity {code} not found in sentence {instance.sentence_ref}"
            )
        ids.append(tid)
    return ids[0], ids[1]


@dataclass
class Corpus:
    """Entity-encoded graphs keyed by sentence id, with the merged code table."""

    graphs: dict[str, DependencyGraph] = field(default_factory=dict)
    codes: dict[str, str] = field(default_factory=dict)


def build_corpus(
    graphs: Sequence[DependencyGraph], spans: Mapping[str, Sequence[EntitySpan]]
) -> Corpus:
    """Encode entities in every graph.

    Spans whose code already appears as a token form are treated as
    pre-encoded (the entity was replaced before parsing) and only contribute
    to the code table.
    """
    corpus = Corpus()
    for g in graphs:
        todo = []
        for s in spans.get(g.sent_id, ()):
            if g.find_form(s.code) is not None:
                corpus.codes[s.code] = s.surface or s.code
            else:
                todo.append(s)
        encoded, table = encode_entities(g, todo)
        corpus.graphs[g.sent_id] = encoded
        corpus.codes.update(table)
    unknown = set(spans) - set(corpus.graphs)
    if unknown:
        log.warning("entity spans reference %d unknown sentence ids", len(unknown))
    return corpus
