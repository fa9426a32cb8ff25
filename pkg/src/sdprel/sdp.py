"""Shortest dependency paths between two tokens of a dependency tree.

A path alternates nodes and arcs. Climbing from a dependent to its head emits
a left arc, descending from a head to a dependent emits a right arc, and the
arc always carries the dependent's label::

    knowledge_sources <- SBJ <- are -> VC -> treated
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

from .errors import SdpFormatError, TokenOutOfRange
from .treebank_io import DependencyGraph

LEFT_ARROW = "<-"
RIGHT_ARROW = "->"
_UNICODE_ARROWS = {"←": LEFT_ARROW, "→": RIGHT_ARROW}


class Direction(enum.Enum):
    LEFT = "left"
    RIGHT = "right"

    @property
    def arrow(self) -> str:
        return LEFT_ARROW if self is Direction.LEFT else RIGHT_ARROW

    def flipped(self) -> "Direction":
        return Direction.RIGHT if self is Direction.LEFT else Direction.LEFT


@dataclass(frozen=True)
class Node:
    form: str

    def __post_init__(self):
        if not self.form:
            raise ValueError("node form must be non-empty")


@dataclass(frozen=True)
class Arc:
    label: str
    direction: Direction

    def __post_init__(self):
        if not self.label:
            raise ValueError("arc label must be non-empty")


SdpElement = Union[Node, Arc]


@dataclass(frozen=True)
class Sdp:
    elements: tuple[SdpElement, ...]

    def __post_init__(self):
        els = self.elements
        if len(els) % 2 != 1:
            raise ValueError("a path must have an odd number of elements")
        for i, e in enumerate(els):
            expected = Node if i % 2 == 0 else Arc
            if not isinstance(e, expected):
                raise ValueError(f"element {i} should be a {expected.__name__}")

    @property
    def nodes(self) -> list[str]:
        return [e.form for e in self.elements[::2]]

    @property
    def arcs(self) -> list[Arc]:
        return list(self.elements[1::2])

    def __len__(self) -> int:
        """Number of arcs."""
        return len(self.elements) // 2

    def reversed(self) -> "Sdp":
        """The same path walked backwards, with every arrow flipped."""
        out = []
        for e in reversed(self.elements):
            out.append(Arc(e.label, e.direction.flipped()) if isinstance(e, Arc) else e)
        return Sdp(tuple(out))


def depth(graph: DependencyGraph, token_id: int) -> int:
    d = 0
    while token_id != 0:
        token_id = graph.token(token_id).head
        d += 1
    return d - 1


def ancestors(graph: DependencyGraph, token_id: int) -> list[int]:
    """``token_id`` followed by its heads up to and including the root."""
    chain = []
    while token_id != 0:
        chain.append(token_id)
        token_id = graph.token(token_id).head
    return chain


def lowest_common_ancestor(graph: DependencyGraph, a: int, b: int) -> int:
    marked = set(ancestors(graph, a))
    node = b
    while node not in marked:
        node = graph.token(node).head
    return node


def shortest_path(graph: DependencyGraph, from_token: int, to_token: int) -> Sdp:
    """The tree path from ``from_token`` up to the LCA and down to ``to_token``."""
    n = len(graph)
    for t in (from_token, to_token):
        if not 1 <= t <= n:
            raise TokenOutOfRange(f"token {t} outside 1..{n}")

    up = ancestors(graph, from_token)
    down = ancestors(graph, to_token)
    marked = set(up)
    lca_pos = next(i for i, node in enumerate(down) if node in marked)
    lca = down[lca_pos]
    up = up[: up.index(lca) + 1]
    down = down[:lca_pos]

    elements: list[SdpElement] = [Node(graph.token(from_token).form)]
    for child, head in zip(up, up[1:]):
        elements += [Arc(graph.token(child).deprel, Direction.LEFT), Node(graph.token(head).form)]
    for node in reversed(down):
        tok = graph.token(node)
        elements += [Arc(tok.deprel, Direction.RIGHT), Node(tok.form)]
    return Sdp(tuple(elements))


def _render_form(form: str) -> str:
    return "_".join(form.split())


def serialize_sdp(path: Sdp) -> str:
    """Render a path on one line; multiword forms are joined with ``_``."""
    parts = []
    for e in path.elements:
        if isinstance(e, Node):
            parts.append(_render_form(e.form))
        else:
            arrow = e.direction.arrow
            parts += [arrow, e.label, arrow]
    return " ".join(parts)


def parse_sdp(line: str) -> Sdp:
    """Inverse of :func:`serialize_sdp`; Unicode arrows are accepted too."""
    toks = [_UNICODE_ARROWS.get(t, t) for t in line.split()]
    if len(toks) % 4 != 1:
        raise SdpFormatError(f"malformed path {line!r}")
    elements: list[SdpElement] = [Node(toks[0])]
    for i in range(1, len(toks), 4):
        a1, label, a2, form = toks[i : i + 4]
        if a1 != a2 or a1 not in (LEFT_ARROW, RIGHT_ARROW):
            raise SdpFormatError(f"mismatched arrows around {label!r} in {line!r}")
        direction = Direction.LEFT if a1 == LEFT_ARROW else Direction.RIGHT
        elements += [Arc(label, direction), Node(form)]
    return Sdp(tuple(elements))


def decode_entities(path: Sdp, code_table: Mapping[str, str]) -> Sdp:
    return Sdp(
        tuple(
            Node(code_table[e.form]) if isinstance(e, Node) and e.form in code_table else e
            for e in path.elements
        )
    )


def path_tokens(path: Sdp) -> list[str]:
    """Whitespace tokens of the serialized path (two arrow tokens per arc)."""
    return serialize_sdp(path).split()


def read_sdp_file(text: str) -> list[Sdp]:
    return [parse_sdp(line) for line in text.splitlines() if line.strip()]


def write_sdp_file(paths: Sequence[Sdp]) -> str:
    return "".join(serialize_sdp(p) + "\n" for p in paths)
