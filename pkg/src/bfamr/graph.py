"""AMR graphs and PENMAN notation.

Vertices are either instances (concepts, possibly with a numeric sense tag)
or attributes (constant leaves).  Edges are stored in semantic direction
``src -> dst``; ``if_reverse`` records that the surface form attaches the
edge under ``dst`` with the ``-of`` suffix.  Graphs are immutable: every
mutation helper returns a new graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

INSTANCE = "instance"
ATTRIBUTE = "attribute"


class GraphError(ValueError):
    """A graph violates a structural invariant."""


class PenmanParseError(GraphError):
    """Malformed PENMAN text.  ``offset`` is the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class PenmanWriteError(GraphError):
    """The graph cannot be serialized as written."""


@dataclass(frozen=True)
class Vertex:
    """One graph vertex.

    Attributes:
        id: dense integer id, equal to the vertex position in the graph.
        kind: ``INSTANCE`` or ``ATTRIBUTE``.
        content: non-empty tuple of content words (hyphens split away).
        sense: numeric sense tag such as ``"01"``, or None.  Attributes
            never carry a sense.
        quoted: True for attribute literals that were written in quotes.
    """

    id: int
    kind: str
    content: tuple[str, ...]
    sense: Optional[str] = None
    quoted: bool = False

    @property
    def is_instance(self) -> bool:
        return self.kind == INSTANCE

    def content_string(self) -> str:
        """Content words joined by spaces, e.g. ``"date entity"``."""
        return " ".join(self.content)

    def concept(self) -> str:
        """Surface form of the vertex label, e.g. ``"go-back-19"``."""
        return compose_vertex(self.content, self.sense)


@dataclass(frozen=True)
class Edge:
    """Directed edge ``src -> dst`` in semantic direction.

    ``if_reverse`` means the edge is written under ``dst`` with the ``-of``
    suffix; the label itself never ends in ``-of``.
    """

    src: int
    dst: int
    label: str
    if_reverse: bool = False

    @property
    def syntactic_parent(self) -> int:
        """The endpoint the edge is written under."""
        return self.dst if self.if_reverse else self.src

    @property
    def syntactic_child(self) -> int:
        return self.src if self.if_reverse else self.dst


@dataclass(frozen=True)
class AmrGraph:
    """Immutable rooted AMR graph with dense vertex ids."""

    vertices: tuple[Vertex, ...]
    edges: tuple[Edge, ...]
    root: int

    def vertex(self, vid: int) -> Vertex:
        return self.vertices[vid]

    def instances(self) -> list[Vertex]:
        return [v for v in self.vertices if v.is_instance]

    def attributes(self) -> list[Vertex]:
        return [v for v in self.vertices if not v.is_instance]

    def with_vertex(self, vertex: Vertex) -> "AmrGraph":
        if vertex.id != len(self.vertices):
            raise GraphError(f"vertex id {vertex.id} is not the next dense id")
        return replace(self, vertices=self.vertices + (vertex,))

    def with_edge(self, edge: Edge) -> "AmrGraph":
        return replace(self, edges=self.edges + (edge,))

    def syntactic_children(self, vid: int) -> list[Edge]:
        """Edges written under ``vid``, in declaration order."""
        return [e for e in self.edges if e.syntactic_parent == vid]


def decompose_vertex(raw: str, is_attribute: bool = False) -> tuple[tuple[str, ...], Optional[str]]:
    """Split a surface vertex label into content words and a sense tag.

    Instance labels are lowercased and lose a trailing all-digit hyphen
    segment to the sense tag; remaining hyphens split the content into
    words.  Attribute literals keep their case and are never sense-split.
    A label whose hyphen split would produce an empty word (``"-"``,
    ``"-3"``) is kept whole.

    Args:
        raw: surface label, e.g. ``"go-back-19"`` or ``"2008"``.
        is_attribute: True for constant leaves.

    Returns:
        (content words, sense or None).
    """
    if not raw:
        raise GraphError("empty vertex label")
    sense = None
    body = raw
    if not is_attribute:
        body = body.lower()
        parts = body.split("-")
        if len(parts) > 1 and parts[-1].isdigit():
            sense = parts[-1]
            body = body[: -(len(sense) + 1)]
            if not body:
                raise GraphError(f"vertex label {raw!r} has no content before its sense tag")
    words = body.split("-")
    if any(w == "" for w in words):
        words = [body]
    return tuple(words), sense


def compose_vertex(content: Iterable[str], sense: Optional[str] = None) -> str:
    """Inverse of :func:`decompose_vertex`: rejoin words and sense with hyphens."""
    words = tuple(content)
    if not words:
        raise GraphError("vertex content is empty")
    out = "-".join(words)
    if sense is not None:
        out = f"{out}-{sense}"
    return out


def decompose_edge(raw: str) -> tuple[str, bool]:
    """Split a surface relation into (label, if_reverse).

    A trailing ``-of`` always marks a reverse edge, ``consist-of``
    included.  A leading ``:`` is accepted and stripped.
    """
    label = raw[1:] if raw.startswith(":") else raw
    if not label:
        raise GraphError(f"empty edge label {raw!r}")
    if label.endswith("-of") and len(label) > 3:
        return label[:-3], True
    return label, False


def compose_edge(label: str, if_reverse: bool) -> str:
    """Inverse of :func:`decompose_edge`, without the leading ``:``."""
    return f"{label}-of" if if_reverse else label


def neighbour_sets(graph: AmrGraph) -> dict[int, tuple[tuple[int, str, bool], ...]]:
    """Per-vertex neighbour triples (neighbour id, label, if_reverse).

    For each stored edge e(i, j), vertex i lists j with the stored flag and
    vertex j lists i with the flag flipped, so the set is symmetric and
    every edge contributes exactly two entries.
    """
    out: dict[int, list[tuple[int, str, bool]]] = {v.id: [] for v in graph.vertices}
    for e in graph.edges:
        out[e.src].append((e.dst, e.label, e.if_reverse))
        out[e.dst].append((e.src, e.label, not e.if_reverse))
    return {vid: tuple(items) for vid, items in out.items()}


def validate(graph: AmrGraph) -> None:
    """Raise :class:`GraphError` on the first violated invariant."""
    n = len(graph.vertices)
    if n == 0:
        raise GraphError("graph has no vertices")
    for i, v in enumerate(graph.vertices):
        if v.id != i:
            raise GraphError(f"vertex ids are not dense: position {i} holds id {v.id}")
        if not v.content:
            raise GraphError(f"vertex {v.id} has empty content")
        if any(w == "" for w in v.content):
            raise GraphError(f"vertex {v.id} has an empty content word")
        if len(v.content) > 1 and any("-" in w for w in v.content):
            raise GraphError(f"vertex {v.id} content {v.content} still contains hyphens")
        if not v.is_instance and v.sense is not None:
            raise GraphError(f"attribute vertex {v.id} carries a sense tag")
    if not 0 <= graph.root < n:
        raise GraphError(f"root {graph.root} is not a vertex id")
    if not graph.vertex(graph.root).is_instance:
        raise GraphError("root is not an instance vertex")
    seen = set()
    for e in graph.edges:
        if not (0 <= e.src < n and 0 <= e.dst < n):
            raise GraphError(f"edge {e} references a missing vertex")
        if e.src == e.dst:
            raise GraphError(f"self loop on vertex {e.src}")
        if e.label.endswith("-of"):
            raise GraphError(f"edge label {e.label!r} was not decomposed")
        key = (e.src, e.dst, e.label)
        if key in seen:
            raise GraphError(f"duplicate edge {key}")
        seen.add(key)
        if not graph.vertex(e.src).is_instance:
            raise GraphError(f"attribute vertex {e.src} has an outgoing edge")
    reach = {graph.root}
    frontier = [graph.root]
    nbrs = neighbour_sets(graph)
    while frontier:
        nxt = []
        for vid in frontier:
            for other, _, _ in nbrs[vid]:
                if other not in reach:
                    reach.add(other)
                    nxt.append(other)
        frontier = nxt
    if len(reach) != n:
        missing = sorted(set(range(n)) - reach)
        raise GraphError(f"vertices {missing} are unreachable from the root")


# ---------------------------------------------------------------------------
# PENMAN reading
# ---------------------------------------------------------------------------

_DELIMS = set("()/ \t\r\n")


def _strip_comments(text: str) -> str:
    # Comment lines are blanked rather than removed so byte offsets survive.
    out = []
    for line in text.split("\n"):
        out.append(" " * len(line) if line.lstrip().startswith("#") else line)
    return "\n".join(out)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    """Return (kind, value, offset) tokens.

    Kinds: ``(`` ``)`` ``/`` ``role`` (leading ``:``), ``string`` (quoted),
    ``atom`` (anything else).
    """
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
            continue
        if c in "()/":
            tokens.append((c, c, i))
            i += 1
            continue
        if c == '"':
            j = i + 1
            while j < n and text[j] != '"':
                j += 1
            if j >= n:
                raise PenmanParseError("unterminated string", i)
            tokens.append(("string", text[i + 1 : j], i))
            i = j + 1
            continue
        j = i
        while j < n and text[j] not in _DELIMS and text[j] != '"':
            j += 1
        value = text[i:j]
        if value.startswith(":"):
            tokens.append(("role", value, i))
        else:
            tokens.append(("atom", value, i))
        i = j
    return tokens


class _Node:
    """Parse-tree node for one ``(var / concept ...)`` block."""

    def __init__(self, var: str, concept: str, offset: int):
        self.var = var
        self.concept = concept
        self.offset = offset
        self.children: list[tuple[str, object, int]] = []  # (role, target, offset)


def _parse_node(tokens: list[tuple[str, str, int]], pos: int) -> tuple[_Node, int]:
    kind, _, offset = tokens[pos]
    if kind != "(":
        raise PenmanParseError("expected '('", offset)
    pos += 1
    if pos >= len(tokens) or tokens[pos][0] != "atom":
        raise PenmanParseError("expected a variable name", tokens[pos - 1][2])
    var = tokens[pos][1]
    var_offset = tokens[pos][2]
    pos += 1
    if pos >= len(tokens) or tokens[pos][0] != "/":
        raise PenmanParseError(f"expected '/' after variable {var!r}", var_offset)
    pos += 1
    if pos >= len(tokens) or tokens[pos][0] not in ("atom", "string"):
        raise PenmanParseError("expected a concept after '/'", tokens[pos - 1][2])
    node = _Node(var, tokens[pos][1], var_offset)
    pos += 1
    while pos < len(tokens) and tokens[pos][0] != ")":
        kind, value, off = tokens[pos]
        if kind != "role":
            raise PenmanParseError(f"expected a ':role' or ')', got {value!r}", off)
        role = value
        pos += 1
        if pos >= len(tokens):
            raise PenmanParseError(f"role {role!r} has no target", off)
        tkind, tvalue, toff = tokens[pos]
        if tkind == "(":
            child, pos = _parse_node(tokens, pos)
            node.children.append((role, child, toff))
        elif tkind == "atom":
            node.children.append((role, ("atom", tvalue), toff))
            pos += 1
        elif tkind == "string":
            node.children.append((role, ("string", tvalue), toff))
            pos += 1
        else:
            raise PenmanParseError(f"role {role!r} has an invalid target", toff)
    if pos >= len(tokens):
        raise PenmanParseError("unbalanced parentheses: missing ')'", tokens[-1][2])
    return node, pos + 1


def parse_penman(text: str) -> AmrGraph:
    """Parse one PENMAN block into an :class:`AmrGraph`.

    Re-used variables become reentrant references to a single vertex; each
    constant occurrence becomes its own attribute vertex.  Lines starting
    with ``#`` are ignored.  Errors report a byte offset into ``text``.
    """
    stripped = _strip_comments(text)
    tokens = _tokenize(stripped)
    if not tokens:
        raise PenmanParseError("empty input", 0)
    tree, pos = _parse_node(tokens, 0)
    if pos != len(tokens):
        raise PenmanParseError("trailing content after the graph", tokens[pos][2])

    defined: dict[str, _Node] = {}

    def collect(node: _Node) -> None:
        if node.var in defined:
            raise PenmanParseError(f"duplicate variable {node.var!r}", node.offset)
        defined[node.var] = node
        for _, target, _ in node.children:
            if isinstance(target, _Node):
                collect(target)

    collect(tree)

    vertices: list[Vertex] = []
    edges: list[Edge] = []
    var_ids: dict[str, int] = {}
    edge_keys = set()

    def add_edge(src: int, dst: int, label: str, rev: bool, offset: int) -> None:
        key = (src, dst, label)
        if key in edge_keys:
            raise PenmanParseError(f"duplicate edge {key}", offset)
        edge_keys.add(key)
        edges.append(Edge(src, dst, label, rev))

    def build(node: _Node) -> int:
        content, sense = decompose_vertex(node.concept)
        vid = len(vertices)
        vertices.append(Vertex(vid, INSTANCE, content, sense))
        var_ids[node.var] = vid
        for role, target, offset in node.children:
            label, rev = decompose_edge(role)
            if isinstance(target, _Node):
                tid = build(target)
                add_edge(*((tid, vid) if rev else (vid, tid)), label, rev, offset)
            else:
                tkind, tvalue = target
                if tkind == "atom" and tvalue in defined:
                    # Reentrant reference; resolved after all ids exist.
                    node.children[node.children.index((role, target, offset))] = (
                        role,
                        ("ref", tvalue),
                        offset,
                    )
                else:
                    if rev:
                        raise PenmanParseError(
                            f"constant {tvalue!r} cannot take a reverse edge", offset
                        )
                    acontent, _ = decompose_vertex(tvalue, is_attribute=True)
                    aid = len(vertices)
                    vertices.append(
                        Vertex(aid, ATTRIBUTE, acontent, None, quoted=(tkind == "string"))
                    )
                    add_edge(vid, aid, label, False, offset)
        return vid

    root = build(tree)

    def link_refs(node: _Node) -> None:
        vid = var_ids[node.var]
        for role, target, offset in node.children:
            if isinstance(target, _Node):
                link_refs(target)
            elif target[0] == "ref":
                label, rev = decompose_edge(role)
                tid = var_ids[target[1]]
                add_edge(*((tid, vid) if rev else (vid, tid)), label, rev, offset)

    link_refs(tree)

    graph = AmrGraph(tuple(vertices), tuple(edges), root)
    validate(graph)
    return graph


# ---------------------------------------------------------------------------
# PENMAN writing
# ---------------------------------------------------------------------------


def _variable_names(graph: AmrGraph) -> dict[int, str]:
    names: dict[int, str] = {}
    used: dict[str, int] = {}
    for v in graph.vertices:
        if not v.is_instance:
            continue
        first = v.content[0][0]
        base = first if first.isalpha() else "x"
        count = used.get(base, 0) + 1
        used[base] = count
        names[v.id] = base if count == 1 else f"{base}{count}"
    return names


def write_penman(graph: AmrGraph) -> str:
    """Serialize to single-line PENMAN.

    Deterministic: children are ordered by (edge label, if_reverse, child
    id); each instance is defined at its first visit and referenced by bare
    variable afterwards.  Raises :class:`PenmanWriteError` when the written
    arcs cannot reach every vertex from the root.
    """
    validate(graph)
    names = _variable_names(graph)
    defined: set[int] = set()

    def emit(vid: int) -> str:
        v = graph.vertex(vid)
        if not v.is_instance:
            raise PenmanWriteError(f"attribute vertex {vid} cannot head a subtree")
        if vid in defined:
            return names[vid]
        defined.add(vid)
        parts = [f"({names[vid]} / {v.concept()}"]
        children = sorted(
            graph.syntactic_children(vid),
            key=lambda e: (e.label, e.if_reverse, e.syntactic_child),
        )
        for e in children:
            child = graph.vertex(e.syntactic_child)
            role = f":{compose_edge(e.label, e.if_reverse)}"
            if child.is_instance:
                parts.append(f"{role} {emit(child.id)}")
            else:
                literal = "-".join(child.content)
                if child.quoted:
                    literal = f'"{literal}"'
                parts.append(f"{role} {literal}")
        return " ".join(parts) + ")"

    text = emit(graph.root)
    if len(defined) != len(graph.instances()):
        missing = sorted(v.id for v in graph.instances() if v.id not in defined)
        raise PenmanWriteError(f"instances {missing} unreachable along written arcs")
    return text


def read_penman_file(text: str) -> list[AmrGraph]:
    """Parse a file of PENMAN blocks separated by blank lines."""
    graphs = []
    block: list[str] = []
    for line in text.split("\n") + [""]:
        if line.strip() == "":
            if any(ln.strip() and not ln.lstrip().startswith("#") for ln in block):
                graphs.append(parse_penman("\n".join(block)))
            block = []
        else:
            block.append(line)
    return graphs
