"""Shared test tooling: synthetic graphs and exact isomorphism checks."""

from collections import Counter

import numpy as np

from bfamr.corpus import NO_SENSE, ROOT_LABEL, ROOT_UNIT, UNK, Vocabulary
from bfamr.graph import ATTRIBUTE, INSTANCE, AmrGraph, Edge, Vertex, validate
from bfamr.oracle import NEW_ATTRIBUTE, NEW_INSTANCE

LABELS = [
    "ARG0", "ARG1", "ARG2", "ARG3", "ARG4", "mod", "time", "degree",
    "poss", "location", "op1", "op2", "manner", "topic", "domain",
]
WORDS = [
    "want", "boy", "go", "school", "girl", "see", "meet", "end", "new",
    "measure", "dog", "run", "house", "city", "day", "think", "know",
    "say", "country", "man", "woman", "child", "tree", "book", "read",
]


def freq_vocab(graphs) -> Vocabulary:
    """Minimal vocabulary carrying only the edge-label frequency table."""
    freq = Counter()
    for g in graphs:
        freq.update(e.label for e in g.edges)
    return Vocabulary(
        content=(UNK, ROOT_UNIT),
        sense=(NO_SENSE,),
        edge_labels=(UNK, ROOT_LABEL, *sorted(freq)),
        pos=(UNK,),
        ner=(UNK,),
        subwords=(),
        edge_label_frequency=dict(freq),
    )


def random_graph(rng: np.random.Generator, max_vertices: int = 20) -> AmrGraph:
    """Random AMR-shaped graph: a syntactic tree over instances plus
    attribute leaves plus reentrant attachments, with random reverse flags
    and occasional multiword/sense-tagged concepts."""
    n_inst = int(rng.integers(1, max(2, max_vertices - 3)))
    vertices = []
    edges = []
    edge_keys = set()

    def push_edge(parent: int, child: int, label: str, rev: bool) -> bool:
        edge = Edge(child, parent, label, True) if rev else Edge(parent, child, label, False)
        key = (edge.src, edge.dst, edge.label)
        if key in edge_keys or edge.src == edge.dst:
            return False
        edge_keys.add(key)
        edges.append(edge)
        return True

    for i in range(n_inst):
        words = [WORDS[rng.integers(len(WORDS))]]
        if rng.random() < 0.15:
            words.append(WORDS[rng.integers(len(WORDS))])
        sense = f"{int(rng.integers(1, 20)):02d}" if rng.random() < 0.5 else None
        vertices.append(Vertex(i, INSTANCE, tuple(words), sense))
        if i > 0:
            parent = int(rng.integers(0, i))
            rev = bool(rng.random() < 0.25)
            for _ in range(10):
                if push_edge(parent, i, LABELS[rng.integers(len(LABELS))], rev):
                    break

    n_attr = int(rng.integers(0, min(3, max_vertices - n_inst) + 1))
    for _ in range(n_attr):
        aid = len(vertices)
        roll = rng.random()
        if roll < 0.4:
            content, quoted = (str(int(rng.integers(1, 2020))),), False
        elif roll < 0.7:
            content, quoted = ("-",), False
        else:
            content, quoted = (WORDS[rng.integers(len(WORDS))].capitalize(),), True
        vertices.append(Vertex(aid, ATTRIBUTE, content, None, quoted=quoted))
        parent = int(rng.integers(0, n_inst))
        for _ in range(10):
            if push_edge(parent, aid, LABELS[rng.integers(len(LABELS))], False):
                break

    if n_inst >= 3:
        n_reent = max(1, round(0.25 * (n_inst - 1)))
        for _ in range(n_reent):
            for _ in range(10):
                parent = int(rng.integers(0, n_inst))
                child = int(rng.integers(0, n_inst))
                if parent == child:
                    continue
                rev = bool(rng.random() < 0.25)
                if push_edge(parent, child, LABELS[rng.integers(len(LABELS))], rev):
                    break

    graph = AmrGraph(tuple(vertices), tuple(edges), 0)
    validate(graph)
    return graph


def is_reentrant(graph: AmrGraph) -> bool:
    """True when some vertex is the syntactic child of more than one edge."""
    seen = Counter(e.syntactic_child for e in graph.edges)
    return any(c > 1 for c in seen.values())


def witness_mapping(records) -> dict[int, int]:
    """gold vertex id -> machine vertex id, from a linearization trace."""
    mapping = {}
    next_id = 1
    for r in records:
        if r.action.kind in (NEW_INSTANCE, NEW_ATTRIBUTE):
            mapping[r.gold_vertex] = next_id
            next_id += 1
    return mapping


def assert_isomorphic(gold: AmrGraph, records, recon: AmrGraph) -> None:
    """Exact isomorphism check under the production-order bijection."""
    mapping = witness_mapping(records)
    assert len(mapping) == len(gold.vertices) == len(recon.vertices)
    for gid, mid in mapping.items():
        gv = gold.vertex(gid)
        rv = recon.vertex(mid - 1)
        assert (gv.kind, gv.content, gv.sense, gv.quoted) == (
            rv.kind,
            rv.content,
            rv.sense,
            rv.quoted,
        )
    gold_edges = {
        (mapping[e.src] - 1, mapping[e.dst] - 1, e.label, e.if_reverse) for e in gold.edges
    }
    recon_edges = {(e.src, e.dst, e.label, e.if_reverse) for e in recon.edges}
    assert gold_edges == recon_edges
    assert mapping[gold.root] - 1 == recon.root
