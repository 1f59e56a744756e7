"""Triple-overlap scoring with variable alignment.

A graph becomes three triple groups: instance triples over instance
vertices, attribute triples (constants plus one TOP marker), and
relation triples between instances.  Edges keep their written
orientation: a reverse-flagged edge is tripled from its syntactic
parent with the ``-of`` label, so presentation differences are scored,
not erased.  Alignment is found by steepest-ascent hill climbing with
restarts; an exhaustive oracle covers small graphs exactly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .graph import ATTRIBUTE, INSTANCE, AmrGraph, Vertex, compose_vertex

TOP_RELATION = "TOP"


class SmatchScore(NamedTuple):
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class TripleSet:
    """Decomposed graph: variables are instance vertex ids."""

    instances: Tuple[Tuple[int, str], ...]  # (var, concept)
    attributes: Tuple[Tuple[str, int, str], ...]  # (relation, var, constant)
    relations: Tuple[Tuple[str, int, int], ...]  # (relation, var, var)

    @property
    def size(self) -> int:
        return len(self.instances) + len(self.attributes) + len(self.relations)

    @property
    def variables(self) -> Tuple[int, ...]:
        return tuple(var for var, _ in self.instances)


def _attribute_value(vertex: Vertex) -> str:
    if vertex.quoted:
        return '"' + vertex.content_string() + '"'
    return compose_vertex(vertex.content, vertex.sense)


def graph_to_triples(graph: AmrGraph) -> TripleSet:
    """Deterministic triple decomposition of a validated graph."""
    instances = tuple((v.id, v.concept()) for v in graph.vertices if v.kind == INSTANCE)
    kind_of = {v.id: v.kind for v in graph.vertices}
    # the TOP marker carries the root concept, so differing roots never match
    attributes: List[Tuple[str, int, str]] = [
        (TOP_RELATION, graph.root, graph.vertex(graph.root).concept())
    ]
    relations: List[Tuple[str, int, int]] = []
    for edge in graph.edges:
        if kind_of[edge.dst] == ATTRIBUTE:
            # attribute edges are always written below their parent
            attributes.append(
                (edge.label, edge.src, _attribute_value(graph.vertex(edge.dst)))
            )
        elif edge.if_reverse:
            relations.append((edge.label + "-of", edge.dst, edge.src))
        else:
            relations.append((edge.label, edge.src, edge.dst))
    return TripleSet(instances, tuple(sorted(attributes)), tuple(sorted(relations)))


def _match_count(pred: TripleSet, gold: TripleSet, mapping: Dict[int, Optional[int]]) -> int:
    gold_instances = set(gold.instances)
    gold_attributes = set(gold.attributes)
    gold_relations = set(gold.relations)
    matched = 0
    for var, concept in pred.instances:
        if (mapping.get(var), concept) in gold_instances:
            matched += 1
    for rel, var, value in pred.attributes:
        if (rel, mapping.get(var), value) in gold_attributes:
            matched += 1
    for rel, a, b in pred.relations:
        if (rel, mapping.get(a), mapping.get(b)) in gold_relations:
            matched += 1
    return matched


def _smart_start(pred: TripleSet, gold: TripleSet) -> Dict[int, Optional[int]]:
    """Greedy concept-match initialization."""
    concept_pool: Dict[str, List[int]] = {}
    for var, concept in gold.instances:
        concept_pool.setdefault(concept, []).append(var)
    mapping: Dict[int, Optional[int]] = {}
    used: set = set()
    for var, concept in pred.instances:
        target = None
        for candidate in concept_pool.get(concept, ()):
            if candidate not in used:
                target = candidate
                break
        mapping[var] = target
        if target is not None:
            used.add(target)
    # fill unmapped variables with arbitrary unused gold variables
    free = [v for v in gold.variables if v not in used]
    for var in mapping:
        if mapping[var] is None and free:
            mapping[var] = free.pop()
    return mapping


def _random_start(
    pred: TripleSet, gold: TripleSet, rng: np.random.Generator
) -> Dict[int, Optional[int]]:
    pred_vars = list(pred.variables)
    gold_vars = list(gold.variables)
    rng.shuffle(gold_vars)
    mapping: Dict[int, Optional[int]] = {}
    for i, var in enumerate(pred_vars):
        mapping[var] = gold_vars[i] if i < len(gold_vars) else None
    return mapping


def _hill_climb(
    pred: TripleSet, gold: TripleSet, mapping: Dict[int, Optional[int]]
) -> int:
    """Steepest-ascent over remap and swap moves; returns the match count."""
    pred_vars = list(pred.variables)
    gold_vars = list(gold.variables)
    best = _match_count(pred, gold, mapping)
    improved = True
    while improved:
        improved = False
        best_move = None
        used = {g for g in mapping.values() if g is not None}
        for var in pred_vars:
            current = mapping[var]
            for target in [*gold_vars, None]:
                if target == current or (target is not None and target in used):
                    continue
                mapping[var] = target
                score = _match_count(pred, gold, mapping)
                if score > best:
                    best, best_move = score, ("set", var, target)
                mapping[var] = current
        for a, b in itertools.combinations(pred_vars, 2):
            if mapping[a] == mapping[b]:
                continue
            mapping[a], mapping[b] = mapping[b], mapping[a]
            score = _match_count(pred, gold, mapping)
            if score > best:
                best, best_move = score, ("swap", a, b)
            mapping[a], mapping[b] = mapping[b], mapping[a]
        if best_move is not None:
            improved = True
            kind, x, y = best_move
            if kind == "set":
                mapping[x] = y
            else:
                mapping[x], mapping[y] = mapping[y], mapping[x]
    return best


def best_match_count(
    pred: TripleSet, gold: TripleSet, restarts: int = 4, seed: int = 0
) -> int:
    """Best alignment score over restarts; start 0 is the smart start."""
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    rng = np.random.default_rng(seed)
    best = 0
    for r in range(restarts):
        start = _smart_start(pred, gold) if r == 0 else _random_start(pred, gold, rng)
        best = max(best, _hill_climb(pred, gold, start))
    return best


def _score(matched: int, pred_size: int, gold_size: int) -> SmatchScore:
    precision = matched / pred_size if pred_size else 0.0
    recall = matched / gold_size if gold_size else 0.0
    if precision + recall == 0.0:
        return SmatchScore(precision, recall, 0.0)
    return SmatchScore(precision, recall, 2 * precision * recall / (precision + recall))


def smatch_counts(
    pred: AmrGraph, gold: AmrGraph, restarts: int = 4, seed: int = 0
) -> Tuple[int, int, int]:
    """(matched, pred triples, gold triples) for micro-averaging."""
    pred_t = graph_to_triples(pred)
    gold_t = graph_to_triples(gold)
    matched = best_match_count(pred_t, gold_t, restarts=restarts, seed=seed)
    return matched, pred_t.size, gold_t.size


def smatch(pred: AmrGraph, gold: AmrGraph, restarts: int = 4, seed: int = 0) -> SmatchScore:
    matched, pred_size, gold_size = smatch_counts(pred, gold, restarts=restarts, seed=seed)
    return _score(matched, pred_size, gold_size)


def corpus_smatch(
    pairs: Iterable[Tuple[AmrGraph, AmrGraph]], restarts: int = 4, seed: int = 0
) -> SmatchScore:
    """Micro-averaged score over (pred, gold) pairs."""
    total_matched = total_pred = total_gold = 0
    for pred, gold in pairs:
        matched, pred_size, gold_size = smatch_counts(pred, gold, restarts=restarts, seed=seed)
        total_matched += matched
        total_pred += pred_size
        total_gold += gold_size
    return _score(total_matched, total_pred, total_gold)


def smatch_exhaustive(pred: AmrGraph, gold: AmrGraph, max_vars: int = 8) -> SmatchScore:
    """Exact optimum by enumerating injective variable mappings.

    Adding a mapping never unmatches a triple, so the optimum over
    partial mappings is reached by some total injective mapping from the
    smaller variable set; those are enumerated directly.
    """
    pred_t = graph_to_triples(pred)
    gold_t = graph_to_triples(gold)
    pred_vars = list(pred_t.variables)
    gold_vars = list(gold_t.variables)
    if len(pred_vars) > max_vars or len(gold_vars) > max_vars:
        raise ValueError(
            f"exhaustive search limited to {max_vars} variables, "
            f"got {len(pred_vars)} and {len(gold_vars)}"
        )
    best = 0
    if len(pred_vars) <= len(gold_vars):
        for images in itertools.permutations(gold_vars, len(pred_vars)):
            mapping = dict(zip(pred_vars, images))
            best = max(best, _match_count(pred_t, gold_t, mapping))
    else:
        for sources in itertools.permutations(pred_vars, len(gold_vars)):
            mapping: Dict[int, Optional[int]] = {v: None for v in pred_vars}
            mapping.update(zip(sources, gold_vars))
            best = max(best, _match_count(pred_t, gold_t, mapping))
    return _score(best, pred_t.size, gold_t.size)
