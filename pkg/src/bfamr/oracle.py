"""Breadth-first action oracle.

A graph is generated as a sequence of actions under a focused-parent
discipline: the vertex at the head of a FIFO queue is the focused parent,
every action attaches one child to it (or connects it to an existing
vertex), and NoMoreChildren ends its expansion and shifts focus to the
next queued vertex.  Generation starts from a synthetic BOG root vertex
whose single child is the real root; instances enter the queue exactly
once, attributes never do, so the visitation order is breadth first by
construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from bfamr.corpus import ROOT_LABEL, ROOT_UNIT, Vocabulary
from bfamr.graph import ATTRIBUTE, INSTANCE, AmrGraph, Edge, Vertex, validate

NO_MORE_CHILDREN = 0
CONNECT_EXISTING = 1
NEW_INSTANCE = 2
NEW_ATTRIBUTE = 3

DETERMINISTIC = "deterministic"
RANDOM = "random"


class OracleError(ValueError):
    """An action sequence violates the machine's rules."""


@dataclass(frozen=True)
class Action:
    """One generation step.

    ``kind`` doubles as the status id the model predicts: 0 NoMoreChildren,
    1 ConnectExisting, 2 NewInstance, 3 NewAttribute.  ``target`` indexes
    the produced-vertex list for ConnectExisting.  ``label``/``if_reverse``
    give the edge from the focused parent in surface terms.
    """

    kind: int
    target: Optional[int] = None
    content: Optional[tuple[str, ...]] = None
    sense: Optional[str] = None
    label: Optional[str] = None
    if_reverse: bool = False
    quoted: bool = False

    @staticmethod
    def no_more_children() -> "Action":
        return Action(NO_MORE_CHILDREN)

    @staticmethod
    def connect(target: int, label: str, if_reverse: bool = False) -> "Action":
        return Action(CONNECT_EXISTING, target=target, label=label, if_reverse=if_reverse)

    @staticmethod
    def new_instance(
        content: Iterable[str],
        sense: Optional[str],
        label: str,
        if_reverse: bool = False,
    ) -> "Action":
        return Action(
            NEW_INSTANCE, content=tuple(content), sense=sense, label=label, if_reverse=if_reverse
        )

    @staticmethod
    def new_attribute(
        content: Iterable[str],
        label: str,
        if_reverse: bool = False,
        quoted: bool = False,
    ) -> "Action":
        return Action(
            NEW_ATTRIBUTE, content=tuple(content), label=label, if_reverse=if_reverse, quoted=quoted
        )


_KIND_NAMES = {
    NO_MORE_CHILDREN: "no_more_children",
    CONNECT_EXISTING: "connect_existing",
    NEW_INSTANCE: "new_instance",
    NEW_ATTRIBUTE: "new_attribute",
}
_KIND_IDS = {name: kind for kind, name in _KIND_NAMES.items()}


def action_to_dict(action: Action) -> dict:
    out: dict = {"type": _KIND_NAMES[action.kind]}
    if action.kind == CONNECT_EXISTING:
        out["target"] = action.target
    if action.kind in (NEW_INSTANCE, NEW_ATTRIBUTE):
        out["content"] = list(action.content)
    if action.kind == NEW_INSTANCE and action.sense is not None:
        out["sense"] = action.sense
    if action.kind == NEW_ATTRIBUTE and action.quoted:
        out["quoted"] = True
    if action.kind != NO_MORE_CHILDREN:
        out["label"] = action.label
        out["if_reverse"] = action.if_reverse
    return out


def action_from_dict(data: dict) -> Action:
    try:
        kind = _KIND_IDS[data["type"]]
    except KeyError:
        raise OracleError(f"unknown action type {data.get('type')!r}") from None
    if kind == NO_MORE_CHILDREN:
        return Action.no_more_children()
    label = data["label"]
    rev = bool(data.get("if_reverse", False))
    if kind == CONNECT_EXISTING:
        return Action.connect(int(data["target"]), label, rev)
    if kind == NEW_INSTANCE:
        return Action.new_instance(data["content"], data.get("sense"), label, rev)
    return Action.new_attribute(data["content"], label, rev, bool(data.get("quoted", False)))


@dataclass(frozen=True)
class DecoderState:
    """Immutable machine state.

    ``partial`` includes the BOG vertex (id 0).  ``queue`` holds instance
    ids awaiting expansion with the focused parent at its head; ``produced``
    lists vertex ids in production order.  Terminal when the queue is empty.
    """

    partial: AmrGraph
    queue: tuple[int, ...]
    produced: tuple[int, ...]
    step_count: int

    @property
    def focused(self) -> Optional[int]:
        return self.queue[0] if self.queue else None

    @property
    def is_terminal(self) -> bool:
        return not self.queue


def initial_state() -> DecoderState:
    bog = Vertex(0, INSTANCE, (ROOT_UNIT,), None)
    graph = AmrGraph((bog,), (), 0)
    return DecoderState(partial=graph, queue=(0,), produced=(0,), step_count=0)


def _edge_from_focus(focused: int, child: int, action: Action) -> Edge:
    # The stored edge keeps semantic direction; an if_reverse action means
    # the semantic source is the child.
    if action.if_reverse:
        return Edge(child, focused, action.label, True)
    return Edge(focused, child, action.label, False)


def apply(state: DecoderState, action: Action) -> DecoderState:
    """Apply one action, returning the successor state.

    Raises :class:`OracleError` on any rule violation: actions after the
    terminal state, connections to BOG or to the focused parent itself,
    duplicate (src, dst, label) edges, reverse edges into attributes,
    missing labels or contents.
    """
    if state.is_terminal:
        raise OracleError("action applied to a terminal state")
    focused = state.focused
    if action.kind == NO_MORE_CHILDREN:
        return DecoderState(
            partial=state.partial,
            queue=state.queue[1:],
            produced=state.produced,
            step_count=state.step_count + 1,
        )

    if not action.label:
        raise OracleError(f"action {_KIND_NAMES[action.kind]} has no edge label")

    if action.kind == CONNECT_EXISTING:
        if action.target is None or not 0 <= action.target < len(state.produced):
            raise OracleError(
                f"connect target {action.target} is not a produced vertex "
                f"(have {len(state.produced)})"
            )
        child = state.produced[action.target]
        if child == 0:
            raise OracleError("cannot connect to the BOG vertex")
        if child == focused:
            raise OracleError("cannot connect the focused parent to itself")
        if action.if_reverse and not state.partial.vertex(child).is_instance:
            raise OracleError("reverse edge would give an attribute an outgoing edge")
        edge = _edge_from_focus(focused, child, action)
        if any((e.src, e.dst, e.label) == (edge.src, edge.dst, edge.label) for e in state.partial.edges):
            raise OracleError(f"duplicate edge ({edge.src}, {edge.dst}, {edge.label!r})")
        return DecoderState(
            partial=state.partial.with_edge(edge),
            queue=state.queue,
            produced=state.produced,
            step_count=state.step_count + 1,
        )

    if not action.content or any(not w for w in action.content):
        raise OracleError(f"action {_KIND_NAMES[action.kind]} has empty content")

    vid = len(state.partial.vertices)
    if action.kind == NEW_INSTANCE:
        vertex = Vertex(vid, INSTANCE, action.content, action.sense)
        queue = state.queue + (vid,)
    else:
        if action.if_reverse:
            raise OracleError("reverse edge would give an attribute an outgoing edge")
        vertex = Vertex(vid, ATTRIBUTE, action.content, None, quoted=action.quoted)
        queue = state.queue
    graph = state.partial.with_vertex(vertex).with_edge(_edge_from_focus(focused, vid, action))
    return DecoderState(
        partial=graph,
        queue=queue,
        produced=state.produced + (vid,),
        step_count=state.step_count + 1,
    )


@dataclass(frozen=True)
class StepRecord:
    """One linearization step: the state's step index, the focused parent
    (machine id), the gold action, and for producing actions the source
    vertex it corresponds to (an isomorphism witness for tests)."""

    step: int
    focused: int
    action: Action
    gold_vertex: Optional[int] = None


def record_to_dict(record: StepRecord) -> dict:
    out = action_to_dict(record.action)
    out["step"] = record.step
    out["focused"] = record.focused
    return out


def record_from_dict(data: dict) -> StepRecord:
    return StepRecord(
        step=int(data["step"]), focused=int(data["focused"]), action=action_from_dict(data)
    )


def linearize(
    graph: AmrGraph,
    vocab: Vocabulary,
    mode: str = DETERMINISTIC,
    rng_seed: int = 0,
) -> list[StepRecord]:
    """Flatten a gold graph into a breadth-first action sequence.

    Every gold edge is emitted while its syntactic parent is the focused
    parent, so it reproduces the gold direction and if_reverse flag exactly
    and can never reference an unproduced vertex.  Deterministic mode
    orders a parent's children by corpus edge-label frequency (descending,
    ties lexicographic); random mode shuffles them uniformly under
    ``rng_seed``.
    """
    if mode not in (DETERMINISTIC, RANDOM):
        raise OracleError(f"unknown linearization mode {mode!r}")
    validate(graph)
    rng = np.random.default_rng(rng_seed)
    freq = vocab.edge_label_frequency

    state = initial_state()
    records: list[StepRecord] = []
    machine_to_gold: dict[int, Optional[int]] = {0: None}
    gold_to_machine: dict[int, int] = {}
    emitted: set[int] = set()

    def emit(action: Action, gold_vertex: Optional[int]) -> None:
        nonlocal state
        records.append(StepRecord(state.step_count, state.focused, action, gold_vertex))
        state = apply(state, action)

    while not state.is_terminal:
        gold_focus = machine_to_gold[state.focused]
        if gold_focus is None:
            # BOG's single child is the gold root.
            root = graph.vertex(graph.root)
            emit(
                Action.new_instance(root.content, root.sense, ROOT_LABEL),
                graph.root,
            )
            gold_to_machine[graph.root] = state.produced[-1]
            machine_to_gold[state.produced[-1]] = graph.root
            emit(Action.no_more_children(), None)
            continue

        pending = [
            (i, e)
            for i, e in enumerate(graph.edges)
            if i not in emitted and e.syntactic_parent == gold_focus
        ]
        if mode == DETERMINISTIC:
            pending.sort(key=lambda ie: (-freq.get(ie[1].label, 0), ie[1].label, ie[1].syntactic_child))
        else:
            rng.shuffle(pending)
        for i, edge in pending:
            emitted.add(i)
            child_gold = edge.syntactic_child
            child = graph.vertex(child_gold)
            if child_gold in gold_to_machine:
                target = state.produced.index(gold_to_machine[child_gold])
                emit(Action.connect(target, edge.label, edge.if_reverse), child_gold)
            elif child.is_instance:
                emit(
                    Action.new_instance(child.content, child.sense, edge.label, edge.if_reverse),
                    child_gold,
                )
                gold_to_machine[child_gold] = state.produced[-1]
                machine_to_gold[state.produced[-1]] = child_gold
            else:
                emit(
                    Action.new_attribute(child.content, edge.label, edge.if_reverse, child.quoted),
                    child_gold,
                )
                gold_to_machine[child_gold] = state.produced[-1]
        emit(Action.no_more_children(), None)

    if len(emitted) != len(graph.edges):
        raise OracleError("linearization did not emit every gold edge")
    return records


ActionLike = Union[Action, StepRecord, tuple]


def _iter_steps(sequence: Sequence[ActionLike]):
    for item in sequence:
        if isinstance(item, StepRecord):
            yield item.focused, item.action
        elif isinstance(item, Action):
            yield None, item
        else:
            focused, action = item
            yield focused, action


def actions_of(sequence: Sequence[ActionLike]) -> list[Action]:
    return [action for _, action in _iter_steps(sequence)]


def replay_states(sequence: Sequence[ActionLike]) -> list[DecoderState]:
    """States seen before each action (teacher-forcing inputs)."""
    state = initial_state()
    states = []
    for _, action in _iter_steps(sequence):
        states.append(state)
        state = apply(state, action)
    return states


def reconstruct(sequence: Sequence[ActionLike]) -> AmrGraph:
    """Fold a complete action sequence back into the graph it generates.

    The sequence must drive the machine exactly to its terminal state; the
    BOG vertex and its bootstrap edge are stripped, so BOG must have
    exactly one child.
    """
    state = initial_state()
    for _, action in _iter_steps(sequence):
        state = apply(state, action)
    if not state.is_terminal:
        raise OracleError(
            f"sequence is not terminal: {len(state.queue)} vertices still await expansion"
        )
    bootstrap = [e for e in state.partial.edges if e.syntactic_parent == 0]
    if len(bootstrap) != 1:
        raise OracleError(f"BOG has {len(bootstrap)} children, expected exactly 1")
    root = bootstrap[0].syntactic_child
    vertices = tuple(
        Vertex(v.id - 1, v.kind, v.content, v.sense, v.quoted)
        for v in state.partial.vertices[1:]
    )
    edges = tuple(
        Edge(e.src - 1, e.dst - 1, e.label, e.if_reverse)
        for e in state.partial.edges
        if e.syntactic_parent != 0
    )
    graph = AmrGraph(vertices, edges, root - 1)
    validate(graph)
    return graph


def is_breadth_first(sequence: Sequence[ActionLike]) -> bool:
    """Audit a trace: does the focused-parent visitation order equal the
    FIFO discovery order of instance vertices?

    Structural invalidity (a forward reference, or actions after terminal)
    raises :class:`OracleError`; a focus claim that deviates from the FIFO
    head returns False.  Plain action sequences without focus claims are
    breadth first whenever they are valid, because the machine leaves no
    other choice.
    """
    queue: list[int] = [0]
    produced_count = 1
    next_id = 1
    for focused_claim, action in _iter_steps(sequence):
        if not queue:
            raise OracleError("action applied to a terminal state")
        if focused_claim is not None and focused_claim != queue[0]:
            return False
        if action.kind == NO_MORE_CHILDREN:
            queue.pop(0)
        elif action.kind == CONNECT_EXISTING:
            if action.target is None or not 0 <= action.target < produced_count:
                raise OracleError(f"connect target {action.target} not yet produced")
        elif action.kind == NEW_INSTANCE:
            queue.append(next_id)
            next_id += 1
            produced_count += 1
        elif action.kind == NEW_ATTRIBUTE:
            next_id += 1
            produced_count += 1
        else:
            raise OracleError(f"unknown action kind {action.kind}")
    return True


def round_trip_ok(gold: AmrGraph, records: Sequence[StepRecord], rebuilt: AmrGraph) -> bool:
    """Exact isomorphism audit under the production-order witness.

    Each producing record carries the gold vertex it realized, which fixes
    the only bijection that needs checking; vertex payloads, edge sets,
    and the root must all agree under it.
    """
    mapping: dict[int, int] = {}
    produced = 0
    for r in records:
        if r.action.kind in (NEW_INSTANCE, NEW_ATTRIBUTE):
            if r.gold_vertex is None:
                return False
            mapping[r.gold_vertex] = produced  # rebuilt ids start at 0
            produced += 1
    if not (len(mapping) == len(gold.vertices) == len(rebuilt.vertices)):
        return False
    for gid, rid in mapping.items():
        gv, rv = gold.vertex(gid), rebuilt.vertex(rid)
        if (gv.kind, gv.content, gv.sense, gv.quoted) != (rv.kind, rv.content, rv.sense, rv.quoted):
            return False
    gold_edges = {(mapping[e.src], mapping[e.dst], e.label, e.if_reverse) for e in gold.edges}
    rebuilt_edges = {(e.src, e.dst, e.label, e.if_reverse) for e in rebuilt.edges}
    return gold_edges == rebuilt_edges and mapping[gold.root] == rebuilt.root
