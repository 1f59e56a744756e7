"""Beam-search inference over the focused-parent machine.

Candidate actions are scored with exact component log-probabilities;
within one candidate the dependent parts (sense, edge label, reverse
flag) are chosen greedily after the top-k content or target selection.
Structural validity is enforced up front: the first step must create the
root instance, the bootstrap step after it must close the start vertex,
reserved units never surface as contents, and actions the machine would
reject are dropped.  Every returned trace is breadth-first by
construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import oracle, tensor
from .corpus import NO_SENSE, ROOT_LABEL, ROOT_UNIT, UNK, AnnotatedSentence
from .graph import ATTRIBUTE, AmrGraph
from .model import AmrModel, SentenceEncoding, StepContext
from .oracle import Action, DecoderState, OracleError

LOG_FLOOR = 1e-12

# Attribute literals conventionally written without quotes.
_BARE_ATTRIBUTES = {"-", "+", "interrogative", "imperative", "expressive"}


def infer_quoted(content: str) -> bool:
    """Quote heuristic for generated attribute literals."""
    try:
        float(content)
        return False
    except ValueError:
        pass
    return content not in _BARE_ATTRIBUTES


@dataclass(frozen=True)
class Hypothesis:
    """One beam entry: machine state plus accumulated log probability."""

    state: DecoderState
    log_prob: float
    trace: Tuple[Tuple[int, Action], ...] = ()

    @property
    def finished(self) -> bool:
        return self.state.is_terminal

    @property
    def action_count(self) -> int:
        return len(self.trace)


class DecodeError(RuntimeError):
    pass


def _log(p: float) -> float:
    return float(np.log(max(p, LOG_FLOOR)))


def _log_rows(data: np.ndarray) -> np.ndarray:
    return np.log(np.maximum(data, LOG_FLOOR))


def _best_sense(model: AmrModel, ctx: StepContext, content: str) -> tuple:
    dist = model.sense_dist(ctx, content).data[0]
    sid = int(dist.argmax())
    sense = model.vocab.sense[sid]
    return (None if sense == NO_SENSE else sense), _log(dist[sid])


def _masked_label_argmax(label_probs: np.ndarray) -> np.ndarray:
    """Row-wise argmax over edge labels, never UNK or the bootstrap label."""
    masked = label_probs.copy()
    masked[:, :2] = -1.0
    return masked.argmax(axis=-1)


def _split_content(content: str) -> tuple:
    return tuple(content.split(" "))


def expand(
    model: AmrModel,
    bundle: SentenceEncoding,
    hyp: Hypothesis,
    beam_width: int,
    use_edges: bool = True,
) -> List[Tuple[float, Action]]:
    """Score candidate actions for one unfinished hypothesis.

    Returns (log-prob delta, action) pairs; at most beam_width new
    instances, beam_width new attributes, one candidate per existing
    vertex, and the stop action.
    """
    if hyp.finished:
        raise DecodeError("cannot expand a finished hypothesis")
    state = hyp.state
    ctx = model.step_context(bundle, state, use_edges=use_edges)
    status = _log_rows(model.status_dist(ctx).data[0])
    vocab = model.vocab
    t = len(state.produced)
    virgin_bog = state.focused == 0 and t == 1
    bog_done = state.focused == 0 and t > 1

    candidates: List[Tuple[float, Action]] = []
    if not virgin_bog:
        candidates.append((status[oracle.NO_MORE_CHILDREN], Action.no_more_children()))
    if bog_done:
        # the start vertex takes exactly one child (the root); close it
        return candidates

    if virgin_bog:
        # only a fresh root instance is structurally possible here
        mix = model.instance_mixture(ctx)
        top = mix.top_candidates(beam_width, exclude=(UNK, ROOT_UNIT))
        if top:
            vecs = model.bert_based_embed([c for c, _ in top])
            root_id = vocab.label_id(ROOT_LABEL)
            label_lp = _log_rows(model.edge_label_dist(ctx, vecs).data)
            rev_lp = _log_rows(model.edge_reverse_dist(ctx, vecs, [root_id] * len(top)).data)
            for i, (content, prob) in enumerate(top):
                sense, sense_lp = _best_sense(model, ctx, content)
                score = (
                    status[oracle.NEW_INSTANCE]
                    + _log(prob)
                    + sense_lp
                    + label_lp[i, root_id]
                    + rev_lp[i, 0]
                )
                candidates.append(
                    (score, Action.new_instance(_split_content(content), sense, ROOT_LABEL))
                )
        return candidates

    # connect to a previously produced vertex (never the start vertex)
    positions = [i for i, vid in enumerate(state.produced) if vid != 0]
    if positions:
        exist_lp = _log_rows(model.existing_dist(ctx).data[0])
        vecs = tensor.gather(ctx.g_p_all, [pos + 1 for pos in positions])
        label_probs = model.edge_label_dist(ctx, vecs).data
        label_ids = _masked_label_argmax(label_probs)
        rev_probs = model.edge_reverse_dist(ctx, vecs, list(label_ids)).data
        for row, pos in enumerate(positions):
            vid = state.produced[pos]
            lab = int(label_ids[row])
            if state.partial.vertex(vid).kind == ATTRIBUTE:
                rev, rev_lp = 0, _log(rev_probs[row, 0])
            else:
                rev = int(rev_probs[row].argmax())
                rev_lp = _log(rev_probs[row, rev])
            score = (
                status[oracle.CONNECT_EXISTING]
                + exist_lp[pos]
                + _log(label_probs[row, lab])
                + rev_lp
            )
            candidates.append(
                (score, Action.connect(vid, vocab.edge_labels[lab], bool(rev)))
            )

    def new_vertex_candidates(mix, kind: int) -> None:
        top = mix.top_candidates(beam_width, exclude=(UNK, ROOT_UNIT))
        if not top:
            return
        vecs = model.bert_based_embed([c for c, _ in top])
        label_probs = model.edge_label_dist(ctx, vecs).data
        label_ids = _masked_label_argmax(label_probs)
        rev_probs = model.edge_reverse_dist(ctx, vecs, list(label_ids)).data
        for i, (content, prob) in enumerate(top):
            lab = int(label_ids[i])
            label_name = vocab.edge_labels[lab]
            base = status[kind] + _log(prob) + _log(label_probs[i, lab])
            if kind == oracle.NEW_INSTANCE:
                sense, sense_lp = _best_sense(model, ctx, content)
                rev = int(rev_probs[i].argmax())
                score = base + sense_lp + _log(rev_probs[i, rev])
                action = Action.new_instance(_split_content(content), sense, label_name, bool(rev))
            else:
                # an attribute child can only sit below its parent
                score = base + _log(rev_probs[i, 0])
                action = Action.new_attribute(
                    _split_content(content), label_name, False, infer_quoted(content)
                )
            candidates.append((score, action))

    new_vertex_candidates(model.instance_mixture(ctx), oracle.NEW_INSTANCE)
    new_vertex_candidates(model.attribute_mixture(ctx), oracle.NEW_ATTRIBUTE)
    return candidates


@dataclass
class ParseResult:
    graph: AmrGraph
    trace: Tuple[Tuple[int, Action], ...]
    log_prob: float
    score: float  # comparison score (normalized unless disabled)


def default_max_actions(num_tokens: int) -> int:
    return 4 * (2 * num_tokens + 10)


def _final_score(hyp: Hypothesis, length_norm: bool) -> float:
    if not length_norm:
        return hyp.log_prob
    return hyp.log_prob / max(hyp.action_count, 1)


def _search(
    model: AmrModel,
    bundle: SentenceEncoding,
    beam: int,
    max_actions: int,
    length_norm: bool,
    use_edges: bool,
) -> Hypothesis:
    live = [Hypothesis(oracle.initial_state(), 0.0)]
    finished: List[Hypothesis] = []
    # forced closures after the cap pop one queue entry per round, so the
    # loop is bounded even when no candidate survives scoring
    for _ in range(2 * max_actions + 8):
        if not live:
            break
        pool: List[Hypothesis] = []
        for hyp in live:
            if hyp.action_count >= max_actions:
                action = Action.no_more_children()
                advanced = Hypothesis(
                    oracle.apply(hyp.state, action),
                    hyp.log_prob,  # forced step, deliberately unscored
                    hyp.trace + ((hyp.state.focused, action),),
                )
                (finished if advanced.finished else pool).append(advanced)
                continue
            for delta, action in expand(model, bundle, hyp, beam, use_edges):
                try:
                    next_state = oracle.apply(hyp.state, action)
                except OracleError:
                    continue
                advanced = Hypothesis(
                    next_state,
                    hyp.log_prob + delta,
                    hyp.trace + ((hyp.state.focused, action),),
                )
                (finished if advanced.finished else pool).append(advanced)
        pool.sort(key=lambda h: -h.log_prob)
        live = pool[:beam]
        finished.sort(key=lambda h: -h.log_prob)
        finished = finished[: 4 * beam]
    if not finished:
        raise DecodeError("beam search produced no finished hypothesis")
    return max(finished, key=lambda h: _final_score(h, length_norm))


def parse(
    model: AmrModel,
    sentence: AnnotatedSentence,
    beam: int = 8,
    max_actions: Optional[int] = None,
    length_norm: bool = True,
    use_edges: bool = True,
) -> ParseResult:
    """Parse one annotated sentence into a graph.

    The greedy rollout is always evaluated too and the better-scoring of
    the two is returned, so widening the beam never hurts the reported
    score.
    """
    if max_actions is None:
        max_actions = default_max_actions(len(sentence.tokens))
    # below 2 actions not even the root instance could be closed
    max_actions = max(max_actions, 2)
    with tensor.no_grad():
        bundle = model.encode_sentence_bundle(sentence)
        best = _search(model, bundle, beam, max_actions, length_norm, use_edges)
        if beam > 1:
            greedy = _search(model, bundle, 1, max_actions, length_norm, use_edges)
            if _final_score(greedy, length_norm) > _final_score(best, length_norm):
                best = greedy
    graph = oracle.reconstruct(list(best.trace))
    return ParseResult(
        graph=graph,
        trace=best.trace,
        log_prob=best.log_prob,
        score=_final_score(best, length_norm),
    )
