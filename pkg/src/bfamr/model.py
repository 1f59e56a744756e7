"""The parser network.

Four stages, run once per prediction step: sentence encoding (shared
across the steps of one example), partial-graph encoding, an interactive
stack that mixes the two and injects the focused parent, and the
prediction heads that score the next action.

Conventions throughout: vectors are rows; weight matrices are stored
(out_features, in_features) and applied via ``linear``; the graph
encoding matrix ``g_all`` has the learned summary vector at row 0 and
produced vertices at rows 1..t in production order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import nn, tensor
from .corpus import AnnotatedSentence, Vocabulary
from .embedder import ContextualEmbedder
from .graph import AmrGraph, Vertex, neighbour_sets
from .oracle import (
    CONNECT_EXISTING,
    NEW_ATTRIBUTE,
    NEW_INSTANCE,
    NO_MORE_CHILDREN,
    Action,
    DecoderState,
)
from .tensor import Parameter, Tensor


class ModelError(ValueError):
    pass


@dataclass
class ModelConfig:
    """Architecture dimensions; vocabulary sizes are bound at build time."""

    graph_hidden: int = 512
    refinement_emb: int = 300
    contextual_dim: int = 64
    sentence_layers: int = 4
    graph_layers: int = 4
    interactive_layers: int = 4
    ffn_hidden: int = 1024
    heads: int = 8
    dropout: float = 0.1

    def __post_init__(self):
        for name in (
            "graph_hidden",
            "refinement_emb",
            "contextual_dim",
            "sentence_layers",
            "graph_layers",
            "interactive_layers",
            "ffn_hidden",
            "heads",
        ):
            if getattr(self, name) < 1:
                raise ModelError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.graph_hidden % self.heads != 0:
            raise ModelError(
                f"graph_hidden {self.graph_hidden} not divisible by heads {self.heads}"
            )
        if not 0.0 <= self.dropout < 1.0:
            raise ModelError(f"dropout must be in [0, 1), got {self.dropout}")

    _FIELDS = (
        "graph_hidden",
        "refinement_emb",
        "contextual_dim",
        "sentence_layers",
        "graph_layers",
        "interactive_layers",
        "ffn_hidden",
        "heads",
        "dropout",
    )

    def to_text(self, vocab: Optional[Vocabulary] = None) -> str:
        """Flat key=value serialization, one entry per line."""
        lines = []
        for name in self._FIELDS:
            lines.append(f"{name}={getattr(self, name)}")
        if vocab is not None:
            lines.append(f"vocab_content={len(vocab.content)}")
            lines.append(f"vocab_sense={len(vocab.sense)}")
            lines.append(f"vocab_edge_labels={len(vocab.edge_labels)}")
            lines.append(f"vocab_pos={len(vocab.pos)}")
            lines.append(f"vocab_ner={len(vocab.ner)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ModelConfig":
        values: Dict[str, str] = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ModelError(f"config line {lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
        kwargs = {}
        for name in cls._FIELDS:
            if name in values:
                caster = float if name == "dropout" else int
                kwargs[name] = caster(values[name])
        return cls(**kwargs)


@dataclass
class SentenceEncoding:
    """Per-example sentence state, computed once and reused every step."""

    sentence: AnnotatedSentence
    hidden: Tensor  # (m+1, g), row 0 is the summary position
    lemma_vecs: Tensor  # (m, g)
    token_vecs: Tensor  # (m, g)


@dataclass
class StepContext:
    """Everything the prediction heads need for one step."""

    encoding: SentenceEncoding
    h_p: Tensor  # (1, g)
    g_p_all: Tensor  # (t+1, g); rows 1..t are produced vertices
    g_all: Tensor  # pre-interaction graph encoding, same layout
    produced: tuple  # vertex ids in production order
    focused_pos: int  # index into produced

    @property
    def t(self) -> int:
        return len(self.produced)


class MixtureDistribution:
    """Content distribution p(c) = p0 * p_new(c) + p1 * sum copy positions.

    ``new`` ranges over the content vocabulary; ``copy`` over sentence
    positions whose surface string (lemma or token) may repeat.  Total
    mass over {vocab strings} union {copy strings} is exactly 1.
    """

    def __init__(self, gate: Tensor, new: Tensor, copy: Tensor, copy_strings: Sequence[str], vocab: Vocabulary):
        self.gate = gate  # (1, 2)
        self.new = new  # (1, n_content)
        self.copy = copy  # (1, m)
        self.copy_strings = tuple(copy_strings)
        self.vocab = vocab

    def prob_of(self, content: str) -> Tensor:
        """Tape-connected probability of one content string, shape (1, 1)."""
        new_col = tensor.reshape(self.new, (-1, 1))
        gate_col = tensor.reshape(self.gate, (-1, 1))
        p0 = tensor.gather(gate_col, [0])
        p1 = tensor.gather(gate_col, [1])
        total = None
        if self.vocab.has_content(content):
            picked = tensor.gather(new_col, [self.vocab.content_id(content)])
            total = tensor.mul(p0, picked)
        positions = [i for i, s in enumerate(self.copy_strings) if s == content]
        if positions:
            copy_col = tensor.reshape(self.copy, (-1, 1))
            summed = tensor.tensor_sum(tensor.gather(copy_col, positions), axis=0, keepdims=True)
            copied = tensor.mul(p1, summed)
            total = copied if total is None else tensor.add(total, copied)
        if total is None:
            total = tensor.constant(np.zeros((1, 1)))
        return total

    def dense(self) -> Dict[str, float]:
        """Plain-float probability per candidate string (no tape)."""
        p0 = float(self.gate.data[0, 0])
        p1 = float(self.gate.data[0, 1])
        probs: Dict[str, float] = {}
        for idx, unit in enumerate(self.vocab.content):
            probs[unit] = p0 * float(self.new.data[0, idx])
        for pos, unit in enumerate(self.copy_strings):
            probs[unit] = probs.get(unit, 0.0) + p1 * float(self.copy.data[0, pos])
        return probs

    def top_candidates(self, k: int, exclude: Sequence[str] = ()) -> List[tuple]:
        banned = set(exclude)
        probs = self.dense()
        ranked = sorted(
            ((p, s) for s, p in probs.items() if s not in banned),
            key=lambda item: (-item[0], item[1]),
        )
        return [(s, p) for p, s in ranked[:k]]


@dataclass
class StepDistributions:
    """All head outputs for one step; conditional heads may be absent."""

    status: Tensor  # (1, 4)
    existing: Tensor  # (1, t)
    instance_content: MixtureDistribution
    attribute_content: MixtureDistribution
    sense: Optional[Tensor] = None  # (1, n_sense)
    edge_label: Optional[Tensor] = None  # (1, n_labels)
    edge_reverse: Optional[Tensor] = None  # (1, 2)


def _attn_names(prefix: str):
    return [f"{prefix}_{part}" for part in ("wq", "wk", "wv", "wo")]


def _ffn_names(prefix: str):
    return [f"{prefix}_w1", f"{prefix}_b1", f"{prefix}_w2", f"{prefix}_b2"]


class AmrModel:
    """Builds the parameter set and exposes the forward passes."""

    def __init__(
        self,
        config: ModelConfig,
        vocab: Vocabulary,
        embedder: ContextualEmbedder,
        seed: int = 0,
    ):
        self.config = config
        self.vocab = vocab
        self.embedder = embedder
        self.params: Dict[str, Parameter] = {}
        self._rng = np.random.default_rng(seed)
        self._build()

    # ---------------------------------------------------------------- setup

    def _param(self, name: str, data: np.ndarray) -> Parameter:
        if name in self.params:
            raise ModelError(f"duplicate parameter {name}")
        p = Parameter(name, data)
        self.params[name] = p
        return p

    def _xavier(self, name: str, out_dim: int, in_dim: int) -> Parameter:
        return self._param(name, nn.xavier_uniform(self._rng, out_dim, in_dim))

    def _embedding(self, name: str, rows: int, cols: int) -> Parameter:
        return self._param(name, nn.normal_embedding(self._rng, rows, cols))

    def _zeros(self, name: str, *shape: int) -> Parameter:
        return self._param(name, np.zeros(shape))

    def _ones(self, name: str, *shape: int) -> Parameter:
        return self._param(name, np.ones(shape))

    def _add_attention(self, prefix: str, dim: int) -> None:
        for name in _attn_names(prefix):
            self._xavier(name, dim, dim)

    def _add_ffn(self, prefix: str, dim: int, hidden: int) -> None:
        self._xavier(f"{prefix}_w1", hidden, dim)
        self._zeros(f"{prefix}_b1", hidden)
        self._xavier(f"{prefix}_w2", dim, hidden)
        self._zeros(f"{prefix}_b2", dim)

    def _add_layer_norm(self, prefix: str, dim: int) -> None:
        self._ones(f"{prefix}_g", dim)
        self._zeros(f"{prefix}_b", dim)

    def _build(self) -> None:
        cfg = self.config
        g, e, b = cfg.graph_hidden, cfg.refinement_emb, cfg.contextual_dim
        n_content = len(self.vocab.content)
        # refinement pathway shared by every word/phrase/content lookup
        self._embedding("refine/emb", n_content, e)
        self._xavier("refine/w_b", e, b)
        self._xavier("refine/w_t", g, e)
        # five-part token embedding
        self._embedding("embed/pos", len(self.vocab.pos), g)
        self._embedding("embed/ner", len(self.vocab.ner), g)
        self._xavier("embed/combine_w", g, 4 * g + b)
        self._zeros("embed/combine_b", g)
        self._embedding("embed/e0", 1, g)
        for i in range(cfg.sentence_layers):
            p = f"sent/{i}"
            self._add_attention(f"{p}/attn", g)
            self._add_layer_norm(f"{p}/ln1", g)
            self._add_ffn(f"{p}/ffn", g, cfg.ffn_hidden)
            self._add_layer_norm(f"{p}/ln2", g)
        # graph side
        self._embedding("graph/edge_label", len(self.vocab.edge_labels), g)
        self._embedding("graph/edge_reverse", 2, g)
        self._embedding("graph/g0", 1, g)
        for i in range(cfg.graph_layers):
            p = f"graph/{i}"
            self._xavier(f"{p}/w", g, 2 * g)
            self._add_layer_norm(f"{p}/ln1", g)
            self._add_ffn(f"{p}/ffn", g, cfg.ffn_hidden)
            self._add_layer_norm(f"{p}/ln2", g)
        for i in range(cfg.interactive_layers):
            p = f"inter/{i}"
            self._add_attention(f"{p}/gs_cross", g)
            self._add_layer_norm(f"{p}/gs_ln0", g)
            self._add_attention(f"{p}/gs_self", g)
            self._add_layer_norm(f"{p}/gs_ln1", g)
            self._add_ffn(f"{p}/gs_ffn", g, cfg.ffn_hidden)
            self._add_layer_norm(f"{p}/gs_ln2", g)
            self._add_attention(f"{p}/ss_cross", g)
            self._add_layer_norm(f"{p}/ss_ln0", g)
            self._add_layer_norm(f"{p}/ss_focus_ln", g)
            self._add_attention(f"{p}/ss_self", g)
            self._add_layer_norm(f"{p}/ss_ln2", g)
            self._add_ffn(f"{p}/ss_ffn", g, cfg.ffn_hidden)
            self._add_layer_norm(f"{p}/ss_ln3", g)
        # prediction heads
        self._xavier("head/status_w", 4, g)
        self._zeros("head/status_b", 4)
        self._xavier("head/exist_w0", g, g)
        self._xavier("head/exist_w1", g, g)
        self._xavier("head/conc_w", g, g)
        self._xavier("head/attr_w", g, g)
        self._xavier("head/gate_w", 2, g)
        self._zeros("head/gate_b", 2)
        self._xavier("head/new_w", n_content, g)
        self._zeros("head/new_b", n_content)
        self._xavier("head/sense_w", len(self.vocab.sense), 2 * g)
        self._zeros("head/sense_b", len(self.vocab.sense))
        self._xavier("head/edge_label_w", len(self.vocab.edge_labels), 2 * g)
        self._zeros("head/edge_label_b", len(self.vocab.edge_labels))
        self._xavier("head/edge_rev_w", 2, 3 * g)
        self._zeros("head/edge_rev_b", 2)

    # ------------------------------------------------------------ embeddings

    def bert_based_embed(self, units: Sequence[str]) -> Tensor:
        """Refined contextual embedding for whole units, shape (n, g).

        Each unit (word, lemma, or multiword content phrase) gets the mean
        of its sub-token vectors, projected and summed with a learned
        refinement row, then mapped to the graph hidden size.
        """
        if not units:
            raise ModelError("bert_based_embed needs at least one unit")
        contextual = np.stack([self.embedder.unit_vector(u) for u in units])
        ids = [self.vocab.content_id(u) for u in units]
        refined = tensor.add(
            tensor.linear(tensor.constant(contextual), self.params["refine/w_b"]),
            tensor.gather(self.params["refine/emb"], ids),
        )
        return tensor.linear(tensor.relu(refined), self.params["refine/w_t"])

    def embed_sentence(self, sentence: AnnotatedSentence) -> tuple:
        """Five-part token embeddings -> (rows (m+1, g), lemma (m, g), token (m, g))."""
        lemma_vecs = self.bert_based_embed(sentence.lemmas)
        token_vecs = self.bert_based_embed(sentence.tokens)
        pos_rows = tensor.gather(
            self.params["embed/pos"], [self.vocab.pos_id(p) for p in sentence.pos]
        )
        ner_rows = tensor.gather(
            self.params["embed/ner"], [self.vocab.ner_id(n) for n in sentence.ner]
        )
        contextual = tensor.constant(self.embedder.encode_sentence(list(sentence.tokens)))
        combined = tensor.linear(
            tensor.concat([lemma_vecs, token_vecs, pos_rows, ner_rows, contextual], axis=-1),
            self.params["embed/combine_w"],
            self.params["embed/combine_b"],
        )
        rows = tensor.concat([self.params["embed/e0"], combined], axis=0)
        return rows, lemma_vecs, token_vecs

    # --------------------------------------------------------------- encoders

    def _dropout(self, x: Tensor, train: bool, rng: Optional[np.random.Generator]) -> Tensor:
        if not train or self.config.dropout <= 0.0:
            return x
        if rng is None:
            raise ModelError("training forward passes need an rng for dropout")
        return tensor.dropout(x, self.config.dropout, rng, train=True)

    def _attend(self, prefix: str, query: Tensor, keys: Tensor) -> Tensor:
        wq, wk, wv, wo = (self.params[n] for n in _attn_names(prefix))
        return nn.multi_head_attention(query, keys, keys, wq, wk, wv, wo, self.config.heads)

    def _ffn(self, prefix: str, x: Tensor) -> Tensor:
        w1, b1, w2, b2 = (self.params[n] for n in _ffn_names(prefix))
        return nn.ffn(x, w1, b1, w2, b2)

    def _ln(self, prefix: str, x: Tensor) -> Tensor:
        return tensor.layer_norm(x, self.params[f"{prefix}_g"], self.params[f"{prefix}_b"])

    def encode_sentence(
        self, rows: Tensor, train: bool = False, rng: Optional[np.random.Generator] = None
    ) -> Tensor:
        """Self-attention stack over (m+1, g) rows; no positional signal."""
        h = rows
        for i in range(self.config.sentence_layers):
            p = f"sent/{i}"
            h = self._ln(f"{p}/ln1", tensor.add(h, self._dropout(self._attend(f"{p}/attn", h, h), train, rng)))
            h = self._ln(f"{p}/ln2", tensor.add(h, self._dropout(self._ffn(f"{p}/ffn", h), train, rng)))
        return h

    def encode_sentence_bundle(
        self,
        sentence: AnnotatedSentence,
        train: bool = False,
        rng: Optional[np.random.Generator] = None,
    ) -> SentenceEncoding:
        rows, lemma_vecs, token_vecs = self.embed_sentence(sentence)
        hidden = self.encode_sentence(rows, train=train, rng=rng)
        return SentenceEncoding(sentence, hidden, lemma_vecs, token_vecs)

    def embed_vertex(self, vertex: Vertex) -> Tensor:
        """Content-only embedding; type and sense deliberately excluded."""
        return self.bert_based_embed([vertex.content_string()])

    def embed_edge(self, label: str, if_reverse: bool) -> Tensor:
        lab = tensor.gather(self.params["graph/edge_label"], [self.vocab.label_id(label)])
        rev = tensor.gather(self.params["graph/edge_reverse"], [int(if_reverse)])
        return tensor.add(lab, rev)

    def encode_graph(
        self,
        graph: AmrGraph,
        produced: Sequence[int],
        train: bool = False,
        rng: Optional[np.random.Generator] = None,
        use_edges: bool = True,
    ) -> Tensor:
        """Neighbour-averaging recurrence -> (t+1, g); summary row at 0.

        Every edge contributes in both directions through the neighbour
        sets, so information flows toward ancestors and descendants
        alike.  ``use_edges=False`` zeroes the edge vectors, which is
        bit-identical to a model whose edge tables are all zero.
        """
        produced = list(produced)
        if not produced:
            raise ModelError("encode_graph needs at least the start vertex")
        pos_of = {vid: i for i, vid in enumerate(produced)}
        nbrs = neighbour_sets(graph)
        seg: List[int] = []
        nbr: List[int] = []
        label_ids: List[int] = []
        rev_ids: List[int] = []
        for i, vid in enumerate(produced):
            for other, label, rev in nbrs.get(vid, ()):
                seg.append(i)
                nbr.append(pos_of[other])
                label_ids.append(self.vocab.label_id(label))
                rev_ids.append(int(rev))
        counts = np.zeros(len(produced))
        for s in seg:
            counts[s] += 1.0
        inv_counts = tensor.constant(1.0 / np.maximum(counts, 1.0)[:, None])

        v = self.bert_based_embed([graph.vertex(vid).content_string() for vid in produced])
        for i in range(self.config.graph_layers):
            p = f"graph/{i}"
            if seg:
                gathered = tensor.gather(v, nbr)
                if use_edges:
                    edge_vecs = tensor.add(
                        tensor.gather(self.params["graph/edge_label"], label_ids),
                        tensor.gather(self.params["graph/edge_reverse"], rev_ids),
                    )
                else:
                    edge_vecs = tensor.constant(np.zeros(gathered.shape))
                projected = tensor.linear(
                    tensor.concat([gathered, edge_vecs], axis=-1), self.params[f"{p}/w"]
                )
                summed = tensor.segment_sum(projected, seg, len(produced))
                v0 = self._ln(f"{p}/ln1", tensor.add(v, tensor.mul(summed, inv_counts)))
            else:
                v0 = self._ln(f"{p}/ln1", v)
            v = self._ln(f"{p}/ln2", tensor.add(v0, self._dropout(self._ffn(f"{p}/ffn", v0), train, rng)))
        return tensor.concat([self.params["graph/g0"], v], axis=0)

    def interact(
        self,
        hidden: Tensor,
        g_all: Tensor,
        focused_pos: int,
        train: bool = False,
        rng: Optional[np.random.Generator] = None,
    ) -> tuple:
        """Interactive stack -> (h_p (1, g), g_p_all (t+1, g)).

        Per layer the graph side reads the previous sentence state, then
        the sentence side reads the fresh graph state; the pre-interaction
        encoding of the focused vertex is added to every sentence row in
        every layer.
        """
        g_focus = tensor.gather(g_all, [focused_pos + 1])
        h, gx = hidden, g_all
        for i in range(self.config.interactive_layers):
            p = f"inter/{i}"
            gx_new = self._ln(
                f"{p}/gs_ln0", tensor.add(gx, self._dropout(self._attend(f"{p}/gs_cross", gx, h), train, rng))
            )
            gx_new = self._ln(
                f"{p}/gs_ln1",
                tensor.add(gx_new, self._dropout(self._attend(f"{p}/gs_self", gx_new, gx_new), train, rng)),
            )
            gx_new = self._ln(
                f"{p}/gs_ln2", tensor.add(gx_new, self._dropout(self._ffn(f"{p}/gs_ffn", gx_new), train, rng))
            )
            h_new = self._ln(
                f"{p}/ss_ln0",
                tensor.add(h, self._dropout(self._attend(f"{p}/ss_cross", h, gx_new), train, rng)),
            )
            h_new = self._ln(f"{p}/ss_focus_ln", tensor.add(h_new, g_focus))
            h_new = self._ln(
                f"{p}/ss_ln2",
                tensor.add(h_new, self._dropout(self._attend(f"{p}/ss_self", h_new, h_new), train, rng)),
            )
            h_new = self._ln(
                f"{p}/ss_ln3", tensor.add(h_new, self._dropout(self._ffn(f"{p}/ss_ffn", h_new), train, rng))
            )
            h, gx = h_new, gx_new
        return tensor.gather(h, [0]), gx

    def step_context(
        self,
        encoding: SentenceEncoding,
        state: DecoderState,
        train: bool = False,
        rng: Optional[np.random.Generator] = None,
        use_edges: bool = True,
    ) -> StepContext:
        g_all = self.encode_graph(state.partial, state.produced, train=train, rng=rng, use_edges=use_edges)
        focused_pos = state.produced.index(state.focused)
        h_p, g_p_all = self.interact(encoding.hidden, g_all, focused_pos, train=train, rng=rng)
        return StepContext(
            encoding=encoding,
            h_p=h_p,
            g_p_all=g_p_all,
            g_all=g_all,
            produced=tuple(state.produced),
            focused_pos=focused_pos,
        )

    # ------------------------------------------------------------------ heads

    def status_dist(self, ctx: StepContext) -> Tensor:
        return tensor.softmax(
            tensor.linear(ctx.h_p, self.params["head/status_w"], self.params["head/status_b"])
        )

    def existing_dist(self, ctx: StepContext) -> Tensor:
        """Pointer distribution over the t produced vertices, shape (1, t)."""
        query = tensor.linear(ctx.h_p, self.params["head/exist_w0"])
        keys = tensor.linear(
            tensor.gather(ctx.g_p_all, list(range(1, ctx.t + 1))), self.params["head/exist_w1"]
        )
        return tensor.softmax(tensor.matmul(query, tensor.swapaxes(keys, -1, -2)))

    def _mode_vector(self, ctx: StepContext, which: str) -> Tensor:
        w = self.params["head/conc_w" if which == "instance" else "head/attr_w"]
        return tensor.add(ctx.h_p, tensor.relu(tensor.linear(ctx.h_p, w)))

    def _mixture(self, ctx: StepContext, which: str) -> MixtureDistribution:
        h_mode = self._mode_vector(ctx, which)
        gate = tensor.softmax(
            tensor.linear(h_mode, self.params["head/gate_w"], self.params["head/gate_b"])
        )
        new = tensor.softmax(
            tensor.linear(h_mode, self.params["head/new_w"], self.params["head/new_b"])
        )
        if which == "instance":
            vecs, strings = ctx.encoding.lemma_vecs, ctx.encoding.sentence.lemmas
        else:
            vecs, strings = ctx.encoding.token_vecs, ctx.encoding.sentence.tokens
        copy = tensor.softmax(tensor.matmul(h_mode, tensor.swapaxes(vecs, -1, -2)))
        return MixtureDistribution(gate, new, copy, strings, self.vocab)

    def instance_mixture(self, ctx: StepContext) -> MixtureDistribution:
        return self._mixture(ctx, "instance")

    def attribute_mixture(self, ctx: StepContext) -> MixtureDistribution:
        return self._mixture(ctx, "attribute")

    def sense_dist(self, ctx: StepContext, content: str) -> Tensor:
        """p(sense | instance content); content embeds through the shared layer."""
        c_vec = self.bert_based_embed([content])
        x = tensor.concat([self._mode_vector(ctx, "instance"), c_vec], axis=-1)
        return tensor.softmax(
            tensor.linear(x, self.params["head/sense_w"], self.params["head/sense_b"])
        )

    def _h_p_rows(self, ctx: StepContext, k: int) -> Tensor:
        return tensor.gather(ctx.h_p, [0] * k)

    def edge_label_dist(self, ctx: StepContext, v_predict: Tensor) -> Tensor:
        """Label distributions for k candidate vertices, shape (k, n_labels)."""
        k = v_predict.shape[0]
        x = tensor.concat([self._h_p_rows(ctx, k), v_predict], axis=-1)
        return tensor.softmax(
            tensor.linear(x, self.params["head/edge_label_w"], self.params["head/edge_label_b"])
        )

    def edge_reverse_dist(
        self, ctx: StepContext, v_predict: Tensor, label_ids: Sequence[int]
    ) -> Tensor:
        """Reverse-flag distributions conditioned on the chosen labels, (k, 2)."""
        k = v_predict.shape[0]
        label_rows = tensor.gather(self.params["graph/edge_label"], list(label_ids))
        x = tensor.concat([self._h_p_rows(ctx, k), v_predict, label_rows], axis=-1)
        return tensor.softmax(
            tensor.linear(x, self.params["head/edge_rev_w"], self.params["head/edge_rev_b"])
        )

    def predicted_vertex_vector(self, ctx: StepContext, action: Action) -> Tensor:
        """v_predict for the edge heads: pointer row or fresh content embedding."""
        if action.kind == CONNECT_EXISTING:
            pos = ctx.produced.index(action.target)
            return tensor.gather(ctx.g_p_all, [pos + 1])
        if action.kind in (NEW_INSTANCE, NEW_ATTRIBUTE):
            return self.bert_based_embed([" ".join(action.content)])
        raise ModelError(f"no predicted vertex for action kind {action.kind}")

    def predict_step(self, ctx: StepContext, teacher: Optional[Action] = None) -> StepDistributions:
        """All head outputs; conditional heads follow the teacher action."""
        dists = StepDistributions(
            status=self.status_dist(ctx),
            existing=self.existing_dist(ctx),
            instance_content=self.instance_mixture(ctx),
            attribute_content=self.attribute_mixture(ctx),
        )
        if teacher is None or teacher.kind == NO_MORE_CHILDREN:
            return dists
        if teacher.kind == NEW_INSTANCE:
            dists.sense = self.sense_dist(ctx, " ".join(teacher.content))
        v_predict = self.predicted_vertex_vector(ctx, teacher)
        dists.edge_label = self.edge_label_dist(ctx, v_predict)
        dists.edge_reverse = self.edge_reverse_dist(
            ctx, v_predict, [self.vocab.label_id(teacher.label)]
        )
        return dists
