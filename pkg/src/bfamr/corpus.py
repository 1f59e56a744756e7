"""Annotated sentences, corpus files, and vocabularies.

Corpus files are UTF-8 JSON-lines: one object per line with equal-length
string arrays ``tokens``, ``lemmas``, ``pos``, ``ner`` and a PENMAN string
``amr``.  Vocabularies are deterministic (frequency-descending, ties
lexicographic) and persist as versioned JSON.
"""

from __future__ import annotations

import json
import string
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional

from bfamr.embedder import ContextualEmbedder, HashEmbedder
from bfamr.graph import AmrGraph, GraphError, parse_penman, write_penman

UNK = "<unk>"
NO_SENSE = "<none>"
ROOT_UNIT = "<root>"
ROOT_LABEL = "<root>"

VOCAB_FORMAT_VERSION = 1

_SUFFIXES = ("ing", "ed", "es", "s")


class CorpusError(ValueError):
    """A corpus file or record is malformed."""


@dataclass(frozen=True)
class AnnotatedSentence:
    """Tokenized sentence with per-token lemma, POS, and NER annotations."""

    tokens: tuple[str, ...]
    lemmas: tuple[str, ...]
    pos: tuple[str, ...]
    ner: tuple[str, ...]

    def __post_init__(self):
        m = len(self.tokens)
        if m == 0:
            raise CorpusError("sentence has no tokens")
        if not (len(self.lemmas) == len(self.pos) == len(self.ner) == m):
            raise CorpusError(
                f"annotation layers disagree on length: tokens={m} lemmas={len(self.lemmas)} "
                f"pos={len(self.pos)} ner={len(self.ner)}"
            )

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class CorpusExample:
    """One aligned sentence/graph pair."""

    sentence: AnnotatedSentence
    graph: AmrGraph


def naive_lemma(word: str) -> str:
    """Lowercase plus simple suffix stripping (ing/ed/es/s)."""
    word = word.lower()
    if word.isalpha():
        for suffix in _SUFFIXES:
            if word.endswith(suffix) and len(word) - len(suffix) >= 2:
                return word[: -len(suffix)]
    return word


def naive_annotate(text: str) -> AnnotatedSentence:
    """Fallback annotator: whitespace/punctuation tokens, naive lemmas,
    POS ``X`` and NER ``O`` everywhere."""
    tokens: list[str] = []
    for chunk in text.split():
        head = []
        tail = []
        while chunk and chunk[0] in string.punctuation and len(chunk) > 1:
            head.append(chunk[0])
            chunk = chunk[1:]
        while chunk and chunk[-1] in string.punctuation and len(chunk) > 1:
            tail.append(chunk[-1])
            chunk = chunk[:-1]
        tokens.extend(head)
        tokens.append(chunk)
        tokens.extend(reversed(tail))
    if not tokens:
        raise CorpusError(f"no tokens in {text!r}")
    return AnnotatedSentence(
        tokens=tuple(tokens),
        lemmas=tuple(naive_lemma(t) for t in tokens),
        pos=tuple("X" for _ in tokens),
        ner=tuple("O" for _ in tokens),
    )


_FIELDS = ("tokens", "lemmas", "pos", "ner")


def _example_from_record(record: dict, where: str) -> CorpusExample:
    for key in _FIELDS + ("amr",):
        if key not in record:
            raise CorpusError(f"{where}: missing field {key!r}")
    layers = {}
    for key in _FIELDS:
        value = record[key]
        if not isinstance(value, list) or not all(isinstance(x, str) for x in value):
            raise CorpusError(f"{where}: field {key!r} is not a list of strings")
        layers[key] = tuple(value)
    try:
        sentence = AnnotatedSentence(**layers)
    except CorpusError as err:
        raise CorpusError(f"{where}: {err}") from None
    try:
        graph = parse_penman(record["amr"])
    except GraphError as err:
        raise CorpusError(f"{where}: bad amr: {err}") from None
    return CorpusExample(sentence, graph)


def load_corpus(path: str | Path) -> list[CorpusExample]:
    """Load a JSON-lines corpus file.  Errors name the offending line."""
    examples = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                record = json.loads(line)
            except json.JSONDecodeError as err:
                raise CorpusError(f"{where}: invalid JSON: {err}") from None
            if not isinstance(record, dict):
                raise CorpusError(f"{where}: record is not an object")
            examples.append(_example_from_record(record, where))
    return examples


def save_corpus(examples: list[CorpusExample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for ex in examples:
            record = {
                "tokens": list(ex.sentence.tokens),
                "lemmas": list(ex.sentence.lemmas),
                "pos": list(ex.sentence.pos),
                "ner": list(ex.sentence.ner),
                "amr": write_penman(ex.graph),
            }
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


# ---------------------------------------------------------------------------
# Vocabulary
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Vocabulary:
    """Closed index sets shared by the model and the oracle.

    ``content`` is the shared unit vocabulary: tokens, lemmas, and vertex
    content strings all live in one table (with UNK at id 0 and the
    reserved root unit at id 1), which also indexes the refinement
    embedding.  ``edge_label_frequency`` drives deterministic child
    ordering in the oracle.
    """

    content: tuple[str, ...]
    sense: tuple[str, ...]
    edge_labels: tuple[str, ...]
    pos: tuple[str, ...]
    ner: tuple[str, ...]
    subwords: tuple[str, ...]
    edge_label_frequency: dict[str, int] = field(default_factory=dict)

    @cached_property
    def _content_ids(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.content)}

    @cached_property
    def _sense_ids(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.sense)}

    @cached_property
    def _label_ids(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.edge_labels)}

    @cached_property
    def _pos_ids(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.pos)}

    @cached_property
    def _ner_ids(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.ner)}

    def content_id(self, unit: str) -> int:
        return self._content_ids.get(unit, 0)

    def has_content(self, unit: str) -> bool:
        return unit in self._content_ids

    def sense_id(self, sense: Optional[str]) -> int:
        return self._sense_ids.get(NO_SENSE if sense is None else sense, 0)

    def label_id(self, label: str) -> int:
        return self._label_ids.get(label, 0)

    def pos_id(self, tag: str) -> int:
        return self._pos_ids.get(tag, 0)

    def ner_id(self, tag: str) -> int:
        return self._ner_ids.get(tag, 0)

    def to_json_dict(self) -> dict:
        return {
            "version": VOCAB_FORMAT_VERSION,
            "content": list(self.content),
            "sense": list(self.sense),
            "edge_labels": list(self.edge_labels),
            "pos": list(self.pos),
            "ner": list(self.ner),
            "subwords": list(self.subwords),
            "edge_label_frequency": dict(self.edge_label_frequency),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Vocabulary":
        version = data.get("version")
        if version != VOCAB_FORMAT_VERSION:
            raise CorpusError(f"unsupported vocabulary version {version!r}")
        return cls(
            content=tuple(data["content"]),
            sense=tuple(data["sense"]),
            edge_labels=tuple(data["edge_labels"]),
            pos=tuple(data["pos"]),
            ner=tuple(data["ner"]),
            subwords=tuple(data["subwords"]),
            edge_label_frequency={k: int(v) for k, v in data["edge_label_frequency"].items()},
        )

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_json_dict(), handle, ensure_ascii=False, indent=1)

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        with open(path, encoding="utf-8") as handle:
            return cls.from_json_dict(json.load(handle))


def _ordered(counter: Counter) -> list[str]:
    # Frequency descending, ties lexicographic: deterministic regardless of
    # corpus order.
    return [s for s, _ in sorted(counter.items(), key=lambda kv: (-kv[1], kv[0]))]


def build_vocab(
    examples: list[CorpusExample],
    embedder: Optional[ContextualEmbedder] = None,
    min_freq: int = 1,
) -> Vocabulary:
    """Count a corpus into a :class:`Vocabulary`.

    ``min_freq`` applies to content units only; units seen fewer times fall
    back to UNK at lookup time.
    """
    units: Counter = Counter()
    senses: Counter = Counter()
    labels: Counter = Counter()
    pos_tags: Counter = Counter()
    ner_tags: Counter = Counter()
    for ex in examples:
        units.update(ex.sentence.tokens)
        units.update(ex.sentence.lemmas)
        pos_tags.update(ex.sentence.pos)
        ner_tags.update(ex.sentence.ner)
        for v in ex.graph.vertices:
            units[v.content_string()] += 1
            if v.is_instance:
                senses[v.sense if v.sense is not None else NO_SENSE] += 1
        for e in ex.graph.edges:
            labels[e.label] += 1
    kept_units = Counter(
        {u: c for u, c in units.items() if c >= min_freq and u not in (UNK, ROOT_UNIT)}
    )
    senses.pop(NO_SENSE, None)
    for reserved in (UNK, ROOT_LABEL):
        labels.pop(reserved, None)

    if embedder is None:
        embedder = HashEmbedder()
    subwords = set()
    for unit in list(kept_units) + [ROOT_UNIT]:
        subwords.update(embedder.subtokenize(unit))

    return Vocabulary(
        content=(UNK, ROOT_UNIT, *_ordered(kept_units)),
        sense=(NO_SENSE, *_ordered(senses)),
        edge_labels=(UNK, ROOT_LABEL, *_ordered(labels)),
        pos=(UNK, *_ordered(pos_tags)),
        ner=(UNK, *_ordered(ner_tags)),
        subwords=tuple(sorted(subwords)),
        edge_label_frequency=dict(labels),
    )
