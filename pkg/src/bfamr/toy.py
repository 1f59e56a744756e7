"""Bundled synthetic corpus: fifty template sentence/graph pairs.

Seven templates cover the phenomena the model has to handle: plain
predication, transitive frames, control verbs with a reentrant subject,
negation ("-" polarity), numeric quantities, quoted person names, and
multiword date concepts.  Token multisets are unique across examples;
without positional signal two sentences with the same bag of words would
be indistinguishable, so each bag appears exactly once.

The generator is pure and the shipped JSON-lines file is its verbatim
output; a test asserts they stay in sync.
"""

from __future__ import annotations

from collections import Counter
from pathlib import Path

from .corpus import AnnotatedSentence, CorpusExample, load_corpus, save_corpus
from .graph import parse_penman, validate

_DATA = Path(__file__).parent / "data" / "toy_corpus.jsonl"

# surface word -> (pos, ner); everything else falls back by shape
_POS = {
    "the": ("D", "O"),
    "to": ("P", "O"),
    "in": ("P", "O"),
    "does": ("R", "O"),
    "not": ("R", "O"),
}
_NOUNS = ("boy", "girl", "dog", "cat", "bird", "man", "woman", "child")
_NAMES = ("Mary", "John", "Kim", "Lee", "Ada", "Omar")
_YEARS = ("2008", "2012", "2015", "2019", "2020", "2023")


def _tag(token: str, lemma: str) -> tuple:
    if token in _POS:
        return _POS[token]
    if token.isdigit():
        ner = "DATE" if len(token) == 4 else "NUM"
        return "CD", ner
    if token[0].isupper():
        return "NNP", "PERSON"
    if lemma in _NOUNS:
        return "N", "O"
    return "V", "O"


def _example(tokens, lemmas, amr: str) -> CorpusExample:
    tags = [_tag(t, l) for t, l in zip(tokens, lemmas)]
    sentence = AnnotatedSentence(
        tokens=tuple(tokens),
        lemmas=tuple(lemmas),
        pos=tuple(p for p, _ in tags),
        ner=tuple(n for _, n in tags),
    )
    graph = parse_penman(amr)
    validate(graph)
    return CorpusExample(sentence, graph)


def generate_toy_corpus() -> list[CorpusExample]:
    """Deterministic 50-example corpus; no randomness involved."""
    out = []

    # plain predication, senses vary by verb
    for noun, verb, sense in (
        ("boy", "sleep", "01"),
        ("girl", "run", "02"),
        ("dog", "bark", "01"),
        ("cat", "jump", "03"),
        ("bird", "sing", "01"),
        ("man", "laugh", "01"),
        ("woman", "dance", "01"),
        ("child", "cry", "02"),
    ):
        out.append(
            _example(
                ("the", noun, verb + "s"),
                ("the", noun, verb),
                f"(v / {verb}-{sense} :ARG0 (n / {noun}))",
            )
        )

    # transitive frames; each unordered noun pair used once, because the
    # reversed sentence would present the identical bag of words
    for subj, verb, obj in (
        ("boy", "see", "cat"),
        ("girl", "chase", "dog"),
        ("dog", "find", "bird"),
        ("cat", "watch", "man"),
        ("man", "help", "woman"),
        ("woman", "trust", "child"),
        ("child", "draw", "girl"),
        ("bird", "follow", "boy"),
        ("boy", "thank", "woman"),
        ("girl", "teach", "child"),
    ):
        out.append(
            _example(
                ("the", subj, verb + "s", "the", obj),
                ("the", subj, verb, "the", obj),
                f"(v / {verb}-01 :ARG0 (s / {subj}) :ARG1 (o / {obj}))",
            )
        )

    # control verb; the embedded subject reenters the matrix ARG0
    for noun, verb in (
        ("boy", "swim"),
        ("girl", "read"),
        ("dog", "play"),
        ("cat", "hide"),
        ("man", "cook"),
        ("woman", "travel"),
        ("child", "paint"),
        ("bird", "fly"),
    ):
        out.append(
            _example(
                ("the", noun, "wants", "to", verb),
                ("the", noun, "want", "to", verb),
                f"(w / want-01 :ARG0 (n / {noun}) :ARG1 (v / {verb}-01 :ARG0 n))",
            )
        )

    # negation surfaces as the bare "-" polarity constant
    for noun, verb in (
        ("boy", "listen"),
        ("girl", "wait"),
        ("dog", "eat"),
        ("cat", "move"),
        ("man", "drive"),
        ("woman", "sleep"),
    ):
        out.append(
            _example(
                ("the", noun, "does", "not", verb),
                ("the", noun, "does", "not", verb),
                f"(v / {verb}-01 :ARG0 (n / {noun}) :polarity -)",
            )
        )

    # numeric quantity attribute, copied from the surface number
    for num, noun, verb in (
        ("2", "dog", "run"),
        ("3", "cat", "sleep"),
        ("5", "bird", "sing"),
        ("4", "boy", "swim"),
        ("6", "girl", "dance"),
        ("7", "child", "play"),
    ):
        out.append(
            _example(
                (num, noun + "s", verb),
                (num, noun, verb),
                f"(v / {verb}-01 :ARG0 (n / {noun} :quant {num}))",
            )
        )

    # person names become quoted op1 constants under a name vertex
    for name, verb in zip(_NAMES, ("sings", "runs", "laughs", "dances", "reads", "cooks")):
        lemma = verb[:-1]
        out.append(
            _example(
                (name, verb),
                (name, lemma),
                f'(v / {lemma}-01 :ARG0 (p / person :name (n / name :op1 "{name}")))',
            )
        )

    # multiword date concept with a copied year attribute
    for year, (noun, verb) in zip(
        _YEARS,
        (
            ("boy", "arrive"),
            ("girl", "leave"),
            ("man", "return"),
            ("woman", "move"),
            ("dog", "vanish"),
            ("cat", "appear"),
        ),
    ):
        out.append(
            _example(
                ("the", noun, verb + "s", "in", year),
                ("the", noun, verb, "in", year),
                f"(v / {verb}-01 :ARG0 (n / {noun}) :time (d / date-entity :year {year}))",
            )
        )

    bags = Counter(tuple(sorted(ex.sentence.tokens)) for ex in out)
    repeated = [bag for bag, count in bags.items() if count > 1]
    if repeated:
        raise AssertionError(f"duplicate token bags: {repeated}")
    if len(out) != 50:
        raise AssertionError(f"expected 50 examples, built {len(out)}")
    return out


def toy_corpus_path() -> Path:
    return _DATA


def load_toy_corpus() -> list[CorpusExample]:
    return load_corpus(_DATA)


def write_toy_corpus(path: Path | str = _DATA) -> None:
    """Regenerate the shipped file (used once at build time)."""
    save_corpus(generate_toy_corpus(), path)


if __name__ == "__main__":
    write_toy_corpus()
    print(f"wrote {len(load_toy_corpus())} examples to {_DATA}")
