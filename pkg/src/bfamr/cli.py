"""Operator entry point.

Subcommands: preprocess, oracle-check, train, parse, score, inspect.
Every flag can be pre-set through an environment variable with the
``BFAMR_`` prefix (flag name uppercased, dashes to underscores), with
explicit flags winning.  Exit codes: 0 success, 1 user error, 2 I/O
error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import fields as dataclass_fields
from pathlib import Path

import numpy as np

from . import decode, nn, oracle, train
from .corpus import (
    AnnotatedSentence,
    CorpusError,
    CorpusExample,
    Vocabulary,
    build_vocab,
    load_corpus,
)
from .embedder import HashEmbedder
from .graph import GraphError, read_penman_file, write_penman
from .model import AmrModel, ModelConfig, ModelError
from .smatch import corpus_smatch
from .toy import toy_corpus_path

EXIT_OK = 0
EXIT_USER = 1
EXIT_IO = 2
EXIT_INTERNAL = 3

ENV_PREFIX = "BFAMR_"


class UserError(Exception):
    pass


class IoError(Exception):
    pass


def _env_default(flag: str, fallback=None):
    return os.environ.get(ENV_PREFIX + flag.upper().replace("-", "_"), fallback)


def _env_int(flag: str, fallback=None):
    # argparse does not run `type` over defaults, so cast here
    raw = _env_default(flag, fallback)
    return None if raw is None else int(raw)


def _require_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise IoError(f"{what} not found: {p}")
    return p


def _load_examples(path: str) -> list[CorpusExample]:
    p = _require_file(path, "corpus file")
    try:
        return load_corpus(p)
    except CorpusError as err:
        raise UserError(str(err)) from None


# ------------------------------------------------------------------ run config

_MODEL_KEYS = {f.name for f in dataclass_fields(ModelConfig)}
_TRAIN_KEYS = {f.name for f in dataclass_fields(train.TrainConfig)}
_PATH_KEYS = {"corpus", "dev", "out_dir", "embedder_seed", "min_freq"}


def _read_kv(path: Path) -> dict:
    values = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UserError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def load_run_config(path: str) -> tuple:
    """Split a flat key-value file into model, train, and path settings."""
    values = _read_kv(_require_file(path, "config file"))
    unknown = sorted(set(values) - _MODEL_KEYS - _TRAIN_KEYS - _PATH_KEYS)
    if unknown:
        raise UserError(f"unknown config keys: {', '.join(unknown)}")

    def _cast(key: str, raw: str):
        if key in ("dropout", "lr_scale", "clip_norm", "order_sampling_p", "stop_at_dev"):
            return float(raw)
        if key in ("corpus", "dev", "out_dir"):
            return raw
        return int(raw)

    model_kwargs = {k: _cast(k, v) for k, v in values.items() if k in _MODEL_KEYS}
    train_kwargs = {k: _cast(k, v) for k, v in values.items() if k in _TRAIN_KEYS}
    paths = {k: _cast(k, v) for k, v in values.items() if k in _PATH_KEYS}
    try:
        return ModelConfig(**model_kwargs), train.TrainConfig(**train_kwargs), paths
    except (ModelError, train.TrainError) as err:
        raise UserError(str(err)) from None


# ------------------------------------------------------------------ embedder

def _checkpoint_embedder(ckpt: Path) -> HashEmbedder:
    # dimension and seed travel as extra lines in the checkpoint's config
    values = _read_kv(ckpt / "config.txt")
    dim = int(values.get("contextual_dim", 64))
    seed = int(values.get("embedder_seed", 0))
    return HashEmbedder(dim=dim, seed=seed)


def _load_checkpoint_model(path: str) -> AmrModel:
    ckpt = Path(path)
    for required in ("config.txt", "vocab.json", nn.CHECKPOINT_MANIFEST, nn.CHECKPOINT_TENSORS):
        if not (ckpt / required).exists():
            raise IoError(f"checkpoint not found: missing {ckpt / required}")
    return train.load_model(ckpt, _checkpoint_embedder(ckpt))


# ------------------------------------------------------------------ commands

def cmd_preprocess(args) -> int:
    examples = _load_examples(args.corpus)
    vocab = build_vocab(examples, min_freq=args.min_freq)
    vocab.save(args.vocab_out)
    print(f"examples            {len(examples)}")
    print(f"content units       {len(vocab.content)}")
    print(f"senses              {len(vocab.sense)}")
    print(f"edge labels         {len(vocab.edge_labels)}")
    print(f"pos tags            {len(vocab.pos)}")
    print(f"ner tags            {len(vocab.ner)}")
    print(f"vocab written to    {args.vocab_out}")
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    examples = _load_examples(args.corpus)
    vocab = build_vocab(examples)
    failures = 0
    bfs_ok = 0
    total = 0
    for ex in examples:
        for mode in (oracle.DETERMINISTIC, oracle.RANDOM):
            total += 1
            try:
                records = oracle.linearize(ex.graph, vocab, mode=mode, rng_seed=args.seed)
                rebuilt = oracle.reconstruct(records)
                if not oracle.round_trip_ok(ex.graph, records, rebuilt):
                    failures += 1
                    continue
                if oracle.is_breadth_first(records):
                    bfs_ok += 1
            except oracle.OracleError as err:
                print(f"oracle error: {err}", file=sys.stderr)
                failures += 1
    pct = 100.0 * bfs_ok / total if total else 0.0
    print(
        f"checked {len(examples)} graphs x 2 modes (seed {args.seed}): "
        f"{failures} failures, {pct:.0f}% breadth-first"
    )
    return EXIT_OK if failures == 0 and bfs_ok == total else EXIT_USER


def cmd_train(args) -> int:
    model_cfg, train_cfg, paths = load_run_config(args.config)
    if args.seed is not None:
        train_cfg.seed = args.seed
    if "corpus" not in paths or "out_dir" not in paths:
        raise UserError("config must set corpus= and out_dir=")
    examples = _load_examples(paths["corpus"])
    if not examples:
        raise UserError(f"corpus is empty: {paths['corpus']}")
    dev = _load_examples(paths["dev"]) if "dev" in paths else None
    embedder_seed = int(paths.get("embedder_seed", 0))
    embedder = HashEmbedder(dim=model_cfg.contextual_dim, seed=embedder_seed)
    vocab = build_vocab(examples, embedder, min_freq=int(paths.get("min_freq", 1)))
    model = AmrModel(model_cfg, vocab, embedder, seed=train_cfg.seed)

    out_dir = Path(paths["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt = out_dir / "checkpoint"
    result = train.train(
        model,
        examples,
        train_cfg,
        dev=dev,
        checkpoint_dir=ckpt,
        metrics_path=out_dir / "metrics.csv",
        log=print,
    )
    if ckpt.exists():
        with open(ckpt / "config.txt", "a", encoding="utf-8") as fh:
            fh.write(f"embedder_seed={embedder_seed}\n")
    print(
        f"best dev smatch {result.best_dev_smatch:.4f} at epoch {result.best_epoch + 1}; "
        f"checkpoint in {ckpt}"
    )
    return EXIT_OK


def _read_sentences(path: Path) -> list[AnnotatedSentence]:
    if path.suffix == ".jsonl":
        return [ex.sentence for ex in _load_examples(str(path))]
    sentences = []
    for line in path.read_text(encoding="utf-8").splitlines():
        tokens = tuple(line.split())
        if not tokens:
            continue
        sentences.append(
            AnnotatedSentence(
                tokens=tokens,
                lemmas=tuple(t.lower() for t in tokens),
                pos=("X",) * len(tokens),
                ner=("O",) * len(tokens),
            )
        )
    return sentences


def cmd_parse(args) -> int:
    model = _load_checkpoint_model(args.checkpoint)
    sentences = _read_sentences(_require_file(args.input, "input file"))
    out = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    try:
        for i, sentence in enumerate(sentences):
            result = decode.parse(
                model, sentence, beam=args.beam, length_norm=not args.no_length_norm
            )
            if i:
                out.write("\n")
            out.write(f"# snt: {' '.join(sentence.tokens)}\n")
            if args.trace:
                for focused, action in result.trace:
                    out.write(f"# step focused={focused} {oracle.action_to_dict(action)}\n")
                out.write(f"# log_prob: {result.log_prob:.4f}\n")
            out.write(write_penman(result.graph) + "\n")
    finally:
        if args.output:
            out.close()
    return EXIT_OK


def cmd_score(args) -> int:
    pred_text = _require_file(args.pred, "prediction file").read_text(encoding="utf-8")
    gold_text = _require_file(args.gold, "gold file").read_text(encoding="utf-8")
    try:
        pred = read_penman_file(pred_text)
        gold = read_penman_file(gold_text)
    except GraphError as err:
        raise UserError(f"bad PENMAN input: {err}") from None
    if len(pred) != len(gold):
        raise UserError(f"graph count mismatch: {len(pred)} predictions vs {len(gold)} gold")
    if not pred:
        raise UserError("no graphs to score")
    score = corpus_smatch(zip(pred, gold), restarts=args.restarts, seed=args.seed)
    print(f"P  {score.precision:.4f}")
    print(f"R  {score.recall:.4f}")
    print(f"F1 {score.f1:.4f}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    ckpt = Path(args.checkpoint)
    if not (ckpt / nn.CHECKPOINT_MANIFEST).exists():
        raise IoError(f"checkpoint not found: missing {ckpt / nn.CHECKPOINT_MANIFEST}")
    tensors, extra = nn.load_checkpoint(ckpt)
    total = 0
    for name in sorted(tensors):
        arr = tensors[name]
        total += arr.size
        shape = "x".join(str(d) for d in arr.shape)
        print(f"{name:40s} {shape:>12s} |w|={np.linalg.norm(arr):.4f}")
    print(f"total parameters: {total}")
    if extra:
        print(f"extra: {json.dumps(extra, sort_keys=True)}")
    return EXIT_OK


# ------------------------------------------------------------------ wiring

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bfamr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_seed(p, default=0):
        p.add_argument("--seed", type=int, default=_env_int("seed", default))

    p = sub.add_parser("preprocess", help="build a vocabulary from a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--vocab-out", required=True)
    p.add_argument("--min-freq", type=int, default=1)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("oracle-check", help="round-trip every graph through the oracle")
    p.add_argument("--corpus", default=_env_default("corpus", str(toy_corpus_path())))
    add_seed(p)
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("train", help="train a model from a run config file")
    p.add_argument("--config", required=_env_default("config") is None,
                   default=_env_default("config"))
    p.add_argument("--seed", type=int, default=_env_int("seed"))
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("parse", help="parse sentences with a trained checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.add_argument("--beam", type=int, default=_env_int("beam", 8))
    p.add_argument("--trace", action="store_true")
    p.add_argument("--no-length-norm", action="store_true")
    add_seed(p)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("score", help="Smatch between two PENMAN files")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--restarts", type=int, default=_env_int("restarts", 4))
    add_seed(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("inspect", help="list checkpoint parameters")
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_USER if err.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except UserError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USER
    except IoError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO
    except (OSError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO
    except Exception as err:  # noqa: BLE001  - last-resort boundary
        print(f"internal error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
