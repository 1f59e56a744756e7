"""Maximum-likelihood training over oracle step sequences.

One example's loss is the summed negative log-likelihood of its gold
action sequence under a fresh child-order draw: deterministic
frequency-sorted order with probability ``order_sampling_p``, uniformly
random otherwise.  Batches are gradient accumulation over examples,
normalized by the total step count, clipped at a global norm, and
applied with Adam under the inverse-square-root warmup schedule.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import decode, nn, oracle, tensor
from .corpus import CorpusExample, Vocabulary
from .model import AmrModel, StepContext, StepDistributions
from .oracle import (
    CONNECT_EXISTING,
    DETERMINISTIC,
    NEW_ATTRIBUTE,
    NEW_INSTANCE,
    NO_MORE_CHILDREN,
    RANDOM,
    StepRecord,
)
from .smatch import corpus_smatch
from .tensor import Tensor


class TrainError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    batch_size: int = 8
    epochs: int = 100
    warmup_steps: int = 400
    lr_scale: float = 1.0
    seed: int = 0
    order_sampling_p: float = 0.5
    clip_norm: float = 1.0
    dev_beam: int = 4
    eval_every_epochs: int = 1
    stop_at_dev: float = 1.0  # end early once dev Smatch reaches this
    use_edges: bool = True  # False zeroes edge vectors in the graph encoder

    def __post_init__(self):
        for name in ("batch_size", "epochs", "warmup_steps", "eval_every_epochs"):
            if getattr(self, name) < 1:
                raise TrainError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 0.0 <= self.order_sampling_p <= 1.0:
            raise TrainError(f"order_sampling_p must be in [0, 1], got {self.order_sampling_p}")
        if self.lr_scale <= 0 or self.clip_norm <= 0:
            raise TrainError("lr_scale and clip_norm must be positive")


def _nll(prob: Tensor) -> Tensor:
    return -tensor.tensor_sum(tensor.log_floor(prob))


def _pick(dist: Tensor, index: int) -> Tensor:
    return tensor.cross_entropy(dist, index)


def step_loss(
    model: AmrModel,
    ctx: StepContext,
    record: StepRecord,
    dists: Optional[StepDistributions] = None,
) -> Tuple[Tensor, int]:
    """Negative log-likelihood of one gold action; returns (loss, term count)."""
    action = record.action
    if dists is None:
        dists = model.predict_step(ctx, teacher=action)
    loss = _pick(dists.status, action.kind)
    terms = 1
    if action.kind == NO_MORE_CHILDREN:
        return loss, terms
    if action.kind == CONNECT_EXISTING:
        target_pos = ctx.produced.index(action.target)
        loss = tensor.add(loss, _pick(dists.existing, target_pos))
        terms += 1
    elif action.kind == NEW_INSTANCE:
        content = " ".join(action.content)
        loss = tensor.add(loss, _nll(dists.instance_content.prob_of(content)))
        loss = tensor.add(loss, _pick(dists.sense, model.vocab.sense_id(action.sense)))
        terms += 2
    elif action.kind == NEW_ATTRIBUTE:
        content = " ".join(action.content)
        loss = tensor.add(loss, _nll(dists.attribute_content.prob_of(content)))
        terms += 1
    loss = tensor.add(loss, _pick(dists.edge_label, model.vocab.label_id(action.label)))
    loss = tensor.add(loss, _pick(dists.edge_reverse, int(action.if_reverse)))
    terms += 2
    return loss, terms


def linearize_example(
    example: CorpusExample, vocab: Vocabulary, config: TrainConfig, rng: np.random.Generator
) -> List[StepRecord]:
    """Fresh order-mode draw, then the oracle linearization."""
    mode = DETERMINISTIC if rng.random() < config.order_sampling_p else RANDOM
    return oracle.linearize(
        example.graph, vocab, mode=mode, rng_seed=int(rng.integers(0, 2**31 - 1))
    )


def example_loss(
    model: AmrModel,
    example: CorpusExample,
    rng: np.random.Generator,
    config: Optional[TrainConfig] = None,
    records: Optional[Sequence[StepRecord]] = None,
    train: bool = False,
) -> Tuple[Tensor, int]:
    """Summed step NLL for one example; returns (loss, step count).

    The sentence encoding is computed once and shared by every step's
    graph context on the same tape.
    """
    config = config or TrainConfig()
    if records is None:
        records = linearize_example(example, model.vocab, config, rng)
    states = oracle.replay_states(list(records))
    bundle = model.encode_sentence_bundle(example.sentence, train=train, rng=rng)
    total: Optional[Tensor] = None
    for record, state in zip(records, states):
        ctx = model.step_context(
            bundle, state, train=train, rng=rng, use_edges=config.use_edges
        )
        loss, _ = step_loss(model, ctx, record)
        total = loss if total is None else tensor.add(total, loss)
    if total is None:
        raise TrainError("example produced no steps")
    return total, len(records)


@dataclass
class TrainResult:
    best_dev_smatch: float
    best_epoch: int
    steps: int
    history: List[dict]


def _dev_smatch(
    model: AmrModel,
    examples: Sequence[CorpusExample],
    beam: int,
    restarts: int = 2,
    use_edges: bool = True,
) -> float:
    pairs = []
    for example in examples:
        try:
            result = decode.parse(model, example.sentence, beam=beam, use_edges=use_edges)
        except decode.DecodeError:
            continue
        pairs.append((result.graph, example.graph))
    if not pairs:
        return 0.0
    return corpus_smatch(pairs, restarts=restarts).f1


def train(
    model: AmrModel,
    corpus: Sequence[CorpusExample],
    config: TrainConfig,
    dev: Optional[Sequence[CorpusExample]] = None,
    checkpoint_dir: Optional[str | Path] = None,
    metrics_path: Optional[str | Path] = None,
    log=None,
) -> TrainResult:
    """Epoch loop with per-batch accumulation and best-dev checkpointing.

    Writes a metrics CSV (step, lr, train_loss, dev_smatch) when asked;
    dev defaults to the training corpus itself for overfit runs.
    """
    corpus = list(corpus)
    if not corpus:
        raise TrainError("training corpus is empty")
    dev_examples = list(dev) if dev is not None else corpus
    rng = np.random.default_rng(config.seed)
    adam = nn.AdamState()
    step = 0
    best = -1.0
    best_epoch = -1
    history: List[dict] = []
    metrics_file = None
    writer = None
    if metrics_path is not None:
        metrics_file = open(metrics_path, "w", newline="", encoding="utf-8")
        writer = csv.writer(metrics_file)
        writer.writerow(["step", "lr", "train_loss", "dev_smatch"])
    try:
        for epoch in range(config.epochs):
            order = rng.permutation(len(corpus))
            epoch_loss = 0.0
            epoch_steps = 0
            for start in range(0, len(corpus), config.batch_size):
                batch = [corpus[i] for i in order[start : start + config.batch_size]]
                plans = [
                    (ex, linearize_example(ex, model.vocab, config, rng)) for ex in batch
                ]
                total_steps = sum(len(records) for _, records in plans)
                for p in model.params.values():
                    p.zero_grad()
                batch_loss = 0.0
                for example, records in plans:
                    loss, _ = example_loss(
                        model, example, rng, config, records=records, train=True
                    )
                    batch_loss += loss.item()
                    tensor.mul(loss, tensor.constant(1.0 / total_steps)).backward()
                nn.clip_global_norm(model.params, config.clip_norm)
                step += 1
                lr = nn.warmup_rsqrt_lr(
                    step, model.config.graph_hidden, config.warmup_steps, config.lr_scale
                )
                nn.adam_step(model.params, adam, lr)
                epoch_loss += batch_loss
                epoch_steps += total_steps
                if writer is not None:
                    writer.writerow([step, f"{lr:.8f}", f"{batch_loss / total_steps:.6f}", ""])
            train_loss = epoch_loss / max(epoch_steps, 1)
            entry = {"epoch": epoch, "step": step, "train_loss": train_loss}
            converged = False
            if (epoch + 1) % config.eval_every_epochs == 0 or epoch == config.epochs - 1:
                dev_f1 = _dev_smatch(
                    model, dev_examples, beam=config.dev_beam, use_edges=config.use_edges
                )
                entry["dev_smatch"] = dev_f1
                if writer is not None:
                    lr = nn.warmup_rsqrt_lr(
                        max(step, 1), model.config.graph_hidden, config.warmup_steps, config.lr_scale
                    )
                    writer.writerow([step, f"{lr:.8f}", f"{train_loss:.6f}", f"{dev_f1:.4f}"])
                if dev_f1 > best:
                    best, best_epoch = dev_f1, epoch
                    if checkpoint_dir is not None:
                        save_model(checkpoint_dir, model, extra={"step": step, "epoch": epoch})
                if log is not None:
                    log(
                        f"epoch {epoch + 1}/{config.epochs} "
                        f"loss {train_loss:.4f} dev_smatch {dev_f1:.4f}"
                    )
                converged = best >= config.stop_at_dev - 1e-9
            history.append(entry)
            if converged:
                break
    finally:
        if metrics_file is not None:
            metrics_file.close()
    if best < 0:
        best, best_epoch = 0.0, 0
    return TrainResult(best_dev_smatch=best, best_epoch=best_epoch, steps=step, history=history)


def save_model(path: str | Path, model: AmrModel, extra: Optional[dict] = None) -> None:
    """Checkpoint directory: tensors + manifest, config text, vocabulary."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    nn.save_checkpoint(path, model.params, extra=extra)
    (path / "config.txt").write_text(model.config.to_text(model.vocab), encoding="utf-8")
    model.vocab.save(path / "vocab.json")


def load_model(path: str | Path, embedder) -> AmrModel:
    from .model import ModelConfig

    path = Path(path)
    for required in ("config.txt", "vocab.json", nn.CHECKPOINT_MANIFEST, nn.CHECKPOINT_TENSORS):
        if not (path / required).exists():
            raise FileNotFoundError(f"checkpoint incomplete: missing {path / required}")
    config = ModelConfig.from_text((path / "config.txt").read_text(encoding="utf-8"))
    vocab = Vocabulary.load(path / "vocab.json")
    model = AmrModel(config, vocab, embedder, seed=0)
    tensors, _ = nn.load_checkpoint(path)
    nn.load_params_into(model.params, tensors)
    return model
