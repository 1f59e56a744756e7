"""Training tour: overfit a small model on ten sentences and watch it
reproduce their graphs.

Run:  python3 demos/03_training_demo.py     (about a minute)
"""

import numpy as np

from bfamr import decode, train
from bfamr.corpus import build_vocab
from bfamr.embedder import HashEmbedder
from bfamr.model import AmrModel, ModelConfig
from bfamr.graph import write_penman
from bfamr.smatch import smatch
from bfamr.toy import load_toy_corpus

corpus = load_toy_corpus()[:10]
embedder = HashEmbedder(dim=32, seed=0)
vocab = build_vocab(corpus, embedder)
print(f"{len(corpus)} sentences, {len(vocab.content)} content units")

config = ModelConfig(
    graph_hidden=32,
    refinement_emb=16,
    contextual_dim=32,
    sentence_layers=2,
    graph_layers=2,
    interactive_layers=2,
    ffn_hidden=64,
    heads=4,
    dropout=0.0,
)
model = AmrModel(config, vocab, embedder, seed=0)
print("parameters:", sum(p.data.size for p in model.params.values()))

cfg = train.TrainConfig(
    batch_size=5,
    epochs=40,
    warmup_steps=40,
    lr_scale=1.0,
    seed=0,
    order_sampling_p=1.0,
    dev_beam=1,
    eval_every_epochs=10,
    stop_at_dev=1.0,
)
result = train.train(model, corpus, cfg, log=print)
print(f"\nbest train-set smatch {result.best_dev_smatch:.3f} at epoch {result.best_epoch + 1}")

print("\n=== the model parses its own training data ===")
for ex in corpus[:4]:
    parsed = decode.parse(model, ex.sentence, beam=4)
    score = smatch(parsed.graph, ex.graph)
    print(f"\n  {' '.join(ex.sentence.tokens)}")
    print(f"  gold: {write_penman(ex.graph)}")
    print(f"  pred: {write_penman(parsed.graph)}   (F1 {score.f1:.2f})")

print("\nloss curve (every 5 epochs):")
for h in result.history[::5]:
    print(f"  epoch {h['epoch'] + 1:3d}  loss/step {h['train_loss']:.3f}")
