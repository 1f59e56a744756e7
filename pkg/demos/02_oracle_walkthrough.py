"""Action oracle tour: a gold graph becomes a breadth-first action
sequence and comes back unchanged.

Run:  python3 demos/02_oracle_walkthrough.py
"""

from bfamr import oracle
from bfamr.corpus import CorpusExample, build_vocab
from bfamr.graph import parse_penman, write_penman
from bfamr.toy import load_toy_corpus

# the control-verb frame: the boy both wants and swims (reentrancy)
graph = parse_penman("(w / want-01 :ARG0 (b / boy) :ARG1 (s / swim-01 :ARG0 b))")
vocab = build_vocab(load_toy_corpus())

KIND = {0: "NoMoreChildren", 1: "ConnectExisting", 2: "NewInstance", 3: "NewAttribute"}

print("=== deterministic linearization ===")
records = oracle.linearize(graph, vocab)
for r in records:
    a = r.action
    detail = ""
    if a.kind == oracle.NEW_INSTANCE:
        detail = f"  content={' '.join(a.content)!r} sense={a.sense} label={a.label}"
    elif a.kind == oracle.CONNECT_EXISTING:
        detail = f"  target={a.target} label={a.label} if_reverse={a.if_reverse}"
    print(f"  step {r.step}: focus={r.focused}  {KIND[a.kind]:15s}{detail}")

print("\nchild actions:", sum(1 for r in records if r.action.kind != 0))
print("closures:     ", sum(1 for r in records if r.action.kind == 0))
print("breadth-first:", oracle.is_breadth_first(records))

rebuilt = oracle.reconstruct(records)
print("\n=== reconstruction ===")
print(write_penman(rebuilt))
print("round trip exact:", oracle.round_trip_ok(graph, records, rebuilt))

print("\n=== random child order, same graph ===")
for seed in (1, 2):
    shuffled = oracle.linearize(graph, vocab, mode=oracle.RANDOM, rng_seed=seed)
    back = oracle.reconstruct(shuffled)
    kinds = "".join(str(r.action.kind) for r in shuffled)
    print(f"  seed {seed}: kinds={kinds}  round trip {oracle.round_trip_ok(graph, shuffled, back)}")

print("\n=== whole bundled corpus ===")
ok = 0
examples = load_toy_corpus()
for ex in examples:
    rs = oracle.linearize(ex.graph, vocab)
    ok += oracle.round_trip_ok(ex.graph, rs, oracle.reconstruct(rs))
print(f"{ok}/{len(examples)} graphs round trip exactly")
