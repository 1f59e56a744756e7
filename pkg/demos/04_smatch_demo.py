"""Scoring tour: triples, variable alignment, and the exhaustive
cross-check.

Run:  python3 demos/04_smatch_demo.py
"""

import numpy as np

from bfamr.graph import parse_penman
from bfamr.smatch import (
    best_match_count,
    graph_to_triples,
    smatch,
    smatch_exhaustive,
)

gold = parse_penman("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))")
print("=== triples of the gold graph ===")
t = graph_to_triples(gold)
for name, triples in (("instances", t.instances), ("attributes", t.attributes), ("relations", t.relations)):
    print(f"  {name}:")
    for triple in triples:
        print(f"    {triple}")

# a near miss: wrong concept for the embedded verb
pred = parse_penman("(w / want-01 :ARG0 (b / boy) :ARG1 (r / run-02 :ARG0 b))")
score = smatch(pred, gold)
print("\n=== near miss (go-02 parsed as run-02) ===")
print(f"  P={score.precision:.4f}  R={score.recall:.4f}  F1={score.f1:.4f}")

print("\nidentical graphs:", smatch(gold, gold).f1)

# variable names never matter, only structure does
renamed = parse_penman("(x9 / want-01 :ARG0 (k / boy) :ARG1 (q / go-02 :ARG0 k))")
print("renamed variables:", smatch(renamed, gold).f1)

# disjoint graphs share nothing, not even the root triple
print("disjoint graphs:  ", smatch(parse_penman("(c / cat)"), parse_penman("(d / dog)")).f1)

print("\n=== hill climbing agrees with brute force ===")
rng = np.random.default_rng(0)
pairs = [
    ("(a / eat-01 :ARG0 (b / dog) :ARG1 (c / bone))",
     "(x / eat-01 :ARG0 (y / dog) :ARG1 (z / meat))"),
    ("(a / see-01 :ARG0 (b / cat) :ARG1 b)",
     "(p / see-01 :ARG0 (q / cat) :ARG1 (r / bird))"),
]
for p_text, g_text in pairs:
    p, g = parse_penman(p_text), parse_penman(g_text)
    matched = best_match_count(graph_to_triples(p), graph_to_triples(g))
    climbed = smatch(p, g)
    exact = smatch_exhaustive(p, g)
    print(
        f"  matched triples={matched}  climbed F1={climbed.f1:.4f}  "
        f"exhaustive F1={exact.f1:.4f}  agree={climbed.f1 == exact.f1}"
    )
