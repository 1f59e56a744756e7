"""Graph data model tour: PENMAN in, structure out, PENMAN back.

Run:  python3 demos/01_graphs_and_penman.py
"""

from bfamr.graph import ATTRIBUTE, parse_penman, validate, write_penman

TEXT = """
(w / want-01
   :ARG0 (b / boy)
   :ARG1 (g / go-02
            :ARG0 b
            :time (d / date-entity :year 2008)
            :destination (s / school)))
"""

graph = parse_penman(TEXT)
validate(graph)

print("=== vertices ===")
for v in graph.vertices:
    kind = "attribute" if v.kind == ATTRIBUTE else "instance"
    print(f"  id={v.id}  {kind:9s}  concept={v.concept()!r}  quoted={v.quoted}")

print("\n=== edges (stored in semantic direction) ===")
for e in graph.edges:
    arrow = f"{e.src} -[{e.label}]-> {e.dst}"
    note = "  written under the child with -of" if e.if_reverse else ""
    print(f"  {arrow}{note}")
    print(f"    syntactic parent: {e.syntactic_parent}, child: {e.syntactic_child}")

print(f"\nroot: vertex {graph.root} ({graph.vertex(graph.root).concept()})")

# the boy is reentrant: wanted by w, goer of g
parents = [e for e in graph.edges if e.syntactic_child == 1]
print(f"vertex 1 has {len(parents)} syntactic parents (reentrancy)")

print("\n=== round trip ===")
out = write_penman(graph)
print(out)
again = parse_penman(out)
print("\nstable after one cycle:", write_penman(again) == out)

# an inverted edge keeps its semantic direction in storage
inv = parse_penman("(b / boy :ARG0-of (s / snore-01))")
e = inv.edges[0]
print("\n(b / boy :ARG0-of (s / snore-01)) stores:", f"{e.src} -[{e.label}]-> {e.dst}")
print("if_reverse:", e.if_reverse, " (snore-01 is the semantic source)")
