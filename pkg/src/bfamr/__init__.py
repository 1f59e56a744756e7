"""Breadth-first AMR parsing library.

Modules:
    graph: AMR graphs and PENMAN notation.
    corpus: annotated sentences, vocabularies, corpus files.
    oracle: breadth-first action alphabet, linearization, reconstruction.
    tensor: reverse-mode autodiff on numpy arrays.
    nn: layers, optimizer, gradient checking, checkpoints.
    model: the sentence/graph encoder stack and prediction heads.
    train: teacher-forced training loop.
    decode: beam-search parsing.
    smatch: triple extraction and Smatch scoring.
    toy: the bundled synthetic corpus.
    cli: command-line entry points.
"""

from bfamr.graph import (
    AmrGraph,
    Edge,
    GraphError,
    Vertex,
    compose_edge,
    compose_vertex,
    decompose_edge,
    decompose_vertex,
    neighbour_sets,
    parse_penman,
    write_penman,
)

__all__ = [
    "AmrGraph",
    "Edge",
    "GraphError",
    "Vertex",
    "compose_edge",
    "compose_vertex",
    "decompose_edge",
    "decompose_vertex",
    "neighbour_sets",
    "parse_penman",
    "write_penman",
]

__version__ = "0.1.0"
