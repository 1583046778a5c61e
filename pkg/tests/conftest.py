"""Shared graph builders and independent oracles for the test suite."""

import numpy as np
import pytest

from qdissect import WeightedGraph


def ring_graph(n: int, weight: float = 1.0) -> WeightedGraph:
    return WeightedGraph.from_edges(n, [(i, (i + 1) % n, weight) for i in range(n)])


def grid_graph(rows: int, cols: int) -> WeightedGraph:
    edges = []
    for i in range(rows):
        for j in range(cols):
            v = i * cols + j
            if j + 1 < cols:
                edges.append((v, v + 1, 1.0))
            if i + 1 < rows:
                edges.append((v, v + cols, 1.0))
    return WeightedGraph.from_edges(rows * cols, edges)


def geometric_graph(n: int, seed: int, radius: float = 0.4) -> WeightedGraph:
    """Random geometric graph on the unit square (unit weights)."""
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2))
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if float(np.hypot(*(pts[i] - pts[j]))) <= radius:
                edges.append((i, j, 1.0))
    return WeightedGraph.from_edges(n, edges)


def barbell_graph() -> WeightedGraph:
    """Two unit-weight K4 cliques joined by a single bridge edge."""
    edges = []
    for base in (0, 4):
        for i in range(4):
            for j in range(i + 1, 4):
                edges.append((base + i, base + j, 1.0))
    edges.append((3, 4, 1.0))
    return WeightedGraph.from_edges(8, edges)


def random_weighted_graph(rng: np.random.Generator, n: int,
                          p: float = 0.5, max_w: float = 5.0,
                          unit_vertices: bool = False) -> WeightedGraph:
    """Erdos-Renyi style graph with random positive edge/vertex weights.

    Guaranteed to have at least one edge.
    """
    while True:
        edges = []
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < p:
                    edges.append((i, j, float(rng.uniform(0.1, max_w))))
        if edges:
            break
    vw = None if unit_vertices else rng.integers(1, 4, size=n)
    return WeightedGraph.from_edges(n, edges, vw)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
