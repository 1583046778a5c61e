"""Weighted-graph data model, file ingestion, coarsening and separators."""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field

import numpy as np


class GraphFormatError(ValueError):
    """Raised when an input file cannot be parsed as a graph."""


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph with positive integer vertex weights and positive
    float edge weights, stored in CSR form (xadj/adjncy/adjwgt).

    Neighbor lists are sorted by vertex index and the structure is symmetric:
    j in adj(i) with weight w iff i in adj(j) with weight w.
    """

    n_vertices: int
    vertex_weights: np.ndarray   # int64, shape (n,)
    xadj: np.ndarray             # int64, shape (n+1,)
    adjncy: np.ndarray           # int64
    adjwgt: np.ndarray           # float64

    @property
    def total_vertex_weight(self) -> int:
        return int(self.vertex_weights.sum())

    @property
    def n_edges(self) -> int:
        return len(self.adjncy) // 2

    @property
    def total_edge_weight(self) -> float:
        return float(self.adjwgt.sum()) / 2.0

    def neighbors(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.xadj[v], self.xadj[v + 1]
        return self.adjncy[lo:hi], self.adjwgt[lo:hi]

    def degree(self, v: int) -> int:
        return int(self.xadj[v + 1] - self.xadj[v])

    def edges(self):
        """Yield (u, v, w) with u < v, each undirected edge once."""
        for u in range(self.n_vertices):
            nbrs, wts = self.neighbors(u)
            for v, w in zip(nbrs, wts):
                if u < v:
                    yield u, int(v), float(w)

    def edge_weight(self, u: int, v: int) -> float:
        nbrs, wts = self.neighbors(u)
        idx = np.searchsorted(nbrs, v)
        if idx < len(nbrs) and nbrs[idx] == v:
            return float(wts[idx])
        return 0.0

    @classmethod
    def from_edges(cls, n_vertices, edges, vertex_weights=None) -> "WeightedGraph":
        """Build from an iterable of (u, v, w) undirected edges.

        Duplicate (u, v) entries are rejected; self-loops and non-positive
        weights are errors.
        """
        if n_vertices <= 0:
            raise GraphFormatError("empty graph")
        if vertex_weights is None:
            vw = np.ones(n_vertices, dtype=np.int64)
        else:
            vw = np.asarray(vertex_weights, dtype=np.int64)
            if len(vw) != n_vertices or np.any(vw <= 0):
                raise GraphFormatError("vertex weights must be positive, one per vertex")
        adj: dict[tuple[int, int], float] = {}
        for u, v, w in edges:
            u, v, w = int(u), int(v), float(w)
            if u == v:
                raise GraphFormatError(f"self-loop at vertex {u}")
            if not (0 <= u < n_vertices and 0 <= v < n_vertices):
                raise GraphFormatError(f"edge ({u},{v}) out of range")
            if w <= 0:
                raise GraphFormatError(f"non-positive edge weight on ({u},{v})")
            key = (min(u, v), max(u, v))
            if key in adj:
                raise GraphFormatError(f"duplicate edge ({u},{v})")
            adj[key] = w
        deg = np.zeros(n_vertices, dtype=np.int64)
        for (u, v) in adj:
            deg[u] += 1
            deg[v] += 1
        xadj = np.zeros(n_vertices + 1, dtype=np.int64)
        np.cumsum(deg, out=xadj[1:])
        adjncy = np.zeros(xadj[-1], dtype=np.int64)
        adjwgt = np.zeros(xadj[-1], dtype=np.float64)
        fill = xadj[:-1].copy()
        for (u, v), w in sorted(adj.items()):
            adjncy[fill[u]] = v
            adjwgt[fill[u]] = w
            fill[u] += 1
            adjncy[fill[v]] = u
            adjwgt[fill[v]] = w
            fill[v] += 1
        # sort each neighbor list by index
        for u in range(n_vertices):
            lo, hi = xadj[u], xadj[u + 1]
            order = np.argsort(adjncy[lo:hi], kind="stable")
            adjncy[lo:hi] = adjncy[lo:hi][order]
            adjwgt[lo:hi] = adjwgt[lo:hi][order]
        return cls(n_vertices, vw, xadj, adjncy, adjwgt)

    def induced_subgraph(self, vertices) -> tuple["WeightedGraph", np.ndarray]:
        """Subgraph induced on `vertices`; returns (subgraph, local->global map)."""
        verts = np.asarray(sorted(vertices), dtype=np.int64)
        local = {int(v): i for i, v in enumerate(verts)}
        edges = []
        for i, v in enumerate(verts):
            nbrs, wts = self.neighbors(int(v))
            for u, w in zip(nbrs, wts):
                j = local.get(int(u))
                if j is not None and i < j:
                    edges.append((i, j, float(w)))
        sub = WeightedGraph.from_edges(len(verts), edges, self.vertex_weights[verts])
        return sub, verts


@dataclass(frozen=True)
class Partition:
    """Bipartition of a weighted graph with derived cut/balance metrics."""

    bits: np.ndarray            # int8, 0 or 1 per vertex
    cut_weight: float
    part_weights: tuple[int, int]
    omega: int

    @property
    def imbalance(self) -> float:
        return abs(self.part_weights[0] - self.part_weights[1]) / self.omega

    def balanced(self, nu: float) -> bool:
        return max(self.part_weights) <= (0.5 + nu) * self.omega

    @classmethod
    def from_bits(cls, g: WeightedGraph, bits) -> "Partition":
        b = np.asarray(bits, dtype=np.int8)
        if len(b) != g.n_vertices:
            raise ValueError(f"partition length {len(b)} != n_vertices {g.n_vertices}")
        cut = 0.0
        for u, v, w in g.edges():
            if b[u] != b[v]:
                cut += w
        w1 = int(g.vertex_weights[b == 1].sum())
        w0 = g.total_vertex_weight - w1
        return cls(b, cut, (w0, w1), g.total_vertex_weight)

    def to_bitstring(self) -> str:
        return "".join(str(int(x)) for x in self.bits)


@dataclass(frozen=True)
class EgoRanking:
    """Vertices ranked by decreasing total edge weight of their radius-k ego graph."""

    radius: int
    order: np.ndarray    # permutation of 0..n-1
    weights: np.ndarray  # ego-graph weight per vertex (indexed by vertex)


@dataclass(frozen=True)
class CoarseningMap:
    """Multilevel coarsening result: finest graph first, coarsest last.

    `levels` holds (coarser_graph, fine_to_coarse) pairs, one per contraction
    round. `fine_to_coarse` is the composed finest -> coarsest map.
    """

    fine_graph: WeightedGraph
    levels: tuple
    target_unreached: bool = field(default=False)

    @property
    def coarse_graph(self) -> WeightedGraph:
        return self.levels[-1][0] if self.levels else self.fine_graph

    @property
    def fine_to_coarse(self) -> np.ndarray:
        mapping = np.arange(self.fine_graph.n_vertices, dtype=np.int64)
        for _, level_map in self.levels:
            mapping = level_map[mapping]
        return mapping


def _parse_metis(lines) -> WeightedGraph:
    it = iter(enumerate(lines, start=1))
    header = None
    for lineno, raw in it:
        line = raw.split("%")[0].strip()
        if line:
            header = (lineno, line)
            break
    if header is None:
        raise GraphFormatError("empty METIS file")
    lineno, line = header
    parts = line.split()
    if len(parts) < 2:
        raise GraphFormatError(f"line {lineno}: METIS header needs 'n m [fmt]'")
    try:
        n, m = int(parts[0]), int(parts[1])
    except ValueError as exc:
        raise GraphFormatError(f"line {lineno}: bad METIS header: {exc}") from None
    fmt = parts[2] if len(parts) > 2 else "0"
    fmt = fmt.zfill(3)
    has_vwgt = fmt[-2] == "1"
    has_ewgt = fmt[-1] == "1"
    if n <= 0:
        raise GraphFormatError(f"line {lineno}: empty graph")

    vertex_weights = np.ones(n, dtype=np.int64)
    edges = {}
    v = 0
    for lineno, raw in it:
        line = raw.split("%")[0].strip()
        if v >= n:
            if line:
                raise GraphFormatError(f"line {lineno}: more vertex lines than header n={n}")
            continue
        tokens = line.split()
        pos = 0
        if has_vwgt:
            if not tokens:
                raise GraphFormatError(f"line {lineno}: missing vertex weight")
            vertex_weights[v] = int(tokens[0])
            pos = 1
        try:
            while pos < len(tokens):
                u = int(tokens[pos]) - 1
                pos += 1
                if has_ewgt:
                    w = float(tokens[pos])
                    pos += 1
                else:
                    w = 1.0
                if not (0 <= u < n):
                    raise GraphFormatError(f"line {lineno}: neighbor {u + 1} out of range")
                if u == v:
                    raise GraphFormatError(f"line {lineno}: self-loop at vertex {v + 1}")
                key = (min(u, v), max(u, v))
                prev = edges.get(key)
                if prev is not None and prev != w:
                    raise GraphFormatError(f"line {lineno}: asymmetric edge weight on ({key[0] + 1},{key[1] + 1})")
                edges[key] = w
        except (ValueError, IndexError) as exc:
            raise GraphFormatError(f"line {lineno}: {exc}") from None
        v += 1
    if v < n:
        raise GraphFormatError(f"expected {n} vertex lines, got {v}")
    if len(edges) != m:
        raise GraphFormatError(f"header declares {m} edges, found {len(edges)}")
    return WeightedGraph.from_edges(n, [(u, w, wt) for (u, w), wt in edges.items()], vertex_weights)


def _parse_edge_list(lines) -> WeightedGraph:
    edges = {}
    max_v = -1
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#")[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) not in (2, 3):
            raise GraphFormatError(f"line {lineno}: expected 'u v [w]'")
        try:
            u, v = int(tokens[0]), int(tokens[1])
            w = float(tokens[2]) if len(tokens) == 3 else 1.0
        except ValueError as exc:
            raise GraphFormatError(f"line {lineno}: {exc}") from None
        if u == v:
            continue
        key = (min(u, v), max(u, v))
        edges[key] = w
        max_v = max(max_v, u, v)
    if max_v < 0:
        raise GraphFormatError("empty edge list")
    return WeightedGraph.from_edges(max_v + 1, [(u, v, w) for (u, v), w in edges.items()])


def _load_matrix_market(stream) -> WeightedGraph:
    from scipy.io import mmread
    from scipy.sparse import coo_matrix

    try:
        mat = mmread(stream)
    except Exception as exc:
        raise GraphFormatError(f"matrix market parse error: {exc}") from None
    mat = coo_matrix(mat)
    if mat.shape[0] != mat.shape[1]:
        raise GraphFormatError(f"non-square matrix {mat.shape[0]}x{mat.shape[1]}")
    n = mat.shape[0]
    if n == 0:
        raise GraphFormatError("empty graph")
    # symmetrize as max(|A|, |A^T|), drop the diagonal
    edges: dict[tuple[int, int], float] = {}
    for i, j, x in zip(mat.row, mat.col, mat.data):
        if i == j:
            continue
        key = (min(int(i), int(j)), max(int(i), int(j)))
        w = abs(float(x))
        if w == 0.0:
            w = 1.0  # pattern entry stored as explicit zero
        edges[key] = max(edges.get(key, 0.0), w)
    return WeightedGraph.from_edges(n, [(u, v, w) for (u, v), w in edges.items()])


def load_graph(source, format: str) -> WeightedGraph:
    """Load a graph from a file path or byte/text stream.

    Formats: 'metis' (1-indexed adjacency), 'edge-list' (0-indexed 'u v [w]'),
    'matrix-market' (square coordinate; asymmetric patterns symmetrized,
    diagonal discarded). Unweighted inputs get unit weights.
    """
    if format == "matrix-market":
        if isinstance(source, (str, os.PathLike)):
            with open(source, "rb") as f:
                return _load_matrix_market(f)
        return _load_matrix_market(source)
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r") as f:
            lines = f.readlines()
    elif isinstance(source, bytes):
        lines = source.decode().splitlines()
    elif isinstance(source, io.TextIOBase):
        lines = source.readlines()
    else:
        lines = source.read()
        if isinstance(lines, bytes):
            lines = lines.decode()
        lines = lines.splitlines()
    if format == "metis":
        return _parse_metis(lines)
    if format == "edge-list":
        return _parse_edge_list(lines)
    raise GraphFormatError(f"unknown format {format!r}")


def save_metis(g: WeightedGraph) -> str:
    """Canonical METIS serialization (vertex and edge weights included)."""
    out = [f"{g.n_vertices} {g.n_edges} 011"]
    for v in range(g.n_vertices):
        nbrs, wts = g.neighbors(v)
        tokens = [str(int(g.vertex_weights[v]))]
        for u, w in zip(nbrs, wts):
            tokens.append(str(int(u) + 1))
            tokens.append(repr(float(w)) if w != int(w) else str(int(w)))
        out.append(" ".join(tokens))
    return "\n".join(out) + "\n"


def ego_ranking(g: WeightedGraph, radius: int) -> EgoRanking:
    """Rank vertices by decreasing total edge weight of their radius-k ego graph.

    Ties break by ascending vertex index. radius 0 is rejected: layer 0 of the
    ansatz works on edges directly, not on rankings.
    """
    if radius < 1:
        raise ValueError("radius must be >= 1")
    n = g.n_vertices
    weights = np.zeros(n, dtype=np.float64)
    for v in range(n):
        # BFS out to `radius` hops
        dist = {v: 0}
        frontier = [v]
        for d in range(radius):
            nxt = []
            for u in frontier:
                nbrs, _ = g.neighbors(u)
                for x in nbrs:
                    x = int(x)
                    if x not in dist:
                        dist[x] = d + 1
                        nxt.append(x)
            frontier = nxt
        # accumulate in canonical vertex order so equal ego graphs produce
        # bit-identical weights regardless of the BFS center
        total = 0.0
        for u in sorted(dist):
            nbrs, wts = g.neighbors(u)
            for x, w in zip(nbrs, wts):
                if u < int(x) and int(x) in dist:
                    total += float(w)
        weights[v] = total
    order = np.lexsort((np.arange(n), -weights))
    return EgoRanking(radius, order.astype(np.int64), weights)


def coarsen(g: WeightedGraph, target_vertices: int, seed: int) -> CoarseningMap:
    """Heavy-edge-matching coarsening down to at most `target_vertices`.

    Vertices are visited in seeded random order; each unmatched vertex matches
    its heaviest-edge unmatched neighbor (ties: ascending index). Rounds repeat
    until the target is met or no further contraction is possible; in the
    latter case the best achieved level is returned with `target_unreached`.
    """
    if not (2 <= target_vertices <= g.n_vertices):
        raise ValueError(f"target_vertices must be in [2, {g.n_vertices}]")
    rng = np.random.default_rng(seed)
    levels = []
    cur = g
    while cur.n_vertices > target_vertices:
        n = cur.n_vertices
        match = np.full(n, -1, dtype=np.int64)
        visit = rng.permutation(n)
        for v in visit:
            v = int(v)
            if match[v] >= 0:
                continue
            nbrs, wts = cur.neighbors(v)
            best_u, best_w = -1, -np.inf
            for u, w in zip(nbrs, wts):
                u = int(u)
                if match[u] >= 0:
                    continue
                if w > best_w or (w == best_w and u < best_u):
                    best_u, best_w = u, float(w)
            if best_u >= 0:
                match[v] = best_u
                match[best_u] = v
            else:
                match[v] = v
        # avoid over-contracting past the target: un-match surplus pairs,
        # keeping heaviest matched edges first
        pairs = sorted({(min(v, int(match[v])), max(v, int(match[v])))
                        for v in range(n) if match[v] != v})
        pairs.sort(key=lambda p: (-cur.edge_weight(p[0], p[1]), p))
        n_next = n - len(pairs)
        while n_next < target_vertices and pairs:
            a, b = pairs.pop()
            match[a] = a
            match[b] = b
            n_next += 1
        if not pairs:
            break
        fine_to_coarse = np.full(n, -1, dtype=np.int64)
        nxt = 0
        for v in range(n):
            if fine_to_coarse[v] >= 0:
                continue
            fine_to_coarse[v] = nxt
            if match[v] != v:
                fine_to_coarse[match[v]] = nxt
            nxt += 1
        cvw = np.zeros(nxt, dtype=np.int64)
        np.add.at(cvw, fine_to_coarse, cur.vertex_weights)
        cedges: dict[tuple[int, int], float] = {}
        for u, v, w in cur.edges():
            cu, cv = int(fine_to_coarse[u]), int(fine_to_coarse[v])
            if cu == cv:
                continue
            key = (min(cu, cv), max(cu, cv))
            cedges[key] = cedges.get(key, 0.0) + w
        cur = WeightedGraph.from_edges(nxt, [(a, b, w) for (a, b), w in cedges.items()], cvw)
        levels.append((cur, fine_to_coarse))
    return CoarseningMap(g, tuple(levels), target_unreached=cur.n_vertices > target_vertices)


def project_partition(cmap: CoarseningMap, coarse_partition: Partition) -> Partition:
    """Lift a coarsest-level partition back to the finest graph."""
    coarse = cmap.coarse_graph
    if len(coarse_partition.bits) != coarse.n_vertices:
        raise ValueError(
            f"partition sized {len(coarse_partition.bits)}, coarse graph has {coarse.n_vertices} vertices")
    fine_bits = coarse_partition.bits[cmap.fine_to_coarse]
    return Partition.from_bits(cmap.fine_graph, fine_bits)


def edge_cut_to_vertex_separator(g: WeightedGraph, p: Partition) -> list[int]:
    """Greedy minimum-weight vertex cover of the cut-edge set.

    Repeatedly picks the endpoint covering the most uncovered cut edges
    (ties: smaller vertex weight, then smaller index).
    """
    cut_edges = [(u, v) for u, v, _ in g.edges() if p.bits[u] != p.bits[v]]
    separator: list[int] = []
    remaining = set(cut_edges)
    while remaining:
        count: dict[int, int] = {}
        for u, v in remaining:
            count[u] = count.get(u, 0) + 1
            count[v] = count.get(v, 0) + 1
        best = min(count, key=lambda x: (-count[x], int(g.vertex_weights[x]), x))
        separator.append(best)
        remaining = {(u, v) for u, v in remaining if u != best and v != best}
    return sorted(separator)
