"""Recursive nested dissection, fill-reducing permutations, and
symbolic-factorization merit factors."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .circuit import full_two_layer_ansatz
from .graph import (CoarseningMap, Partition, WeightedGraph, coarsen,
                    edge_cut_to_vertex_separator, project_partition)
from .qubo import build_qubo
from .refine import FmConfig, fm_refine
from .varqite import VarqiteConfig, run_varqite


@dataclass(frozen=True)
class MeritFactors:
    """Symbolic-factorization estimates: factor non-zeros (fill-in included)
    and a Cholesky-style operation count sum(c_j^2)."""

    nnz_factor: int
    ops: int


@dataclass(frozen=True)
class Permutation:
    """Bijection old-index -> new-index with a cached inverse."""

    perm: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.perm)
        if sorted(p) != list(range(len(p))):
            raise ValueError("not a permutation")

    @property
    def inverse(self) -> np.ndarray:
        inv = np.empty(len(self.perm), dtype=np.int64)
        inv[self.perm] = np.arange(len(self.perm))
        return inv

    def to_text(self) -> str:
        return "\n".join(str(int(x)) for x in self.perm) + "\n"


@dataclass
class DissectNode:
    vertices: tuple
    separator: tuple = ()
    part0: tuple = ()
    part1: tuple = ()
    children: list = field(default_factory=list)

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass
class DissectionTree:
    root: DissectNode
    levels: int


@dataclass(frozen=True)
class DissectConfig:
    nu: float = 0.05
    seed: int = 0
    fm: FmConfig = FmConfig()
    varqite: VarqiteConfig = VarqiteConfig()
    external_bits: str | None = None


def graph_to_pattern(g: WeightedGraph) -> sp.csr_matrix:
    """The graph's adjacency as a symmetric boolean pattern with full diagonal."""
    n = g.n_vertices
    rows = list(range(n))
    cols = list(range(n))
    for u, v, _ in g.edges():
        rows += [u, v]
        cols += [v, u]
    data = np.ones(len(rows), dtype=np.int8)
    return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


def symbolic_factorize(pattern, p: Permutation) -> MeritFactors:
    """Column counts of the Cholesky factor of the permuted pattern.

    Standard elimination-tree symbolic factorization: column j's pattern is
    its sub-diagonal adjacency merged with its children's patterns. c_j is the
    off-diagonal count plus one; nnz = sum c_j, ops = sum c_j^2.
    """
    a = sp.csr_matrix(pattern)
    if a.shape[0] != a.shape[1]:
        raise ValueError("pattern must be square")
    n = a.shape[0]
    if (a.diagonal() == 0).any():
        warnings.warn("pattern missing diagonal entries; treating diagonal as present")
    perm = np.asarray(p.perm, dtype=np.int64)
    if len(perm) != n:
        raise ValueError("permutation size mismatch")
    coo = a.tocoo()
    lower: list[set] = [set() for _ in range(n)]
    for i, j in zip(coo.row, coo.col):
        pi, pj = int(perm[i]), int(perm[j])
        if pi > pj:
            lower[pj].add(pi)
        elif pj > pi:
            lower[pi].add(pj)
    children: list[list[int]] = [[] for _ in range(n)]
    nnz = 0
    ops = 0
    for j in range(n):
        s = lower[j]
        for k in children[j]:
            s |= lower[k]
        s.discard(j)
        cj = len(s) + 1
        nnz += cj
        ops += cj * cj
        if s:
            parent = min(s)
            children[parent].append(j)
            lower[j] = s
    return MeritFactors(nnz, ops)


def _pseudo_peripheral(g: WeightedGraph) -> int:
    def bfs_far(start):
        dist = {start: 0}
        frontier = [start]
        while frontier:
            nxt = []
            for u in frontier:
                nbrs, _ = g.neighbors(u)
                for v in nbrs:
                    v = int(v)
                    if v not in dist:
                        dist[v] = dist[u] + 1
                        nxt.append(v)
            frontier = nxt
        far = max(dist.values())
        return min(v for v, d in dist.items() if d == far)

    return bfs_far(bfs_far(0))


def baseline_partition(g: WeightedGraph, nu: float, seed: int) -> Partition:
    """Classical baseline bipartitioner: greedy BFS region growing from a
    pseudo-peripheral vertex up to half the total weight, then FM refinement."""
    n = g.n_vertices
    if n == 1:
        return Partition.from_bits(g, [0])
    start = _pseudo_peripheral(g)
    omega = g.total_vertex_weight
    bits = np.zeros(n, dtype=np.int8)
    grown = 0
    seen = {start}
    queue = [start]
    pos = 0
    while grown < omega / 2.0:
        if pos >= len(queue):
            # component exhausted: continue growth from any unvisited vertex
            rest = [v for v in range(n) if v not in seen]
            if not rest:
                break
            queue.append(rest[0])
            seen.add(rest[0])
        v = queue[pos]
        pos += 1
        if grown + int(g.vertex_weights[v]) <= (0.5 + nu) * omega:
            bits[v] = 1
            grown += int(g.vertex_weights[v])
        nbrs, _ = g.neighbors(v)
        for u in sorted(int(x) for x in nbrs):
            if u not in seen:
                seen.add(u)
                queue.append(u)
    init = Partition.from_bits(g, bits)
    return fm_refine(g, init, FmConfig(max_iterations=10, epsilon=nu, seed=seed))


def _min_degree_order(g: WeightedGraph, verts: np.ndarray) -> list[int]:
    """Minimum-degree elimination order within a leaf (global vertex ids)."""
    local = {int(v): i for i, v in enumerate(verts)}
    adj = [set() for _ in verts]
    for i, v in enumerate(verts):
        nbrs, _ = g.neighbors(int(v))
        for u in nbrs:
            j = local.get(int(u))
            if j is not None:
                adj[i].add(j)
    alive = set(range(len(verts)))
    order = []
    while alive:
        v = min(alive, key=lambda x: (len(adj[x] & alive), x))
        order.append(int(verts[v]))
        alive.discard(v)
        nbrs = adj[v] & alive
        for a in nbrs:
            adj[a] |= nbrs - {a}
            adj[a].discard(v)
    return order


def _partition_coarse(coarse: WeightedGraph, strategy: str, cfg: DissectConfig,
                      node_seed: int) -> Partition:
    if strategy == "fm-baseline":
        return baseline_partition(coarse, cfg.nu, node_seed)
    if strategy == "varqite":
        q = build_qubo(coarse, nu=cfg.nu)
        ans = full_two_layer_ansatz(coarse)
        vcfg = VarqiteConfig(
            d_tau=cfg.varqite.d_tau, max_steps=cfg.varqite.max_steps,
            shots=cfg.varqite.shots, ridge=cfg.varqite.ridge,
            seed=node_seed, record_every=cfg.varqite.record_every,
            trace_shots=cfg.varqite.trace_shots)
        return run_varqite(q, ans, vcfg).best_partition
    raise ValueError(f"unknown partitioner {strategy!r}")


def nested_dissection(g: WeightedGraph, levels: int, partitioner: str,
                      coarse_target: int, cfg: DissectConfig | None = None
                      ) -> tuple[DissectionTree, Permutation]:
    """Recursive vertex-separator dissection with a pluggable bipartitioner.

    Each node coarsens its subgraph to coarse_target, bipartitions the coarse
    graph, projects the split back, and converts the cut to a vertex
    separator. Leaves are ordered by minimum degree; the final ordering
    numbers each separator after both children (post-order).
    """
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if partitioner not in ("varqite", "fm-baseline", "external-bitstring"):
        raise ValueError(f"unknown partitioner {partitioner!r}")
    cfg = cfg or DissectConfig()
    if partitioner == "external-bitstring" and cfg.external_bits is None:
        raise ValueError("external-bitstring partitioner needs cfg.external_bits")

    def build(verts: np.ndarray, level: int, path: int) -> DissectNode:
        node = DissectNode(vertices=tuple(int(v) for v in verts))
        if level > levels or len(verts) < 2:
            return node
        sub, mapping = g.induced_subgraph(verts)
        node_seed = int(np.random.SeedSequence((cfg.seed, level, path)).generate_state(1)[0])
        if partitioner == "external-bitstring" and level == 1:
            bits = [int(c) for c in cfg.external_bits]
            if len(bits) != sub.n_vertices:
                raise ValueError("external bitstring length mismatch")
            part = Partition.from_bits(sub, bits)
        elif sub.n_edges == 0:
            # disconnected dust: split by weight, zero cut
            bits = np.zeros(sub.n_vertices, dtype=np.int8)
            acc, half = 0, sub.total_vertex_weight / 2.0
            for v in range(sub.n_vertices):
                if acc < half:
                    bits[v] = 1
                    acc += int(sub.vertex_weights[v])
            part = Partition.from_bits(sub, bits)
        else:
            strategy = partitioner if partitioner != "external-bitstring" else "fm-baseline"
            if sub.n_vertices > coarse_target:
                cmap = coarsen(sub, coarse_target, node_seed)
                coarse_part = _partition_coarse(cmap.coarse_graph, strategy, cfg, node_seed)
                part = project_partition(cmap, coarse_part)
            else:
                part = _partition_coarse(sub, strategy, cfg, node_seed)
        sep_local = edge_cut_to_vertex_separator(sub, part)
        sep_set = set(sep_local)
        node.separator = tuple(int(mapping[v]) for v in sep_local)
        p0 = [int(mapping[v]) for v in range(sub.n_vertices)
              if v not in sep_set and part.bits[v] == 0]
        p1 = [int(mapping[v]) for v in range(sub.n_vertices)
              if v not in sep_set and part.bits[v] == 1]
        node.part0 = tuple(p0)
        node.part1 = tuple(p1)
        node.children = [build(np.array(p0, dtype=np.int64), level + 1, 2 * path),
                         build(np.array(p1, dtype=np.int64), level + 1, 2 * path + 1)]
        return node

    root = build(np.arange(g.n_vertices, dtype=np.int64), 1, 1)

    order: list[int] = []

    def emit(node: DissectNode):
        if node.is_leaf:
            if node.vertices:
                order.extend(_min_degree_order(g, np.array(node.vertices, dtype=np.int64)))
            return
        for child in node.children:
            emit(child)
        order.extend(sorted(node.separator))

    emit(root)
    perm = np.empty(g.n_vertices, dtype=np.int64)
    for pos, v in enumerate(order):
        perm[v] = pos
    return DissectionTree(root, levels), Permutation(perm)


@dataclass
class MeritRanking:
    entries: list        # (Partition, MeritFactors) ranked ascending by (ops, nnz, cut)
    filtered_count: int  # candidates dropped by the balance tolerance


def evaluate_partition_merit(g: WeightedGraph, pattern, candidates: list,
                             levels: int, cfg: DissectConfig | None = None) -> MeritRanking:
    """Fix each balanced candidate as the level-1 split, complete remaining
    levels with the fm-baseline partitioner, and rank by merit factors."""
    if not candidates:
        raise ValueError("empty candidate list")
    cfg = cfg or DissectConfig()
    entries = []
    filtered = 0
    for cand in candidates:
        part = cand if isinstance(cand, Partition) else Partition.from_bits(g, [int(c) for c in cand])
        if not part.balanced(cfg.nu):
            filtered += 1
            continue
        ext_cfg = DissectConfig(nu=cfg.nu, seed=cfg.seed, fm=cfg.fm,
                                varqite=cfg.varqite, external_bits=part.to_bitstring())
        _, perm = nested_dissection(g, levels, "external-bitstring",
                                    coarse_target=max(2, g.n_vertices), cfg=ext_cfg)
        merit = symbolic_factorize(pattern, perm)
        entries.append((part, merit))
    entries.sort(key=lambda e: (e[1].ops, e[1].nnz_factor, e[0].cut_weight,
                                e[0].to_bitstring()))
    return MeritRanking(entries, filtered)
