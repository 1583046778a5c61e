"""Balance-aware Fiduccia-Mattheyses refinement and the sample-distribution driver.

Moves always drain the heavier side; a pass accepts the best prefix whose
relative imbalance |w0 - w1| / omega is within the tolerance.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .circuit import SampleSet
from .graph import Partition, WeightedGraph
from .qubo import QuboProblem


@dataclass(frozen=True)
class FmConfig:
    max_iterations: int = 10
    epsilon: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")


def gain(g: WeightedGraph, p: Partition, v: int) -> float:
    """Cut-weight reduction from moving v: cut_after - cut_before = -gain."""
    nbrs, wts = g.neighbors(v)
    total = 0.0
    for u, w in zip(nbrs, wts):
        total += w if p.bits[u] != p.bits[v] else -w
    return total


def heavier_side(p: Partition) -> int:
    """Side 0 when weight0 - weight1 >= 0 (ties included), else side 1."""
    return 0 if p.part_weights[0] - p.part_weights[1] >= 0 else 1


class GainTable:
    """Per-vertex gains with max-gain retrieval restricted to one side.

    Lazy max-heaps per side: stale entries (touched, moved, or re-gained
    vertices) are discarded on pop. Equal gains break toward the smaller
    vertex index.
    """

    def __init__(self, g: WeightedGraph, bits: np.ndarray):
        self.g = g
        self.bits = bits
        n = g.n_vertices
        self.gains = np.zeros(n, dtype=np.float64)
        for v in range(n):
            nbrs, wts = g.neighbors(v)
            for u, w in zip(nbrs, wts):
                self.gains[v] += w if bits[u] != bits[v] else -w
        self.touched = np.zeros(n, dtype=bool)
        self.heaps: list[list] = [[], []]
        for v in range(n):
            heapq.heappush(self.heaps[bits[v]], (-self.gains[v], v))

    def max_untouched(self, side: int) -> int | None:
        heap = self.heaps[side]
        while heap:
            neg_gain, v = heap[0]
            if self.touched[v] or self.bits[v] != side or -neg_gain != self.gains[v]:
                heapq.heappop(heap)
                continue
            return v
        return None

    def move(self, v: int) -> float:
        """Flip v to the other side; returns its gain before the move."""
        moved_gain = float(self.gains[v])
        old_side = int(self.bits[v])
        self.bits[v] = 1 - old_side
        self.touched[v] = True
        self.gains[v] = -self.gains[v]
        nbrs, wts = self.g.neighbors(v)
        for u, w in zip(nbrs, wts):
            u = int(u)
            # v left u's side: the shared edge changes cut status
            delta = 2.0 * w if self.bits[u] == old_side else -2.0 * w
            self.gains[u] += delta
            if not self.touched[u]:
                heapq.heappush(self.heaps[self.bits[u]], (-self.gains[u], u))
        return moved_gain


def fm_refine(g: WeightedGraph, init: Partition, cfg: FmConfig) -> Partition:
    """Balance-aware FM: each pass moves untouched max-gain vertices from the
    heavier side, then reverts to the best prefix whose relative imbalance is
    within epsilon.

    Stops when no balanced prefix improves the cut. An unbalanced start
    accepts the best balanced prefix even at non-positive gain, so the output
    imbalance never exceeds max(epsilon, initial imbalance).
    """
    omega = g.total_vertex_weight
    bits = init.bits.copy()
    vw = g.vertex_weights

    for _ in range(cfg.max_iterations):
        start_bits = bits.copy()
        table = GainTable(g, bits)
        b = int(vw[bits == 0].sum()) - int(vw[bits == 1].sum())
        start_balanced = abs(b) / omega <= cfg.epsilon

        g_acc = 0.0
        best_k = -1
        best_gain = -np.inf
        moves: list[int] = []
        for _step in range(g.n_vertices):
            side = 0 if b >= 0 else 1
            v = table.max_untouched(side)
            if v is None:
                break
            g_acc += table.move(v)
            b += 2 * int(vw[v]) if side == 1 else -2 * int(vw[v])
            moves.append(v)
            if abs(b) / omega <= cfg.epsilon and g_acc > best_gain:
                best_gain = g_acc
                best_k = len(moves)

        if best_k < 0 or (start_balanced and best_gain <= 0):
            bits = start_bits
            break
        # revert to the prefix that achieved the accepted gain; an unbalanced
        # start accepts it even at non-positive gain to restore balance
        for v in moves[best_k:]:
            bits[v] = 1 - bits[v]
    return Partition.from_bits(g, bits)


def random_equal_partition(g: WeightedGraph, rng: np.random.Generator) -> Partition:
    """Uniformly random bipartition with equal cardinality (floor(n/2) ones)."""
    n = g.n_vertices
    bits = np.zeros(n, dtype=np.int8)
    bits[rng.choice(n, size=n // 2, replace=False)] = 1
    return Partition.from_bits(g, bits)


def fm_plus_varqite(g: WeightedGraph, q: QuboProblem, samples: SampleSet,
                    cfg: FmConfig) -> SampleSet:
    """Refine every distinct sampled bitstring with fm_refine, keeping
    multiplicities; returns the refined distribution."""
    counts: dict[str, int] = {}
    for bits, mult in samples.counts.items():
        init = Partition.from_bits(g, [int(c) for c in bits])
        refined = fm_refine(g, init, cfg).to_bitstring()
        counts[refined] = counts.get(refined, 0) + mult
    return SampleSet(counts, samples.shots)


def fm_random_baseline(g: WeightedGraph, cfg: FmConfig, count: int) -> SampleSet:
    """FM-only baseline: refine `count` random equal-cardinality starts."""
    rng = np.random.default_rng(cfg.seed)
    counts: dict[str, int] = {}
    for _ in range(count):
        refined = fm_refine(g, random_equal_partition(g, rng), cfg).to_bitstring()
        counts[refined] = counts.get(refined, 0) + 1
    return SampleSet(counts, count)
