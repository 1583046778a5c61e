"""Parametrized circuits, the heavy-neighbors ansatz, and exact statevector simulation.

Bit conventions: qubit 0 is the leftmost character of every bitstring, i.e.
the most significant bit of the amplitude index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .graph import WeightedGraph, ego_ranking
from .qubo import ZHamiltonian

MAX_QUBITS = 26  # 1 GiB of complex128 amplitudes


@dataclass(frozen=True)
class AnsatzGate:
    a: int       # Z qubit
    b: int       # Y qubit
    param: int   # index into theta
    layer: int


@dataclass(frozen=True)
class Ansatz:
    """Layered two-qubit R_ZY circuit on |+>^n with one parameter per gate."""

    n_qubits: int
    gates: tuple  # AnsatzGate, parameter indices 0..m-1 in gate order
    layer_sizes: tuple

    @property
    def n_params(self) -> int:
        return len(self.gates)

    def to_json_dict(self) -> dict:
        return {
            "n": self.n_qubits,
            "layers": list(self.layer_sizes),
            "gates": [{"a": g.a, "b": g.b, "param": g.param, "layer": g.layer}
                      for g in self.gates],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Ansatz":
        gates = tuple(AnsatzGate(g["a"], g["b"], g["param"], g["layer"]) for g in d["gates"])
        return cls(d["n"], gates, tuple(d["layers"]))


@dataclass(frozen=True)
class Statevector:
    n_qubits: int
    amplitudes: np.ndarray  # complex128, shape (2^n,)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))


@dataclass(frozen=True)
class SampleSet:
    """Measurement histogram: bitstring -> occurrence count."""

    counts: dict
    shots: int

    def __post_init__(self):
        assert sum(self.counts.values()) == self.shots

    def to_json_dict(self) -> dict:
        return {"shots": self.shots, "counts": dict(sorted(self.counts.items()))}


def build_heavy_neighbors_ansatz(g: WeightedGraph, layers: int, gates_per_layer) -> Ansatz:
    """Layer 0 entangles the heaviest edges; layer k > 0 entangles the top
    radius-k ego-ranked vertex with the next-ranked vertices.

    Pairs already placed in an earlier layer are skipped (the candidate scan
    continues down the ranking until the layer budget is met or candidates run
    out). (a, b) and (b, a) count as the same pair.
    """
    gvec = tuple(int(x) for x in gates_per_layer)
    if layers < 1 or len(gvec) != layers or any(x < 1 for x in gvec):
        raise ValueError("need layers >= 1 and one positive gate count per layer")
    if g.n_edges == 0:
        raise ValueError("graph has no edges")
    placed: set[tuple[int, int]] = set()
    gates: list[AnsatzGate] = []
    layer_sizes: list[int] = []

    edges = sorted(g.edges(), key=lambda e: (-e[2], e[0], e[1]))
    count = 0
    for u, v, _ in edges:
        if count >= gvec[0]:
            break
        placed.add((u, v))
        gates.append(AnsatzGate(u, v, len(gates), 0))
        count += 1
    layer_sizes.append(count)

    for k in range(1, layers):
        ranking = ego_ranking(g, k)
        root = int(ranking.order[0])
        count = 0
        for other in ranking.order[1:]:
            if count >= gvec[k]:
                break
            other = int(other)
            key = (min(root, other), max(root, other))
            if key in placed:
                continue
            placed.add(key)
            gates.append(AnsatzGate(root, other, len(gates), k))
            count += 1
        layer_sizes.append(count)
    return Ansatz(g.n_vertices, tuple(gates), tuple(layer_sizes))


def full_two_layer_ansatz(g: WeightedGraph) -> Ansatz:
    """The full-expressibility preset: all edges in layer 0, all radius-1
    ego gates (minus layer-0 duplicates) in layer 1."""
    return build_heavy_neighbors_ansatz(g, 2, (g.n_edges, g.n_vertices - 1))


def initial_state(n: int) -> Statevector:
    """|+>^n: uniform amplitudes 2^(-n/2)."""
    if not (1 <= n <= MAX_QUBITS):
        raise ValueError(f"n must be in [1, {MAX_QUBITS}]")
    amps = np.full(1 << n, 2.0 ** (-n / 2.0), dtype=np.complex128)
    return Statevector(n, amps)


def apply_rzy(sv: Statevector, a: int, b: int, theta: float) -> Statevector:
    """exp(-i theta/2 Z_a Y_b); theta = 0 is the identity."""
    n = sv.n_qubits
    if a == b:
        raise ValueError("qubits must differ")
    if not (0 <= a < n and 0 <= b < n):
        raise ValueError("qubit index out of range")
    amps = sv.amplitudes.copy()
    _kernels.apply_rzy_inplace(amps, n, a, b, float(theta))
    return Statevector(n, amps)


def prepare(ans: Ansatz, theta) -> Statevector:
    """Initial |+>^n state followed by the gates in order; theta = 0 yields
    exactly the uniform superposition."""
    theta = np.asarray(theta, dtype=np.float64)
    if len(theta) != ans.n_params:
        raise ValueError(f"theta length {len(theta)} != {ans.n_params}")
    sv = initial_state(ans.n_qubits)
    amps = sv.amplitudes  # fresh array, safe to mutate
    for gate in ans.gates:
        _kernels.apply_rzy_inplace(amps, ans.n_qubits, gate.a, gate.b, float(theta[gate.param]))
    return Statevector(ans.n_qubits, amps)


_Z_CACHE: dict[int, np.ndarray] = {}


def _z_matrix(n: int) -> np.ndarray:
    """Rows of Z eigenvalues (+1/-1) per qubit over all basis states."""
    zm = _Z_CACHE.get(n)
    if zm is None:
        idx = np.arange(1 << n, dtype=np.int64)
        zm = np.empty((n, 1 << n), dtype=np.float64)
        for q in range(n):
            zm[q] = 1.0 - 2.0 * ((idx >> (n - 1 - q)) & 1)
        if n <= 20:
            _Z_CACHE[n] = zm
    return zm


def term_weighted_sums(weights: np.ndarray, h: ZHamiltonian) -> np.ndarray:
    """Per-term sum_x weights[x] * sign_alpha(x) over all basis states.

    With weights = |amp|^2 these are the term expectations; VarQITE reuses the
    same contraction with energy-weighted measures.
    """
    n = h.n_qubits
    sums = np.empty(len(h.terms), dtype=np.float64)
    if n <= 20:
        zm = _z_matrix(n)
        zw = zm * weights
        single = zw.sum(axis=1)
        corr = zw @ zm.T
        for t, (_, qubits) in enumerate(h.terms):
            sums[t] = single[qubits[0]] if len(qubits) == 1 else corr[qubits[0], qubits[1]]
    else:
        # memory-light path: per-term parity masks
        idx = np.arange(1 << n, dtype=np.int64)
        total = weights.sum()
        for t, (_, qubits) in enumerate(h.terms):
            parity = (idx >> (n - 1 - qubits[0])) & 1
            for q in qubits[1:]:
                parity = parity ^ ((idx >> (n - 1 - q)) & 1)
            sums[t] = float(total - 2.0 * weights[parity == 1].sum())
    return sums


def expect_z_terms(sv: Statevector, h: ZHamiltonian) -> tuple[np.ndarray, float]:
    """Exact per-term expectations <P_alpha> and energy <H_C> from amplitudes."""
    if sv.n_qubits != h.n_qubits:
        raise ValueError(f"qubit mismatch: state {sv.n_qubits}, hamiltonian {h.n_qubits}")
    expectations = term_weighted_sums(sv.probabilities(), h)
    coeffs = np.array([c for c, _ in h.terms], dtype=np.float64)
    energy = h.constant + float(coeffs @ expectations)
    return expectations, energy


def sample_hist(sv: Statevector, shots: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """Multinomial draw from |amp|^2 in index space: (basis indices, counts).

    Same draw as sample() for the same seed; the index form avoids building
    bitstring dictionaries in inner loops.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(seed)
    probs = np.clip(sv.probabilities(), 0.0, None)
    probs /= probs.sum()
    draws = rng.multinomial(shots, probs)
    idx = np.nonzero(draws)[0].astype(np.int64)
    return idx, draws[idx].astype(np.int64)


def sample(sv: Statevector, shots: int, seed) -> SampleSet:
    """Multinomial draw from |amp|^2; deterministic given the seed."""
    idx, cnt = sample_hist(sv, shots, seed)
    n = sv.n_qubits
    counts = {format(int(i), f"0{n}b"): int(c) for i, c in zip(idx, cnt)}
    return SampleSet(counts, shots)
