"""Balanced-bipartition QUBO, its diagonal Pauli-Z Hamiltonian, and exact oracles."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .graph import Partition, WeightedGraph

__all__ = [
    "QuboProblem", "ZHamiltonian", "Partition", "build_qubo", "default_lambda",
    "qubo_energy", "to_hamiltonian", "ham_energy", "exact_solve", "approximation_error",
]


@dataclass(frozen=True)
class QuboProblem:
    """Cut objective plus quadratic balance penalty:
    C(x) = sum_{(i,j) in E} w_ij (x_i + x_j - 2 x_i x_j) + lam * (sum_i v_i x_i - omega/2)^2
    """

    graph: WeightedGraph
    lam: float
    nu: float = 0.05

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if not (0 <= self.nu < 0.5):
            raise ValueError("nu must be in [0, 0.5)")

    @property
    def omega(self) -> int:
        return self.graph.total_vertex_weight

    @property
    def n(self) -> int:
        return self.graph.n_vertices


@dataclass(frozen=True)
class ZHamiltonian:
    """Diagonal Hamiltonian: constant + sum of Z_i and Z_i Z_j terms.

    terms is a tuple of (coefficient, qubit-index tuple) with 1 or 2 qubits
    per term. Energies are computable by sign flips only.
    """

    n_qubits: int
    constant: float
    terms: tuple  # ((coeff, (i,)) | (coeff, (i, j)), ...)

    def to_json_dict(self) -> dict:
        return {
            "n": self.n_qubits,
            "constant": self.constant,
            "terms": [{"coeff": c, "qubits": list(q)} for c, q in self.terms],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ZHamiltonian":
        return cls(d["n"], d["constant"],
                   tuple((t["coeff"], tuple(t["qubits"])) for t in d["terms"]))

    def energy_table(self) -> np.ndarray:
        """Energies of all 2^n basis states, indexed with qubit 0 as the MSB."""
        n = self.n_qubits
        idx = np.arange(1 << n, dtype=np.int64)
        energies = np.full(1 << n, self.constant, dtype=np.float64)
        for coeff, qubits in self.terms:
            parity = np.zeros(1 << n, dtype=np.int64)
            for q in qubits:
                parity ^= (idx >> (n - 1 - q)) & 1
            energies += coeff * (1.0 - 2.0 * parity)
        return energies


def default_lambda(g: WeightedGraph) -> float:
    """Penalty weight making a unit balance violation cost at least as much as
    re-cutting the heaviest edge."""
    w_max = max((w for _, _, w in g.edges()), default=1.0)
    v_min = int(g.vertex_weights.min())
    return (w_max + 1.0) / max(1, v_min * v_min)


def build_qubo(g: WeightedGraph, lam: float | None = None, nu: float = 0.05) -> QuboProblem:
    if lam is None:
        lam = default_lambda(g)
    return QuboProblem(g, float(lam), float(nu))


def _as_bits(x, n: int) -> np.ndarray:
    if isinstance(x, str):
        b = np.fromiter((int(c) for c in x), dtype=np.int8)
    elif isinstance(x, Partition):
        b = x.bits
    else:
        b = np.asarray(x, dtype=np.int8)
    if len(b) != n:
        raise ValueError(f"bitstring length {len(b)} != {n}")
    return b


def qubo_energy(q: QuboProblem, x) -> float:
    """Exact C(x); invariant under global bit complement."""
    b = _as_bits(x, q.n)
    cut = 0.0
    for i, j, w in q.graph.edges():
        if b[i] != b[j]:
            cut += w
    dev = float(np.dot(q.graph.vertex_weights, b)) - q.omega / 2.0
    return cut + q.lam * dev * dev


def to_hamiltonian(q: QuboProblem) -> ZHamiltonian:
    """Substitute x_i -> (1 - Z_i)/2 in C(x) and collect terms.

    The balance penalty is quadratic-symmetric around omega/2, so no linear
    Z terms survive; the constant offset is retained so that
    ham_energy(x) == qubo_energy(x) exactly.
    """
    g = q.graph
    v = g.vertex_weights.astype(np.float64)
    constant = 0.0
    pair: dict[tuple[int, int], float] = {}
    # cut term: w_ij (x_i + x_j - 2 x_i x_j) -> (w_ij/2)(1 - Z_i Z_j)
    for i, j, w in g.edges():
        constant += w / 2.0
        pair[(i, j)] = pair.get((i, j), 0.0) - w / 2.0
    # penalty: lam * (sum v_i x_i - omega/2)^2 with x_i -> (1 - Z_i)/2 gives
    # lam/4 * (sum_i v_i Z_i)^2 = lam/4 * (sum v_i^2 + 2 sum_{i<j} v_i v_j Z_i Z_j)
    constant += q.lam / 4.0 * float(np.dot(v, v))
    for i in range(g.n_vertices):
        for j in range(i + 1, g.n_vertices):
            c = q.lam / 2.0 * v[i] * v[j]
            pair[(i, j)] = pair.get((i, j), 0.0) + c
    terms = tuple((c, (i, j)) for (i, j), c in sorted(pair.items()) if c != 0.0)
    return ZHamiltonian(g.n_vertices, constant, terms)


def ham_energy(h: ZHamiltonian, x) -> float:
    b = _as_bits(x, h.n_qubits)
    e = h.constant
    for coeff, qubits in h.terms:
        sign = 1.0
        for qb in qubits:
            if b[qb]:
                sign = -sign
        e += coeff * sign
    return e


def qubo_energy_table(q: QuboProblem) -> np.ndarray:
    """C(x) for all 2^n bitstrings, straight from the QUBO formula.

    Index convention matches ZHamiltonian.energy_table (qubit 0 = MSB), but
    the computation is independent of the Hamiltonian substitution.
    """
    n = q.n
    idx = np.arange(1 << n, dtype=np.int64)
    bits = ((idx[:, None] >> (n - 1 - np.arange(n))) & 1).astype(np.float64)
    cut = np.zeros(1 << n, dtype=np.float64)
    for i, j, w in q.graph.edges():
        cut += w * np.abs(bits[:, i] - bits[:, j])
    dev = bits @ q.graph.vertex_weights.astype(np.float64) - q.omega / 2.0
    return cut + q.lam * dev * dev


def exact_solve(q: QuboProblem) -> tuple[float, list[str]]:
    """Brute-force minimum of C(x) over all bitstrings; returns every argmin.

    Exploits the x <-> complement symmetry: only strings with x_0 = 0 are
    enumerated, each optimum is reported along with its complement.
    """
    n = q.n
    if n > 30:
        raise ValueError(f"exact_solve limited to n <= 30, got {n}")
    half_size = 1 << (n - 1) if n > 1 else 2
    v = q.graph.vertex_weights.astype(np.float64)
    edge_list = list(q.graph.edges())
    shifts = n - 1 - np.arange(n)
    c_star = np.inf
    argmins: list[int] = []
    chunk = 1 << 20
    for start in range(0, half_size, chunk):
        idx = np.arange(start, min(start + chunk, half_size), dtype=np.int64)
        bits = ((idx[:, None] >> shifts) & 1).astype(np.float64)
        e = np.zeros(len(idx), dtype=np.float64)
        for i, j, w in edge_list:
            e += w * np.abs(bits[:, i] - bits[:, j])
        dev = bits @ v - q.omega / 2.0
        e += q.lam * dev * dev
        lo = float(e.min())
        if lo < c_star - 1e-12:
            c_star, argmins = lo, []
        if lo <= c_star + 1e-12:
            mask = np.isclose(e, c_star, rtol=1e-12, atol=1e-12)
            argmins.extend(int(x) for x in idx[mask])
    optima = set()
    for i in argmins:
        s = format(i, f"0{n}b")
        optima.add(s)
        optima.add("".join("1" if c == "0" else "0" for c in s))
    return c_star, sorted(optima)


def approximation_error(q: QuboProblem, x, c_star: float) -> float:
    """Relative excess energy (C(x) - C*)/C*, the plotted 1-AR analog.

    Falls back to the absolute excess when C* = 0.
    """
    c = qubo_energy(q, x)
    if c_star > 0:
        return (c - c_star) / c_star
    return c - c_star


def brute_force_energies(q: QuboProblem):
    """Independent oracle: evaluate C(x) for every bitstring by direct formula."""
    for bits in itertools.product((0, 1), repeat=q.n):
        yield "".join(map(str, bits)), qubo_energy(q, np.array(bits, dtype=np.int8))
