"""VarQITE evolution engine: assemble G and D, solve the linear system,
step parameters by forward Euler, and record convergence diagnostics."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .circuit import (Ansatz, SampleSet, Statevector, prepare, sample,
                      sample_hist, term_weighted_sums)
from .graph import Partition
from .qubo import QuboProblem, ZHamiltonian, ham_energy, to_hamiltonian

TRACE_SCHEMA = "qdissect/trace-v1"


class SingularSystemError(RuntimeError):
    """G^T G is singular and no regularization was requested."""


@dataclass(frozen=True)
class VarqiteConfig:
    d_tau: float = 0.1
    max_steps: int = 200
    shots: int = 0          # 0 = exact expectations
    ridge: float = 1e-6
    seed: int = 0
    record_every: int = 1
    trace_shots: int = 2000  # diagnostics sampling when shots == 0
    early_stop: bool = False  # stop once a balanced optimum is sampled (needs c_star)

    def __post_init__(self):
        if self.d_tau < 0:
            raise ValueError("d_tau must be >= 0")
        if self.ridge < 0:
            raise ValueError("ridge must be >= 0")


@dataclass
class VarqiteState:
    theta: np.ndarray
    step: int
    energy: float


@dataclass(frozen=True)
class TraceRecord:
    step: int
    energy: float
    best_sampled: float
    mean_sampled: float
    p10: float
    p90: float
    best_so_far: float
    best_so_far_bits: str
    rel_error: float | None

    def to_json_dict(self) -> dict:
        return {
            "step": self.step,
            "energy": self.energy,
            "best_sampled": self.best_sampled,
            "mean_sampled": self.mean_sampled,
            "p10": self.p10,
            "p90": self.p90,
            "best_so_far": self.best_so_far,
            "best_so_far_bits": self.best_so_far_bits,
            "rel_error": self.rel_error,
        }


@dataclass
class ConvergenceTrace:
    records: list = field(default_factory=list)

    def to_jsonl(self) -> str:
        lines = [json.dumps({"schema": TRACE_SCHEMA})]
        lines += [json.dumps(r.to_json_dict(), sort_keys=True) for r in self.records]
        return "\n".join(lines) + "\n"


@dataclass
class VarqiteResult:
    samples: SampleSet
    trace: ConvergenceTrace
    best_partition: Partition
    best_balanced: bool
    theta: np.ndarray
    preparations_per_step: list


def _rng(seed: int, step: int, circuit_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, step, circuit_index)))


def _hist_of_sampleset(ss: SampleSet) -> tuple[np.ndarray, np.ndarray]:
    strings = sorted(ss.counts)
    idx = np.array([int(s, 2) for s in strings], dtype=np.int64)
    cnt = np.array([ss.counts[s] for s in strings], dtype=np.int64)
    return idx, cnt


def _zbits(idx: np.ndarray, n: int) -> np.ndarray:
    """Z eigenvalues (+1/-1) per qubit for each basis index (qubit 0 = MSB)."""
    shifts = n - 1 - np.arange(n, dtype=np.int64)
    return 1.0 - 2.0 * ((idx[:, None] >> shifts) & 1)


def _term_signs(zb: np.ndarray, h: ZHamiltonian) -> np.ndarray:
    signs = np.empty((len(h.terms), zb.shape[0]), dtype=np.float64)
    for t, (_, qubits) in enumerate(h.terms):
        col = zb[:, qubits[0]].copy()
        for q in qubits[1:]:
            col *= zb[:, q]
        signs[t] = col
    return signs


def _hist_energies(idx: np.ndarray, h: ZHamiltonian,
                   table: np.ndarray | None, zb: np.ndarray) -> np.ndarray:
    if table is not None:
        return table[idx]
    coeffs = np.array([c for c, _ in h.terms], dtype=np.float64)
    return h.constant + coeffs @ _term_signs(zb, h)


def _sampled_term_expectations(ss: SampleSet, h: ZHamiltonian) -> tuple[np.ndarray, float, dict]:
    """Term expectations, mean energy, and per-string energies from a histogram."""
    idx, cnt = _hist_of_sampleset(ss)
    zb = _zbits(idx, h.n_qubits)
    freq = cnt / ss.shots
    expectations = _term_signs(zb, h) @ freq
    e_arr = _hist_energies(idx, h, None, zb)
    energies = {s: float(e) for s, e in zip(sorted(ss.counts), e_arr)}
    return expectations, float(freq @ e_arr), energies


def assemble_D(sv: Statevector, h: ZHamiltonian,
               shots: int = 0, rng: np.random.Generator | None = None,
               energy_table: np.ndarray | None = None,
               sampleset: SampleSet | None = None,
               hist: tuple | None = None) -> np.ndarray:
    """D_alpha = -(<P_alpha H_C> - E <P_alpha>), from one state.

    All terms are Z-diagonal, so with shots > 0 a single sampled histogram
    serves every term: D_alpha = -mean[P_alpha(x) (C(x) - mean energy)].
    """
    if shots > 0:
        if hist is not None:
            idx, cnt = hist
        elif sampleset is not None:
            idx, cnt = _hist_of_sampleset(sampleset)
        else:
            idx, cnt = sample_hist(sv, shots, rng)
        zb = _zbits(idx, h.n_qubits)
        freq = cnt / shots
        e_arr = _hist_energies(idx, h, energy_table, zb)
        excess = e_arr - float(freq @ e_arr)
        return -(_term_signs(zb, h) @ (freq * excess))
    probs = sv.probabilities()
    table = energy_table if energy_table is not None else h.energy_table()
    energy = float(probs @ table)
    return -term_weighted_sums(probs * (table - energy), h)


def assemble_G(ans: Ansatz, theta: np.ndarray, h: ZHamiltonian,
               shots: int = 0, seed: int = 0, step: int = 0,
               prep_counter: list | None = None) -> np.ndarray:
    """Parameter-shift assembly: column j = (<P>(theta + pi/2 e_j) -
    <P>(theta - pi/2 e_j)) / 4, two state preparations per column."""
    m = ans.n_params
    g_mat = np.empty((len(h.terms), m), dtype=np.float64)
    for j in range(m):
        cols = []
        for k, shift in enumerate((math.pi / 2.0, -math.pi / 2.0)):
            shifted = theta.copy()
            shifted[j] += shift
            sv = prepare(ans, shifted)
            if prep_counter is not None:
                prep_counter[0] += 1
            if shots > 0:
                idx, cnt = sample_hist(sv, shots, _rng(seed, step, 1 + 2 * j + k))
                expectations = _term_signs(_zbits(idx, h.n_qubits), h) @ (cnt / shots)
            else:
                expectations = term_weighted_sums(sv.probabilities(), h)
            cols.append(expectations)
        g_mat[:, j] = (cols[0] - cols[1]) / 4.0
    return g_mat


def solve_step(g_mat: np.ndarray, d_vec: np.ndarray, ridge: float) -> np.ndarray:
    """Ridge-regularized least squares (G^T G + eps I) theta_dot = G^T D via a
    dense symmetric factorization; deterministic."""
    m = g_mat.shape[1]
    a = g_mat.T @ g_mat + ridge * np.eye(m)
    b = g_mat.T @ d_vec
    try:
        c, low = scipy.linalg.cho_factor(a)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"normal equations singular (ridge={ridge}): {exc}") from None
    except scipy.linalg.LinAlgError as exc:
        raise SingularSystemError(f"normal equations singular (ridge={ridge}): {exc}") from None
    return scipy.linalg.cho_solve((c, low), b)


def run_varqite(q: QuboProblem, ans: Ansatz, cfg: VarqiteConfig,
                c_star: float | None = None) -> VarqiteResult:
    """Forward-Euler VarQITE loop: per step one preparation for E and D plus
    2m parameter-shift preparations for G.

    Returns the final sampled histogram, the convergence trace, and the best
    balanced partition seen across all iterations' samples (best unbalanced
    one, flagged, if no sample meets the balance tolerance).
    """
    if ans.n_qubits != q.n:
        raise ValueError("ansatz qubits must match graph vertices")
    h = to_hamiltonian(q)
    table = h.energy_table() if q.n <= 20 else None
    shifts = q.n - 1 - np.arange(q.n, dtype=np.int64)
    vw = q.graph.vertex_weights.astype(np.float64)
    cap = (0.5 + q.nu) * q.omega
    m = ans.n_params
    theta = np.zeros(m, dtype=np.float64)
    trace = ConvergenceTrace()
    prep_counts: list[int] = []

    # best sample overall (trace diagnostics) and best balanced sample
    # (the partition the pipeline consumes) are tracked separately
    trace_best_bits: str | None = None
    trace_best = math.inf
    best_bits: str | None = None
    best_energy = math.inf
    best_is_balanced = False

    def consider(bits: str, energy: float):
        nonlocal best_bits, best_energy, best_is_balanced, trace_best, trace_best_bits
        if energy < trace_best:
            trace_best, trace_best_bits = energy, bits
        part = Partition.from_bits(q.graph, [int(c) for c in bits])
        balanced = part.balanced(q.nu)
        if balanced and not best_is_balanced:
            best_bits, best_energy, best_is_balanced = bits, energy, True
        elif balanced == best_is_balanced and energy < best_energy - 1e-12:
            best_bits, best_energy = bits, energy

    final_shots = cfg.shots if cfg.shots > 0 else cfg.trace_shots

    for step in range(cfg.max_steps):
        counter = [0]
        sv = prepare(ans, theta)
        counter[0] += 1
        if cfg.shots > 0:
            idx, cnt = sample_hist(sv, cfg.shots, _rng(cfg.seed, step, 0))
            zb = _zbits(idx, q.n)
            e_arr = _hist_energies(idx, h, table, zb)
            freq = cnt / cfg.shots
            energy = float(freq @ e_arr)
            excess = e_arr - energy
            d_vec = -(_term_signs(zb, h) @ (freq * excess))
        else:
            probs = sv.probabilities()
            tbl = table if table is not None else h.energy_table()
            energy = float(probs @ tbl)
            d_vec = -term_weighted_sums(probs * (tbl - energy), h)
            idx, cnt = sample_hist(sv, cfg.trace_shots, _rng(cfg.seed, step, 0))
            e_arr = _hist_energies(idx, h, tbl, None)
        g_mat = assemble_G(ans, theta, h, shots=cfg.shots, seed=cfg.seed,
                           step=step, prep_counter=counter)
        prep_counts.append(counter[0])

        # only two sampled strings per step can change the tracked bests:
        # the lowest-energy one overall and the lowest-energy balanced one
        bits01 = ((idx[:, None] >> shifts) & 1)
        w1 = bits01 @ vw
        bal = np.maximum(w1, q.omega - w1) <= cap
        j = int(np.argmin(e_arr))
        consider(format(int(idx[j]), f"0{q.n}b"), float(e_arr[j]))
        if bal.any():
            sub = np.flatnonzero(bal)
            jb = int(sub[np.argmin(e_arr[sub])])
            consider(format(int(idx[jb]), f"0{q.n}b"), float(e_arr[jb]))

        if step % cfg.record_every == 0 or step == cfg.max_steps - 1:
            sampled = np.repeat(e_arr, cnt)
            rel = None
            if c_star is not None:
                rel = (trace_best - c_star) / c_star if c_star > 0 else trace_best - c_star
            trace.records.append(TraceRecord(
                step=step,
                energy=float(energy),
                best_sampled=float(sampled.min()),
                mean_sampled=float(sampled.mean()),
                p10=float(np.percentile(sampled, 10)),
                p90=float(np.percentile(sampled, 90)),
                best_so_far=float(trace_best),
                best_so_far_bits=trace_best_bits or "",
                rel_error=rel,
            ))

        if (cfg.early_stop and c_star is not None and best_is_balanced
                and best_energy <= c_star + 1e-9):
            break

        theta_dot = solve_step(g_mat, d_vec, cfg.ridge)
        if not np.all(np.isfinite(theta_dot)):
            raise RuntimeError(f"non-finite parameter update at step {step}")
        theta = theta + cfg.d_tau * theta_dot

    # final histogram from the converged parameters
    final_sv = prepare(ans, theta)
    final = sample(final_sv, final_shots, _rng(cfg.seed, cfg.max_steps, 0))
    for bits in final.counts:
        e = float(table[int(bits, 2)]) if table is not None else ham_energy(h, bits)
        consider(bits, e)
    if best_bits is None:  # max_steps == 0 edge case
        best_bits = min(final.counts)
    best_part = Partition.from_bits(q.graph, [int(c) for c in best_bits])
    return VarqiteResult(final, trace, best_part, best_is_balanced, theta, prep_counts)
