"""Ansatz construction, statevector simulation, expectations, and sampling."""

import numpy as np
import pytest
import scipy.linalg

from qdissect import (Ansatz, SampleSet, WeightedGraph, apply_rzy,
                      build_heavy_neighbors_ansatz, expect_z_terms,
                      full_two_layer_ansatz, initial_state, prepare, sample,
                      build_qubo, to_hamiltonian, ham_energy)
from qdissect.circuit import MAX_QUBITS, Statevector, sample_hist
from qdissect.qubo import ZHamiltonian

from conftest import random_weighted_graph, ring_graph

Z = np.array([[1, 0], [0, -1]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def rzy_dense(n: int, a: int, b: int, theta: float) -> np.ndarray:
    """Independent oracle: exp(-i theta/2 Z_a Y_b) as a dense matrix.

    Qubit 0 is the leftmost tensor factor (MSB of the state index).
    """
    ops = [I2] * n
    ops[a] = Z
    ops[b] = Y
    gen = ops[0]
    for op in ops[1:]:
        gen = np.kron(gen, op)
    return scipy.linalg.expm(-1j * theta / 2.0 * gen)


def random_state(rng, n: int) -> Statevector:
    amps = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    amps /= np.linalg.norm(amps)
    return Statevector(n, amps.astype(np.complex128))


# -------------------------------------------------------------------- ansatz

def five_node_graph() -> WeightedGraph:
    """Heavy 4-cycle on vertices 1-4 plus a light star center at vertex 0."""
    return WeightedGraph.from_edges(5, [(1, 2, 10.0), (2, 3, 9.0), (3, 4, 8.0),
                                        (1, 4, 7.0), (0, 1, 1.0), (0, 2, 1.0),
                                        (0, 3, 1.0), (0, 4, 1.0)])


def test_two_layer_four_gates_each():
    ans = build_heavy_neighbors_ansatz(five_node_graph(), 2, (4, 4))
    assert ans.n_params == 8
    assert ans.layer_sizes == (4, 4)
    layer0 = [(g.a, g.b) for g in ans.gates if g.layer == 0]
    assert layer0 == [(1, 2), (2, 3), (3, 4), (1, 4)]  # the 4 heaviest edges
    # layer 1 rooted at the top ego-ranked node (vertex 0 sees the whole graph)
    assert all(g.a == 0 for g in ans.gates if g.layer == 1)
    assert [g.param for g in ans.gates] == list(range(8))


def test_path_all_edges_selected():
    g = WeightedGraph.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)])
    ans = build_heavy_neighbors_ansatz(g, 1, (2,))
    assert [(gt.a, gt.b) for gt in ans.gates] == [(0, 1), (1, 2)]


def test_duplicate_pairs_skipped():
    # star: every edge touches the hub, so layer 1 rooted at the hub
    # re-proposes only already-placed pairs and must skip them all
    g = WeightedGraph.from_edges(4, [(0, 1, 3.0), (0, 2, 2.0), (0, 3, 1.0)])
    ans = build_heavy_neighbors_ansatz(g, 2, (3, 3))
    assert ans.layer_sizes == (3, 0)
    assert ans.n_params == 3


def test_full_two_layer_bound():
    for n in (4, 6, 8):
        g = WeightedGraph.from_edges(n, [(i, j, 1.0) for i in range(n)
                                         for j in range(i + 1, n)])
        ans = full_two_layer_ansatz(g)
        assert ans.n_params <= n * (n - 1) // 2


def test_ansatz_deterministic_and_json_round_trip(rng):
    g = random_weighted_graph(rng, 7)
    a1 = full_two_layer_ansatz(g)
    a2 = full_two_layer_ansatz(g)
    assert a1 == a2
    assert Ansatz.from_json_dict(a1.to_json_dict()) == a1


def test_no_edges_rejected():
    g = WeightedGraph.from_edges(3, [])
    with pytest.raises(ValueError):
        build_heavy_neighbors_ansatz(g, 1, (1,))


# ------------------------------------------------------------- initial state

def test_initial_state_small():
    sv1 = initial_state(1)
    assert np.allclose(sv1.amplitudes, [1 / np.sqrt(2)] * 2)
    sv3 = initial_state(3)
    assert np.allclose(sv3.amplitudes, [1 / (2 * np.sqrt(2))] * 8)


def test_initial_state_bounds():
    with pytest.raises(ValueError):
        initial_state(0)
    with pytest.raises(ValueError):
        initial_state(MAX_QUBITS + 1)


def test_initial_state_sampling_uniform_chi_square():
    sv = initial_state(3)
    ss = sample(sv, 10_000, seed=7)
    expected = 10_000 / 8
    chi2 = sum((c - expected) ** 2 / expected for c in ss.counts.values())
    # 7 degrees of freedom; 0.999 quantile is ~24.3
    assert chi2 < 24.3


# ------------------------------------------------------------------ apply_rzy

def test_rzy_theta_zero_identity(rng):
    sv = random_state(rng, 3)
    out = apply_rzy(sv, 0, 2, 0.0)
    assert np.allclose(out.amplitudes, sv.amplitudes)


def test_rzy_two_pi_global_phase():
    sv = initial_state(2)
    basis = Statevector(2, np.array([1, 0, 0, 0], dtype=np.complex128))
    out = apply_rzy(basis, 0, 1, 2 * np.pi)
    assert np.allclose(out.amplitudes, -basis.amplitudes)
    assert np.allclose(out.probabilities(), basis.probabilities())


def test_rzy_pi_half_on_00():
    basis = Statevector(2, np.array([1, 0, 0, 0], dtype=np.complex128))
    out = apply_rzy(basis, 0, 1, np.pi / 2)
    expect = np.array([1, 1, 0, 0], dtype=np.complex128) / np.sqrt(2)
    assert np.allclose(out.amplitudes, expect)


def test_rzy_matches_dense_expm_oracle(rng):
    for _ in range(25):
        n = int(rng.integers(2, 6))
        a, b = rng.choice(n, size=2, replace=False)
        theta = float(rng.uniform(-2 * np.pi, 2 * np.pi))
        sv = random_state(rng, n)
        fast = apply_rzy(sv, int(a), int(b), theta)
        dense = rzy_dense(n, int(a), int(b), theta) @ sv.amplitudes
        assert np.allclose(fast.amplitudes, dense, atol=1e-12)


def test_rzy_inverse_restores_state(rng):
    sv = random_state(rng, 4)
    theta = 1.234
    back = apply_rzy(apply_rzy(sv, 1, 3, theta), 1, 3, -theta)
    assert np.allclose(back.amplitudes, sv.amplitudes, atol=1e-12)


def test_rzy_norm_preserved_many_times(rng):
    sv = random_state(rng, 5)
    for _ in range(200):
        a, b = rng.choice(5, size=2, replace=False)
        sv = apply_rzy(sv, int(a), int(b), float(rng.normal()))
    assert sv.norm() == pytest.approx(1.0, abs=1e-9)


def test_rzy_validation():
    sv = initial_state(2)
    with pytest.raises(ValueError):
        apply_rzy(sv, 0, 0, 1.0)
    with pytest.raises(ValueError):
        apply_rzy(sv, 0, 2, 1.0)


# -------------------------------------------------------------------- prepare

def test_prepare_zero_theta_uniform(rng):
    g = random_weighted_graph(rng, 6)
    ans = full_two_layer_ansatz(g)
    sv = prepare(ans, np.zeros(ans.n_params))
    assert np.allclose(sv.amplitudes, initial_state(6).amplitudes)


def test_prepare_single_gate_matches_apply():
    g = WeightedGraph.from_edges(2, [(0, 1, 1.0)])
    ans = build_heavy_neighbors_ansatz(g, 1, (1,))
    sv = prepare(ans, [0.7])
    assert np.allclose(sv.amplitudes,
                       apply_rzy(initial_state(2), 0, 1, 0.7).amplitudes)


def test_prepare_compositional(rng):
    g = random_weighted_graph(rng, 5)
    ans = full_two_layer_ansatz(g)
    theta = rng.normal(size=ans.n_params)
    full = prepare(ans, theta)
    # split the gate list and compose manually
    sv = initial_state(5)
    for gate in ans.gates:
        sv = apply_rzy(sv, gate.a, gate.b, float(theta[gate.param]))
    assert np.allclose(full.amplitudes, sv.amplitudes, atol=1e-12)
    assert full.norm() == pytest.approx(1.0, abs=1e-9)


def test_prepare_length_mismatch(rng):
    g = random_weighted_graph(rng, 4)
    ans = full_two_layer_ansatz(g)
    with pytest.raises(ValueError):
        prepare(ans, np.zeros(ans.n_params + 1))


# ------------------------------------------------------------- expectations

def test_expect_uniform_state(rng):
    g = random_weighted_graph(rng, 5)
    h = to_hamiltonian(build_qubo(g, lam=1.0))
    exps, energy = expect_z_terms(initial_state(5), h)
    assert np.allclose(exps, 0.0, atol=1e-12)
    assert energy == pytest.approx(h.constant)


def test_expect_basis_state_is_ham_energy(rng):
    g = random_weighted_graph(rng, 4)
    h = to_hamiltonian(build_qubo(g, lam=2.0))
    for x in range(16):
        amps = np.zeros(16, dtype=np.complex128)
        amps[x] = 1.0
        _, energy = expect_z_terms(Statevector(4, amps), h)
        assert energy == pytest.approx(ham_energy(h, format(x, "04b")))


def test_expect_matches_dense_diagonal_oracle(rng):
    for _ in range(5):
        n = int(rng.integers(3, 9))
        g = random_weighted_graph(rng, n)
        h = to_hamiltonian(build_qubo(g, lam=float(rng.uniform(0.5, 3))))
        sv = random_state(rng, n)
        probs = sv.probabilities()
        exps, energy = expect_z_terms(sv, h)
        # dense oracle: diagonal operator contraction per term
        idx = np.arange(1 << n)
        for (coeff, qubits), got in zip(h.terms, exps):
            diag = np.ones(1 << n)
            for q in qubits:
                diag *= 1.0 - 2.0 * ((idx >> (n - 1 - q)) & 1)
            assert got == pytest.approx(float(probs @ diag), abs=1e-9)
        assert energy == pytest.approx(float(probs @ h.energy_table()), abs=1e-9)


def test_expect_dimension_mismatch(rng):
    g = random_weighted_graph(rng, 4)
    h = to_hamiltonian(build_qubo(g, lam=1.0))
    with pytest.raises(ValueError):
        expect_z_terms(initial_state(3), h)


# -------------------------------------------------------------------- sample

def test_sample_basis_state():
    amps = np.zeros(8, dtype=np.complex128)
    amps[5] = 1.0
    ss = sample(Statevector(3, amps), 100, seed=0)
    assert ss.counts == {"101": 100}  # qubit 0 = leftmost character


def test_sample_uniform_binomial_bound():
    ss = sample(initial_state(2), 100_000, seed=42)
    for s in ("00", "01", "10", "11"):
        assert abs(ss.counts[s] - 25_000) < 500  # ~3.7 sigma


def test_sample_deterministic():
    sv = initial_state(4)
    assert sample(sv, 500, seed=9).counts == sample(sv, 500, seed=9).counts


def test_sample_hist_agrees_with_sample():
    sv = initial_state(3)
    idx, cnt = sample_hist(sv, 1000, seed=11)
    ss = sample(sv, 1000, seed=11)
    assert {format(int(i), "03b"): int(c) for i, c in zip(idx, cnt)} == ss.counts


def test_sample_validation():
    with pytest.raises(ValueError):
        sample(initial_state(1), 0, seed=0)


def test_sampleset_json():
    ss = SampleSet({"10": 3, "01": 2}, 5)
    assert ss.to_json_dict() == {"shots": 5, "counts": {"01": 2, "10": 3}}
