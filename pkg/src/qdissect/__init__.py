"""qdissect: hybrid quantum/classical graph partitioning for fill-reducing
sparse matrix orderings on a classical statevector simulator."""

__version__ = "0.1.0"

from .graph import (CoarseningMap, EgoRanking, Partition, WeightedGraph, coarsen,
                    edge_cut_to_vertex_separator, ego_ranking, load_graph,
                    project_partition, save_metis)
from .qubo import (QuboProblem, ZHamiltonian, approximation_error, build_qubo,
                   exact_solve, ham_energy, qubo_energy, to_hamiltonian)
from .circuit import (Ansatz, SampleSet, Statevector, apply_rzy,
                      build_heavy_neighbors_ansatz, expect_z_terms,
                      full_two_layer_ansatz, initial_state, prepare, sample)
from .varqite import (ConvergenceTrace, VarqiteConfig, VarqiteResult, assemble_D,
                      assemble_G, run_varqite, solve_step)
from .refine import FmConfig, fm_plus_varqite, fm_random_baseline, fm_refine, gain, heavier_side
from .dissect import (DissectConfig, DissectionTree, MeritFactors, Permutation,
                      baseline_partition, evaluate_partition_merit, graph_to_pattern,
                      nested_dissection, symbolic_factorize)
