"""Maximum-weight matching as QUBO, classical annealers, solution integration and tracking."""

from .ensemble import SolutionSet, error_rate, integrate_cyclic, integrate_majority
from .graph import Matching, WeightedBipartiteGraph, is_maximal, matching_weight, oracle_solve
from .qubo import QuboProblem, build_matching_qubo, build_multiplexed_qubo, decode, encode, energy
from .solvers import (AnnealSchedule, SolverConfig, measure_tts, repair_feasibility, reverse_anneal,
                      run_solver, simulated_anneal, simulated_quantum_anneal, tts)

__version__ = "0.1.0"

__all__ = [
    "AnnealSchedule", "Matching", "QuboProblem", "SolutionSet", "SolverConfig",
    "WeightedBipartiteGraph", "build_matching_qubo", "build_multiplexed_qubo", "decode", "encode",
    "energy", "error_rate", "integrate_cyclic", "integrate_majority", "is_maximal",
    "matching_weight", "measure_tts", "oracle_solve", "repair_feasibility", "reverse_anneal",
    "run_solver", "simulated_anneal", "simulated_quantum_anneal", "tts",
]
