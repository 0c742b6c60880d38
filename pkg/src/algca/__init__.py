"""Algebraic cellular automata on topological Markov chains.

Modules
-------
tmc      shifts of finite type: words, follower sets, irreducibility, entropy
algebra  Cayley tables: cancellation, medial and Psi laws, affine form, right structure
ca       block codes and radius-1 automata ``a * b``; SC, permutativity, N-scaling
factor   product decomposition and conjugacy checks
measure  finite-memory measures, Parry measure, gamma sequence, pushforward, sampling
cesaro   Cesaro means of ``mu o Phi^-n`` (exact and Monte Carlo) and Parry comparison
cli      the ``algca`` command
"""
from .algebra import CayleyTable, classify_table, cyclic_group, find_psi, right_structure, toyoda_decompose
from .ca import BlockCode, CellularAutomaton, build_ca, check_n_scaling, check_sc, power_rule
from .cesaro import cesaro_exact, cesaro_monte_carlo, compare_to_parry
from .factor import decompose, hmm_code, search_conjugacy, verify_conjugacy
from .fixtures import load_fixture
from .measure import FiniteMemoryMeasure, bernoulli, cylinder_prob, gamma_sequence, parry_measure
from .tmc import MarkovShift, build_shift, full_shift, shift_report

__version__ = "0.1.0"

__all__ = [
    "BlockCode", "CayleyTable", "CellularAutomaton", "FiniteMemoryMeasure", "MarkovShift",
    "bernoulli", "build_ca", "build_shift", "cesaro_exact", "cesaro_monte_carlo",
    "check_n_scaling", "check_sc", "classify_table", "compare_to_parry", "cyclic_group", "cylinder_prob",
    "decompose", "find_psi", "full_shift", "gamma_sequence", "hmm_code", "load_fixture",
    "parry_measure", "power_rule", "right_structure", "search_conjugacy", "shift_report",
    "toyoda_decompose", "verify_conjugacy",
]
