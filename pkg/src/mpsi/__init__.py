"""Multi-party private set intersection via garbled circuits.

m parties compute the intersection (or its cardinality, or a Jaccard-based
anomaly verdict) of their private sets. Parties other than the two circuit
endpoints XOR-share their inputs; the endpoints run a garbled
sort-compare-shuffle circuit over everything, so no party learns more than
the declared output plus the public session parameters.
"""

from .circuit import (AND, CONST0, CONST1, INV, XOR, Circuit, CircuitBuilder,
                      CircuitError, CircuitStats, CountingBuilder, GateCounts,
                      build_circuit, dump_netlist, eval_plaintext, stats,
                      validate)
from .garble import GarbledCircuit, decode_outputs, encode_inputs, evaluate, \
    garble, garble_and_evaluate
from .protocol import (Channel, ConfigError, InputError, ProtocolError,
                       PsiResult, SessionAbort, SessionConfig, auto_sigma,
                       parse_config, run_party)
from .psi_circuit import (InputLayout, PsiCircuit, build_psi_circuit,
                          count_psi_gates, derive_layout, psi_circuit_for)
from .waksman import (apply_permutation, apply_waksman, route_waksman,
                      sample_permutation, switch_count, waksman_switch_pairs)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
