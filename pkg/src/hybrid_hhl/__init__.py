"""Gate-level simulation of phase estimation variants and hybrid HHL circuits."""
from .circuit import Circuit, Gate, count_gates, export_text, invert, parse_text, run, unitary_of
from .eigeninfo import (
    BinaryMatrix,
    QubitTag,
    all_minimal_distinguishing_sets,
    classify,
    collect_binary_matrix,
    distinguishing_set_greedy,
    min_distinguishing_set_exact,
    step_plan,
)
from .fourier import build_iqft_prime, build_qft, verify_bit_reversal
from .hhl import (
    LinearSystem,
    build_hybrid19,
    build_hybrid25,
    build_original_hhl,
    paper_example_system,
    reference_solution,
    resource_table,
    solve,
)
from .noise import NoiseModel, compare_methods, run_noisy
from .phase_estimation import (
    PunctureSpec,
    build_qpe,
    build_qppe,
    build_qspe,
    required_register_size,
    run_estimation,
)
from .statevector import SimulationError, StateVector, new_basis_state, probabilities, sample, tvd

__version__ = "0.1.0"
