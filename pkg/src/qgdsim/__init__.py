"""Classical simulation of gradient descent by non-unitary power iteration
for open-system steady states and linear-algebra ground-state encodings."""

from .errors import QgdError
from .kernels import BACKEND
from .lindblad import (
    LindbladModel,
    VectorizedLiouvillian,
    build_gradient_operator,
    dense_liouvillian_oracle,
    ising_model,
    vectorize,
)
from .linsys import LinearSystem, build_linear_hamiltonian, build_matvec_hamiltonian, solve_system
from .ness import max_entangled_state, observable_expectation, reshape_to_density, solve_ness
from .pauli import (
    PauliString,
    PauliSum,
    StateVector,
    apply_to_state,
    decompose_dense,
    expectation,
    pauli_multiply,
    sum_map,
    sum_multiply,
    to_dense,
)
from .qgd import GradientOperator, QgdConfig, error_bound, qgd_run, qgd_step, spectral_summary

__version__ = "0.1.0"
