"""Linear systems and matrix-vector products as ground-state problems.

The extended encoding places the solution ``x ∝ A^-1 b`` in the kernel of

    H_A = (X⊗A) (I - |+><+| ⊗ |b><b|) (X⊗A)

on ``n + 1`` qubits (ground state ``|+>|x>``); the projector form
``A† (I - |b><b|) A`` works on ``n`` qubits.  For ``y = A b / ||A b||`` the
operator ``I - A|b><b|A† / ||A b||^2`` is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import (
    DimensionError,
    PreconditionError,
    SingularEncodingError,
)
from .pauli import (
    PauliSum,
    StateVector,
    apply_to_state,
    decompose_dense,
    to_dense,
)
from .qgd import GradientOperator, QgdConfig, RunResult, qgd_run

FORMS = ("extended", "projector", "matvec")
RESIDUAL_TOLERANCE = 1e-4


def hermitian_embed(a: PauliSum) -> PauliSum:
    """``|0><1| ⊗ A + |1><0| ⊗ A†`` on ``n + 1`` qubits."""
    n = a.n_qubits
    up = PauliSum(1, {"X": 0.5, "Y": 0.5j})  # |0><1|
    down = PauliSum(1, {"X": 0.5, "Y": -0.5j})  # |1><0|
    return (up.tensor(a) + down.tensor(a.dagger())).as_hermitian()


def projector_from_basis_state(bits: str) -> PauliSum:
    """``|bits><bits|`` as a product of ``(I ± Z)/2`` factors."""
    if not bits:
        raise PreconditionError("empty bitstring")
    if set(bits) - {"0", "1"}:
        raise PreconditionError(f"not a bitstring: {bits!r}")
    out = None
    for bit in bits:
        f = PauliSum(1, {"I": 0.5, "Z": 0.5 if bit == "0" else -0.5})
        out = f if out is None else out.tensor(f)
    return out.as_hermitian()


def projector_from_state(b: StateVector) -> PauliSum:
    """Pauli decomposition of ``|b><b|`` (dense, limited size)."""
    amps = b.normalized().amplitudes
    return decompose_dense(np.outer(amps, amps.conj())).as_hermitian()


def _plus_projector() -> PauliSum:
    return PauliSum(1, {"I": 0.5, "X": 0.5}, hermitian=True)


@dataclass(frozen=True)
class LinearSystem:
    """``A x = b`` prepared for one of the ground-state encodings.

    ``a`` is always hermitian here; a non-hermitian input is embedded on
    construction (see :meth:`create`), in which case ``b`` carries the extra
    ``|0>`` register and the solution lives in the ``|1>`` branch.
    """

    a: PauliSum
    b: StateVector
    b_projector: PauliSum
    form: str = "extended"
    hermitian_input: bool = True
    original_a: Optional[PauliSum] = None

    def __post_init__(self):
        if self.form not in FORMS:
            raise PreconditionError(f"unknown form {self.form!r}")
        if self.b.n_qubits != self.a.n_qubits or self.b_projector.n_qubits != self.a.n_qubits:
            raise DimensionError("A, b and the projector must share a register")

    @classmethod
    def create(cls, a: PauliSum, b: Union[str, StateVector], form: str = "extended"):
        if isinstance(b, str):
            state = StateVector.basis(b)
            proj = projector_from_basis_state(b)
        else:
            state = b.normalized()
            proj = None
        if state.n_qubits != a.n_qubits:
            raise DimensionError("b does not match the size of A")
        if a.hermitian or form == "matvec":
            if proj is None:
                proj = projector_from_state(state)
            return cls(a, state, proj, form, a.hermitian)
        embedded = hermitian_embed(a)
        state = StateVector.basis("0").tensor(state)
        proj = projector_from_basis_state("0").tensor(
            proj if proj is not None else projector_from_state(b.normalized())
        )
        return cls(embedded, state, proj.as_hermitian(), form, False, a)

    @property
    def n_qubits(self) -> int:
        return self.a.n_qubits

    def hamiltonian(self) -> PauliSum:
        if self.form == "matvec":
            return build_matvec_hamiltonian(self.a, self.b)
        return build_linear_hamiltonian(self)

    def extract_solution(self, y: StateVector) -> StateVector:
        """Map the iterate back to the solution register, normalized."""
        amps = y.amplitudes
        if self.form == "extended":
            half = amps.size // 2
            amps = (amps[:half] + amps[half:]) / math.sqrt(2.0)  # <+| on the leading qubit
        if not self.hermitian_input and self.form != "matvec":
            half = amps.size // 2
            amps = amps[half:]  # |1> branch of the embedding register
        norm = np.linalg.norm(amps)
        if norm < 1e-300:
            raise SingularEncodingError("iterate has no weight on the solution branch")
        return StateVector(amps / norm)

    def truth(self) -> StateVector:
        """Dense reference solution ``A^-1 b`` (or ``A b`` for matvec)."""
        a = self.original_a if self.original_a is not None else self.a
        b = self.b.amplitudes
        if self.original_a is not None:
            b = b[: b.size // 2]
        mat = to_dense(a)
        sol = mat @ b if self.form == "matvec" else np.linalg.solve(mat, b)
        return StateVector(sol / np.linalg.norm(sol))

    def residual(self, x: StateVector) -> float:
        """``||A x - beta b||`` with the optimal scale ``beta = <b|A x>``."""
        a = self.original_a if self.original_a is not None else self.a
        b = self.b.amplitudes
        if self.original_a is not None:
            b = b[: b.size // 2]
        if self.form == "matvec":
            y = apply_to_state(self.a, self.b).amplitudes
            y = y / np.linalg.norm(y)
            ov = np.vdot(y, x.amplitudes)
            return float(np.linalg.norm(x.amplitudes - ov * y))
        ax = apply_to_state(a, x).amplitudes
        beta = np.vdot(b, ax)
        return float(np.linalg.norm(ax - beta * b))


def build_linear_hamiltonian(sys: LinearSystem) -> PauliSum:
    if not sys.a.hermitian:
        raise PreconditionError("embed a non-hermitian A before building H_A")
    n = sys.n_qubits
    eye = PauliSum.identity(n)
    if sys.form == "extended":
        xa = PauliSum.from_string("X").tensor(sys.a)
        middle = PauliSum.identity(n + 1) - _plus_projector().tensor(sys.b_projector)
        h = xa @ middle @ xa
    elif sys.form == "projector":
        h = sys.a.dagger() @ (eye - sys.b_projector) @ sys.a
    else:
        raise PreconditionError("matvec systems use build_matvec_hamiltonian")
    return h.as_hermitian()


def norm_constant(a: PauliSum, b: StateVector) -> float:
    """``sum_{m,m'} a_m* a_m' <b|A[m]† A[m']|b>``, all cross terms kept."""
    if not b.is_normalized(1e-10):
        raise PreconditionError("b must be normalized")
    if a.n_qubits != b.n_qubits:
        raise DimensionError("A and b act on different registers")
    coeffs = np.array([c for _, c in a.items()], dtype=complex)
    vecs = np.array([apply_to_state(PauliSum(a.n_qubits, {s: 1.0}), b).amplitudes
                     for s, _ in a.items()])
    if vecs.size == 0:
        return 0.0
    gram = vecs.conj() @ vecs.T
    return float(np.real(coeffs.conj() @ gram @ coeffs))


def build_matvec_hamiltonian(a: PauliSum, b: StateVector) -> PauliSum:
    """``I - A|b><b|A† / ||A b||^2`` with ground state ``A b / ||A b||``."""
    b = b.normalized()
    norm_sq = norm_constant(a, b)
    if norm_sq < 1e-24:
        raise SingularEncodingError("A annihilates b")
    bits = _basis_bits(b)
    proj = projector_from_basis_state(bits) if bits else projector_from_state(b)
    inner = a @ proj @ a.dagger()
    return (PauliSum.identity(a.n_qubits) - inner / norm_sq).as_hermitian()


def _basis_bits(b: StateVector) -> Optional[str]:
    amps = b.amplitudes
    idx = int(np.argmax(np.abs(amps)))
    if abs(abs(amps[idx]) - 1.0) > 1e-14:
        return None
    return format(idx, f"0{b.n_qubits}b")


@dataclass
class SolveReport:
    run: RunResult
    solution: StateVector
    residual: float
    fidelity_to_truth: Optional[float] = None
    residual_tolerance: float = RESIDUAL_TOLERANCE

    @property
    def converged(self) -> bool:
        return self.run.converged and self.residual < self.residual_tolerance


def solve_system(
    sys_hamiltonian: PauliSum,
    gamma: float,
    cfg: QgdConfig = QgdConfig(tolerance=1e-6),
    init: Optional[StateVector] = None,
    truth: Optional[StateVector] = None,
    system: Optional[LinearSystem] = None,
) -> SolveReport:
    """Descend on ``f(y) = <y|H|y>`` with ``D = I - 2 gamma H``.

    ``system`` enables solution extraction and the residual; without it the
    iterate itself is the solution and the residual is ``||H y||``.
    ``truth`` (a state on the solution register) adds a fidelity column.
    """
    n = sys_hamiltonian.n_qubits
    init = StateVector.plus(n) if init is None else init
    D = GradientOperator.from_generator(sys_hamiltonian, gamma)
    reference = None
    if truth is not None:
        reference = _lift_truth(system, truth) if system is not None else truth
    run = qgd_run(D, sys_hamiltonian, init, cfg, reference)
    if system is None:
        sol = run.final_state
        residual = float(np.linalg.norm(apply_to_state(sys_hamiltonian, sol).amplitudes))
    else:
        sol = system.extract_solution(run.final_state)
        residual = system.residual(sol)
    fid = None if truth is None else truth.fidelity(sol)
    return SolveReport(run, sol, residual, fid)


def _lift_truth(system: LinearSystem, truth: StateVector) -> StateVector:
    """Embed a solution-register state into the iterate register."""
    v = truth
    if not system.hermitian_input and system.form != "matvec":
        v = StateVector.basis("1").tensor(v)
    if system.form == "extended":
        v = StateVector.plus(1).tensor(v)
    return v


def reference_system() -> LinearSystem:
    """The three-qubit example ``0.9 Z1 Z2 + 0.3692 X2 + 0.1112 X1`` with ``b = |000>``."""
    a = PauliSum(3, {"ZZI": 0.9, "IXI": 0.3692, "XII": 0.1112}, hermitian=True)
    return LinearSystem.create(a, "000", "extended")
