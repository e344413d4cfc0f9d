"""Variational baselines: the dissipative VQE circuit and a plain VQE.

Both are trained by gradient descent on central finite differences, the
same way the comparison runs are set up for the steady-state and linear
system problems.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, NonFiniteLossError, PreconditionError
from .gates import AnsatzSpec, apply_gate, cnot, controlled, rx, ry, Z
from .pauli import PauliSum, StateVector, apply_array, to_dense
from .qgd import CSV_COLUMNS, IterationTrace, _fmt

N_ALPHA = 6
N_BETA = 12


@dataclass(frozen=True)
class DvqeParams:
    alpha: tuple
    beta: tuple
    eta: float = 0.2
    fd_step: float = 1e-3

    def __post_init__(self):
        alpha = tuple(float(a) for a in self.alpha)
        beta = tuple(float(b) for b in self.beta)
        if len(alpha) != N_ALPHA or len(beta) != N_BETA:
            raise DimensionError(
                f"need {N_ALPHA} + {N_BETA} parameters, got {len(alpha)} + {len(beta)}"
            )
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def n_params(self) -> int:
        return len(self.alpha) + len(self.beta)

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.alpha + self.beta)

    @classmethod
    def from_vector(cls, vec, eta: float = 0.2, fd_step: float = 1e-3) -> "DvqeParams":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (N_ALPHA + N_BETA,):
            raise DimensionError(f"expected 18 parameters, got shape {vec.shape}")
        return cls(tuple(vec[:N_ALPHA]), tuple(vec[N_ALPHA:]), eta, fd_step)


def _apply_u(amps, a, n=4):
    # rightmost factor first: C-Ry(a6), Ry(a4)⊗Ry(a5), C-Ry(a3), Ry(a1)⊗Ry(a2)
    amps = apply_gate(amps, controlled(ry(a[5])), (0, 1), n)
    amps = apply_gate(amps, np.kron(ry(a[3]), ry(a[4])), (0, 1), n)
    amps = apply_gate(amps, controlled(ry(a[2])), (0, 1), n)
    return apply_gate(amps, np.kron(ry(a[0]), ry(a[1])), (0, 1), n)


def _apply_v(amps, b, qubits, conj, n=4):
    sign = -1.0 if conj else 1.0  # Ry is real, Rx(t)* = Rx(-t), CZ is real
    cz = controlled(Z)

    def layer(amps, i):
        g0 = ry(b[i]) @ rx(sign * b[i + 1])
        g1 = ry(b[i + 2]) @ rx(sign * b[i + 3])
        return apply_gate(amps, np.kron(g0, g1), qubits, n)

    amps = layer(amps, 8)
    amps = apply_gate(amps, cz, qubits, n)
    amps = layer(amps, 4)
    amps = apply_gate(amps, cz, qubits, n)
    return layer(amps, 0)


def dvqe_ansatz_state(params: DvqeParams, init: StateVector) -> StateVector:
    """``[V(b) ⊗ V*(b)] CNOT_{0,2} CNOT_{1,3} [U(a) ⊗ I] |init>`` on 4 qubits.

    Controlled gates use the first listed qubit of each pair as control.
    """
    if init.n_qubits != 4:
        raise DimensionError("the dissipative ansatz acts on 4 qubits")
    amps = _apply_u(init.amplitudes, params.alpha)
    amps = cnot(amps, 0, 2, 4)
    amps = cnot(amps, 1, 3, 4)
    amps = _apply_v(amps, params.beta, (0, 1), conj=False)
    amps = _apply_v(amps, params.beta, (2, 3), conj=True)
    return StateVector(amps)


def _u_matrix(a) -> np.ndarray:
    return (np.kron(ry(a[0]), ry(a[1])) @ controlled(ry(a[2]))
            @ np.kron(ry(a[3]), ry(a[4])) @ controlled(ry(a[5])))


def _v_matrix(b, sign=1.0) -> np.ndarray:
    def layer(i):
        return np.kron(ry(b[i]) @ rx(sign * b[i + 1]), ry(b[i + 2]) @ rx(sign * b[i + 3]))

    cz = controlled(Z)
    return layer(0) @ cz @ layer(4) @ cz @ layer(8)


_CNOT_PAIRS = None


def _cnot_pairs() -> np.ndarray:
    global _CNOT_PAIRS
    if _CNOT_PAIRS is None:
        eye = np.eye(16, dtype=complex)
        cols = [cnot(cnot(eye[:, i], 0, 2, 4), 1, 3, 4) for i in range(16)]
        _CNOT_PAIRS = np.array(cols).T
    return _CNOT_PAIRS


def dvqe_unitary(params: DvqeParams) -> np.ndarray:
    """The full 16 x 16 circuit matrix (fast path used by the loss)."""
    v = _v_matrix(params.beta)
    v_conj = _v_matrix(params.beta, -1.0)
    return np.kron(v, v_conj) @ _cnot_pairs() @ np.kron(_u_matrix(params.alpha), np.eye(4))


def finite_difference_gradient(loss: Callable, params, fd_step: float = 1e-3) -> np.ndarray:
    """Central differences ``(L(a + h e_i) - L(a - h e_i)) / 2h``."""
    if not fd_step > 0:
        raise PreconditionError("finite-difference step must be positive")
    params = np.asarray(params, dtype=float)
    grad = np.empty_like(params)
    for i in range(params.size):
        e = np.zeros_like(params)
        e[i] = fd_step
        grad[i] = (loss(params + e) - loss(params - e)) / (2 * fd_step)
    return grad


@dataclass
class BaselineTrace:
    steps: list = field(default_factory=list)
    losses: list = field(default_factory=list)
    initial_loss: float = math.nan
    best_params: Optional[np.ndarray] = None
    final_params: Optional[np.ndarray] = None

    def append(self, step: int, loss: float):
        if not math.isfinite(loss):
            raise NonFiniteLossError(f"loss became {loss} at step {step}")
        if self.steps and step <= self.steps[-1]:
            raise PreconditionError("baseline rows must be ordered")
        self.steps.append(step)
        self.losses.append(float(loss))

    def __len__(self):
        return len(self.steps)

    @property
    def min_loss(self) -> float:
        return min(self.losses) if self.losses else self.initial_loss

    @property
    def argmin_step(self) -> Optional[int]:
        if not self.losses:
            return None
        return self.steps[int(np.argmin(self.losses))]

    def to_csv(self) -> str:
        """Same columns as the gradient-descent traces; unused ones left empty."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for s, f in zip(self.steps, self.losses):
            writer.writerow([s, _fmt(f), "", "", ""])
        return buf.getvalue()


def variational_train(
    loss: Callable,
    initial=None,
    eta: float = 0.2,
    steps: int = 500,
    seed: Optional[int] = None,
    n_params: Optional[int] = None,
    fd_step: float = 1e-3,
    init_scale: float = 0.1,
) -> BaselineTrace:
    """Plain gradient descent ``a <- a - eta * grad``; row ``s`` is the loss after step ``s``.

    When ``initial`` is ``None`` the start is drawn uniformly from
    ``[-init_scale, init_scale]`` with ``default_rng(seed)``.
    """
    if not eta > 0:
        raise PreconditionError("learning rate must be positive")
    if initial is None:
        if n_params is None:
            raise PreconditionError("give initial parameters or n_params")
        initial = np.random.default_rng(seed).uniform(-init_scale, init_scale, n_params)
    params = np.array(initial, dtype=float)
    f0 = float(loss(params))
    if not math.isfinite(f0):
        raise NonFiniteLossError(f"initial loss is {f0}")
    trace = BaselineTrace(initial_loss=f0)
    best, best_f = params.copy(), f0
    for s in range(1, steps + 1):
        params = params - eta * finite_difference_gradient(loss, params, fd_step)
        f = float(loss(params))
        trace.append(s, f)
        if f < best_f:
            best, best_f = params.copy(), f
    trace.best_params = best
    trace.final_params = params
    return trace


def dvqe_loss(objective: PauliSum, init: StateVector) -> Callable:
    """``G(a, b) = <init|U† O U|init>`` as a function of the 18-vector."""
    if objective.n_qubits != 4:
        raise DimensionError("dissipative VQE objective must act on 4 qubits")

    obj = to_dense(objective)
    v0 = init.amplitudes

    def loss(vec):
        amps = dvqe_unitary(DvqeParams.from_vector(vec)) @ v0
        return float(np.vdot(amps, obj @ amps).real)

    return loss


def train_dvqe(objective: PauliSum, init: StateVector, eta: float = 0.2, steps: int = 500,
               seed: int = 0, fd_step: float = 1e-3) -> BaselineTrace:
    return variational_train(dvqe_loss(objective, init), None, eta, steps, seed,
                             N_ALPHA + N_BETA, fd_step)


def vqe_loss(hamiltonian: PauliSum, spec: AnsatzSpec, init: Optional[StateVector] = None) -> Callable:
    if spec.n_qubits != hamiltonian.n_qubits:
        raise DimensionError("ansatz and hamiltonian sizes differ")

    def loss(vec):
        amps = spec.state(vec, init).amplitudes
        return float(np.vdot(amps, apply_array(hamiltonian, amps)).real)

    return loss


def train_vqe(hamiltonian: PauliSum, spec: Optional[AnsatzSpec] = None,
              init: Optional[StateVector] = None, steps: int = 200,
              seed: int = 0) -> BaselineTrace:
    """Layered ``Ry`` + CNOT-chain VQE (two layers by default)."""
    spec = spec or AnsatzSpec(hamiltonian.n_qubits, layers=2, rotations=("ry",))
    return variational_train(vqe_loss(hamiltonian, spec, init), None, spec.eta, steps, seed,
                             spec.n_params, spec.fd_step)


def first_step_below(values, threshold: float, steps=None) -> Optional[int]:
    """First step whose value is at most ``threshold`` (``None`` if never)."""
    steps = range(1, len(values) + 1) if steps is None else steps
    for s, v in zip(steps, values):
        if v <= threshold:
            return s
    return None


def compare_convergence(qgd: IterationTrace, baseline: BaselineTrace, start: int = 20) -> dict:
    """Step-by-step comparison of a gradient-descent trace with a baseline."""
    q = dict(zip((r.s for r in qgd.rows), qgd.objectives))
    b = dict(zip(baseline.steps, baseline.losses))
    common = sorted(s for s in q if s in b and s >= start)
    worse = [s for s in common if q[s] > b[s]]
    return {
        "compared_steps": len(common),
        "qgd_not_better_steps": len(worse),
        "first_violation": worse[0] if worse else None,
        "qgd_final": q[common[-1]] if common else None,
        "baseline_min": baseline.min_loss,
        "baseline_argmin": baseline.argmin_step,
    }
