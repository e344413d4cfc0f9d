"""Measurement-level protocols: Hadamard tests, the two observable
strategies, Hoeffding sample planning and variational state preparation.

Sign convention for ``zeta = i``: an ancilla X measurement on
``(|0>|l> + zeta|1>|r>)/sqrt(2)`` returns ``Re(zeta <l|r>)``, which is
``-Im <l|r>``.  Every estimator here reports the *component* (real part for
``zeta = 1``, imaginary part for ``zeta = i``) in ``estimate``/``exact`` and
keeps the raw ancilla expectation in ``measured``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .baselines import finite_difference_gradient
from .errors import DimensionError, PreconditionError
from .gates import AnsatzSpec
from .ness import max_entangled_state
from .pauli import PauliSum, StateVector, apply_array, to_dense

__all__ = [
    "AnsatzSpec",
    "EstimatorOutput",
    "SamplingPlan",
    "TrainingResult",
    "hadamard_test",
    "sample_plan",
    "strategy1_expectation",
    "strategy2_expectation",
    "train_preparation_unitary",
]


@dataclass(frozen=True)
class SamplingPlan:
    epsilon_tilde: float
    delta: float
    samples: int


def sample_plan(epsilon_tilde: float, delta: float) -> SamplingPlan:
    """Hoeffding count ``R = ceil(ln(2/delta) / (2 eps^2))``."""
    if not 0 < delta < 1:
        raise PreconditionError(f"delta must lie in (0, 1), got {delta}")
    if not epsilon_tilde > 0:
        raise PreconditionError(f"epsilon must be positive, got {epsilon_tilde}")
    r = math.ceil(math.log(2.0 / delta) / (2.0 * epsilon_tilde ** 2) - 1e-12)
    return SamplingPlan(epsilon_tilde, delta, max(1, r))


@dataclass(frozen=True)
class EstimatorOutput:
    estimate: float
    exact: float
    samples_used: Optional[int] = None
    seed: Optional[int] = None
    protocol: str = "hadamard"
    zeta: complex = 1
    measured: Optional[float] = None

    @property
    def error(self) -> float:
        return abs(self.estimate - self.exact)

    def to_dict(self) -> dict:
        z = "i" if self.zeta == 1j else "1"
        return {"protocol": self.protocol, "zeta": z, "exact": self.exact,
                "estimate": self.estimate, "R": self.samples_used, "seed": self.seed,
                "error": self.error}


def _zeta(z) -> complex:
    if z in (1, "1"):
        return 1 + 0j
    if z in (1j, "i"):
        return 1j
    raise PreconditionError(f"zeta must be 1 or i, got {z!r}")


def _component(zeta: complex, measured: float) -> float:
    # Re(zeta z): zeta=1 -> Re z, zeta=i -> -Im z
    return measured if zeta == 1 else -measured


def _bernoulli_estimate(measured: float, samples: int, seed) -> float:
    p_plus = min(1.0, max(0.0, 0.5 * (1.0 + measured)))
    count = np.random.default_rng(seed).binomial(samples, p_plus)
    return 2.0 * count / samples - 1.0


def hadamard_test(zeta, left: StateVector, right: StateVector,
                  samples: Optional[int] = None, seed: Optional[int] = None) -> EstimatorOutput:
    """Estimate ``Re <l|r>`` (``zeta = 1``) or ``Im <l|r>`` (``zeta = i``).

    With ``samples`` the ancilla outcomes are drawn as ``samples`` Bernoulli
    trials with ``P(+1) = (1 + m)/2``.
    """
    zeta = _zeta(zeta)
    if left.dim != right.dim:
        raise DimensionError("Hadamard test on states of different size")
    measured = float((zeta * left.inner(right)).real)
    if abs(measured) > 1 + 1e-12:
        raise PreconditionError("inner product exceeds 1; inputs are not normalized")
    exact = _component(zeta, measured)
    if samples is None:
        return EstimatorOutput(exact, exact, None, None, "hadamard", zeta, measured)
    if samples < 1:
        raise PreconditionError("need at least one sample")
    m_hat = _bernoulli_estimate(measured, samples, seed)
    return EstimatorOutput(_component(zeta, m_hat), exact, samples, seed, "hadamard", zeta, m_hat)


def _lift(M: PauliSum) -> PauliSum:
    return M.tensor(PauliSum.identity(M.n_qubits))


def _sample_observable(op: PauliSum, state: np.ndarray, samples: int, seed) -> float:
    """Projective measurement statistics from the exact eigen-probabilities."""
    evals, evecs = np.linalg.eigh(to_dense(op))
    probs = np.abs(evecs.conj().T @ state) ** 2
    probs = probs / probs.sum()
    counts = np.random.default_rng(seed).multinomial(samples, probs)
    return float(counts @ evals / samples)


def strategy1_expectation(M: PauliSum, rho_state: StateVector, zeta=1,
                          samples: Optional[int] = None,
                          seed: Optional[int] = None) -> EstimatorOutput:
    """``<phi0| X ⊗ (M ⊗ I) |phi0>`` with ``|phi0> = (|0>|I_N> + zeta|1>|rho>)/sqrt(2)``.

    The component returned is Re or Im of ``<I_N|M⊗I|rho>``.
    """
    zeta = _zeta(zeta)
    if not M.hermitian:
        raise PreconditionError("observable must be hermitian")
    n = M.n_qubits
    if rho_state.n_qubits != 2 * n:
        raise DimensionError(f"{n}-site observable on a {rho_state.n_qubits}-qubit state")
    ident = max_entangled_state(n).amplitudes
    phi0 = np.concatenate([ident, zeta * rho_state.amplitudes]) / math.sqrt(2.0)
    op = PauliSum.from_string("X").tensor(_lift(M))
    if samples is None:
        measured = float(np.vdot(phi0, apply_array(op, phi0)).real)
        exact = _component(zeta, measured)
        return EstimatorOutput(exact, exact, None, None, "strategy1", zeta, measured)
    measured_exact = float(np.vdot(phi0, apply_array(op, phi0)).real)
    measured = _sample_observable(op, phi0, samples, seed)
    return EstimatorOutput(_component(zeta, measured), _component(zeta, measured_exact),
                           samples, seed, "strategy1", zeta, measured)


def strategy2_expectation(M: PauliSum, psi_final: StateVector, S: int, N_D: float,
                          M_terms: int, zeta=1, samples: Optional[int] = None,
                          seed: Optional[int] = None) -> EstimatorOutput:
    """Direct estimator on the unpostselected output of ``S`` LCU blocks.

    ``|Phi> = (|0>|psi_final> + zeta |1>|0^m>|I_N>)/sqrt(2)``; the ancilla
    expectation of ``X ⊗ I ⊗ M⊗I`` equals ``Re(conj(zeta) <0,I_N|M|psi>)``,
    and only the ``|0^m>`` block contributes, so the rescaling by
    ``(N_D * M_terms)^(S/2)`` returns Re/Im of ``<I_N|M⊗I|D^S rho0>``.
    ``M_terms`` is the (padded) ancilla dimension.
    """
    zeta = _zeta(zeta)
    if not M.hermitian:
        raise PreconditionError("observable must be hermitian")
    if S < 0 or M_terms < 1:
        raise PreconditionError("need S >= 0 and at least one term")
    n = M.n_qubits
    m_tilde = math.ceil(math.log2(M_terms)) if M_terms > 1 else 0
    if psi_final.n_qubits != m_tilde + 2 * n:
        raise DimensionError(
            f"register of {psi_final.n_qubits} qubits does not match m={m_tilde} + 2*{n}"
        )
    anc = np.zeros(2 ** m_tilde, dtype=complex)
    anc[0] = 1.0
    ref = np.kron(anc, max_entangled_state(n).amplitudes)
    phi = np.concatenate([psi_final.amplitudes, zeta * ref]) / math.sqrt(2.0)
    op = PauliSum.from_string("X").tensor(PauliSum.identity(m_tilde).tensor(_lift(M))) \
        if m_tilde else PauliSum.from_string("X").tensor(_lift(M))
    scale = (N_D * M_terms) ** (S / 2.0)
    exact_measured = float(np.vdot(phi, apply_array(op, phi)).real)
    # Re(conj(zeta) w): zeta=1 -> Re w, zeta=i -> Im w, so no sign flip here
    exact = exact_measured * scale
    if samples is None:
        return EstimatorOutput(exact, exact, None, None, "strategy2", zeta, exact_measured)
    measured = _sample_observable(op, phi, samples, seed)
    return EstimatorOutput(measured * scale, exact, samples, seed, "strategy2", zeta, measured)


@dataclass
class TrainingResult:
    params: np.ndarray
    final_infidelity: float
    history: list
    stalled: bool


def infidelity(target: StateVector, spec: AnsatzSpec, params,
               init: Optional[StateVector] = None) -> float:
    """``F(a) = 1 - |<target|U(a)|Phi0>|^2``, clipped to ``[0, 1]``."""
    ov = target.inner(spec.state(params, init))
    return float(min(1.0, max(0.0, 1.0 - abs(ov) ** 2)))


def train_preparation_unitary(target: StateVector, spec: AnsatzSpec, max_steps: int = 500,
                              seed: int = 0, init: Optional[StateVector] = None,
                              patience: int = 50, initial=None,
                              tolerance: float = 1e-12) -> TrainingResult:
    """Gradient descent on ``F(a)`` with central finite differences.

    ``stalled`` is set when ``F`` fails to improve for ``patience``
    consecutive steps before reaching ``tolerance``.
    """
    if not target.is_normalized(1e-10):
        raise PreconditionError("target must be normalized")
    if target.n_qubits != spec.n_qubits:
        raise DimensionError("target and ansatz sizes differ")
    rng = np.random.default_rng(seed)
    params = (rng.uniform(-np.pi, np.pi, spec.n_params) if initial is None
              else np.array(initial, dtype=float))

    def loss(p):
        return infidelity(target, spec, p, init)

    best_p, best_f = params.copy(), loss(params)
    history = [best_f]
    since = 0
    stalled = False
    for _ in range(max_steps):
        if best_f <= tolerance or spec.n_params == 0:
            break
        params = params - spec.eta * finite_difference_gradient(loss, params, spec.fd_step)
        f = loss(params)
        history.append(f)
        if f < best_f - 1e-15:
            best_p, best_f, since = params.copy(), f, 0
        else:
            since += 1
            if since >= patience:
                stalled = True
                break
    return TrainingResult(best_p, best_f, history, stalled)
