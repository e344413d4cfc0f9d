"""State-vector simulation of the LCU block that realizes ``D`` and the
resource formulas built on it.

Register layout: ``m`` ancilla qubits (leading, most significant) followed
by the ``2n`` work qubits.  When the term count ``M`` is not a power of two
the ancilla space is padded with zero-weight identity terms, so every
normalization uses the padded size ``2^m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, PreconditionError, SingularEncodingError
from .pauli import PauliSum, StateVector, apply_array
from .qgd import GradientOperator

MAX_ANCILLA = 20


def build_w(d) -> np.ndarray:
    """Real orthogonal matrix whose first column is ``d/||d||`` (padded).

    Built from a single Householder reflection that maps ``e_0`` onto the
    normalized coefficient vector.
    """
    d = np.asarray(d, dtype=float).reshape(-1)
    if d.size == 0 or not np.any(d):
        raise SingularEncodingError("coefficient vector is identically zero")
    m_tilde = math.ceil(math.log2(d.size)) if d.size > 1 else 0
    size = 2 ** m_tilde
    a = np.zeros(size)
    a[: d.size] = d / np.linalg.norm(d)
    v = -a.copy()
    v[0] += 1.0
    vv = float(v @ v)
    if vv < 1e-30:
        return np.eye(size)
    return np.eye(size) - 2.0 * np.outer(v, v) / vv


def _hadamard_rows(block: np.ndarray) -> np.ndarray:
    """Apply ``H^{⊗m}`` along axis 0 of a ``(2^m, k)`` array."""
    out = block.copy()
    size = out.shape[0]
    h = 1
    while h < size:
        out = out.reshape(size // (2 * h), 2, h, -1)
        a, b = out[:, 0].copy(), out[:, 1].copy()
        out[:, 0], out[:, 1] = a + b, a - b
        out = out.reshape(size, -1)
        h *= 2
    return out / math.sqrt(size)


@dataclass(frozen=True)
class LcuBlockResult:
    postselected_state: StateVector
    block_probability: float
    full_register_state: StateVector


def _term_images(D: GradientOperator, amps: np.ndarray) -> np.ndarray:
    n = D.n_qubits
    rows = [apply_array(PauliSum(n, {s: 1.0}), amps) for s, _ in D.d.items()]
    pad = D.padded_terms - len(rows)
    rows.extend([amps] * pad)  # zero-weight identity padding
    return np.array(rows)


def lcu_block(D: GradientOperator, state: StateVector) -> LcuBlockResult:
    """``W`` on the ancillas, the controlled-Pauli ladder, then ``H^{⊗m}``.

    Signs of ``d_m`` sit in the first column of ``W``; the controlled
    operations apply unsigned Pauli strings.
    """
    if state.n_qubits != D.n_qubits:
        raise DimensionError("input does not match the work register")
    if not state.is_normalized(1e-10):
        raise PreconditionError("LCU input must be normalized")
    if D.ancilla_qubits > MAX_ANCILLA:
        raise PreconditionError(f"{D.ancilla_qubits} ancilla qubits exceeds {MAX_ANCILLA}")
    w = build_w(D.coefficients)
    images = _term_images(D, state.amplitudes)
    # after W: sum_m w[m, 0] |m>|psi>; after the ladder: sum_m w[m, 0] |m> P_m|psi>
    block = w[:, 0][:, None] * images
    if D.ancilla_qubits:
        block = _hadamard_rows(block)
    zero = block[0]
    p = float(np.vdot(zero, zero).real)
    if p < 1e-300:
        raise SingularEncodingError("post-selection branch vanished")
    post = StateVector(zero / math.sqrt(p))
    return LcuBlockResult(post, p, StateVector(block.reshape(-1)))


def success_probability(D: GradientOperator, init: StateVector, S: int) -> float:
    """``||D^S init||^2 / (N_D * 2^m)^S``, evaluated in log space."""
    if S < 0:
        raise PreconditionError("S must be non-negative")
    amps = init.amplitudes
    log_p = math.log(float(np.vdot(amps, amps).real))
    denom = math.log(D.norm_sq * D.padded_terms)
    amps = amps / np.linalg.norm(amps)
    for _ in range(S):
        amps = apply_array(D.d, amps)
        c = float(np.vdot(amps, amps).real)
        if c == 0:
            return 0.0
        log_p += math.log(c) - denom
        amps = amps / math.sqrt(c)
    return math.exp(log_p)


@dataclass(frozen=True)
class AmplificationReport:
    probability: float
    theta: float
    rounds: int  # L
    bound: int  # 2L + 1

    @property
    def sqrt_ratio(self) -> float:
        """``bound * sqrt(p)``; tends to ``pi/2`` as ``p -> 0``."""
        return self.bound * math.sqrt(self.probability)


def amplification_count(p: float) -> AmplificationReport:
    if not 0 < p <= 1:
        raise PreconditionError(f"probability must lie in (0, 1], got {p}")
    theta = math.asin(math.sqrt(p))
    rounds = math.floor(math.pi / (4 * theta) + 1e-12)
    return AmplificationReport(p, theta, rounds, 2 * rounds + 1)


@dataclass(frozen=True)
class ResourceReport:
    """Order-of-magnitude counts with unit prefactors, not compiled gates."""

    M: int
    m_tilde: int
    N_D: float
    qubit_count: int
    gate_estimate: int
    controlled_pauli_cost: int  # T_m = m(m+1)/2 from the ancilla-control recurrence
    success_probability: float = None
    amplification: AmplificationReport = None


def controlled_pauli_cost(m_tilde: int) -> int:
    """Unit-constant solution of ``T_m = T_{m-1} + 1 + (m - 1)``, ``T_0 = 0``."""
    return m_tilde * (m_tilde + 1) // 2


def complexity_report(D: GradientOperator, n: int, init: StateVector = None,
                      S: int = None) -> ResourceReport:
    """Instantiate ``O(n M m^2)`` gates and ``m + 2n`` qubits with unit constants."""
    if n < 1:
        raise PreconditionError("n must be >= 1")
    M, m = D.term_count, D.ancilla_qubits
    p = amp = None
    if init is not None and S is not None:
        p = success_probability(D, init, S)
        amp = amplification_count(p) if p > 0 else None
    return ResourceReport(M, m, D.norm_sq, m + 2 * n, n * M * m * m,
                          controlled_pauli_cost(m), p, amp)


@dataclass(frozen=True)
class AlgorithmOutput:
    psi_final: StateVector  # unpostselected, m + 2n qubits
    postselected: StateVector
    per_step_probability: list
    success_probability: float


def run_algorithm(D: GradientOperator, init: StateVector, S: int) -> AlgorithmOutput:
    """``S`` LCU blocks with the ancilla records compressed into one register.

    The ``|0^m>`` block of ``psi_final`` is ``D^S init / (N_D 2^m)^(S/2)``;
    the remaining weight ``1 - P_suc`` is carried by the failure branch of
    the last block (orthogonal to the ``|0^m>`` block).  This is the only
    part of the output that the direct observable estimator can see.
    """
    if S < 0:
        raise PreconditionError("S must be non-negative")
    m = D.ancilla_qubits
    size = 2 ** m
    dim = init.dim
    v = init
    probs = []
    garbage = None
    for _ in range(S):
        blk = lcu_block(D, v)
        probs.append(blk.block_probability)
        full = blk.full_register_state.amplitudes.reshape(size, dim).copy()
        full[0] = 0
        nrm = np.linalg.norm(full)
        garbage = full / nrm if nrm > 1e-300 else None
        v = blk.postselected_state
    p_suc = float(np.prod(probs)) if probs else 1.0
    out = np.zeros((size, dim), dtype=complex)
    out[0] = math.sqrt(p_suc) * v.amplitudes
    rest = max(0.0, 1.0 - p_suc)
    if rest > 0:
        if garbage is None:
            garbage = np.zeros((size, dim), dtype=complex)
            garbage[-1] = v.amplitudes
        out += math.sqrt(rest) * garbage
    return AlgorithmOutput(StateVector(out.reshape(-1)), v, probs, p_suc)


def verify_lcu(D: GradientOperator, init: StateVector, S: int) -> dict:
    """Compare the simulated circuit with direct iteration for ``S`` steps."""
    from .qgd import qgd_step

    v = init
    probs, errors = [], []
    for _ in range(S):
        blk = lcu_block(D, v)
        ref, _ = qgd_step(D, v, 0.0)
        errors.append(float(np.max(np.abs(blk.postselected_state.amplitudes - ref.amplitudes))))
        probs.append(blk.block_probability)
        v = blk.postselected_state
    p_suc = float(np.prod(probs)) if probs else 1.0
    amp = amplification_count(p_suc) if p_suc > 0 else None
    return {
        "M": D.term_count,
        "m_tilde": D.ancilla_qubits,
        "N_D": D.norm_sq,
        "per_step_probability": probs,
        "P_suc": p_suc,
        "P_suc_direct": success_probability(D, init, S),
        "theta": amp.theta if amp else None,
        "L": amp.rounds if amp else None,
        "bound": amp.bound if amp else None,
        "max_state_error": max(errors, default=0.0),
    }
