"""Gradient descent as normalized power iteration with a non-unitary operator.

One step maps ``v -> (D + xi*I) v / sqrt(C)`` with ``C = ||(D + xi*I) v||^2``,
where ``D = I - 2*gamma*G`` for a positive semidefinite generator ``G``
(``H†H`` for steady states, ``H_A`` for linear systems).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    DegenerateKernelError,
    DenseLimitError,
    InternalConsistencyError,
    PreconditionError,
    UnusableInitialStateError,
)
from .pauli import (
    PauliSum,
    StateVector,
    apply_array,
    dense_limit,
    expectation,
    to_dense,
)

DEGENERACY_TOLERANCE = 1e-9


@dataclass(frozen=True)
class GradientOperator:
    """``D = sum_m d_m P_m`` with real ``d_m``, plus bookkeeping for the LCU.

    ``generator`` is the operator ``G`` with ``D = I - 2*gamma*G`` when the
    operator was built that way; it is ``None`` for a bare ``D``.
    """

    d: PauliSum
    gamma: Optional[float] = None
    generator: Optional[PauliSum] = None

    def __post_init__(self):
        if not self.d.hermitian:
            raise InternalConsistencyError("gradient operator must have real coefficients")
        if len(self.d) == 0:
            raise PreconditionError("gradient operator has no terms")

    @classmethod
    def from_generator(cls, generator: PauliSum, gamma: float) -> "GradientOperator":
        if gamma <= 0:
            raise PreconditionError(f"learning rate must be positive, got {gamma}")
        if generator.max_imag >= 1e-10:
            raise InternalConsistencyError(
                f"generator has imaginary residue {generator.max_imag:.3e}"
            )
        gen = generator.as_hermitian()
        d = (PauliSum.identity(gen.n_qubits) - 2.0 * gamma * gen).as_hermitian()
        return cls(d=d, gamma=gamma, generator=gen)

    @property
    def n_qubits(self) -> int:
        return self.d.n_qubits

    @property
    def coefficients(self) -> np.ndarray:
        return self.d.real_coefficients()

    @property
    def term_count(self) -> int:
        return len(self.d)

    @property
    def norm_sq(self) -> float:
        return math.fsum(c * c for c in self.coefficients)

    @property
    def ancilla_qubits(self) -> int:
        return max(0, math.ceil(math.log2(self.term_count))) if self.term_count > 1 else 0

    @property
    def padded_terms(self) -> int:
        return 2 ** self.ancilla_qubits


@dataclass(frozen=True)
class QgdConfig:
    max_iters: int = 1000
    tolerance: float = 1e-3
    noise_v0: float = 0.0
    rng_seed: int = 0
    divergence_factor: float = 1e6
    early_stop: bool = True
    stop_on_divergence: bool = True

    def __post_init__(self):
        if self.max_iters < 1:
            raise PreconditionError("max_iters must be >= 1")
        if not self.tolerance > 0:
            raise PreconditionError("tolerance must be positive")
        if self.noise_v0 < 0:
            raise PreconditionError("noise_v0 must be non-negative")
        if not self.divergence_factor > 1:
            raise PreconditionError("divergence_factor must exceed 1")
        if not 0 <= self.rng_seed < 2 ** 64:
            raise PreconditionError("rng_seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class TraceRow:
    s: int
    objective: float
    norm_constant: float
    fidelity: Optional[float] = None
    noise_sample: Optional[float] = None


CSV_COLUMNS = ("s", "objective", "norm_constant", "fidelity", "noise_sample")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


@dataclass
class IterationTrace:
    rows: list[TraceRow] = field(default_factory=list)

    def append(self, row: TraceRow):
        if self.rows and row.s <= self.rows[-1].s:
            raise InternalConsistencyError("trace rows must be ordered by s")
        if not row.norm_constant > 0:
            raise InternalConsistencyError("normalization constant must be positive")
        self.rows.append(row)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    @property
    def objectives(self) -> np.ndarray:
        return self.column("objective")

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.rows:
            writer.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "IterationTrace":
        reader = csv.DictReader(io.StringIO(text))
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"unexpected trace columns {reader.fieldnames}")
        trace = cls()
        for rec in reader:
            opt = lambda k: float(rec[k]) if rec[k] != "" else None  # noqa: E731
            trace.append(TraceRow(int(rec["s"]), float(rec["objective"]),
                                  float(rec["norm_constant"]), opt("fidelity"),
                                  opt("noise_sample")))
        return trace


@dataclass
class RunResult:
    final_state: StateVector
    trace: IterationTrace
    converged: bool
    iterations_used: int
    initial_objective: float
    diverged: bool = False
    divergence_step: Optional[int] = None

    @property
    def final_objective(self) -> float:
        return self.trace.rows[-1].objective if self.trace.rows else self.initial_objective

    @property
    def final_fidelity(self) -> Optional[float]:
        return self.trace.rows[-1].fidelity if self.trace.rows else None


def qgd_step(D: GradientOperator, v: StateVector, noise_sample: float = 0.0):
    """One normalized application of ``D + noise_sample*I``; returns ``(state, C)``."""
    if v.n_qubits != D.n_qubits:
        raise PreconditionError(f"{D.n_qubits}-qubit operator on {v.n_qubits}-qubit state")
    if not v.is_normalized(1e-10):
        raise PreconditionError("qgd_step needs a normalized state")
    out, c = _step(D.d, v.amplitudes, noise_sample)
    return StateVector(out), c


def _step(d: PauliSum, amps: np.ndarray, noise: float):
    w = apply_array(d, amps)
    if noise:
        w = w + noise * amps
    c = float(np.vdot(w, w).real)
    if c < 1e-300:
        raise DegenerateKernelError("the iteration operator annihilated the state")
    return w / math.sqrt(c), c


def qgd_run(
    D: GradientOperator,
    objective: PauliSum,
    init: StateVector,
    cfg: QgdConfig = QgdConfig(),
    reference: Optional[StateVector] = None,
) -> RunResult:
    """Iterate :func:`qgd_step` until ``|f| <= tolerance`` or ``max_iters``.

    The noise of step ``s`` is ``noise_v0 * xi_s`` with ``xi_s`` a fresh
    standard normal from ``numpy.random.default_rng(rng_seed)`` (PCG64).

    Divergence is declared when the objective of the *unnormalized* gradient
    iterate, ``f_s * prod_{t<=s} C_t``, exceeds ``divergence_factor * f_0``.
    In the contracting regime that product tends to ``tau_1^2 * lambda_1``;
    when a negative eigenvalue of ``D`` dominates it grows geometrically.
    """
    if not objective.hermitian:
        raise PreconditionError("objective must be hermitian")
    if not init.is_normalized(1e-10):
        raise PreconditionError("initial state must be normalized")
    if reference is not None and reference.dim != init.dim:
        raise PreconditionError("reference state has the wrong dimension")
    rng = np.random.default_rng(cfg.rng_seed)
    ref = None if reference is None else reference.normalized().amplitudes

    f0 = expectation(objective, init).real
    trace = IterationTrace()
    amps = init.amplitudes
    if cfg.early_stop and abs(f0) <= cfg.tolerance:
        return RunResult(init, trace, True, 0, f0)

    threshold = math.log(cfg.divergence_factor) + (math.log(f0) if f0 > 0 else 0.0)
    log_norm = 0.0
    diverged = False
    divergence_step = None
    f = f0
    s = 0
    obj_arrays = objective
    for s in range(1, cfg.max_iters + 1):
        xi = rng.standard_normal() if cfg.noise_v0 > 0 else None
        noise = cfg.noise_v0 * xi if xi is not None else 0.0
        amps, c = _step(D.d, amps, noise)
        f = _expect(obj_arrays, amps)
        fid = None if ref is None else float(abs(np.vdot(ref, amps)) ** 2)
        trace.append(TraceRow(s, f, c, fid, None if xi is None else noise))
        log_norm += math.log(c)
        if not diverged and f0 > 0 and f > 0 and math.log(f) + log_norm > threshold:
            diverged = True
            divergence_step = s
            if cfg.stop_on_divergence:
                break
        if cfg.early_stop and abs(f) <= cfg.tolerance:
            break
    converged = (not diverged) and abs(f) <= cfg.tolerance
    return RunResult(StateVector(amps), trace, converged, s, f0, diverged, divergence_step)


def _expect(op: PauliSum, amps: np.ndarray) -> float:
    from . import kernels

    xs, zs, cs = op._kernel_arrays
    return kernels.expectation_pauli_sum(xs, zs, cs, amps).real


def power_iteration_dense(D: GradientOperator, init: StateVector, steps: int) -> np.ndarray:
    """Normalized dense ``D^S init``; test oracle for :func:`qgd_run`."""
    mat = to_dense(D.d)
    v = init.amplitudes.copy()
    for _ in range(steps):
        v = mat @ v
        v /= np.linalg.norm(v)
    return v


@dataclass(frozen=True)
class SpectralSummary:
    """Dense spectra used by the geometric error bound."""

    d_eigenvalues: np.ndarray  # descending
    generator_eigenvalues: np.ndarray  # ascending
    dominant_vector: np.ndarray
    tau1_sq: float
    degenerate_dominant: bool
    relation_residual: float

    @property
    def delta1(self) -> float:
        return float(self.d_eigenvalues[0])

    @property
    def delta2(self) -> float:
        return float(self.d_eigenvalues[1]) if len(self.d_eigenvalues) > 1 else 0.0

    @property
    def lambda1(self) -> float:
        return float(self.generator_eigenvalues[0])

    @property
    def lambda_max(self) -> float:
        return float(self.generator_eigenvalues[-1])

    @property
    def gap(self) -> float:
        """``kappa = lambda_max - lambda_1``."""
        return self.lambda_max - self.lambda1


def spectral_summary(D: GradientOperator, liouv_sq: PauliSum, init: StateVector) -> SpectralSummary:
    if D.n_qubits > dense_limit():
        raise DenseLimitError(f"{D.n_qubits} qubits exceeds dense limit")
    if D.gamma is None:
        raise PreconditionError("spectral summary needs the learning rate of D")
    delta, vecs = np.linalg.eigh(to_dense(D.d))
    order = np.argsort(delta)[::-1]
    delta, vecs = delta[order], vecs[:, order]
    lam = np.linalg.eigvalsh(to_dense(liouv_sq))
    predicted = (1.0 - delta) / (2.0 * D.gamma)
    residual = float(np.max(np.abs(predicted - lam)))
    if residual > 1e-8 * max(1.0, float(np.max(np.abs(lam)))):
        raise InternalConsistencyError(
            f"lambda_r = (1 - delta_r)/(2 gamma) violated by {residual:.3e}"
        )
    phi1 = vecs[:, 0]
    tau1_sq = float(abs(np.vdot(phi1, init.amplitudes)) ** 2)
    degenerate = len(delta) > 1 and (delta[0] - delta[1]) < DEGENERACY_TOLERANCE
    return SpectralSummary(delta, lam, phi1, tau1_sq, bool(degenerate), residual)


def error_bound(summary: SpectralSummary, S: int) -> float:
    """``kappa (1 - tau1^2) / tau1^2 * (delta2/delta1)^(2S)``."""
    if summary.tau1_sq <= 0:
        raise UnusableInitialStateError("initial state is orthogonal to the dominant eigenvector")
    if summary.delta1 <= 0:
        raise PreconditionError("dominant eigenvalue of D must be positive")
    ratio = summary.delta2 / summary.delta1
    return summary.gap * (1.0 - summary.tau1_sq) / summary.tau1_sq * ratio ** (2 * S)
