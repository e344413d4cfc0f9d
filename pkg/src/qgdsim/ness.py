"""Steady-state search and observables on the vectorized density matrix."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionError, PreconditionError, TracelessStateError
from .lindblad import LindbladModel, build_gradient_operator, vectorize
from .pauli import PauliSum, StateVector, apply_to_state, dense_limit
from .qgd import QgdConfig, RunResult, SpectralSummary, qgd_run, spectral_summary


def max_entangled_state(n: int) -> StateVector:
    """``sum_i |i>|i> / sqrt(2^n)``, the vectorized identity up to scale."""
    if n < 1:
        raise PreconditionError("n must be >= 1")
    dim = 2 ** n
    amps = np.zeros(dim * dim, dtype=complex)
    amps[np.arange(dim) * (dim + 1)] = 1.0 / math.sqrt(dim)
    return StateVector(amps, 2 * n)


@dataclass(frozen=True)
class DensityDiagnostics:
    hermiticity_deviation: float
    min_eigenvalue: float
    trace_norm: float


def reshape_to_density(state: StateVector):
    """Row-major reshape into a ``2^n x 2^n`` matrix plus diagnostics.

    The diagnostics are evaluated after removing the global phase that makes
    the trace real and positive, since a state vector fixes ``rho`` only up
    to a complex scale.
    """
    if state.n_qubits % 2:
        raise DimensionError("vectorized density matrices need an even qubit count")
    n = state.n_qubits // 2
    if n > dense_limit():
        raise PreconditionError("state too large to reshape densely")
    dim = 2 ** n
    rho = state.amplitudes.reshape(dim, dim).copy()
    tr = np.trace(rho)
    fixed = rho * (np.conj(tr) / abs(tr)) if abs(tr) > 1e-12 else rho
    herm = float(np.max(np.abs(fixed - fixed.conj().T)))
    min_eig = float(np.linalg.eigvalsh(0.5 * (fixed + fixed.conj().T))[0])
    return rho, DensityDiagnostics(herm, min_eig, float(abs(tr)))


def vectorize_density(rho) -> StateVector:
    """Inverse of :func:`reshape_to_density` (no normalization)."""
    rho = np.asarray(rho, dtype=complex)
    return StateVector(rho.reshape(-1))


@dataclass(frozen=True)
class ObservableResult:
    raw_numerator: complex
    raw_denominator: complex

    @property
    def value(self) -> complex:
        return self.raw_numerator / self.raw_denominator


def observable_expectation(state: StateVector, M: PauliSum) -> ObservableResult:
    """``<I_N|(M x I)|rho> / <I_N|rho>``, i.e. ``Tr[M rho] / Tr[rho]``."""
    if not M.hermitian:
        raise PreconditionError("observable must be hermitian")
    n = M.n_qubits
    if state.n_qubits != 2 * n:
        raise DimensionError(f"{n}-site observable on a {state.n_qubits}-qubit state")
    ident = max_entangled_state(n)
    lifted = M.tensor(PauliSum.identity(n))
    den = ident.inner(state)
    if abs(den) < 1e-12:
        raise TracelessStateError("state has vanishing trace; observable ratio undefined")
    num = ident.inner(apply_to_state(lifted, state))
    return ObservableResult(complex(num), complex(den))


@dataclass
class NessResult:
    run: RunResult
    raw_overlap: complex  # <I_N|rho>
    diagnostics: Optional[DensityDiagnostics]
    degenerate_warning: bool = False
    spectrum: Optional[SpectralSummary] = None

    @property
    def trace_of_rho(self) -> complex:
        """``sqrt(N) <I_N|rho>``, the exact trace of the reshaped state."""
        n = self.run.final_state.n_qubits // 2
        return self.raw_overlap * math.sqrt(2 ** n)

    @property
    def state(self) -> StateVector:
        return self.run.final_state

    def observable(self, M: PauliSum) -> ObservableResult:
        return observable_expectation(self.state, M)


def solve_ness(
    model: LindbladModel,
    gamma: float,
    cfg: QgdConfig = QgdConfig(),
    init: Optional[StateVector] = None,
    convention: str = "standard",
    reference: Optional[StateVector] = None,
    with_spectrum: bool = True,
) -> NessResult:
    """Vectorize, build ``D`` and iterate with objective ``H† H``.

    When the doubled register fits the dense limit the dominant eigenvector
    of ``D`` is used as fidelity reference (unless one is given) and a
    degenerate dominant eigenvalue raises the warning flag.
    """
    n2 = 2 * model.n_sites
    init = StateVector.plus(n2) if init is None else init
    if init.n_qubits != n2:
        raise DimensionError(f"initial state must live on {n2} qubits")
    liouv = vectorize(model, convention)
    D = build_gradient_operator(liouv, gamma)
    spectrum = None
    degenerate = False
    if with_spectrum and n2 <= dense_limit():
        spectrum = spectral_summary(D, D.generator, init)
        degenerate = spectrum.degenerate_dominant
        if reference is None:
            reference = StateVector(spectrum.dominant_vector)
    run = qgd_run(D, D.generator, init, cfg, reference)
    diag = None
    if model.n_sites <= dense_limit():
        _, diag = reshape_to_density(run.final_state)
    overlap = max_entangled_state(model.n_sites).inner(run.final_state)
    return NessResult(run, complex(overlap), diag, degenerate, spectrum)
