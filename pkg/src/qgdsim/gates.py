"""Dense state-vector gate application and small parameterized circuits."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionError, PreconditionError
from .pauli import StateVector

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
P0 = np.diag([1.0, 0.0]).astype(complex)
P1 = np.diag([0.0, 1.0]).astype(complex)


def rx(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


ROTATIONS = {"rx": rx, "ry": ry, "rz": rz}


def controlled(u: np.ndarray) -> np.ndarray:
    """``|0><0| ⊗ I + |1><1| ⊗ u``, control on the first factor."""
    return np.kron(P0, np.eye(u.shape[0])) + np.kron(P1, u)


def apply_gate(amps: np.ndarray, gate: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Apply a ``2^k x 2^k`` gate to ``qubits`` (qubit 0 = most significant)."""
    k = len(qubits)
    if gate.shape != (2 ** k, 2 ** k):
        raise DimensionError(f"gate shape {gate.shape} does not fit {k} qubits")
    if len(set(qubits)) != k or any(not 0 <= q < n for q in qubits):
        raise DimensionError(f"bad qubit list {qubits} for {n} qubits")
    psi = np.moveaxis(amps.reshape((2,) * n), list(qubits), list(range(k)))
    shape = psi.shape
    psi = (gate @ psi.reshape(2 ** k, -1)).reshape(shape)
    return np.moveaxis(psi, list(range(k)), list(qubits)).reshape(-1)


def cnot(amps: np.ndarray, control: int, target: int, n: int) -> np.ndarray:
    return apply_gate(amps, controlled(X), (control, target), n)


@dataclass(frozen=True)
class AnsatzSpec:
    """Layered circuit: per-qubit rotations, then an entangler, per layer.

    Within a layer each qubit gets the rotations in the listed order (the
    first listed acts first), followed by a CNOT chain ``0->1->...`` when
    ``entangler == "chain"``.
    """

    n_qubits: int
    layers: int = 2
    rotations: tuple = ("rx", "ry")
    entangler: str = "chain"
    fd_step: float = 1e-3
    eta: float = 0.1

    def __post_init__(self):
        if self.n_qubits < 1 or self.layers < 0:
            raise PreconditionError("need n_qubits >= 1 and layers >= 0")
        if any(r not in ROTATIONS for r in self.rotations):
            raise PreconditionError(f"unknown rotation in {self.rotations}")
        if self.entangler not in ("chain", "none"):
            raise PreconditionError(f"unknown entangler {self.entangler!r}")
        if not self.fd_step > 0 or not self.eta > 0:
            raise PreconditionError("fd_step and eta must be positive")

    @property
    def n_params(self) -> int:
        return self.layers * self.n_qubits * len(self.rotations)

    def state(self, params, init: Optional[StateVector] = None) -> StateVector:
        params = np.asarray(params, dtype=float)
        if params.shape != (self.n_params,):
            raise DimensionError(f"expected {self.n_params} parameters, got {params.shape}")
        n = self.n_qubits
        amps = (StateVector.zeros(n) if init is None else init).amplitudes.copy()
        it = iter(params)
        for _ in range(self.layers):
            for q in range(n):
                for name in self.rotations:
                    amps = apply_gate(amps, ROTATIONS[name](next(it)), (q,), n)
            if self.entangler == "chain":
                for q in range(n - 1):
                    amps = cnot(amps, q, q + 1, n)
        return StateVector(amps)
