"""Open-system models and the vectorized Lindblad generator.

A density matrix ``rho`` is flattened row-major, ``|i><j| -> |i>|j>``, so the
system acts on the left ``n`` qubits and the "bra" copy on the right ``n``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DenseLimitError, NonHermitianError, PreconditionError
from .pauli import PauliString, PauliSum, sum_map, to_dense
from .qgd import GradientOperator

CONVENTIONS = ("standard", "paper_literal")
ORACLE_SITE_LIMIT = 5


@dataclass(frozen=True)
class LindbladModel:
    n_sites: int
    hamiltonian: PauliSum
    jumps: tuple = ()

    def __post_init__(self):
        if self.n_sites < 1:
            raise PreconditionError("a model needs at least one site")
        if self.hamiltonian.n_qubits != self.n_sites:
            raise PreconditionError("hamiltonian acts on the wrong number of sites")
        if not self.hamiltonian.hermitian:
            raise NonHermitianError("hamiltonian must be hermitian")
        jumps = tuple((op, float(rate)) for op, rate in self.jumps)
        for op, rate in jumps:
            if op.n_qubits != self.n_sites:
                raise PreconditionError("jump operator acts on the wrong number of sites")
            if not rate >= 0:
                raise PreconditionError(f"jump rates must be non-negative, got {rate}")
        object.__setattr__(self, "jumps", jumps)

    @classmethod
    def zero(cls, n_sites: int) -> "LindbladModel":
        return cls(n_sites, PauliSum.zero(n_sites).as_hermitian())


def sigma_plus(n: int, k: int) -> PauliSum:
    """``(X + iY)/2`` on site ``k``; equals ``|0><1|`` in the Z basis."""
    return PauliSum(n, [(0.5, PauliString.single(n, k, "X")),
                        (0.5j, PauliString.single(n, k, "Y"))])


def sigma_minus(n: int, k: int) -> PauliSum:
    return PauliSum(n, [(0.5, PauliString.single(n, k, "X")),
                        (-0.5j, PauliString.single(n, k, "Y"))])


def ising_model(n: int, J: float = 1.0, h: float = 1.0, mu: Sequence[float] = None) -> LindbladModel:
    """Dissipative transverse-field Ising chain with open boundaries.

    ``H = J/4 sum_k Z_k Z_{k+1} + h/2 sum_k X_k`` and jumps ``sigma_+`` on
    every site with rates ``mu``.
    """
    if n < 1:
        raise PreconditionError("n must be >= 1")
    mu = [0.1] * n if mu is None else list(mu)
    if len(mu) != n:
        raise PreconditionError(f"need {n} rates, got {len(mu)}")
    terms = []
    for k in range(n - 1):
        letters = ["I"] * n
        letters[k] = letters[k + 1] = "Z"
        terms.append((J / 4.0, PauliString("".join(letters))))
    for k in range(n):
        terms.append((h / 2.0, PauliString.single(n, k, "X")))
    ham = PauliSum(n, terms, hermitian=True)
    return LindbladModel(n, ham, tuple((sigma_plus(n, k), r) for k, r in enumerate(mu)))


@dataclass(frozen=True)
class VectorizedLiouvillian:
    op: PauliSum
    convention: str = "standard"

    @property
    def n_qubits(self) -> int:
        return self.op.n_qubits


def vectorize(model: LindbladModel, convention: str = "standard") -> VectorizedLiouvillian:
    """Liouvillian as a non-hermitian Pauli sum on ``2n`` qubits.

    ``paper_literal`` flips the sign of the coherent part.  For real ``H``
    and ``L_k`` the two results are complex conjugates of each other.
    """
    if convention not in CONVENTIONS:
        raise PreconditionError(f"unknown convention {convention!r}")
    n = model.n_sites
    eye = PauliSum.identity(n)
    ham = model.hamiltonian
    coherent = ham.tensor(eye) - eye.tensor(sum_map(ham, "transpose"))
    sign = -1j if convention == "standard" else 1j
    total = sign * coherent
    for op, rate in model.jumps:
        if rate == 0:
            continue
        ldl = op.dagger() @ op
        lt_lc = sum_map(op, "transpose") @ sum_map(op, "conjugate")
        total = total + (rate / 2.0) * (
            2.0 * op.tensor(sum_map(op, "conjugate")) - ldl.tensor(eye) - eye.tensor(lt_lc)
        )
    return VectorizedLiouvillian(PauliSum(2 * n, total.items()), convention)


def dense_liouvillian_oracle(model: LindbladModel) -> np.ndarray:
    """Superoperator matrix built column by column from ``L(|i><j|)``."""
    n = model.n_sites
    if n > ORACLE_SITE_LIMIT:
        raise DenseLimitError(f"oracle limited to {ORACLE_SITE_LIMIT} sites")
    dim = 2 ** n
    H = to_dense(model.hamiltonian)
    jumps = [(to_dense(op), rate) for op, rate in model.jumps]
    out = np.zeros((dim * dim, dim * dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[i, j] = 1.0
            res = -1j * (H @ e - e @ H)
            for L, rate in jumps:
                LdL = L.conj().T @ L
                res += rate * (L @ e @ L.conj().T - 0.5 * (LdL @ e + e @ LdL))
            out[:, i * dim + j] = res.reshape(-1)
    return out


def liouvillian_square(liouv: VectorizedLiouvillian) -> PauliSum:
    """``H† H`` as a hermitian sum; the objective of the steady-state search."""
    return liouv.op.dagger() @ liouv.op


def build_gradient_operator(liouv: VectorizedLiouvillian, gamma: float) -> GradientOperator:
    """``D = I - 2 gamma H† H`` with imaginary round-off stripped."""
    return GradientOperator.from_generator(liouvillian_square(liouv), gamma)
