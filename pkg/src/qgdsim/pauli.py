"""Weighted Pauli-string algebra and dense state vectors.

Qubit 0 is the leftmost tensor factor and the most significant bit of an
amplitude index, so ``"ZI"`` acts with ``Z`` on the high bit of a 2-qubit
index. Internally each string is a pair of bit masks ``(x, z)`` with
``P = i**n_y * X**x Z**z``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from . import kernels
from .errors import (
    DenseLimitError,
    DimensionError,
    NonHermitianError,
    PreconditionError,
)

DROP_TOLERANCE = 1e-12
HERMITICITY_TOLERANCE = 1e-10
NORMALIZATION_TOLERANCE = 1e-12

_LETTERS = "IXYZ"
_I_POWERS = (1, 1j, -1, -1j)


def dense_limit() -> int:
    """Largest qubit count for which dense matrices are materialized."""
    return int(os.environ.get("QGDSIM_DENSE_LIMIT", "12"))


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True, order=True)
class PauliString:
    """Tensor product of single-qubit Paulis, e.g. ``PauliString("XZI")``."""

    letters: str

    def __post_init__(self):
        if not self.letters:
            raise DimensionError("a Pauli string needs at least one qubit")
        bad = set(self.letters) - set(_LETTERS)
        if bad:
            raise ValueError(f"invalid Pauli letters {sorted(bad)} in {self.letters!r}")

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    @cached_property
    def masks(self) -> tuple[int, int]:
        n = self.n_qubits
        x = z = 0
        for q, letter in enumerate(self.letters):
            bit = 1 << (n - 1 - q)
            if letter in "XY":
                x |= bit
            if letter in "ZY":
                z |= bit
        return x, z

    @property
    def y_count(self) -> int:
        return self.letters.count("Y")

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls("I" * n_qubits)

    @classmethod
    def from_masks(cls, n_qubits: int, x: int, z: int) -> "PauliString":
        return _string_from_masks(n_qubits, x, z)

    @classmethod
    def single(cls, n_qubits: int, qubit: int, letter: str) -> "PauliString":
        """``letter`` on ``qubit``, identity elsewhere."""
        chars = ["I"] * n_qubits
        chars[qubit] = letter
        return cls("".join(chars))

    def is_identity(self) -> bool:
        return set(self.letters) == {"I"}

    def tensor(self, other: "PauliString") -> "PauliString":
        return PauliString(self.letters + other.letters)

    def __str__(self) -> str:
        return self.letters


# (x, z) bit -> letter; index = x + 2*z with Y = x and z
_MASK_LETTER = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}


def _string_from_masks(n: int, x: int, z: int) -> PauliString:
    chars = []
    for q in range(n):
        bit = 1 << (n - 1 - q)
        chars.append(_MASK_LETTER[(1 if x & bit else 0, 1 if z & bit else 0)])
    return PauliString("".join(chars))


@dataclass(frozen=True)
class PauliTerm:
    coeff: complex
    string: PauliString


def pauli_multiply(a: PauliString, b: PauliString) -> tuple[complex, PauliString]:
    """Return ``(phase, product)`` with ``a @ b == phase * product``."""
    if a.n_qubits != b.n_qubits:
        raise DimensionError(f"cannot multiply {a.n_qubits}- and {b.n_qubits}-qubit strings")
    xa, za = a.masks
    xb, zb = b.masks
    x, z = xa ^ xb, za ^ zb
    # Z^za X^xb = (-1)^{|za & xb|} X^xb Z^za
    power = a.y_count + b.y_count - _popcount(x & z) + 2 * _popcount(za & xb)
    return _I_POWERS[power % 4], _string_from_masks(a.n_qubits, x, z)


class PauliSum:
    """Canonical weighted sum of Pauli strings on a fixed register.

    Terms are merged by string, entries with ``|coeff| < DROP_TOLERANCE`` are
    dropped and the remainder is stored in lexicographic string order.

    Parameters
    ----------
    n_qubits:
        Register size.
    terms:
        Either a mapping ``{"XZ": coeff}`` or an iterable of
        ``(coeff, string)`` pairs / :class:`PauliTerm`.
    hermitian:
        ``None`` detects hermiticity from the coefficients and strips
        imaginary residues below ``HERMITICITY_TOLERANCE``. ``True`` demands
        it (raising :class:`NonHermitianError` otherwise); ``False`` keeps the
        coefficients untouched and leaves the sum unflagged.
    """

    __slots__ = ("n_qubits", "_coeffs", "hermitian", "__dict__")

    def __init__(self, n_qubits: int, terms=(), hermitian: bool | None = None):
        if n_qubits < 1:
            raise DimensionError("n_qubits must be positive")
        self.n_qubits = n_qubits
        acc: dict[str, complex] = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for item in items:
            if isinstance(item, PauliTerm):
                coeff, string = item.coeff, item.string
            else:
                first, second = item
                if isinstance(first, (str, PauliString)):
                    string, coeff = first, second
                else:
                    coeff, string = first, second
            letters = string.letters if isinstance(string, PauliString) else str(string)
            if len(letters) != n_qubits:
                raise DimensionError(
                    f"term {letters!r} does not act on {n_qubits} qubits"
                )
            PauliString(letters)  # validates letters
            acc[letters] = acc.get(letters, 0j) + complex(coeff)
        coeffs = {k: v for k, v in sorted(acc.items()) if abs(v) >= DROP_TOLERANCE}
        residue = max((abs(v.imag) for v in coeffs.values()), default=0.0)
        if hermitian is None:
            hermitian = residue < HERMITICITY_TOLERANCE
        elif hermitian and residue >= HERMITICITY_TOLERANCE:
            raise NonHermitianError(
                f"imaginary coefficient residue {residue:.3e} exceeds tolerance"
            )
        if hermitian:
            coeffs = {k: complex(v.real) for k, v in coeffs.items()
                      if abs(v.real) >= DROP_TOLERANCE}
        self._coeffs = coeffs
        self.hermitian = bool(hermitian)

    # construction helpers -------------------------------------------------

    @classmethod
    def zero(cls, n_qubits: int) -> "PauliSum":
        return cls(n_qubits, {})

    @classmethod
    def identity(cls, n_qubits: int, coeff: complex = 1.0) -> "PauliSum":
        return cls(n_qubits, {"I" * n_qubits: coeff})

    @classmethod
    def single(cls, n_qubits: int, qubit: int, letter: str, coeff: complex = 1.0) -> "PauliSum":
        return cls(n_qubits, {PauliString.single(n_qubits, qubit, letter).letters: coeff})

    @classmethod
    def from_string(cls, letters: str, coeff: complex = 1.0) -> "PauliSum":
        return cls(len(letters), {letters: coeff})

    # container protocol ---------------------------------------------------

    @property
    def terms(self) -> tuple[PauliTerm, ...]:
        return tuple(PauliTerm(c, PauliString(s)) for s, c in self._coeffs.items())

    def items(self):
        return self._coeffs.items()

    def coeff(self, letters: str) -> complex:
        return self._coeffs.get(letters, 0j)

    def __len__(self) -> int:
        return len(self._coeffs)

    def __iter__(self):
        return iter(self.terms)

    def __repr__(self) -> str:
        if not self._coeffs:
            return f"PauliSum({self.n_qubits}, 0)"
        body = " + ".join(f"({c:.6g})*{s}" for s, c in self._coeffs.items())
        return f"PauliSum({self.n_qubits}, {body})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self._coeffs == other._coeffs

    def __hash__(self):
        return hash((self.n_qubits, tuple(self._coeffs.items())))

    def allclose(self, other: "PauliSum", atol: float = 1e-12) -> bool:
        if self.n_qubits != other.n_qubits:
            return False
        keys = set(self._coeffs) | set(other._coeffs)
        return all(abs(self.coeff(k) - other.coeff(k)) <= atol for k in keys)

    @property
    def max_imag(self) -> float:
        return max((abs(c.imag) for c in self._coeffs.values()), default=0.0)

    def real_coefficients(self) -> np.ndarray:
        return np.array([c.real for c in self._coeffs.values()])

    def as_hermitian(self) -> "PauliSum":
        """Flag as hermitian, raising if the imaginary residue is too large."""
        return PauliSum(self.n_qubits, self._coeffs, hermitian=True)

    # arithmetic -----------------------------------------------------------

    def _check(self, other: "PauliSum"):
        if self.n_qubits != other.n_qubits:
            raise DimensionError(
                f"operands act on {self.n_qubits} and {other.n_qubits} qubits"
            )

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = PauliSum.identity(self.n_qubits, other)
        if not isinstance(other, PauliSum):
            return NotImplemented
        self._check(other)
        return PauliSum(self.n_qubits, list(self.items()) + list(other.items()))

    __radd__ = __add__

    def __neg__(self):
        return PauliSum(self.n_qubits, {s: -c for s, c in self.items()})

    def __sub__(self, other):
        if isinstance(other, (int, float, complex)):
            other = PauliSum.identity(self.n_qubits, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, scalar):
        if isinstance(scalar, PauliSum):
            return sum_multiply(self, scalar)
        if not isinstance(scalar, (int, float, complex, np.number)):
            return NotImplemented
        return PauliSum(self.n_qubits, {s: c * scalar for s, c in self.items()})

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __matmul__(self, other):
        return sum_multiply(self, other)

    def tensor(self, other: "PauliSum") -> "PauliSum":
        """Kronecker product ``self ⊗ other`` (self on the leading qubits)."""
        return PauliSum(
            self.n_qubits + other.n_qubits,
            [(ca * cb, sa + sb) for sa, ca in self.items() for sb, cb in other.items()],
        )

    def dagger(self) -> "PauliSum":
        return sum_map(self, "adjoint")

    # kernel views -----------------------------------------------------------

    @cached_property
    def _kernel_arrays(self):
        xs = np.empty(len(self), dtype=np.uint64)
        zs = np.empty(len(self), dtype=np.uint64)
        cs = np.empty(len(self), dtype=np.complex128)
        for t, (letters, c) in enumerate(self._coeffs.items()):
            s = PauliString(letters)
            x, z = s.masks
            xs[t], zs[t] = x, z
            cs[t] = c * _I_POWERS[s.y_count % 4]
        return xs, zs, cs

    # serialization ----------------------------------------------------------

    def to_json(self) -> list[dict]:
        return [{"coeff": [c.real, c.imag], "pauli": s} for s, c in self.items()]

    @classmethod
    def from_json(cls, data: Iterable[Mapping], n_qubits: int | None = None,
                  hermitian: bool | None = None) -> "PauliSum":
        terms = []
        for entry in data:
            coeff = entry["coeff"]
            if isinstance(coeff, (list, tuple)):
                if len(coeff) != 2:
                    raise ValueError(f"coefficient must be [re, im], got {coeff!r}")
                coeff = complex(coeff[0], coeff[1])
            terms.append((complex(coeff), str(entry["pauli"]).upper()))
        if n_qubits is None:
            if not terms:
                raise ValueError("cannot infer qubit count of an empty term list")
            n_qubits = len(terms[0][1])
        return cls(n_qubits, terms, hermitian=hermitian)


def sum_multiply(a: PauliSum, b: PauliSum) -> PauliSum:
    """Operator product ``a @ b`` in canonical form."""
    a._check(b)
    acc: dict[str, complex] = {}
    n = a.n_qubits
    for sa, ca in a.items():
        pa = PauliString(sa)
        for sb, cb in b.items():
            phase, prod = pauli_multiply(pa, PauliString(sb))
            acc[prod.letters] = acc.get(prod.letters, 0j) + phase * ca * cb
    return PauliSum(n, acc)


def sum_map(a: PauliSum, mode: str) -> PauliSum:
    """Adjoint, transpose or complex conjugate of a Pauli sum.

    Only ``Y`` is antisymmetric/imaginary, so transpose and conjugate flip
    the sign once per ``Y`` letter; the adjoint conjugates coefficients.
    """
    out = {}
    for s, c in a.items():
        sign = -1 if s.count("Y") % 2 else 1
        if mode == "adjoint":
            out[s] = c.conjugate()
        elif mode == "transpose":
            out[s] = sign * c
        elif mode == "conjugate":
            out[s] = sign * c.conjugate()
        else:
            raise ValueError(f"unknown mode {mode!r}")
    return PauliSum(a.n_qubits, out)


class StateVector:
    """Complex amplitude vector on ``n_qubits`` qubits (read-only)."""

    __slots__ = ("n_qubits", "amplitudes")

    def __init__(self, amplitudes, n_qubits: int | None = None):
        amps = np.array(amplitudes, dtype=np.complex128).reshape(-1)
        dim = amps.shape[0]
        if dim < 2 or dim & (dim - 1):
            raise DimensionError(f"state length {dim} is not a power of two >= 2")
        n = dim.bit_length() - 1
        if n_qubits is not None and n_qubits != n:
            raise DimensionError(f"length {dim} does not match {n_qubits} qubits")
        if not np.all(np.isfinite(amps)):
            raise PreconditionError("state has non-finite amplitudes")
        amps.setflags(write=False)
        self.n_qubits = n
        self.amplitudes = amps

    @classmethod
    def basis(cls, bits: str) -> "StateVector":
        if not bits or set(bits) - {"0", "1"}:
            raise ValueError(f"invalid bitstring {bits!r}")
        v = np.zeros(2 ** len(bits), dtype=np.complex128)
        v[int(bits, 2)] = 1.0
        return cls(v)

    @classmethod
    def zeros(cls, n_qubits: int) -> "StateVector":
        return cls.basis("0" * n_qubits)

    @classmethod
    def plus(cls, n_qubits: int) -> "StateVector":
        """The uniform superposition ``|+>^{⊗n}``."""
        dim = 2 ** n_qubits
        return cls(np.full(dim, dim ** -0.5, dtype=np.complex128))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, tol: float = NORMALIZATION_TOLERANCE) -> bool:
        return abs(self.norm() - 1.0) < tol

    def normalized(self) -> "StateVector":
        nrm = self.norm()
        if nrm == 0:
            raise PreconditionError("cannot normalize the zero vector")
        return StateVector(self.amplitudes / nrm)

    def inner(self, other: "StateVector") -> complex:
        """``<self|other>``."""
        if self.dim != other.dim:
            raise DimensionError("inner product of states with different sizes")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "StateVector") -> float:
        return abs(self.inner(other)) ** 2

    def tensor(self, other: "StateVector") -> "StateVector":
        return StateVector(np.kron(self.amplitudes, other.amplitudes))

    def __mul__(self, scalar) -> "StateVector":
        return StateVector(self.amplitudes * scalar)

    __rmul__ = __mul__

    def __add__(self, other: "StateVector") -> "StateVector":
        return StateVector(self.amplitudes + other.amplitudes)

    def __repr__(self) -> str:
        return f"StateVector(n_qubits={self.n_qubits}, norm={self.norm():.6g})"

    def to_json(self) -> list[list[float]]:
        return [[float(a.real), float(a.imag)] for a in self.amplitudes]


def _as_array(v) -> np.ndarray:
    return v.amplitudes if isinstance(v, StateVector) else np.asarray(v, dtype=np.complex128)


def apply_to_state(op: PauliSum, v: StateVector) -> StateVector:
    """``op|v>`` without materializing the dense operator."""
    if v.n_qubits != op.n_qubits:
        raise DimensionError(f"{op.n_qubits}-qubit operator on {v.n_qubits}-qubit state")
    xs, zs, cs = op._kernel_arrays
    return StateVector(kernels.apply_pauli_sum(xs, zs, cs, v.amplitudes))


def apply_array(op: PauliSum, amps: np.ndarray) -> np.ndarray:
    """Array-level ``op @ amps`` used by hot loops."""
    xs, zs, cs = op._kernel_arrays
    return kernels.apply_pauli_sum(xs, zs, cs, amps)


def expectation(op: PauliSum, v: StateVector, *, require_normalized: bool = True) -> complex:
    """``<v|op|v>`` for a normalized state."""
    if v.n_qubits != op.n_qubits:
        raise DimensionError(f"{op.n_qubits}-qubit operator on {v.n_qubits}-qubit state")
    if require_normalized and not v.is_normalized(1e-10):
        raise PreconditionError(f"state norm {v.norm():.15g} is not 1")
    xs, zs, cs = op._kernel_arrays
    val = kernels.expectation_pauli_sum(xs, zs, cs, v.amplitudes)
    if op.hermitian:
        if abs(val.imag) > 1e-10 * max(1.0, abs(val.real)):
            raise NonHermitianError(f"hermitian expectation has imaginary part {val.imag:.3e}")
        val = complex(val.real)
    return val


def to_dense(op: PauliSum, limit: int | None = None) -> np.ndarray:
    """Dense ``2^n x 2^n`` matrix of ``op``."""
    limit = dense_limit() if limit is None else limit
    if op.n_qubits > limit:
        raise DenseLimitError(f"{op.n_qubits} qubits exceeds dense limit {limit}")
    dim = 2 ** op.n_qubits
    out = np.zeros((dim, dim), dtype=np.complex128)
    idx = np.arange(dim, dtype=np.uint64)
    xs, zs, cs = op._kernel_arrays
    from ._pykernels import _parity

    for x, z, c in zip(xs, zs, cs):
        signs = 1 - 2 * _parity(idx & z)
        out[idx ^ x, idx] += c * signs
    return out


def _walsh_hadamard(vec: np.ndarray, n: int) -> np.ndarray:
    """Unnormalized transform ``out[z] = sum_j (-1)^{|j & z|} vec[j]``."""
    t = vec.reshape((2,) * n)
    for axis in range(n):
        a = np.take(t, 0, axis=axis)
        b = np.take(t, 1, axis=axis)
        t = np.stack((a + b, a - b), axis=axis)
    return t.reshape(-1)


def decompose_dense(m) -> PauliSum:
    """Pauli decomposition with ``c_P = Tr(P m) / 2^n``."""
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    dim = m.shape[0]
    if dim < 2 or dim & (dim - 1):
        raise DimensionError(f"matrix dimension {dim} is not a power of two")
    n = dim.bit_length() - 1
    idx = np.arange(dim)
    coeffs: dict[str, complex] = {}
    for x in range(dim):
        # Tr(P m) = i^{n_y} sum_j (-1)^{|j & z|} m[j, j ^ x]
        transformed = _walsh_hadamard(m[idx, idx ^ x], n) / dim
        for z in np.flatnonzero(np.abs(transformed) >= DROP_TOLERANCE / 4):
            s = _string_from_masks(n, x, int(z))
            coeffs[s.letters] = transformed[z] * _I_POWERS[s.y_count % 4]
    return PauliSum(n, coeffs)
