"""numpy reference kernels; same signatures as the compiled ``_kernels``."""

import numpy as np


def _parity(values):
    # popcount parity of a uint64 array
    v = values.copy()
    v ^= v >> np.uint64(32)
    v ^= v >> np.uint64(16)
    v ^= v >> np.uint64(8)
    v ^= v >> np.uint64(4)
    v ^= v >> np.uint64(2)
    v ^= v >> np.uint64(1)
    return (v & np.uint64(1)).astype(np.int8)


def apply_pauli_sum(xs, zs, coeffs, state):
    """Return ``sum_t coeffs[t] * X^xs[t] Z^zs[t] @ state``."""
    dim = state.shape[0]
    idx = np.arange(dim, dtype=np.uint64)
    out = np.zeros(dim, dtype=np.complex128)
    for x, z, c in zip(xs, zs, coeffs):
        signs = 1 - 2 * _parity(idx & np.uint64(z))
        out[idx ^ np.uint64(x)] += c * signs * state
    return out


def expectation_pauli_sum(xs, zs, coeffs, state):
    """Return ``<state| sum_t coeffs[t] X^xs[t] Z^zs[t] |state>``."""
    dim = state.shape[0]
    idx = np.arange(dim, dtype=np.uint64)
    conj = state.conj()
    total = 0j
    for x, z, c in zip(xs, zs, coeffs):
        signs = 1 - 2 * _parity(idx & np.uint64(z))
        total += c * np.dot(conj[idx ^ np.uint64(x)], signs * state)
    return complex(total)
