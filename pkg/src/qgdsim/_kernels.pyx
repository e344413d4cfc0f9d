# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Pauli-sum kernels. Mirrors ``_pykernels`` exactly."""

import numpy as np
cimport numpy as cnp

ctypedef unsigned long long u64

cdef extern from *:
    int __builtin_parityll(unsigned long long) nogil


def apply_pauli_sum(xs, zs, coeffs, state):
    cdef const u64[::1] xv = np.ascontiguousarray(xs, dtype=np.uint64)
    cdef const u64[::1] zv = np.ascontiguousarray(zs, dtype=np.uint64)
    cdef const double complex[::1] cv = np.ascontiguousarray(coeffs, dtype=np.complex128)
    cdef const double complex[::1] sv = np.ascontiguousarray(state, dtype=np.complex128)
    cdef Py_ssize_t dim = sv.shape[0]
    cdef Py_ssize_t nterms = xv.shape[0]
    out = np.zeros(dim, dtype=np.complex128)
    cdef double complex[::1] ov = out
    cdef Py_ssize_t t, i
    cdef u64 x, z
    cdef double complex c
    with nogil:
        for t in range(nterms):
            x = xv[t]
            z = zv[t]
            c = cv[t]
            for i in range(dim):
                if __builtin_parityll(<u64>i & z):
                    ov[<u64>i ^ x] -= c * sv[i]
                else:
                    ov[<u64>i ^ x] += c * sv[i]
    return out


def expectation_pauli_sum(xs, zs, coeffs, state):
    cdef const u64[::1] xv = np.ascontiguousarray(xs, dtype=np.uint64)
    cdef const u64[::1] zv = np.ascontiguousarray(zs, dtype=np.uint64)
    cdef const double complex[::1] cv = np.ascontiguousarray(coeffs, dtype=np.complex128)
    cdef const double complex[::1] sv = np.ascontiguousarray(state, dtype=np.complex128)
    cdef Py_ssize_t dim = sv.shape[0]
    cdef Py_ssize_t nterms = xv.shape[0]
    cdef Py_ssize_t t, i
    cdef u64 x, z
    cdef double complex acc, total = 0
    cdef double complex a
    with nogil:
        for t in range(nterms):
            x = xv[t]
            z = zv[t]
            acc = 0
            for i in range(dim):
                a = sv[<u64>i ^ x]
                a = a.conjugate() * sv[i]
                if __builtin_parityll(<u64>i & z):
                    acc -= a
                else:
                    acc += a
            total += cv[t] * acc
    return complex(total)
