# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled per-epoch hot kernels; see _pykernels for the reference semantics."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline void _project(const double[:, ::1] code,
                          const double complex[::1] scaled,
                          const double complex[:, ::1] noise_mat,
                          Py_ssize_t slot,
                          double complex[::1] u) noexcept:
    """u = code.T @ (code @ scaled + noise_mat[:, slot]) without materializing y."""
    cdef Py_ssize_t n = code.shape[0]
    cdef Py_ssize_t k = code.shape[1]
    cdef Py_ssize_t i, j
    cdef double complex y
    for j in range(k):
        u[j] = 0
    for i in range(n):
        y = noise_mat[i, slot]
        for j in range(k):
            y = y + code[i, j] * scaled[j]
        for j in range(k):
            u[j] = u[j] + code[i, j] * y


def rx_rake(const double[:, ::1] code,
            const double complex[::1] coeff_m,
            const double complex[::1] coeff_n,
            const double[:, ::1] symbols,
            const double complex[:, :, ::1] noise):
    cdef Py_ssize_t k = code.shape[1]
    cdef Py_ssize_t r, j, s
    cdef double complex z
    cdef const double complex[::1] coeff
    cdef cnp.ndarray[cnp.int8_t, ndim=3] out = np.empty((2, k, 2), dtype=np.int8)
    cdef signed char[:, :, ::1] hard = out
    cdef double complex[::1] scaled = np.empty(k, dtype=np.complex128)
    cdef double complex[::1] u = np.empty(k, dtype=np.complex128)

    for r in range(2):
        coeff = coeff_m if r == 0 else coeff_n
        for s in range(2):
            for j in range(k):
                scaled[j] = coeff[j] * symbols[j, s]
            _project(code, scaled, noise[r], s, u)
            for j in range(k):
                z = coeff[j].conjugate() * u[j]
                hard[r, j, s] = 1 if z.real >= 0.0 else -1
    return out


def rx_mmse(const double[:, ::1] code,
            const double complex[::1] coeff_m,
            const double complex[::1] coeff_n,
            const double[:, ::1] combine_m,
            const double[:, ::1] combine_n,
            const double[:, ::1] symbols,
            const double complex[:, :, ::1] noise):
    cdef Py_ssize_t k = code.shape[1]
    cdef Py_ssize_t r, j, s, i
    cdef double complex z
    cdef const double complex[::1] coeff
    cdef const double[:, ::1] combine
    cdef cnp.ndarray[cnp.int8_t, ndim=3] out = np.empty((2, k, 2), dtype=np.int8)
    cdef signed char[:, :, ::1] hard = out
    cdef double complex[::1] scaled = np.empty(k, dtype=np.complex128)
    cdef double complex[::1] u = np.empty(k, dtype=np.complex128)

    for r in range(2):
        if r == 0:
            coeff = coeff_m
            combine = combine_m
        else:
            coeff = coeff_n
            combine = combine_n
        for s in range(2):
            for j in range(k):
                scaled[j] = coeff[j] * symbols[j, s]
            _project(code, scaled, noise[r], s, u)
            for j in range(k):
                z = 0
                for i in range(k):
                    z = z + combine[i, j] * u[i]
                z = coeff[j].conjugate() * z
                hard[r, j, s] = 1 if z.real >= 0.0 else -1
    return out


def tx_rake(const double[:, ::1] code,
            const double complex[::1] coeff_m,
            const double complex[::1] coeff_n,
            const double[:, ::1] symbols,
            const double complex[:, ::1] noise):
    cdef Py_ssize_t n = code.shape[0]
    cdef Py_ssize_t k = code.shape[1]
    cdef Py_ssize_t i, j
    cdef double complex y, z1, z2
    cdef cnp.ndarray[cnp.int8_t, ndim=2] out = np.empty((k, 2), dtype=np.int8)
    cdef signed char[:, ::1] hard = out
    cdef double complex[::1] scaled1 = np.empty(k, dtype=np.complex128)
    cdef double complex[::1] scaled2 = np.empty(k, dtype=np.complex128)
    cdef double complex[::1] u1 = np.empty(k, dtype=np.complex128)
    cdef double complex[::1] u2 = np.empty(k, dtype=np.complex128)

    for j in range(k):
        scaled1[j] = coeff_m[j] * symbols[j, 0] + coeff_n[j] * symbols[j, 1]
        scaled2[j] = coeff_n[j] * symbols[j, 0] - coeff_m[j] * symbols[j, 1]
        u1[j] = 0
        u2[j] = 0
    for i in range(n):
        y = noise[i, 0]
        for j in range(k):
            y = y + code[i, j] * scaled1[j]
        for j in range(k):
            u1[j] = u1[j] + code[i, j] * y
        # Second slot enters the combiner conjugated.
        y = noise[i, 1]
        for j in range(k):
            y = y + code[i, j] * scaled2[j]
        y = y.conjugate()
        for j in range(k):
            u2[j] = u2[j] + code[i, j] * y
    for j in range(k):
        z1 = coeff_m[j].conjugate() * u1[j] + coeff_n[j] * u2[j]
        z2 = coeff_n[j].conjugate() * u1[j] - coeff_m[j] * u2[j]
        hard[j, 0] = 1 if z1.real >= 0.0 else -1
        hard[j, 1] = 1 if z2.real >= 0.0 else -1
    return out
