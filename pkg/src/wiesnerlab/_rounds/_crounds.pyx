# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled round-sampling kernel; contract identical to _pyrounds."""

from libc.math cimport sqrt

import numpy as np


def sample_transfer_rounds(m_pass, probe, int n_rounds, uniforms):
    """See _pyrounds.sample_transfer_rounds; this is the fast path."""
    cdef double complex[:, ::1] m = np.ascontiguousarray(m_pass, dtype=np.complex128)
    cdef double complex[::1] pr = np.ascontiguousarray(probe, dtype=np.complex128)
    cdef double[::1] us = np.ascontiguousarray(uniforms, dtype=np.float64)

    cdef double complex m00 = m[0, 0]
    cdef double complex m01 = m[0, 1]
    cdef double complex m10 = m[1, 0]
    cdef double complex m11 = m[1, 1]
    cdef double complex p0 = pr[0]
    cdef double complex p1 = pr[1]
    cdef double complex v0, v1
    cdef double p, pc, inv
    cdef Py_ssize_t k

    if us.shape[0] < n_rounds:
        raise ValueError("uniforms shorter than n_rounds")

    for k in range(n_rounds):
        v0 = m00 * p0 + m01 * p1
        v1 = m10 * p0 + m11 * p1
        p = (v0.real * v0.real + v0.imag * v0.imag
             + v1.real * v1.real + v1.imag * v1.imag)
        pc = p if p < 1.0 else 1.0
        if us[k] < pc:
            inv = 1.0 / sqrt(p)
            p0 = v0 * inv
            p1 = v1 * inv
        else:
            return k + 1, np.array([p0, p1], dtype=np.complex128)
    return 0, np.array([p0, p1], dtype=np.complex128)
