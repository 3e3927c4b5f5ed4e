# cython: boundscheck=False, wraparound=False, cdivision=True
"""Cyclic Jacobi eigensolver for dense complex Hermitian matrices."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()


def jacobi_cyclic(cnp.ndarray[cnp.complex128_t, ndim=2] a_in,
                  int max_sweeps, double rel_tol):
    """Diagonalize a Hermitian matrix by cyclic Jacobi rotations.

    Returns (diag, vectors, sweeps, converged); diag is the unsorted real
    diagonal after the final sweep and vectors the accumulated unitary.
    """
    cdef int n = a_in.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] a = np.array(a_in, dtype=np.complex128, order="C")
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] v = np.eye(n, dtype=np.complex128)
    cdef double fro = 0.0
    cdef int i, j, p, q, k, sweep
    cdef double complex apq, ph, phc, tmp_p, tmp_q
    cdef double r, app, aqq, tau, t, c, s, off, tol2, skip
    cdef int converged = 0

    for i in range(n):
        for j in range(n):
            fro += a[i, j].real * a[i, j].real + a[i, j].imag * a[i, j].imag
    fro = sqrt(fro)
    if fro == 0.0 or n == 1:
        return np.real(np.diag(a)).copy(), v, 0, 1

    tol2 = (rel_tol * fro) * (rel_tol * fro)
    skip = 1e-18 * fro
    sweep = 0
    while sweep < max_sweeps:
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += a[p, q].real * a[p, q].real + a[p, q].imag * a[p, q].imag
        if off <= tol2:
            converged = 1
            break
        sweep += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = sqrt(apq.real * apq.real + apq.imag * apq.imag)
                if r <= skip:
                    continue
                ph = apq / r          # e^{i phi}
                phc = ph.conjugate()
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * r)
                if tau >= 0.0:
                    t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                # A <- A U with U = [[c, s], [-s e^{-i phi}, c e^{-i phi}]]
                for k in range(n):
                    tmp_p = a[k, p]
                    tmp_q = a[k, q]
                    a[k, p] = c * tmp_p - s * phc * tmp_q
                    a[k, q] = s * tmp_p + c * phc * tmp_q
                # A <- U^dag A
                for k in range(n):
                    tmp_p = a[p, k]
                    tmp_q = a[q, k]
                    a[p, k] = c * tmp_p - s * ph * tmp_q
                    a[q, k] = s * tmp_p + c * ph * tmp_q
                # V <- V U
                for k in range(n):
                    tmp_p = v[k, p]
                    tmp_q = v[k, q]
                    v[k, p] = c * tmp_p - s * phc * tmp_q
                    v[k, q] = s * tmp_p + c * phc * tmp_q
    else:
        converged = 0

    if not converged and sweep >= max_sweeps:
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += a[p, q].real * a[p, q].real + a[p, q].imag * a[p, q].imag
        if off <= tol2:
            converged = 1

    return np.real(np.diag(a)).copy(), v, sweep, converged
