# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled backend for smallest-singular-value grids.

The caller Schur-triangularizes A once (unitary invariance of singular
values); per node this kernel runs an inverse-Lanczos iteration on
(T - z)^H (T - z) using two O(n^2) triangular solves per step instead of
an O(n^3) SVD.  Full reorthogonalization keeps the Ritz estimate reliable
for the clustered small singular values typical of non-normal resolvents;
the top Ritz value of the Lanczos tridiagonal is found by Sturm bisection,
so the whole node loop runs without the GIL.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, fabs, sqrt

cnp.import_array()

BACKEND = "cython"

cdef enum:
    MAXIT = 48


cdef inline double _cabs2(double complex v) nogil:
    return v.real * v.real + v.imag * v.imag


cdef int _solve_upper(double complex[:, ::1] T, double complex z,
                      double complex* x, int n) nogil:
    """x <- (T - z)^{-1} x with T upper triangular; 0 on zero pivot."""
    cdef int i, j
    cdef double complex acc, piv
    for i in range(n - 1, -1, -1):
        acc = x[i]
        for j in range(i + 1, n):
            acc = acc - T[i, j] * x[j]
        piv = T[i, i] - z
        if _cabs2(piv) == 0.0:
            return 0
        x[i] = acc / piv
    return 1


cdef int _solve_upper_h(double complex[:, ::1] T, double complex z,
                        double complex* x, int n) nogil:
    """x <- (T - z)^{-H} x (conjugate transpose, forward substitution)."""
    cdef int i, j
    cdef double complex acc, piv
    for i in range(n):
        acc = x[i]
        for j in range(i):
            acc = acc - (T[j, i].conjugate()) * x[j]
        piv = (T[i, i] - z).conjugate()
        if _cabs2(piv) == 0.0:
            return 0
        x[i] = acc / piv
    return 1


cdef int _sturm_count(double* d, double* e, int m, double x) nogil:
    """Number of eigenvalues of the symmetric tridiagonal (d, e) below x."""
    cdef int i, k = 0
    cdef double q = d[0] - x
    if q < 0.0:
        k += 1
    for i in range(1, m):
        if q == 0.0:
            q = 1e-300
        q = d[i] - x - e[i - 1] * e[i - 1] / q
        if q < 0.0:
            k += 1
    return k


cdef double _top_ritz(double* d, double* e, int m) nogil:
    """Largest eigenvalue of the symmetric tridiagonal (d, e[0..m-2])."""
    cdef double lo, hi, r, mid
    cdef int i, it
    lo = d[0]
    hi = d[0]
    for i in range(m):
        r = 0.0
        if i > 0:
            r += fabs(e[i - 1])
        if i < m - 1:
            r += fabs(e[i])
        if d[i] - r < lo:
            lo = d[i] - r
        if d[i] + r > hi:
            hi = d[i] + r
    for it in range(100):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if _sturm_count(d, e, m, mid) == m:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def smin_grid(object Tobj, object zsobj, int workers=1, double rtol=1e-12):
    """Smallest singular value of (T - z 1) for each z; T upper triangular.

    `workers` is accepted for interface parity; results are written by node
    index, so scheduling cannot change the output layout.
    """
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] Tarr = \
        np.ascontiguousarray(Tobj, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] zs = \
        np.asarray(zsobj, dtype=np.complex128).ravel()
    cdef double complex[:, ::1] T = Tarr
    cdef int n = Tarr.shape[0]
    cdef Py_ssize_t nz = zs.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(nz, dtype=np.float64)
    cdef double[::1] outv = out

    cdef cnp.ndarray[cnp.complex128_t, ndim=2] Varr = \
        np.empty((MAXIT + 1, n), dtype=np.complex128)
    # fixed pseudo-random seed vector; a constant vector can be orthogonal
    # to the target singular vector in parity-symmetric cases
    seed = np.random.default_rng(1905).standard_normal((2, n))
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] seedarr = \
        np.ascontiguousarray(seed[0] + 1j * seed[1], dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] warr = np.empty(n, dtype=np.complex128)
    cdef double complex[:, ::1] V = Varr
    cdef double complex[::1] w = warr
    cdef double complex[::1] v0 = seedarr
    cdef double alph[MAXIT]
    cdef double beta[MAXIT]
    cdef double complex z, dot
    cdef double a, b, nrm, smin, smin_prev, theta
    cdef Py_ssize_t iz
    cdef int i, l, ok, it

    with nogil:
        for iz in range(nz):
            z = zs[iz]
            ok = 1
            for i in range(n):
                if _cabs2(T[i, i] - z) == 0.0:
                    ok = 0
                    break
            if not ok:
                outv[iz] = 0.0
                continue
            nrm = 0.0
            for i in range(n):
                nrm += _cabs2(v0[i])
            nrm = sqrt(nrm)
            for i in range(n):
                V[0, i] = v0[i] / nrm
            smin_prev = -1.0
            smin = -1.0
            for it in range(MAXIT):
                for i in range(n):
                    w[i] = V[it, i]
                if not _solve_upper(T, z, &w[0], n):
                    break
                if not _solve_upper_h(T, z, &w[0], n):
                    break
                dot = 0.0
                for i in range(n):
                    dot = dot + V[it, i].conjugate() * w[i]
                a = dot.real
                if a != a or a == INFINITY:  # overflow: s below ~1e-150
                    smin = 0.0
                    break
                alph[it] = a
                for i in range(n):
                    w[i] = w[i] - a * V[it, i]
                if it > 0:
                    b = beta[it - 1]
                    for i in range(n):
                        w[i] = w[i] - b * V[it - 1, i]
                for l in range(it + 1):
                    dot = 0.0
                    for i in range(n):
                        dot = dot + V[l, i].conjugate() * w[i]
                    for i in range(n):
                        w[i] = w[i] - dot * V[l, i]
                theta = _top_ritz(&alph[0], &beta[0], it + 1)
                if theta <= 0.0:
                    smin = 0.0
                    break
                smin = 1.0 / sqrt(theta)
                if smin_prev >= 0.0 and fabs(smin - smin_prev) <= rtol * smin:
                    break
                smin_prev = smin
                nrm = 0.0
                for i in range(n):
                    nrm += _cabs2(w[i])
                nrm = sqrt(nrm)
                if nrm == 0.0 or it == MAXIT - 1:
                    break
                beta[it] = nrm
                for i in range(n):
                    V[it + 1, i] = w[i] / nrm
            outv[iz] = smin if smin >= 0.0 else 0.0
    return out
