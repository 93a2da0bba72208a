# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled simplex pivot kernel; operation-for-operation twin of
_pykernel.run_simplex (see its docstring for the tableau contract).
Built with -ffp-contract=off so both backends produce identical bits."""

cimport numpy as cnp

cnp.import_array()

DEF PIVOT_EPS = 1e-9


def run_simplex(cnp.float64_t[:, ::1] T, cnp.int64_t[::1] basis, long max_iter, double tol):
    cdef Py_ssize_t m = T.shape[0] - 1
    cdef Py_ssize_t n = T.shape[1] - 1
    cdef Py_ssize_t i, j, r, jc
    cdef double a, ratio, best, piv, f
    cdef long iters = 0
    while True:
        jc = -1
        for j in range(n):
            if T[m, j] < -tol:
                jc = j
                break
        if jc < 0:
            return 0, iters
        if iters >= max_iter:
            return 2, iters
        r = -1
        best = 0.0
        for i in range(m):
            a = T[i, jc]
            if a > PIVOT_EPS:
                ratio = T[i, n] / a
                if r < 0 or ratio < best or (ratio == best and basis[i] < basis[r]):
                    r = i
                    best = ratio
        if r < 0:
            return 1, iters
        piv = T[r, jc]
        for j in range(n + 1):
            T[r, j] /= piv
        for i in range(m + 1):
            if i != r:
                f = T[i, jc]
                if f != 0.0:
                    for j in range(n + 1):
                        T[i, j] -= f * T[r, j]
        basis[r] = jc
        iters += 1
