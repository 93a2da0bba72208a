"""Pure-Python simplex pivot kernel.

Fallback twin of the compiled kernel in _simplexc.pyx. Both run the exact
same sequence of floating-point operations, so results (including pivot
counts) are bit-identical between backends. Any change here must be
mirrored in the .pyx file.
"""

PIVOT_EPS = 1e-9


def run_simplex(T, basis, max_iter, tol):
    """Run Bland-rule pivoting on a dense tableau until optimal.

    T is an (m+1) x (n+1) float64 array: m constraint rows, last row the
    (minimization) reduced-cost row, last column the rhs. ``basis`` maps
    each row to its basic column (-1 for dead rows). Returns
    (status, pivots) with status 0=optimal, 1=unbounded, 2=budget hit.
    Mutates T and basis in place.
    """
    m = T.shape[0] - 1
    n = T.shape[1] - 1
    iters = 0
    while True:
        # Bland: entering column = first with reduced cost below -tol
        obj = T[m]
        jc = -1
        for j in range(n):
            if obj[j] < -tol:
                jc = j
                break
        if jc < 0:
            return 0, iters
        if iters >= max_iter:
            return 2, iters
        # ratio test; ties broken by smallest basic index (Bland)
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
        T[r] /= piv
        for i in range(m + 1):
            if i != r:
                f = T[i, jc]
                if f != 0.0:
                    T[i] -= f * T[r]
        basis[r] = jc
        iters += 1
