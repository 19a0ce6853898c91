# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled OMP and AbS sweep kernels.

The least-squares fit is kept as an incremental QR factorisation (modified
Gram-Schmidt with one reorthogonalisation pass), so each OMP iteration costs
one correlation pass over the matrix plus O(n * t) for the new column.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, INFINITY
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef double EARLY_EXIT_RTOL = 1e-12
cdef double RANK_RTOL = 1e-10


cdef struct Workspace:
    int n
    int m
    int kmax
    double *q       # kmax rows of length n
    double *rmat    # kmax x kmax upper triangle
    double *b       # kmax
    double *r       # n
    double *w       # n
    double *corr    # m
    char *selected  # m
    int *support    # kmax


cdef int ws_alloc(Workspace *ws, int n, int m, int k) nogil:
    ws.n = n
    ws.m = m
    ws.kmax = k if k < n else n
    if ws.kmax < 1:
        ws.kmax = 1
    ws.q = <double *> malloc(ws.kmax * n * sizeof(double))
    ws.rmat = <double *> malloc(ws.kmax * ws.kmax * sizeof(double))
    ws.b = <double *> malloc(ws.kmax * sizeof(double))
    ws.r = <double *> malloc(n * sizeof(double))
    ws.w = <double *> malloc(n * sizeof(double))
    ws.corr = <double *> malloc(m * sizeof(double))
    ws.selected = <char *> malloc(m * sizeof(char))
    ws.support = <int *> malloc(ws.kmax * sizeof(int))
    if (ws.q == NULL or ws.rmat == NULL or ws.b == NULL or ws.r == NULL or
            ws.w == NULL or ws.corr == NULL or ws.selected == NULL or ws.support == NULL):
        return -1
    return 0


cdef void ws_free(Workspace *ws) nogil:
    free(ws.q)
    free(ws.rmat)
    free(ws.b)
    free(ws.r)
    free(ws.w)
    free(ws.corr)
    free(ws.selected)
    free(ws.support)


cdef inline double dot(const double *a, const double *b, int n) noexcept nogil:
    cdef double s = 0.0
    cdef int i
    for i in range(n):
        s += a[i] * b[i]
    return s


cdef int omp_core(const double *phi, const double *y, int k, Workspace *ws,
                  double *coef, double *rnorms, int *deficient) noexcept nogil:
    """Run OMP on y. Fills ws.support[:t], coef[:t], rnorms[:t + 1]; returns t."""
    cdef int n = ws.n, m = ws.m
    cdef int t = 0, i, j, l, p, best
    cdef double ynorm, rnorm, h, nrm, cn, v, bestval, ri
    cdef double *qt
    cdef const double *row

    deficient[0] = 0
    ynorm = sqrt(dot(y, y, n))
    rnorms[0] = ynorm
    if ynorm == 0.0:
        return 0
    for i in range(n):
        ws.r[i] = y[i]
    for j in range(m):
        ws.selected[j] = 0
    rnorm = ynorm

    while t < ws.kmax and t < k:
        if rnorm < EARLY_EXIT_RTOL * ynorm:
            break
        # correlations with the residual, row-major sweep
        for j in range(m):
            ws.corr[j] = 0.0
        for i in range(n):
            ri = ws.r[i]
            row = phi + i * m
            for j in range(m):
                ws.corr[j] += row[j] * ri
        best = -1
        bestval = -1.0
        for j in range(m):
            if ws.selected[j]:
                continue
            v = fabs(ws.corr[j])
            if v > bestval:
                bestval = v
                best = j
        if best < 0:
            break
        cn = 0.0
        for i in range(n):
            ws.w[i] = phi[i * m + best]
            cn += ws.w[i] * ws.w[i]
        cn = sqrt(cn)
        for l in range(t):
            ws.rmat[l * ws.kmax + t] = 0.0
        for p in range(2):
            for l in range(t):
                qt = ws.q + l * n
                h = dot(qt, ws.w, n)
                ws.rmat[l * ws.kmax + t] += h
                for i in range(n):
                    ws.w[i] -= h * qt[i]
        nrm = sqrt(dot(ws.w, ws.w, n))
        if nrm <= RANK_RTOL * cn:
            deficient[0] = 1
            break
        qt = ws.q + t * n
        for i in range(n):
            qt[i] = ws.w[i] / nrm
        ws.rmat[t * ws.kmax + t] = nrm
        h = dot(qt, ws.r, n)
        ws.b[t] = h
        for i in range(n):
            ws.r[i] -= h * qt[i]
        rnorm = sqrt(dot(ws.r, ws.r, n))
        ws.support[t] = best
        ws.selected[best] = 1
        t += 1
        rnorms[t] = rnorm

    # back substitution R c = b
    for l in range(t - 1, -1, -1):
        h = ws.b[l]
        for p in range(l + 1, t):
            h -= ws.rmat[l * ws.kmax + p] * coef[p]
        coef[l] = h / ws.rmat[l * ws.kmax + l]
    return t


def omp(const double[:, ::1] phi, const double[::1] y, int k):
    """Orthogonal matching pursuit; see ``abscs._fallback.omp``."""
    cdef int n = phi.shape[0], m = phi.shape[1]
    cdef Workspace ws
    cdef int t, l, deficient = 0
    if y.shape[0] != n:
        raise ValueError("measurement length does not match matrix rows")
    if ws_alloc(&ws, n, m, k) != 0:
        ws_free(&ws)
        raise MemoryError()
    cdef cnp.ndarray[double, ndim=1] x = np.zeros(m)
    cdef cnp.ndarray[double, ndim=1] coef = np.zeros(ws.kmax)
    cdef cnp.ndarray[double, ndim=1] rnorms = np.zeros(ws.kmax + 1)
    cdef double *cp = <double *> coef.data
    cdef double *rp = <double *> rnorms.data
    with nogil:
        t = omp_core(&phi[0, 0], &y[0], k, &ws, cp, rp, &deficient)
    support = np.empty(t, dtype=np.intp)
    for l in range(t):
        support[l] = ws.support[l]
        x[ws.support[l]] = coef[l]
    ws_free(&ws)
    return x, support, rnorms[:t + 1].copy(), deficient


def abs_sweep_omp(const double[:, ::1] phi, const double[::1] codepoints,
                  const cnp.intp_t[::1] offsets, const double[::1] x_tilde,
                  double[::1] z, cnp.intp_t[::1] indexes, int k):
    """One sequential AbS pass; see ``abscs._fallback.abs_sweep_omp``."""
    cdef int n = phi.shape[0], m = phi.shape[1]
    cdef int n_entries = z.shape[0]
    cdef Workspace ws
    cdef int e, i, l, t, lo, hi, best, held, flag = 0
    cdef long calls = 0, deficient = 0
    cdef double val, best_val, xv
    if n_entries != n or x_tilde.shape[0] != m or offsets.shape[0] != n + 1:
        raise ValueError("inconsistent shapes")
    if ws_alloc(&ws, n, m, k) != 0:
        ws_free(&ws)
        raise MemoryError()
    cdef cnp.ndarray[double, ndim=1] incumbent = np.empty(n_entries)
    cdef cnp.ndarray[double, ndim=1] winner = np.empty(n_entries)
    cdef cnp.ndarray[double, ndim=1] coef = np.zeros(ws.kmax)
    cdef cnp.ndarray[double, ndim=1] rnorms = np.zeros(ws.kmax + 1)
    cdef double *inc = <double *> incumbent.data
    cdef double *win = <double *> winner.data
    cdef double *cp = <double *> coef.data
    cdef double *rp = <double *> rnorms.data
    with nogil:
        for e in range(n_entries):
            lo = offsets[e]
            hi = offsets[e + 1]
            held = indexes[e]
            best = 0
            best_val = INFINITY
            for i in range(hi - lo):
                z[e] = codepoints[lo + i]
                t = omp_core(&phi[0, 0], &z[0], k, &ws, cp, rp, &flag)
                calls += 1
                deficient += flag
                # x_hat is zero off the support, so both terms reduce to it
                val = 0.0
                for l in range(t):
                    xv = cp[l]
                    val += xv * xv - 2.0 * x_tilde[ws.support[l]] * xv
                if i == held:
                    inc[e] = val
                if val < best_val:
                    best = i
                    best_val = val
            z[e] = codepoints[lo + best]
            indexes[e] = best
            win[e] = best_val
    ws_free(&ws)
    return incumbent, winner, calls, deficient
