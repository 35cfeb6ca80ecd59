# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled FastMCD inner loops.

Same contract as ``_pykernels``; see that module for the semantics.  All the
per-start work (subset moments, Cholesky, distances, stable h-selection)
runs without the GIL on small scratch buffers.
"""
import numpy as np

from libc.math cimport log, sqrt, isfinite, INFINITY
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy, memset

cdef double EPS = 2.220446049250313e-16
cdef double REG_FACTOR = 1e-8


cdef struct Work:
    Py_ssize_t n
    Py_ssize_t p
    double* center
    double* cov
    double* L
    double* z
    double* d2
    Py_ssize_t* order
    Py_ssize_t* tmp
    char* mark
    Py_ssize_t* newsub


cdef int work_alloc(Work* w, Py_ssize_t n, Py_ssize_t p) nogil:
    w.n = n
    w.p = p
    w.center = <double*> malloc(p * sizeof(double))
    w.cov = <double*> malloc(p * p * sizeof(double))
    w.L = <double*> malloc(p * p * sizeof(double))
    w.z = <double*> malloc(p * sizeof(double))
    w.d2 = <double*> malloc(n * sizeof(double))
    w.order = <Py_ssize_t*> malloc(n * sizeof(Py_ssize_t))
    w.tmp = <Py_ssize_t*> malloc(n * sizeof(Py_ssize_t))
    w.mark = <char*> malloc(n * sizeof(char))
    w.newsub = <Py_ssize_t*> malloc(n * sizeof(Py_ssize_t))
    if (w.center == NULL or w.cov == NULL or w.L == NULL or w.z == NULL or w.d2 == NULL
            or w.order == NULL or w.tmp == NULL or w.mark == NULL or w.newsub == NULL):
        return -1
    return 0


cdef void work_free(Work* w) nogil:
    free(w.center); free(w.cov); free(w.L); free(w.z); free(w.d2)
    free(w.order); free(w.tmp); free(w.mark); free(w.newsub)


cdef void subset_stats(const double[:, ::1] X, const Py_ssize_t* idx, Py_ssize_t k, Work* w) nogil:
    cdef Py_ssize_t p = w.p, i, a, b, r
    cdef double da
    memset(w.center, 0, p * sizeof(double))
    memset(w.cov, 0, p * p * sizeof(double))
    for i in range(k):
        r = idx[i]
        for a in range(p):
            w.center[a] += X[r, a]
    for a in range(p):
        w.center[a] /= k
    for i in range(k):
        r = idx[i]
        for a in range(p):
            w.z[a] = X[r, a] - w.center[a]
        for a in range(p):
            da = w.z[a]
            for b in range(a + 1):
                w.cov[a * p + b] += da * w.z[b]
    for a in range(p):
        for b in range(a + 1):
            w.cov[a * p + b] /= (k - 1)
            w.cov[b * p + a] = w.cov[a * p + b]


cdef bint chol(const double* S, double* L, Py_ssize_t p, double ridge) nogil:
    """Lower Cholesky of S + ridge*I; False when a pivot is too small."""
    cdef Py_ssize_t i, j, k
    cdef double s, ljj, maxdiag = -INFINITY, thresh
    for j in range(p):
        if S[j * p + j] + ridge > maxdiag:
            maxdiag = S[j * p + j] + ridge
    if not maxdiag > 0:
        return False
    thresh = p * EPS * maxdiag
    memset(L, 0, p * p * sizeof(double))
    for j in range(p):
        s = S[j * p + j] + ridge
        for k in range(j):
            s -= L[j * p + k] * L[j * p + k]
        if not (s > thresh) or not isfinite(s):
            return False
        ljj = sqrt(s)
        L[j * p + j] = ljj
        for i in range(j + 1, p):
            s = S[i * p + j]
            for k in range(j):
                s -= L[i * p + k] * L[j * p + k]
            L[i * p + j] = s / ljj
    return True


cdef double factor(Work* w, bint* degenerate) nogil:
    """Factor w.cov into w.L; returns the log-determinant (-inf if singular)."""
    cdef Py_ssize_t p = w.p, j
    cdef double tr = 0.0, reg, logdet = 0.0
    if chol(w.cov, w.L, p, 0.0):
        for j in range(p):
            logdet += log(w.L[j * p + j])
        degenerate[0] = False
        return 2.0 * logdet
    for j in range(p):
        tr += w.cov[j * p + j]
    reg = REG_FACTOR * tr / p if tr > 0 else 1.0
    if not chol(w.cov, w.L, p, reg):
        memset(w.L, 0, p * p * sizeof(double))
        for j in range(p):
            w.L[j * p + j] = 1.0
    degenerate[0] = True
    return -INFINITY


cdef void distances(const double[:, ::1] X, Work* w) nogil:
    cdef Py_ssize_t n = w.n, p = w.p, i, a, b
    cdef double s, acc
    for i in range(n):
        acc = 0.0
        for a in range(p):
            s = X[i, a] - w.center[a]
            for b in range(a):
                s -= w.L[a * p + b] * w.z[b]
            s /= w.L[a * p + a]
            w.z[a] = s
            acc += s * s
        w.d2[i] = acc


cdef void argsort_stable(const double* key, Py_ssize_t* idx, Py_ssize_t* tmp, Py_ssize_t n) nogil:
    cdef Py_ssize_t width = 1, lo, mid, hi, i, j, k
    for i in range(n):
        idx[i] = i
    while width < n:
        lo = 0
        while lo < n:
            mid = lo + width
            if mid > n:
                mid = n
            hi = lo + 2 * width
            if hi > n:
                hi = n
            i = lo
            j = mid
            k = lo
            while i < mid and j < hi:
                if key[idx[j]] < key[idx[i]]:
                    tmp[k] = idx[j]
                    j += 1
                else:
                    tmp[k] = idx[i]
                    i += 1
                k += 1
            while i < mid:
                tmp[k] = idx[i]
                i += 1
                k += 1
            while j < hi:
                tmp[k] = idx[j]
                j += 1
                k += 1
            lo = hi
        memcpy(idx, tmp, n * sizeof(Py_ssize_t))
        width *= 2


cdef void select_h(Work* w, Py_ssize_t h, Py_ssize_t* out) nogil:
    """Indices of the h smallest w.d2 (ties to lower index), ascending."""
    cdef Py_ssize_t i, k = 0
    argsort_stable(w.d2, w.order, w.tmp, w.n)
    memset(w.mark, 0, w.n * sizeof(char))
    for i in range(h):
        w.mark[w.order[i]] = 1
    for i in range(w.n):
        if w.mark[i]:
            out[k] = i
            k += 1


cdef double csteps_core(const double[:, ::1] X, Py_ssize_t* subset, Py_ssize_t h,
                        Py_ssize_t max_steps, double tol, Work* w, double* trace,
                        Py_ssize_t* steps_out, bint* deg_out) nogil:
    """In-place C-step iteration on ``subset`` (sorted, length h)."""
    cdef Py_ssize_t steps = 0, i
    cdef bint same, deg
    cdef double logdet, new_logdet, change
    subset_stats(X, subset, h, w)
    logdet = factor(w, &deg)
    if trace != NULL:
        trace[0] = logdet
    while steps < max_steps and isfinite(logdet):
        distances(X, w)
        select_h(w, h, w.newsub)
        same = True
        for i in range(h):
            if w.newsub[i] != subset[i]:
                same = False
                break
        if same:
            break
        steps += 1
        memcpy(subset, w.newsub, h * sizeof(Py_ssize_t))
        subset_stats(X, subset, h, w)
        new_logdet = factor(w, &deg)
        if trace != NULL:
            trace[steps] = new_logdet
        change = new_logdet - logdet
        if change < 0:
            change = -change
        logdet = new_logdet
        if isfinite(logdet) and change <= tol:
            break
    steps_out[0] = steps
    deg_out[0] = deg
    return logdet


def mahalanobis_sq_rows(X, center, L):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[::1] cv = np.ascontiguousarray(center, dtype=np.float64)
    cdef const double[:, ::1] Lv = np.ascontiguousarray(L, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0], p = Xv.shape[1], i, a, b
    out = np.empty(n)
    cdef double[::1] ov = out
    cdef double s, acc
    cdef double* z = <double*> malloc(max(p, 1) * sizeof(double))
    if z == NULL:
        raise MemoryError()
    with nogil:
        for i in range(n):
            acc = 0.0
            for a in range(p):
                s = Xv[i, a] - cv[a]
                for b in range(a):
                    s -= Lv[a, b] * z[b]
                s /= Lv[a, a]
                z[a] = s
                acc += s * s
            ov[i] = acc
    free(z)
    return out


def csteps(X, subset, Py_ssize_t h, Py_ssize_t max_steps, double tol):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    sub = np.sort(np.asarray(subset, dtype=np.intp))
    if sub.shape[0] != h:
        raise ValueError("subset length must equal h")
    cdef Py_ssize_t[::1] sv = sub
    trace = np.empty(max_steps + 1)
    cdef double[::1] tv = trace
    cdef Work w
    cdef Py_ssize_t steps = 0
    cdef bint deg = False
    cdef double logdet
    if work_alloc(&w, Xv.shape[0], Xv.shape[1]) != 0:
        work_free(&w)
        raise MemoryError()
    with nogil:
        logdet = csteps_core(Xv, &sv[0], h, max_steps, tol, &w, &tv[0], &steps, &deg)
    work_free(&w)
    return sub, float(logdet), int(steps), bool(deg), [float(t) for t in trace[: steps + 1]]


def elemental_stage(X, perms, Py_ssize_t h, Py_ssize_t n_csteps):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const Py_ssize_t[:, ::1] pv = np.ascontiguousarray(perms, dtype=np.intp)
    cdef Py_ssize_t n = Xv.shape[0], p = Xv.shape[1], n_starts = pv.shape[0]
    subsets = np.empty((n_starts, h), dtype=np.intp)
    logdets = np.empty(n_starts)
    cdef Py_ssize_t[:, ::1] subv = subsets
    cdef double[::1] ldv = logdets
    cdef Work w
    cdef Py_ssize_t r, k, steps
    cdef bint deg, ok
    if work_alloc(&w, n, p) != 0:
        work_free(&w)
        raise MemoryError()
    with nogil:
        for r in range(n_starts):
            k = p + 1
            while True:
                subset_stats(Xv, &pv[r, 0], k, &w)
                ok = chol(w.cov, w.L, p, 0.0)
                if ok or k >= n:
                    break
                k += 1
            if not ok:
                factor(&w, &deg)
            distances(Xv, &w)
            select_h(&w, h, &subv[r, 0])
            ldv[r] = csteps_core(Xv, &subv[r, 0], h, n_csteps, 0.0, &w, NULL, &steps, &deg)
    work_free(&w)
    return subsets, logdets
