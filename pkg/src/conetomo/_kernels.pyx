# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled ray quadrature for bump-sum fields.

Mirrors :mod:`conetomo._fallback` operation for operation so both backends
pick identical breakpoints and panel counts.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, exp, ceil, pow
from libc.stdlib cimport malloc, free

cnp.import_array()

DEF MAX_TERMS = 256


cdef inline void _sort(double* x, int m) noexcept nogil:
    cdef int i, j
    cdef double key
    for i in range(1, m):
        key = x[i]
        j = i - 1
        while j >= 0 and x[j] > key:
            x[j + 1] = x[j]
            j -= 1
        x[j + 1] = key


cdef double _ray(const double* a, const double* v, int n, int k,
                 const double[:, ::1] centers, const double[::1] radii,
                 const double[::1] amps, const double[::1] gx,
                 const double[::1] gw, double panels,
                 double* lo, double* hi, int* hit, double* bp) noexcept nogil:
    cdef int T = radii.shape[0]
    cdef int Q = gx.shape[0]
    cdef int t, d, i, p, q, nb = 0, npan
    cdef double b, cc, disc, sq, diff, s0, s1, seg, mid, dmin, L, r, w, d2, rho2
    cdef double total = 0.0, acc, x
    for t in range(T):
        b = 0.0
        cc = 0.0
        for d in range(n):
            diff = a[d] - centers[t, d]
            b += v[d] * diff
            cc += diff * diff
        cc -= radii[t] * radii[t]
        disc = b * b - cc
        hit[t] = 0
        if disc > 0.0:
            sq = sqrt(disc)
            lo[t] = -b - sq
            hi[t] = -b + sq
            if lo[t] < 0.0:
                lo[t] = 0.0
            if hi[t] > lo[t]:
                hit[t] = 1
                bp[nb] = lo[t]
                bp[nb + 1] = hi[t]
                nb += 2
    if nb == 0:
        return 0.0
    _sort(bp, nb)
    for i in range(nb - 1):
        s0 = bp[i]
        s1 = bp[i + 1]
        seg = s1 - s0
        if seg <= 0.0:
            continue
        mid = 0.5 * (s0 + s1)
        dmin = -1.0
        for t in range(T):
            if hit[t] and lo[t] <= mid and hi[t] >= mid:
                if dmin < 0.0 or 2.0 * radii[t] < dmin:
                    dmin = 2.0 * radii[t]
        if dmin < 0.0:
            continue
        npan = <int>ceil(seg * panels / dmin)
        if npan < 1:
            npan = 1
        L = seg / npan
        acc = 0.0
        for p in range(npan):
            for q in range(Q):
                r = s0 + L * p + 0.5 * L * (gx[q] + 1.0)
                w = 0.0
                for t in range(T):
                    if not (hit[t] and lo[t] <= mid and hi[t] >= mid):
                        continue
                    d2 = 0.0
                    for d in range(n):
                        x = a[d] + r * v[d] - centers[t, d]
                        d2 += x * x
                    rho2 = d2 / (radii[t] * radii[t])
                    if rho2 < 1.0:
                        w += amps[t] * exp(1.0 - 1.0 / (1.0 - rho2))
                if k > 0:
                    w *= pow(r, k)
                acc += gw[q] * w
        total += 0.5 * L * acc
    return total


def beam_batch(const double[:, ::1] a, const double[:, ::1] v, int k,
               const double[:, ::1] centers, const double[::1] radii,
               const double[::1] amps, const double[::1] gx,
               const double[::1] gw, double panels):
    """Weighted ray integrals for a batch of (source, direction) pairs."""
    cdef Py_ssize_t N = a.shape[0], i
    cdef int n = a.shape[1]
    cdef int T = radii.shape[0]
    if T > MAX_TERMS:
        raise ValueError("too many phantom terms")
    out = np.zeros(N, dtype=np.float64)
    cdef double[::1] res = out
    cdef double lo[MAX_TERMS]
    cdef double hi[MAX_TERMS]
    cdef int hit[MAX_TERMS]
    cdef double bp[2 * MAX_TERMS]
    if T == 0:
        return out
    with nogil:
        for i in range(N):
            res[i] = _ray(&a[i, 0], &v[i, 0], n, k, centers, radii, amps,
                          gx, gw, panels, lo, hi, hit, bp)
    return out
