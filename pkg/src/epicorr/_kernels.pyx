# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Lloyd iterations over flattened matrices.

Mirrors ``_kernels_py`` step for step; the two must stay in sync.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


cdef inline double _sqdist(const double[:, ::1] a, Py_ssize_t i,
                           const double[:, ::1] b, Py_ssize_t j) noexcept nogil:
    cdef Py_ssize_t p, n = a.shape[1]
    cdef double s = 0.0, d
    for p in range(n):
        d = a[i, p] - b[j, p]
        s += d * d
    return s


def pairwise_sq_dists(const double[:, ::1] X):
    """Squared Frobenius distances between all rows of ``X`` (M x P)."""
    cdef Py_ssize_t m = X.shape[0], i, j
    out_arr = np.zeros((m, m), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double d
    with nogil:
        for i in range(m):
            for j in range(i + 1, m):
                d = _sqdist(X, i, X, j)
                out[i, j] = d
                out[j, i] = d
    return out_arr


def kmeans_run(const double[:, ::1] X, const cnp.intp_t[::1] init, double tol, int max_iter):
    """One k-means run from the given initial rows.

    Returns ``(labels, centroids, inertia, n_iter, history, converged)``
    where ``history[t]`` is the inertia after iteration ``t``'s update.
    """
    cdef Py_ssize_t m = X.shape[0], p = X.shape[1], k = init.shape[0]
    cdef Py_ssize_t i, j, q, l, best, pick, it = 0
    cdef double d, dmin, shift, s, inertia = 0.0
    cdef bint converged = False

    cent_arr = np.empty((k, p), dtype=np.float64)
    new_arr = np.empty((k, p), dtype=np.float64)
    dist_arr = np.empty((m, k), dtype=np.float64)
    labels_arr = np.empty(m, dtype=np.intp)
    counts_arr = np.empty(k, dtype=np.intp)
    hist_arr = np.empty(max(max_iter, 1), dtype=np.float64)
    cdef double[:, ::1] cent = cent_arr
    cdef double[:, ::1] new = new_arr
    cdef double[:, ::1] dist = dist_arr
    cdef cnp.intp_t[::1] labels = labels_arr
    cdef cnp.intp_t[::1] counts = counts_arr
    cdef double[::1] hist = hist_arr

    with nogil:
        for j in range(k):
            for q in range(p):
                cent[j, q] = X[init[j], q]

        while it < max_iter:
            # assignment: nearest centroid, lowest index on ties
            for j in range(k):
                counts[j] = 0
            for i in range(m):
                best = 0
                dmin = _sqdist(X, i, cent, 0)
                dist[i, 0] = dmin
                for j in range(1, k):
                    d = _sqdist(X, i, cent, j)
                    dist[i, j] = d
                    if d < dmin:
                        dmin = d
                        best = j
                labels[i] = best
                counts[best] += 1

            # empty-cluster repair: move the point farthest from its own
            # centroid (taken from a cluster with >1 members) into the hole
            for j in range(k):
                if counts[j] != 0:
                    continue
                pick = -1
                dmin = -1.0
                for i in range(m):
                    if counts[labels[i]] > 1 and dist[i, labels[i]] > dmin:
                        dmin = dist[i, labels[i]]
                        pick = i
                counts[labels[pick]] -= 1
                labels[pick] = j
                counts[j] = 1
                dist[pick, j] = 0.0
                for q in range(p):
                    cent[j, q] = X[pick, q]

            # centroid update
            for j in range(k):
                for q in range(p):
                    new[j, q] = 0.0
            for i in range(m):
                l = labels[i]
                for q in range(p):
                    new[l, q] += X[i, q]
            shift = 0.0
            for j in range(k):
                s = 0.0
                for q in range(p):
                    new[j, q] = new[j, q] / counts[j]
                    d = new[j, q] - cent[j, q]
                    s += d * d
                    cent[j, q] = new[j, q]
                s = sqrt(s)
                if s > shift:
                    shift = s

            inertia = 0.0
            for i in range(m):
                inertia += _sqdist(X, i, cent, labels[i])
            hist[it] = inertia
            it += 1
            if shift <= tol:
                converged = True
                break

    return labels_arr, cent_arr, inertia, it, hist_arr[:it].copy(), converged
