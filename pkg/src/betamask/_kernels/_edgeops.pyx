# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled edge aggregation kernels.

These four loops sit inside every GNN forward/backward pass and every
explainer step, which makes them the hot path of the whole package. The
numpy fallback in numpy_backend.py implements the same contracts.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def degrees(const cnp.intp_t[::1] dst, const double[::1] weights, Py_ssize_t node_count):
    cdef cnp.ndarray[double, ndim=1] out = np.ones(node_count, dtype=np.float64)
    cdef double[::1] deg = out
    cdef Py_ssize_t e, m = dst.shape[0]
    for e in range(m):
        deg[dst[e]] += weights[e]
    return out


def aggregate(const cnp.intp_t[::1] src, const cnp.intp_t[::1] dst,
              const double[::1] coef_self, const double[::1] coef_edge,
              const double[:, ::1] feats):
    cdef Py_ssize_t n = feats.shape[0], d = feats.shape[1], m = src.shape[0]
    cdef cnp.ndarray[double, ndim=2] out_arr = np.empty((n, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t v, e, j
    cdef double c
    for v in range(n):
        c = coef_self[v]
        for j in range(d):
            out[v, j] = c * feats[v, j]
    for e in range(m):
        c = coef_edge[e]
        for j in range(d):
            out[dst[e], j] += c * feats[src[e], j]
    return out_arr


def aggregate_transpose(const cnp.intp_t[::1] src, const cnp.intp_t[::1] dst,
                        const double[::1] coef_self, const double[::1] coef_edge,
                        const double[:, ::1] grads):
    cdef Py_ssize_t n = grads.shape[0], d = grads.shape[1], m = src.shape[0]
    cdef cnp.ndarray[double, ndim=2] out_arr = np.empty((n, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t v, e, j
    cdef double c
    for v in range(n):
        c = coef_self[v]
        for j in range(d):
            out[v, j] = c * grads[v, j]
    for e in range(m):
        c = coef_edge[e]
        for j in range(d):
            out[src[e], j] += c * grads[dst[e], j]
    return out_arr


def edge_dot(const cnp.intp_t[::1] src, const cnp.intp_t[::1] dst,
             const double[:, ::1] rows_a, const double[:, ::1] rows_b):
    cdef Py_ssize_t m = src.shape[0], d = rows_a.shape[1]
    cdef cnp.ndarray[double, ndim=1] out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t e, j
    cdef double acc
    for e in range(m):
        acc = 0.0
        for j in range(d):
            acc += rows_a[dst[e], j] * rows_b[src[e], j]
        out[e] = acc
    return out_arr
