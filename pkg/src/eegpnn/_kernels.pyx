# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Signatures mirror ``eegpnn._kernels_py``."""
import numpy as np

from libc.math cimport exp, log, fabs, INFINITY

BACKEND = "cython"


def higuchi_lengths(const double[:, ::1] x, Py_ssize_t k_max):
    cdef Py_ssize_t n_rows = x.shape[0], n = x.shape[1]
    out_arr = np.empty((n_rows, k_max), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t r, k, m, i, n_m, start
    cdef double total, acc, norm
    with nogil:
        for r in range(n_rows):
            for k in range(1, k_max + 1):
                total = 0.0
                for m in range(1, k + 1):
                    n_m = (n - m) // k
                    start = m - 1
                    acc = 0.0
                    for i in range(1, n_m + 1):
                        acc = acc + fabs(x[r, start + i * k] - x[r, start + (i - 1) * k])
                    norm = (n - 1) / (<double>(n_m * k))
                    total = total + acc * norm / k
                out[r, k - 1] = total / k
    return out_arr


def sign_changes(const double[:, ::1] x):
    cdef Py_ssize_t n_rows = x.shape[0], n = x.shape[1]
    out_arr = np.zeros(n_rows, dtype=np.int64)
    cdef long long[::1] out = out_arr
    cdef Py_ssize_t r, i
    cdef double prev, cur
    cdef long long count
    with nogil:
        for r in range(n_rows):
            count = 0
            if n >= 3:
                prev = x[r, 1] - x[r, 0]
                for i in range(2, n):
                    cur = x[r, i] - x[r, i - 1]
                    if prev * cur < 0:
                        count = count + 1
                    prev = cur
            out[r] = count
    return out_arr


def log_class_scores(const double[:, ::1] probes, const double[:, ::1] exemplars,
                     const double[:, ::1] weights, const long long[::1] labels,
                     Py_ssize_t n_classes, double gamma, const long long[::1] exclude):
    """Per-class log of summed radial-basis activations.

    ``weights`` scales each squared coordinate difference per probe row;
    exemplar ``exclude[p]`` is skipped for probe ``p`` (``-1`` skips none).
    """
    cdef Py_ssize_t n_probes = probes.shape[0], q = exemplars.shape[0]
    cdef Py_ssize_t r_dim = probes.shape[1]
    out_arr = np.empty((n_probes, n_classes), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    run_max_arr = np.empty(n_classes, dtype=np.float64)
    run_sum_arr = np.empty(n_classes, dtype=np.float64)
    cdef double[::1] run_max = run_max_arr
    cdef double[::1] run_sum = run_sum_arr
    cdef Py_ssize_t p, j, r, c
    cdef double d2, diff, v
    with nogil:
        for p in range(n_probes):
            for c in range(n_classes):
                run_max[c] = -INFINITY
                run_sum[c] = 0.0
            for j in range(q):
                if j == exclude[p]:
                    continue
                d2 = 0.0
                for r in range(r_dim):
                    diff = exemplars[j, r] - probes[p, r]
                    d2 = d2 + weights[p, r] * diff * diff
                v = -gamma * d2
                c = labels[j]
                if v > run_max[c]:
                    run_sum[c] = run_sum[c] * exp(run_max[c] - v) + 1.0
                    run_max[c] = v
                else:
                    run_sum[c] = run_sum[c] + exp(v - run_max[c])
            for c in range(n_classes):
                if run_sum[c] > 0.0:
                    out[p, c] = run_max[c] + log(run_sum[c])
                else:
                    out[p, c] = -INFINITY
    return out_arr
