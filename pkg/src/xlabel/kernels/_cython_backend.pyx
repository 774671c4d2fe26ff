# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled boosting kernel. Same contract as numpy_backend.boost_cycle."""
import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log1p

cnp.import_array()

NAME = "cython"


cdef inline double _logloss_term(double raw, double y) nogil:
    # log(1 + exp(-z)) with z = +raw for y=1, -raw for y=0, evaluated stably
    cdef double z = raw if y > 0.5 else -raw
    if z >= 0.0:
        return log1p(exp(-z))
    return -z + log1p(exp(z))


def boost_cycle(cnp.int32_t[:, ::1] bins_tr, cnp.float64_t[::1] y_tr,
                cnp.int32_t[::1] n_bins, double intercept,
                double learning_rate, int n_rounds,
                cnp.int32_t[:, ::1] bins_ho, cnp.float64_t[::1] y_ho,
                int patience):
    cdef Py_ssize_t n = bins_tr.shape[0]
    cdef Py_ssize_t d = bins_tr.shape[1]
    cdef Py_ssize_t m = bins_ho.shape[0]
    cdef Py_ssize_t width = 0
    cdef Py_ssize_t i, j, b
    cdef int r

    for j in range(d):
        if n_bins[j] > width:
            width = n_bins[j]

    scores_arr = np.zeros((d, width))
    counts_arr = np.zeros((d, width))
    sums_arr = np.zeros(width)
    upd_arr = np.zeros(width)
    raw_arr = np.full(n, intercept)
    raw_ho_arr = np.full(m, intercept)

    cdef cnp.float64_t[:, ::1] scores = scores_arr
    cdef cnp.float64_t[:, ::1] counts = counts_arr
    cdef cnp.float64_t[::1] sums = sums_arr
    cdef cnp.float64_t[::1] upd = upd_arr
    cdef cnp.float64_t[::1] raw = raw_arr
    cdef cnp.float64_t[::1] raw_ho = raw_ho_arr

    for j in range(d):
        for i in range(n):
            counts[j, bins_tr[i, j]] += 1.0

    cdef bint track = m > 0 and patience > 0
    cdef int best_round = 0
    cdef int rounds_run = 0
    cdef double best_loss = 0.0
    cdef double loss, p, acc

    if track:
        acc = 0.0
        for i in range(m):
            acc += _logloss_term(raw_ho[i], y_ho[i])
        best_loss = acc / m

    with nogil:
        for r in range(1, n_rounds + 1):
            for j in range(d):
                for b in range(n_bins[j]):
                    sums[b] = 0.0
                for i in range(n):
                    p = 1.0 / (1.0 + exp(-raw[i]))
                    sums[bins_tr[i, j]] += y_tr[i] - p
                for b in range(n_bins[j]):
                    if counts[j, b] > 0.0:
                        upd[b] = learning_rate * sums[b] / counts[j, b]
                    else:
                        upd[b] = 0.0
                    scores[j, b] += upd[b]
                for i in range(n):
                    raw[i] += upd[bins_tr[i, j]]
                if track:
                    for i in range(m):
                        raw_ho[i] += upd[bins_ho[i, j]]
            rounds_run = r
            if track:
                acc = 0.0
                for i in range(m):
                    acc += _logloss_term(raw_ho[i], y_ho[i])
                loss = acc / m
                if loss < best_loss:
                    best_loss = loss
                    best_round = r
                elif r - best_round >= patience:
                    break

    if not track:
        best_round = rounds_run
    return scores_arr, rounds_run, best_round
