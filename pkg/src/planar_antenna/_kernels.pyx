# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled event loop and pair-correlation kernels.

Must stay operation-for-operation identical to ``_pykernels`` so that both
backends return bitwise-identical results for the same random draws.
"""
from libc.math cimport floor

import numpy as np
cimport numpy as cnp


def simulate_chunk(double t, int state, double t_end,
                   double k12, double k21, double k23, double k31,
                   double detection_prob,
                   const double[::1] expo, const double[::1] unif,
                   double[::1] out, double[::1] occupancy):
    cdef Py_ssize_t i = 0, j = 0, n = 0
    cdef Py_ssize_t n_expo = expo.shape[0], n_unif = unif.shape[0], n_out = out.shape[0]
    cdef double total, dt, u
    cdef bint done = False
    while True:
        if n >= n_out or i >= n_expo or j + 2 > n_unif:
            break
        if state == 1:
            total = k12
        elif state == 2:
            total = k21 + k23
        else:
            total = k31
        if total <= 0.0:
            occupancy[state - 1] += t_end - t
            t = t_end
            done = True
            break
        dt = expo[i] / total
        i += 1
        if t + dt >= t_end:
            occupancy[state - 1] += t_end - t
            t = t_end
            done = True
            break
        occupancy[state - 1] += dt
        t += dt
        if state == 1:
            state = 2
        elif state == 3:
            state = 1
        else:
            if k23 > 0.0:
                u = unif[j]
                j += 1
                if u * total >= k21:
                    state = 3
                    continue
            state = 1
            if detection_prob >= 1.0:
                out[n] = t
                n += 1
            else:
                u = unif[j]
                j += 1
                if u < detection_prob:
                    out[n] = t
                    n += 1
    return t, state, i, j, n, done


def pair_histogram(const double[::1] times, double bin_width, Py_ssize_t half_bins):
    cdef cnp.ndarray[cnp.int64_t, ndim=1] counts = np.zeros(2 * half_bins + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] c = counts
    cdef Py_ssize_t n = times.shape[0], a, b, k
    cdef double d
    for a in range(n):
        for b in range(a + 1, n):
            d = times[b] - times[a]
            k = <Py_ssize_t>floor(d / bin_width + 0.5)
            if k > half_bins:
                break
            c[half_bins + k] += 1
            c[half_bins - k] += 1
    return counts
