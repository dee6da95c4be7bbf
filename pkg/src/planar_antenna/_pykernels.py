"""Pure-Python fallback for the compiled kernels in ``_kernels.pyx``."""
import math

import numpy as np


def simulate_chunk(t, state, t_end, k12, k21, k23, k31, detection_prob,
                   expo, unif, out, occupancy):
    expo = expo.tolist()
    unif = unif.tolist()
    n_expo, n_unif, n_out = len(expo), len(unif), out.shape[0]
    occ = occupancy.tolist()
    found = []
    i = j = 0
    done = False
    while True:
        if len(found) >= n_out or i >= n_expo or j + 2 > n_unif:
            break
        if state == 1:
            total = k12
        elif state == 2:
            total = k21 + k23
        else:
            total = k31
        if total <= 0.0:
            occ[state - 1] += t_end - t
            t = t_end
            done = True
            break
        dt = expo[i] / total
        i += 1
        if t + dt >= t_end:
            occ[state - 1] += t_end - t
            t = t_end
            done = True
            break
        occ[state - 1] += dt
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
                found.append(t)
            else:
                u = unif[j]
                j += 1
                if u < detection_prob:
                    found.append(t)
    n = len(found)
    out[:n] = found
    occupancy[:] = occ
    return t, state, i, j, n, done


def pair_histogram(times, bin_width, half_bins):
    times = np.ascontiguousarray(times, dtype=float)
    counts = np.zeros(2 * half_bins + 1, dtype=np.int64)
    n = times.size
    for m in range(1, n):
        d = times[m:] - times[:-m]
        k = np.floor(d / bin_width + 0.5).astype(np.int64)
        k = k[k <= half_bins]
        if k.size == 0:
            break
        hist = np.bincount(k, minlength=half_bins + 1)
        counts[half_bins:] += hist
        counts[half_bins::-1] += hist
    return counts
