"""Compiled inner loops for collapsed Gibbs sampling.

Uniform draws are generated by the caller with a seeded numpy Generator so the
kernels stay deterministic and free of hidden RNG state.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def draw_index(cumulative, u):
    """Index of the first cumulative weight above ``u * total``."""
    target = u * cumulative[cumulative.shape[0] - 1]
    last = cumulative.shape[0] - 1
    for t in range(last):
        if target < cumulative[t]:
            return t
    return last


@njit(cache=True)
def gibbs_sweep(words, doc_of, z, n_dt, n_tw, n_t, alpha, beta, vbeta, uniforms):
    k = n_t.shape[0]
    cumulative = np.empty(k)
    for i in range(words.shape[0]):
        w = words[i]
        d = doc_of[i]
        t = z[i]
        n_dt[d, t] -= 1
        n_tw[t, w] -= 1
        n_t[t] -= 1

        total = 0.0
        for j in range(k):
            total += (n_dt[d, j] + alpha) * (n_tw[j, w] + beta) / (n_t[j] + vbeta)
            cumulative[j] = total
        t = draw_index(cumulative, uniforms[i])

        z[i] = t
        n_dt[d, t] += 1
        n_tw[t, w] += 1
        n_t[t] += 1


@njit(cache=True)
def fold_in_sweeps(phi_cols, z, n_d, alpha, uniforms):
    # phi_cols[t, i] is the frozen topic-word probability of token i under topic t
    k = phi_cols.shape[0]
    n = phi_cols.shape[1]
    cumulative = np.empty(k)
    for s in range(uniforms.shape[0]):
        for i in range(n):
            t = z[i]
            n_d[t] -= 1
            total = 0.0
            for j in range(k):
                total += (n_d[j] + alpha) * phi_cols[j, i]
                cumulative[j] = total
            t = draw_index(cumulative, uniforms[s, i])
            z[i] = t
            n_d[t] += 1
