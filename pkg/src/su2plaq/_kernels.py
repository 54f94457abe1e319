"""Numba kernels for fused Pauli-sum application.

One pass over the state computes
``out[i] = sum_g weights[g, i ^ xs[g]] * vec[i ^ xs[g]]``; the accumulation
order over groups is fixed, and threads partition disjoint output ranges, so
results are deterministic run to run.
"""

import numba as nb
import numpy as np


@nb.njit(parallel=True, fastmath=True, cache=True, nogil=True)
def apply_real(xs, weights, vec, out):  # pragma: no cover - exercised via CompiledOp
    n_groups = xs.shape[0]
    dim = vec.shape[0]
    for i in nb.prange(dim):
        acc = 0.0
        for g in range(n_groups):
            j = i ^ xs[g]
            acc += weights[g, j] * vec[j]
        out[i] = acc


@nb.njit(parallel=True, fastmath=True, cache=True, nogil=True)
def apply_real_complexvec(xs, weights, vec, out):  # pragma: no cover
    n_groups = xs.shape[0]
    dim = vec.shape[0]
    for i in nb.prange(dim):
        acc = 0.0 + 0.0j
        for g in range(n_groups):
            j = i ^ xs[g]
            acc += weights[g, j] * vec[j]
        out[i] = acc
