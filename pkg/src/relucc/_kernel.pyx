# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""int64 affine layer with fused activation.

Callers guarantee that every accumulator stays below 2**62 in magnitude.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef long long i64


def affine_layer(const i64[:, ::1] x, const i64[:, ::1] w, const i64[::1] b, int act):
    """Return ``act(x @ w.T + b)``; act is 0 (linear), 1 (relu) or 2 (sign)."""
    cdef Py_ssize_t n = x.shape[0], m = x.shape[1], k = w.shape[0]
    cdef Py_ssize_t i, j, t
    cdef i64 acc, wt
    out = np.empty((n, k), dtype=np.int64)
    cdef i64[:, ::1] o = out
    # column lists of nonzero weights per neuron
    nnz = np.count_nonzero(w, axis=1).astype(np.int64)
    cdef i64[::1] cnt = nnz
    cdef Py_ssize_t total = 0
    for j in range(k):
        total += cnt[j]
    idx_arr = np.empty(max(total, 1), dtype=np.int64)
    val_arr = np.empty(max(total, 1), dtype=np.int64)
    start_arr = np.empty(k + 1, dtype=np.int64)
    cdef i64[::1] idx = idx_arr
    cdef i64[::1] val = val_arr
    cdef i64[::1] start = start_arr
    cdef Py_ssize_t pos = 0
    for j in range(k):
        start[j] = pos
        for t in range(m):
            wt = w[j, t]
            if wt != 0:
                idx[pos] = t
                val[pos] = wt
                pos += 1
    start[k] = pos
    with nogil:
        for i in range(n):
            for j in range(k):
                acc = b[j]
                for t in range(start[j], start[j + 1]):
                    acc += val[t] * x[i, idx[t]]
                if act == 1:
                    if acc < 0:
                        acc = 0
                elif act == 2:
                    acc = 1 if acc > 0 else 0
                o[i, j] = acc
    return out
