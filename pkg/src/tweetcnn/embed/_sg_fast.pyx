# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled skip-gram inner loop.

Mirrors ``_sg_python.train_range`` update-for-update (same RNG stream, same
accumulation widths: float32 storage, float64 partial sums)."""

from libc.math cimport exp
from libc.stdlib cimport free, malloc

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef unsigned long long LCG_A = 25214903917ULL
cdef unsigned long long LCG_C = 11ULL


cdef inline double _sigmoid(double f) nogil:
    if f > 30.0:
        f = 30.0
    elif f < -30.0:
        f = -30.0
    return 1.0 / (1.0 + exp(-f))


def train_range(
    float[:, ::1] syn0,
    float[:, ::1] syn1,
    int[::1] data,
    long long[::1] offsets,
    long sent_lo,
    long sent_hi,
    int[::1] table,
    unsigned int[::1] keep_thresh,
    int do_subsample,
    int window,
    int negative,
    double lr0,
    double lr_floor,
    long long total_words,
    long long words_done,
    unsigned long long next_random,
    int[::1] scratch,
):
    """Train on sentences [sent_lo, sent_hi); returns (words_done, next_random)."""
    cdef long s, p, lo, hi
    cdef long i, j, jlo, jhi, n
    cdef int k, c, w, center, ctx, target, dim
    cdef double lr, f, g, label
    cdef unsigned long long tsize = <unsigned long long> table.shape[0]
    cdef double *neu1e
    cdef float *v
    cdef float *u

    dim = <int> syn0.shape[1]
    neu1e = <double *> malloc(dim * sizeof(double))
    if neu1e == NULL:
        raise MemoryError()
    try:
        with nogil:
            for s in range(sent_lo, sent_hi):
                lo = <long> offsets[s]
                hi = <long> offsets[s + 1]
                n = 0
                for p in range(lo, hi):
                    w = data[p]
                    words_done += 1
                    if do_subsample:
                        next_random = next_random * LCG_A + LCG_C
                        if ((next_random >> 16) & 0xFFFFFFFFULL) >= keep_thresh[w]:
                            continue
                    scratch[n] = w
                    n += 1
                lr = lr0 * (1.0 - (<double> words_done) / (<double> total_words))
                if lr < lr_floor:
                    lr = lr_floor
                for i in range(n):
                    center = scratch[i]
                    v = &syn0[center, 0]
                    jlo = i - window if i - window > 0 else 0
                    jhi = i + window + 1 if i + window + 1 < n else n
                    for j in range(jlo, jhi):
                        if j == i:
                            continue
                        ctx = scratch[j]
                        for c in range(dim):
                            neu1e[c] = 0.0
                        for k in range(negative + 1):
                            if k == 0:
                                target = ctx
                                label = 1.0
                            else:
                                next_random = next_random * LCG_A + LCG_C
                                target = table[<long> ((next_random >> 16) % tsize)]
                                if target == ctx:
                                    continue
                                label = 0.0
                            u = &syn1[target, 0]
                            f = 0.0
                            for c in range(dim):
                                f += (<double> v[c]) * (<double> u[c])
                            g = (label - _sigmoid(f)) * lr
                            for c in range(dim):
                                neu1e[c] += g * (<double> u[c])
                            for c in range(dim):
                                u[c] = u[c] + <float> (g * (<double> v[c]))
                        for c in range(dim):
                            v[c] = v[c] + <float> neu1e[c]
    finally:
        free(neu1e)
    return words_done, next_random
