"""Pure-Python skip-gram inner loop.

Reference implementation of the training kernel; the compiled extension in
``_sg_fast.pyx`` follows the same update order and RNG stream.  Use it only
at small scale or where the extension cannot be built."""

import math

import numpy as np

_MASK64 = (1 << 64) - 1
_LCG_A = 25214903917
_LCG_C = 11


def _sigmoid(f):
    if f > 30.0:
        f = 30.0
    elif f < -30.0:
        f = -30.0
    return 1.0 / (1.0 + math.exp(-f))


def train_range(
    syn0,
    syn1,
    data,
    offsets,
    sent_lo,
    sent_hi,
    table,
    keep_thresh,
    do_subsample,
    window,
    negative,
    lr0,
    lr_floor,
    total_words,
    words_done,
    next_random,
    scratch,
):
    """Train on sentences [sent_lo, sent_hi); returns (words_done, next_random)."""
    tsize = len(table)
    for s in range(sent_lo, sent_hi):
        lo, hi = int(offsets[s]), int(offsets[s + 1])
        kept = []
        for p in range(lo, hi):
            w = int(data[p])
            words_done += 1
            if do_subsample:
                next_random = (next_random * _LCG_A + _LCG_C) & _MASK64
                if ((next_random >> 16) & 0xFFFFFFFF) >= keep_thresh[w]:
                    continue
            kept.append(w)
        lr = lr0 * (1.0 - words_done / total_words)
        if lr < lr_floor:
            lr = lr_floor
        n = len(kept)
        for i in range(n):
            center = kept[i]
            v = syn0[center]
            jlo = i - window if i - window > 0 else 0
            jhi = i + window + 1 if i + window + 1 < n else n
            for j in range(jlo, jhi):
                if j == i:
                    continue
                ctx = kept[j]
                neu1e = np.zeros(syn0.shape[1], dtype=np.float64)
                for k in range(negative + 1):
                    if k == 0:
                        target = ctx
                        label = 1.0
                    else:
                        next_random = (next_random * _LCG_A + _LCG_C) & _MASK64
                        target = int(table[(next_random >> 16) % tsize])
                        if target == ctx:
                            continue
                        label = 0.0
                    u = syn1[target]
                    # sequential sum mirrors the compiled kernel's rounding;
                    # BLAS dot reorders the reduction and drifts by ulps
                    f = 0.0
                    for prod in v.astype(np.float64) * u.astype(np.float64):
                        f += prod
                    g = (label - _sigmoid(f)) * lr
                    # promote u so the product is accumulated in float64,
                    # matching the compiled kernel instead of float32 numpy
                    neu1e += g * u.astype(np.float64)
                    syn1[target] += (g * v.astype(np.float64)).astype(np.float32)
                syn0[center] += neu1e.astype(np.float32)
    return words_done, next_random
