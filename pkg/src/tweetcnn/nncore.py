"""Numeric kernels: valid 1-D convolution, strided max-pooling, relu and
softmax cross-entropy, each with an exact backward pass.

Kernels accept a single feature map (channels x length) or a batch
(batch x channels x length) and preserve the input dtype.  Dot-product
reductions accumulate in float64 and are stored back in the input dtype."""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _as_batch(x):
    x = np.asarray(x)
    if x.ndim == 2:
        return x[None], True
    if x.ndim == 3:
        return x, False
    raise ValueError("feature map must be 2-D or 3-D")


def _unbatch(y, squeeze):
    return y[0] if squeeze else y


def conv_out_len(n, h):
    return n - h + 1


def pool_out_len(length, w, st):
    return (length - w) // st + 1


def conv1d(x, weights, bias):
    """Valid cross-correlation.  weights: (m, c_in, h); bias: (m,).

    out[f, i] = bias[f] + sum_{k,j} x[k, i+j] * weights[f, k, j]."""
    xb, squeeze = _as_batch(x)
    weights = np.asarray(weights)
    bias = np.asarray(bias)
    m, c_in, h = weights.shape
    if xb.shape[1] != c_in:
        raise ValueError("channel mismatch")
    n = xb.shape[2]
    if n < h:
        raise ValueError("input shorter than filter window")
    # (B, c_in, L', h) -> (B, L', c_in*h)
    win = sliding_window_view(xb, h, axis=2)
    col = win.transpose(0, 2, 1, 3).reshape(xb.shape[0], n - h + 1, c_in * h)
    wf = weights.reshape(m, c_in * h)
    y64 = col.astype(np.float64) @ wf.astype(np.float64).T + bias.astype(np.float64)
    y = y64.transpose(0, 2, 1).astype(xb.dtype)
    return _unbatch(y, squeeze)


def conv1d_backward(x, weights, dout):
    """Gradients of conv1d w.r.t. input, weights and bias.

    dout has the forward output shape (m x L' per map)."""
    xb, squeeze = _as_batch(x)
    db_, _ = _as_batch(dout)
    weights = np.asarray(weights)
    m, c_in, h = weights.shape
    n = xb.shape[2]
    lp = n - h + 1
    if db_.shape[0] != xb.shape[0] or db_.shape[1] != m or db_.shape[2] != lp:
        raise ValueError("upstream gradient shape mismatch")
    win = sliding_window_view(xb, h, axis=2)
    col = win.transpose(0, 2, 1, 3).reshape(xb.shape[0], lp, c_in * h)
    d64 = db_.astype(np.float64)
    col64 = col.astype(np.float64)
    wf64 = weights.reshape(m, c_in * h).astype(np.float64)
    # (B, L', m)^T . (B, L', CH) summed over batch and positions
    dwf = np.einsum("blm,blc->mc", d64.transpose(0, 2, 1), col64, optimize=True)
    dbias = d64.sum(axis=(0, 2))
    dcol = d64.transpose(0, 2, 1) @ wf64  # (B, L', c_in*h)
    dcol = dcol.reshape(xb.shape[0], lp, c_in, h).transpose(0, 2, 1, 3)
    dx = np.zeros(xb.shape, dtype=np.float64)
    for j in range(h):
        dx[:, :, j : j + lp] += dcol[:, :, :, j]
    dx = dx.astype(xb.dtype)
    dw = dwf.reshape(m, c_in, h).astype(weights.dtype)
    dbias = dbias.astype(weights.dtype)
    return _unbatch(dx, squeeze), dw, dbias


def maxpool(x, w, st):
    """Max over windows of length w at stride st; partial windows dropped."""
    if w < 1 or st < 1:
        raise ValueError("window and stride must be >= 1")
    xb, squeeze = _as_batch(x)
    if xb.shape[2] < w:
        raise ValueError("pool window exceeds length")
    win = sliding_window_view(xb, w, axis=2)[:, :, ::st, :]
    return _unbatch(win.max(axis=3), squeeze)


def maxpool_backward(x, w, st, dout):
    """Route upstream gradient to each window's argmax (lowest index on ties)."""
    xb, squeeze = _as_batch(x)
    db_, _ = _as_batch(dout)
    if xb.shape[2] < w:
        raise ValueError("pool window exceeds length")
    win = sliding_window_view(xb, w, axis=2)[:, :, ::st, :]
    if db_.shape != win.shape[:3]:
        raise ValueError("upstream gradient shape mismatch")
    arg = win.argmax(axis=3)  # first occurrence on ties
    b, c, o = np.indices(arg.shape)
    pos = o * st + arg
    dx = np.zeros(xb.shape, dtype=db_.dtype)
    np.add.at(dx, (b, c, pos), db_)
    return _unbatch(dx, squeeze)


def relu(x):
    x = np.asarray(x)
    return np.maximum(x, 0)


def relu_backward(x, dout):
    x = np.asarray(x)
    dout = np.asarray(dout)
    if x.shape != dout.shape:
        raise ValueError("upstream gradient shape mismatch")
    return np.where(x > 0, dout, 0).astype(dout.dtype)


def softmax_xent(logits, gold):
    """Stable softmax + cross-entropy for one K-vector.

    Returns (probabilities, loss, dlogits) with dlogits = p - onehot(gold)."""
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 1:
        raise ValueError("logits must be a vector")
    k = len(z)
    if not 0 <= gold < k:
        raise ValueError("gold class out of range")
    z = z - z.max()
    e = np.exp(z)
    p = e / e.sum()
    loss = -np.log(max(p[gold], 1e-300))
    dlogits = p.copy()
    dlogits[gold] -= 1.0
    dtype = np.asarray(logits).dtype
    return p.astype(dtype), float(loss), dlogits.astype(dtype)


def softmax_xent_batch(logits, golds):
    """Batched variant: logits (B, K), golds (B,).  Loss is the mean."""
    z = np.asarray(logits, dtype=np.float64)
    golds = np.asarray(golds)
    b, k = z.shape
    if np.any(golds < 0) or np.any(golds >= k):
        raise ValueError("gold class out of range")
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=1, keepdims=True)
    picked = np.maximum(p[np.arange(b), golds], 1e-300)
    loss = float(-np.log(picked).mean())
    dlogits = p.copy()
    dlogits[np.arange(b), golds] -= 1.0
    dlogits /= b
    dtype = np.asarray(logits).dtype
    return p.astype(dtype), loss, dlogits.astype(dtype)
