"""Network assembly: the L1/L2/L3 convolutional architectures, forward
prediction, and loss with full parameter gradients for one batch.

Parameter tensors are float32 on disk and during training; gradient checks
run the same code on float64 copies."""

import os
import struct
from dataclasses import dataclass, field

import numpy as np

from tweetcnn import nncore
from tweetcnn.vocab import Vocabulary

N_CLASSES = 3
DEFAULT_N_MAX = 60


@dataclass(frozen=True)
class ArchitectureSpec:
    name: str
    filters: int
    windows: tuple
    pools: tuple  # (window, stride) between conv layers; one fewer than windows
    n_max: int = DEFAULT_N_MAX
    n_classes: int = N_CLASSES

    @property
    def n_layers(self):
        return len(self.windows)


_TABLE = {
    "L1": dict(filters=300, windows=(5,), pools=()),
    "L2": dict(filters=200, windows=(4, 3), pools=((4, 2),)),
    "L3": dict(filters=200, windows=(4, 3, 2), pools=((4, 2), (3, 1))),
}


def make_arch(name, n_max=DEFAULT_N_MAX):
    if name not in _TABLE:
        raise ValueError(f"unknown architecture {name!r}")
    return ArchitectureSpec(name=name, n_max=n_max, **_TABLE[name])


def shape_walk(arch, n=None):
    """Sequence-length after each conv / intermediate pool, ending with the
    global max-over-time pool (length 1)."""
    length = arch.n_max if n is None else n
    walk = [length]
    for i, h in enumerate(arch.windows):
        if length < h:
            raise ValueError("input shorter than filter window")
        length = nncore.conv_out_len(length, h)
        walk.append(length)
        if i < len(arch.pools):
            w, st = arch.pools[i]
            if length < w:
                raise ValueError("pool window exceeds length")
            length = nncore.pool_out_len(length, w, st)
            walk.append(length)
    walk.append(1)
    return walk


@dataclass
class NetworkParams:
    arch: ArchitectureSpec
    vocab_size: int
    dim: int
    tensors: dict = field(default_factory=dict)

    def tensor_names(self):
        names = ["embedding"]
        for i in range(1, self.arch.n_layers + 1):
            names += [f"conv{i}_w", f"conv{i}_b"]
        names += ["hidden_w", "hidden_b", "softmax_w", "softmax_b"]
        return names

    def copy(self):
        return NetworkParams(
            self.arch, self.vocab_size, self.dim,
            {k: v.copy() for k, v in self.tensors.items()},
        )

    def astype(self, dtype):
        return NetworkParams(
            self.arch, self.vocab_size, self.dim,
            {k: v.astype(dtype) for k, v in self.tensors.items()},
        )


def build(arch, vocab_size, dim, init="random", seed=0):
    """Initialize parameters.  ``init`` is "random" or a pretrained V x d
    embedding table; non-embedding weights are uniform in [-0.05, 0.05],
    biases zero, and the <pad> embedding row is zeroed either way."""
    rng = np.random.default_rng(seed)

    def uniform(shape):
        return (rng.random(shape) * 0.1 - 0.05).astype(np.float32)

    tensors = {}
    if isinstance(init, str):
        if init != "random":
            raise ValueError(f"unknown init mode {init!r}")
        emb = uniform((vocab_size, dim))
    else:
        emb = np.asarray(init, dtype=np.float32).copy()
        if emb.shape != (vocab_size, dim):
            raise ValueError(
                f"pretrained table shape {emb.shape} != ({vocab_size}, {dim})"
            )
    emb[0] = 0.0
    tensors["embedding"] = emb
    m = arch.filters
    c_in = dim
    for i, h in enumerate(arch.windows, start=1):
        tensors[f"conv{i}_w"] = uniform((m, c_in, h))
        tensors[f"conv{i}_b"] = np.zeros(m, dtype=np.float32)
        c_in = m
    tensors["hidden_w"] = uniform((m, m))
    tensors["hidden_b"] = np.zeros(m, dtype=np.float32)
    tensors["softmax_w"] = uniform((arch.n_classes, m))
    tensors["softmax_b"] = np.zeros(arch.n_classes, dtype=np.float32)
    return NetworkParams(arch, vocab_size, dim, tensors)


def _forward_cached(params, ids_batch):
    """Full forward pass keeping per-layer activations for backprop."""
    arch = params.arch
    t = params.tensors
    ids = np.asarray(ids_batch)
    if ids.ndim == 1:
        ids = ids[None]
    if ids.max(initial=0) >= params.vocab_size or ids.min(initial=0) < 0:
        raise ValueError("token id out of range")
    emb = t["embedding"][ids]  # (B, n, d)
    x = np.ascontiguousarray(emb.transpose(0, 2, 1))  # (B, d, n)
    cache = {"ids": ids, "inputs": [x], "pre": [], "act": []}
    for i in range(1, arch.n_layers + 1):
        a = nncore.conv1d(x, t[f"conv{i}_w"], t[f"conv{i}_b"])
        r = nncore.relu(a)
        cache["pre"].append(a)
        cache["act"].append(r)
        if i - 1 < len(arch.pools):
            w, st = arch.pools[i - 1]
            x = nncore.maxpool(r, w, st)
        else:
            x = r
        cache["inputs"].append(x)
    final_len = x.shape[2]
    pooled = nncore.maxpool(x, final_len, 1)[:, :, 0]  # max over time -> (B, m)
    dtype = x.dtype
    h_pre = (
        pooled.astype(np.float64) @ t["hidden_w"].astype(np.float64).T
        + t["hidden_b"].astype(np.float64)
    ).astype(dtype)
    h = nncore.relu(h_pre)
    logits = (
        h.astype(np.float64) @ t["softmax_w"].astype(np.float64).T
        + t["softmax_b"].astype(np.float64)
    ).astype(dtype)
    cache.update(final_len=final_len, pooled=pooled, h_pre=h_pre, h=h, logits=logits)
    return cache


def forward(params, ids):
    """Class probabilities for one encoded sequence (or a batch of them)."""
    ids = np.asarray(ids)
    single = ids.ndim == 1
    cache = _forward_cached(params, ids)
    p, _, _ = nncore.softmax_xent_batch(
        cache["logits"], np.zeros(cache["logits"].shape[0], dtype=np.int64)
    )
    return p[0] if single else p


def predict(params, ids):
    """argmax class; ties resolve to the lowest index."""
    p = forward(params, ids)
    if p.ndim == 1:
        return int(np.argmax(p))
    return np.argmax(p, axis=1)


def loss_and_grads(params, ids_batch, labels, freeze_embeddings=False):
    """Mean cross-entropy over a batch plus gradients for every tensor.

    The embedding gradient is sparse: ``grads["embedding"]`` is a
    (rows, values) pair covering only ids present in the batch, with the
    <pad> row always excluded."""
    ids = np.asarray(ids_batch)
    if ids.ndim == 1:
        ids = ids[None]
    labels = np.atleast_1d(np.asarray(labels))
    if ids.shape[0] == 0:
        raise ValueError("empty batch")
    if ids.shape[0] != len(labels):
        raise ValueError("batch/labels length mismatch")
    arch = params.arch
    t = params.tensors
    dtype = t["embedding"].dtype
    cache = _forward_cached(params, ids)
    _, loss, dlogits = nncore.softmax_xent_batch(cache["logits"], labels)
    grads = {}
    d64 = dlogits.astype(np.float64)
    h64 = cache["h"].astype(np.float64)
    grads["softmax_w"] = (d64.T @ h64).astype(dtype)
    grads["softmax_b"] = d64.sum(axis=0).astype(dtype)
    dh = (d64 @ t["softmax_w"].astype(np.float64)).astype(dtype)
    dh_pre = nncore.relu_backward(cache["h_pre"], dh)
    dp64 = dh_pre.astype(np.float64)
    pooled64 = cache["pooled"].astype(np.float64)
    grads["hidden_w"] = (dp64.T @ pooled64).astype(dtype)
    grads["hidden_b"] = dp64.sum(axis=0).astype(dtype)
    dpooled = (dp64 @ t["hidden_w"].astype(np.float64)).astype(dtype)
    x_last = cache["inputs"][-1]
    dx = nncore.maxpool_backward(x_last, cache["final_len"], 1, dpooled[:, :, None])
    for i in range(arch.n_layers, 0, -1):
        if i - 1 < len(arch.pools):
            w, st = arch.pools[i - 1]
            dr = nncore.maxpool_backward(cache["act"][i - 1], w, st, dx)
        else:
            dr = dx
        da = nncore.relu_backward(cache["pre"][i - 1], dr)
        dx, dw, db = nncore.conv1d_backward(
            cache["inputs"][i - 1], t[f"conv{i}_w"], da
        )
        grads[f"conv{i}_w"] = dw
        grads[f"conv{i}_b"] = db
    if freeze_embeddings:
        grads["embedding"] = (np.zeros(0, dtype=np.int64), np.zeros((0, params.dim), dtype=dtype))
    else:
        demb = dx.transpose(0, 2, 1)  # (B, n, d)
        acc = np.zeros((params.vocab_size, params.dim), dtype=np.float64)
        np.add.at(acc, ids.reshape(-1), demb.reshape(-1, params.dim).astype(np.float64))
        rows = np.unique(ids)
        rows = rows[rows != 0]  # <pad> gradient pinned to zero
        grads["embedding"] = (rows.astype(np.int64), acc[rows].astype(dtype))
    return loss, grads


# --- model directory serialization -----------------------------------------

FORMAT_VERSION = 1


def _write_tensor(path, arr2d):
    arr2d = np.ascontiguousarray(arr2d, dtype="<f4")
    with open(path, "wb") as f:
        f.write(struct.pack("<II", arr2d.shape[0], arr2d.shape[1]))
        f.write(arr2d.tobytes())


def _read_tensor(path):
    with open(path, "rb") as f:
        rows, cols = struct.unpack("<II", f.read(8))
        body = np.frombuffer(f.read(), dtype="<f4")
    if len(body) != rows * cols:
        raise ValueError(f"{path}: truncated tensor")
    return body.reshape(rows, cols).astype(np.float32)


def save_tensor(path, arr):
    """Any-rank tensor as the on-disk (rows, cols) format."""
    arr = np.asarray(arr)
    if arr.ndim == 1:
        _write_tensor(path, arr[None, :])
    else:
        _write_tensor(path, arr.reshape(arr.shape[0], -1))


def load_tensor(path, shape):
    flat = _read_tensor(path)
    return flat.reshape(shape)


def save_model(model_dir, params, vocab):
    os.makedirs(model_dir, exist_ok=True)
    arch = params.arch
    lines = [
        f"format_version={FORMAT_VERSION}",
        f"arch={arch.name}",
        f"V={params.vocab_size}",
        f"d={params.dim}",
        f"n_max={arch.n_max}",
        f"K={arch.n_classes}",
        f"filters={arch.filters}",
        "windows=" + ",".join(str(h) for h in arch.windows),
        "pools=" + ",".join(f"{w}:{st}" for w, st in arch.pools),
    ]
    with open(os.path.join(model_dir, "manifest.txt"), "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    vocab.save_tsv(os.path.join(model_dir, "vocab.tsv"))
    for name in params.tensor_names():
        save_tensor(os.path.join(model_dir, f"{name}.bin"), params.tensors[name])


def load_model(model_dir):
    manifest = {}
    with open(os.path.join(model_dir, "manifest.txt"), encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                k, _, v = line.partition("=")
                manifest[k] = v
    if int(manifest.get("format_version", -1)) != FORMAT_VERSION:
        raise ValueError(f"{model_dir}: unsupported model format")
    name = manifest["arch"]
    if name in _TABLE:
        arch = make_arch(name, n_max=int(manifest["n_max"]))
    else:
        pools = tuple(
            tuple(int(x) for x in item.split(":"))
            for item in manifest["pools"].split(",")
            if item
        )
        arch = ArchitectureSpec(
            name=name,
            filters=int(manifest["filters"]),
            windows=tuple(int(x) for x in manifest["windows"].split(",")),
            pools=pools,
            n_max=int(manifest["n_max"]),
            n_classes=int(manifest["K"]),
        )
    v = int(manifest["V"])
    d = int(manifest["d"])
    params = NetworkParams(arch, v, d)
    shapes = {"embedding": (v, d)}
    c_in = d
    m = arch.filters
    for i, h in enumerate(arch.windows, start=1):
        shapes[f"conv{i}_w"] = (m, c_in, h)
        shapes[f"conv{i}_b"] = (m,)
        c_in = m
    shapes["hidden_w"] = (m, m)
    shapes["hidden_b"] = (m,)
    shapes["softmax_w"] = (arch.n_classes, m)
    shapes["softmax_b"] = (arch.n_classes,)
    for name in params.tensor_names():
        params.tensors[name] = load_tensor(
            os.path.join(model_dir, f"{name}.bin"), shapes[name]
        )
    vocab = Vocabulary.load_tsv(os.path.join(model_dir, "vocab.tsv"))
    if len(vocab) != v:
        raise ValueError(f"{model_dir}: vocab size disagrees with manifest")
    return params, vocab
