"""Skip-gram embedding training, similarity queries, and 2-D PCA projection.

The hot inner loop lives in the compiled extension ``_sg_fast`` when it was
built; otherwise the pure-Python reference kernel is used.  The selection
happens once at import; ``BACKEND`` names the active one."""

import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

try:
    from tweetcnn.embed import _sg_fast as _kernel

    BACKEND = "fast"
except ImportError:  # pragma: no cover - depends on build environment
    from tweetcnn.embed import _sg_python as _kernel

    BACKEND = "python"

from tweetcnn.embed import _sg_python

_MASK64 = (1 << 64) - 1
NOISE_TABLE_SIZE = 1_000_000


@dataclass(frozen=True)
class SkipGramConfig:
    window: int = 5
    dim: int = 52
    negatives: int = 5
    subsample_t: float = 1e-5
    epochs: int = 3
    lr0: float = 0.025
    seed: int = 1

    def __post_init__(self):
        if self.window < 1 or self.dim < 1 or self.negatives < 1:
            raise ValueError("window, dim and negatives must be >= 1")
        if self.subsample_t < 0 or self.lr0 <= 0 or self.epochs < 0:
            raise ValueError("bad skip-gram config")


def build_noise_table(counts, size=NOISE_TABLE_SIZE):
    """Sampling table over token ids, proportional to count^0.75.

    Reserved ids (0, 1) never appear."""
    p = np.asarray(counts, dtype=np.float64) ** 0.75
    p[:2] = 0.0
    total = p.sum()
    if total <= 0:
        raise ValueError("no tokens to sample negatives from")
    cum = np.cumsum(p / total)
    grid = (np.arange(size, dtype=np.float64) + 0.5) / size
    return np.searchsorted(cum, grid).astype(np.int32)


def keep_thresholds(counts, subsample_t):
    """Per-id uint32 thresholds for the word2vec-style frequency subsampling."""
    counts = np.asarray(counts, dtype=np.float64)
    total = counts[2:].sum()
    thresh = np.zeros(len(counts), dtype=np.uint32)
    if subsample_t <= 0 or total <= 0:
        thresh[:] = np.uint32(0xFFFFFFFF)
        return thresh
    with np.errstate(divide="ignore", invalid="ignore"):
        f = counts / total
        keep = (np.sqrt(f / subsample_t) + 1.0) * (subsample_t / f)
    keep = np.nan_to_num(keep, nan=0.0, posinf=1.0)
    keep = np.clip(keep, 0.0, 1.0)
    thresh[:] = np.minimum(keep * 4294967296.0, 4294967295.0).astype(np.uint32)
    return thresh


def sample_noise(table, n, seed):
    """Draw n ids from the noise table using the training RNG stream."""
    nr = _mix_seed(seed)
    tsize = len(table)
    out = np.empty(n, dtype=np.int32)
    for i in range(n):
        nr = (nr * 25214903917 + 11) & _MASK64
        out[i] = table[(nr >> 16) % tsize]
    return out


def _mix_seed(seed):
    nr = (int(seed) ^ 0x9E3779B97F4A7C15) & _MASK64
    return nr if nr != 0 else 0x9E3779B97F4A7C15


def _pack_corpus(sequences):
    """Concatenate id sequences (reserved ids stripped) into data + offsets."""
    sents = []
    for seq in sequences:
        arr = np.asarray(seq, dtype=np.int32)
        arr = arr[arr >= 2]
        if len(arr) > 0:
            sents.append(arr)
    if sents:
        data = np.concatenate(sents).astype(np.int32)
    else:
        data = np.zeros(0, dtype=np.int32)
    offsets = np.zeros(len(sents) + 1, dtype=np.int64)
    np.cumsum([len(s) for s in sents], out=offsets[1:])
    return data, offsets


def init_embeddings(vocab_size, dim, seed):
    """Input vectors uniform in [-0.5/dim, 0.5/dim]; <pad> row zeroed."""
    rng = np.random.default_rng(seed)
    syn0 = ((rng.random((vocab_size, dim)) - 0.5) / dim).astype(np.float32)
    syn0[0] = 0.0
    return syn0


class SkipGramTrainer:
    """Epoch-at-a-time skip-gram trainer over an encoded corpus.

    Exposes both embedding sides (``syn0`` input, ``syn1`` context) so tests
    can evaluate the objective on held-out pairs between epochs."""

    def __init__(self, sequences, vocab, cfg, threads=1):
        self.cfg = cfg
        self.threads = max(1, threads)
        self.data, self.offsets = _pack_corpus(sequences)
        lengths = np.diff(self.offsets)
        if not np.any(lengths >= 2):
            raise ValueError("no training pairs")
        counts = vocab.counts_array()
        self.table = build_noise_table(counts)
        self.thresh = keep_thresholds(counts, cfg.subsample_t)
        self.do_subsample = 1 if cfg.subsample_t > 0 else 0
        self.syn0 = init_embeddings(len(vocab), cfg.dim, cfg.seed)
        self.syn1 = np.zeros((len(vocab), cfg.dim), dtype=np.float32)
        self.words_per_epoch = int(lengths.sum())
        self.total_words = max(1, self.words_per_epoch * max(1, cfg.epochs))
        self.words_done = 0
        self.next_random = _mix_seed(cfg.seed)
        self._max_len = int(lengths.max()) if len(lengths) else 1

    def train_epoch(self, epoch_index=0):
        cfg = self.cfg
        lr_floor = cfg.lr0 / 10000.0
        n_sent = len(self.offsets) - 1
        if self.threads == 1 or BACKEND != "fast":
            scratch = np.zeros(self._max_len, dtype=np.int32)
            self.words_done, self.next_random = _kernel.train_range(
                self.syn0, self.syn1, self.data, self.offsets, 0, n_sent,
                self.table, self.thresh, self.do_subsample, cfg.window,
                cfg.negatives, cfg.lr0, lr_floor, self.total_words,
                self.words_done, self.next_random, scratch,
            )
            return
        # parallel mode: contiguous sentence shards, unsynchronized updates.
        # The lr schedule stays exact (word offsets are known up front) but
        # float update interleaving makes results nondeterministic.
        bounds = np.linspace(0, n_sent, self.threads + 1).astype(int)
        base_words = epoch_index * self.words_per_epoch

        def work(t):
            lo, hi = int(bounds[t]), int(bounds[t + 1])
            start_words = base_words + int(self.offsets[lo])
            nr = _mix_seed(cfg.seed + 7919 * (epoch_index * self.threads + t + 1))
            scratch = np.zeros(self._max_len, dtype=np.int32)
            _kernel.train_range(
                self.syn0, self.syn1, self.data, self.offsets, lo, hi,
                self.table, self.thresh, self.do_subsample, cfg.window,
                cfg.negatives, cfg.lr0, lr_floor, self.total_words,
                start_words, nr, scratch,
            )

        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            list(pool.map(work, range(self.threads)))
        self.words_done += self.words_per_epoch

    def pair_loss(self, pairs, negatives_per_pair):
        """Mean negative-sampling objective over fixed (center, context) pairs."""
        total = 0.0
        n_terms = 0
        for center, ctx, negs in pairs:
            v = self.syn0[center].astype(np.float64)
            total += -math.log(max(_sigmoid(float(np.dot(v, self.syn1[ctx]))), 1e-12))
            for t in negs[:negatives_per_pair]:
                total += -math.log(
                    max(1.0 - _sigmoid(float(np.dot(v, self.syn1[t]))), 1e-12)
                )
            n_terms += 1
        return total / max(1, n_terms)


def _sigmoid(f):
    return 1.0 / (1.0 + math.exp(-min(30.0, max(-30.0, f))))


def train_skipgram(sequences, vocab, cfg, threads=1, epoch_callback=None):
    """Train skip-gram with negative sampling; returns the input-side table.

    ``sequences`` is an iterable of encoded id sequences sharing the
    vocabulary's id space; <pad>/<unk> never act as center, context, or
    negative."""
    trainer = SkipGramTrainer(sequences, vocab, cfg, threads=threads)
    for epoch in range(cfg.epochs):
        trainer.train_epoch(epoch)
        if epoch_callback is not None:
            epoch_callback(epoch, trainer)
    out = trainer.syn0.copy()
    out[0] = 0.0
    return out


def cosine(u, v):
    """Cosine similarity of two nonzero vectors."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("zero vector")
    return float(np.dot(u, v) / (nu * nv))


def jacobi_eigh(a, tol=1e-10, max_sweeps=100):
    """Symmetric eigendecomposition by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors-as-columns), unordered.  Converges
    when the off-diagonal Frobenius norm drops below ``tol``."""
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    v = np.eye(n)
    for _ in range(max_sweeps):
        off = math.sqrt(max(0.0, (a * a).sum() - (np.diag(a) ** 2).sum()))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (
                    abs(theta) + math.sqrt(theta * theta + 1.0)
                )
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rp, rq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * rp - s * rq
                a[:, q] = s * rp + c * rq
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                rp, rq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * rp - s * rq
                v[:, q] = s * rp + c * rq
    return np.diag(a).copy(), v


def pca_project_2d(table, token_ids):
    """Project selected embedding rows onto their top-2 principal axes.

    Rows are mean-centered; axes are the two largest-eigenvalue unit
    eigenvectors of the covariance, ordered by descending eigenvalue, each
    with its largest-magnitude entry made non-negative."""
    token_ids = list(token_ids)
    if len(set(token_ids)) < 3:
        raise ValueError("need at least 3 distinct ids")
    rows = np.asarray(table, dtype=np.float64)[token_ids]
    if rows.shape[1] < 2:
        raise ValueError("need dimension >= 2")
    centered = rows - rows.mean(axis=0)
    cov = centered.T @ centered / (len(token_ids) - 1)
    if np.abs(cov).max() < 1e-30:
        raise ValueError("degenerate point set")
    eigvals, eigvecs = jacobi_eigh(cov)
    order = np.argsort(-eigvals)
    axes = eigvecs[:, order[:2]]
    for k in range(2):
        m = np.argmax(np.abs(axes[:, k]))
        if axes[m, k] < 0:
            axes[:, k] = -axes[:, k]
    proj = centered @ axes
    return [(float(x), float(y)) for x, y in proj]


def save_embeddings_bin(path, table):
    table = np.ascontiguousarray(table, dtype="<f4")
    with open(path, "wb") as f:
        f.write(struct.pack("<II", table.shape[0], table.shape[1]))
        f.write(table.tobytes())


def load_embeddings_bin(path):
    with open(path, "rb") as f:
        header = f.read(8)
        if len(header) != 8:
            raise ValueError(f"{path}: truncated header")
        rows, cols = struct.unpack("<II", header)
        body = np.frombuffer(f.read(), dtype="<f4")
    if len(body) != rows * cols:
        raise ValueError(f"{path}: expected {rows * cols} floats, got {len(body)}")
    return body.reshape(rows, cols).astype(np.float32)


def save_embeddings_text(path, table, vocab):
    table = np.asarray(table)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"{table.shape[0]} {table.shape[1]}\n")
        for i in range(table.shape[0]):
            vals = " ".join(f"{x:.6f}" for x in table[i])
            f.write(f"{vocab.id_to_token[i]} {vals}\n")
