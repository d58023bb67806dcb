"""Vocabulary construction, encoding, and TSV serialization."""

from collections import Counter

import numpy as np

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
PAD_ID = 0
UNK_ID = 1


class Vocabulary:
    """Immutable token<->id map with counts.

    Ids are dense: 0 = ``<pad>``, 1 = ``<unk>``, then content tokens in
    descending frequency (ties broken lexicographically)."""

    def __init__(self, id_to_token, id_to_count):
        if len(id_to_token) != len(id_to_count):
            raise ValueError("token/count length mismatch")
        if id_to_token[:2] != [PAD_TOKEN, UNK_TOKEN]:
            raise ValueError("reserved tokens missing")
        self.id_to_token = list(id_to_token)
        self.id_to_count = list(id_to_count)
        self.token_to_id = {t: i for i, t in enumerate(self.id_to_token)}
        if len(self.token_to_id) != len(self.id_to_token):
            raise ValueError("duplicate token")

    def __len__(self):
        return len(self.id_to_token)

    def __contains__(self, token):
        return token in self.token_to_id

    def id(self, token):
        return self.token_to_id.get(token, UNK_ID)

    def ids(self, tokens):
        """Variable-length id sequence (no padding/truncation)."""
        get = self.token_to_id.get
        return np.array([get(t, UNK_ID) for t in tokens], dtype=np.int32)

    def counts_array(self):
        return np.asarray(self.id_to_count, dtype=np.int64)

    def save_tsv(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for i, (tok, cnt) in enumerate(zip(self.id_to_token, self.id_to_count)):
                f.write(f"{tok}\t{i}\t{cnt}\n")

    @classmethod
    def load_tsv(cls, path):
        toks, counts = [], []
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise ValueError(f"{path}: malformed row at line {lineno + 1}")
                tok, idx, cnt = parts
                if int(idx) != len(toks):
                    raise ValueError(f"{path}: ids not dense at line {lineno + 1}")
                toks.append(tok)
                counts.append(int(cnt))
        return cls(toks, counts)


def build_vocab(corpus, min_count):
    """Build a Vocabulary from an iterable of token sequences.

    Keeps exactly the tokens occurring at least ``min_count`` times, ordered
    by descending frequency then token."""
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counter = Counter()
    seen_any = False
    for tokens in corpus:
        seen_any = True
        counter.update(tokens)
    if not seen_any:
        raise ValueError("empty corpus")
    kept = sorted(
        ((tok, cnt) for tok, cnt in counter.items() if cnt >= min_count),
        key=lambda tc: (-tc[1], tc[0]),
    )
    toks = [PAD_TOKEN, UNK_TOKEN] + [t for t, _ in kept]
    counts = [0, 0] + [c for _, c in kept]
    return Vocabulary(toks, counts)


def encode(vocab, tokens, n_max):
    """Fixed-length encoding: OOV -> <unk>, truncate or right-pad to n_max."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    out = np.full(n_max, PAD_ID, dtype=np.int32)
    for i, tok in enumerate(tokens[:n_max]):
        out[i] = vocab.id(tok)
    return out


def decode(vocab, ids):
    """Tokens for non-pad positions (inverse of encode up to <unk>/truncation)."""
    return [vocab.id_to_token[i] for i in ids if i != PAD_ID]
