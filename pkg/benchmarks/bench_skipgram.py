"""Compare the compiled skip-gram kernel against the pure-Python fallback.

Usage: python benchmarks/bench_skipgram.py [--sentences N] [--dim D] [--epochs E]

Both backends run the identical update sequence, so besides throughput this
also asserts that their outputs are bit-identical.
"""

import argparse
import time

import numpy as np

from tweetcnn import embed, vocab


def make_corpus(n_sentences, seed):
    rng = np.random.default_rng(seed)
    tokens = [f"w{i:03d}" for i in range(300)]
    sents = []
    for _ in range(n_sentences):
        k = int(rng.integers(6, 16))
        sents.append([tokens[i] for i in rng.integers(0, len(tokens), size=k)])
    return sents


def run(kernel_name, seqs, voc, cfg):
    from tweetcnn.embed import _sg_python

    saved = embed._kernel
    if kernel_name == "python":
        embed._kernel = _sg_python
    elif embed.BACKEND != "fast":
        raise SystemExit("compiled backend not built; only python available")
    try:
        t0 = time.perf_counter()
        table = embed.train_skipgram(seqs, voc, cfg)
        elapsed = time.perf_counter() - t0
    finally:
        embed._kernel = saved
    return table, elapsed


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--sentences", type=int, default=4000)
    parser.add_argument("--dim", type=int, default=52)
    parser.add_argument("--epochs", type=int, default=1)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args()

    sents = make_corpus(args.sentences, args.seed)
    voc = vocab.build_vocab(iter(sents), min_count=1)
    seqs = [voc.ids(s) for s in sents]
    n_words = sum(len(s) for s in seqs) * args.epochs
    cfg = embed.SkipGramConfig(
        dim=args.dim, epochs=args.epochs, subsample_t=0.0, seed=args.seed
    )

    results = {}
    for name in ("fast", "python") if embed.BACKEND == "fast" else ("python",):
        table, elapsed = run(name, seqs, voc, cfg)
        results[name] = (table, elapsed)
        print(f"{name:7s} {elapsed:8.3f} s   {n_words / elapsed:12.0f} words/s")

    if len(results) == 2:
        same = np.array_equal(results["fast"][0], results["python"][0])
        speedup = results["python"][1] / results["fast"][1]
        print(f"speedup {speedup:.1f}x   bit-identical: {same}")
        if not same:
            raise SystemExit("backend outputs diverged")


if __name__ == "__main__":
    main()
