"""Shared fixtures: synthetic corpus bundle and the training runs over it.

The bundle runs are expensive (a few minutes in total) and are shared by the
acceptance tests for the distant-supervision direction, the embedding-geometry
direction, and the ablation wiring, so they live in one session-scoped
fixture keyed by (variant, seed).
"""

import os
import sys
import time

import pytest

sys.path.insert(0, os.path.dirname(__file__))

import synth  # noqa: E402
from tweetcnn import cli  # noqa: E402

BUNDLE_BASE = {
    "arch": "L2",
    "d": "16",
    "n_max": "24",
    "min_count": "5",
    "variant": "SL",
    "target_language": "en",
    "skipgram_subsample": "1e-3",
    "skipgram_epochs": "2",
    "distant_eval_every": "100",
    "supervised_epochs": "4",
    "supervised_batch_size": "32",
}

# the four init/training ablation variants; "full" doubles as the
# with-distant arm and "pre_nodist" as the no-distant arm
BUNDLE_VARIANTS = {
    "rand_frozen": {
        "init": "random",
        "skipgram_epochs": "0",
        "distant_epochs": "0",
        "freeze_embeddings": "1",
    },
    "rand_updated": {
        "init": "random",
        "skipgram_epochs": "0",
        "distant_epochs": "0",
    },
    "pre_nodist": {"init": "pretrained", "distant_epochs": "0"},
    "full": {"init": "pretrained", "distant_epochs": "1"},
}

BUNDLE_SEEDS = {
    "full": (1, 2, 3, 4, 5),
    "pre_nodist": (1, 2, 3, 4, 5),
    "rand_frozen": (1, 2, 3),
    "rand_updated": (1, 2, 3),
}


@pytest.fixture(scope="session")
def bundle(tmp_path_factory):
    """Synthetic corpus bundle: 50k weak-labelable lines + 300 gold rows."""
    root = tmp_path_factory.mktemp("bundle")
    distant = root / "distant_en.txt"
    gold = root / "gold_en.tsv"
    synth.write_lines(str(distant), synth.make_distant_lines(50_000, seed=123))
    synth.write_gold_tsv(str(gold), synth.make_disjoint_gold_rows(300, seed=456))
    return {"root": root, "distant": str(distant), "gold": str(gold)}


def bundle_config(bundle_paths, variant, seed, out_dir):
    cfg = dict(BUNDLE_BASE)
    cfg.update(BUNDLE_VARIANTS[variant])
    cfg["seed"] = str(seed)
    cfg["out_dir"] = str(out_dir)
    cfg["distant_corpora"] = "en:" + bundle_paths["distant"]
    cfg["gold_corpora"] = "en:" + bundle_paths["gold"]
    return cfg


def write_config(path, cfg):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for k, v in cfg.items():
            f.write(f"{k}={v}\n")


def best_supervised_score(run_dir):
    scores = []
    with open(os.path.join(run_dir, "history.tsv"), encoding="utf-8") as f:
        for line in f:
            _, phase, score = line.rstrip("\n").split("\t")
            if phase == "supervised":
                scores.append(float(score))
    return max(scores)


@pytest.fixture(scope="session")
def bundle_runs(bundle, tmp_path_factory):
    """All bundle training runs, invoked through the CLI from config files.

    Returns {"dirs": {(variant, seed): run_dir}, "seconds": same keys}.
    """
    root = tmp_path_factory.mktemp("bundle_runs")
    dirs, seconds = {}, {}
    for variant, seeds in BUNDLE_SEEDS.items():
        for seed in seeds:
            out_dir = root / f"{variant}_{seed}"
            cfg_path = root / f"{variant}_{seed}.cfg"
            write_config(cfg_path, bundle_config(bundle, variant, seed, out_dir))
            t0 = time.perf_counter()
            rc = cli.main(["train", "--config", str(cfg_path)])
            seconds[variant, seed] = time.perf_counter() - t0
            assert rc == 0, f"bundle run {variant} seed {seed} failed"
            dirs[variant, seed] = str(out_dir)
    return {"dirs": dirs, "seconds": seconds}
