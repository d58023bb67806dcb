"""Three-phase training orchestration: skip-gram embeddings, distant
supervision over emoticon-derived weak labels, then supervised fine-tuning,
with validation-based model selection throughout."""

import os
import time
from dataclasses import dataclass, field

import numpy as np

from tweetcnn import embed, metrics, network, textprep, vocab as vocab_mod
from tweetcnn.optim import AdaDelta

LABELS = {"negative": 0, "neutral": 1, "positive": 2}
LABEL_NAMES = metrics.CLASS_NAMES


@dataclass
class PhaseConfig:
    phase: str  # "distant" | "supervised"
    epochs: int
    batch_size: int
    eval_every: int = 0  # 0: evaluate at epoch ends only
    freeze_embeddings: bool = False
    seed: int = 1

    def __post_init__(self):
        if self.phase not in ("distant", "supervised"):
            raise ValueError(f"unknown phase {self.phase!r}")
        if self.epochs < 0 or self.batch_size < 1 or self.eval_every < 0:
            raise ValueError("bad phase config")


def default_distant_config(seed=1, **kw):
    return PhaseConfig(
        phase="distant", epochs=kw.pop("epochs", 1),
        batch_size=kw.pop("batch_size", 128), eval_every=kw.pop("eval_every", 1000),
        seed=seed, **kw,
    )


def default_supervised_config(seed=1, **kw):
    return PhaseConfig(
        phase="supervised", epochs=kw.pop("epochs", 20),
        batch_size=kw.pop("batch_size", 32), eval_every=kw.pop("eval_every", 0),
        seed=seed, **kw,
    )


@dataclass
class CorpusMix:
    """Corpus wiring for the SL / ML / FML training regimes.

    ``distant`` and ``gold`` are lists of (language, path, weight).  SL uses
    a single language everywhere; ML mixes languages in the distant phase
    only; FML mixes them in every phase."""

    variant: str
    distant: list = field(default_factory=list)
    gold: list = field(default_factory=list)
    target_language: str = ""

    def __post_init__(self):
        if self.variant not in ("SL", "ML", "FML"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if not self.target_language and self.gold:
            self.target_language = self.gold[0][0]
        langs = {e[0] for e in self.distant} | {e[0] for e in self.gold}
        if self.variant == "SL" and len(langs) > 1:
            raise ValueError("SL variant requires a single language")

    def distant_entries(self):
        if self.variant == "SL":
            return [e for e in self.distant if e[0] == self.target_language]
        return list(self.distant)

    def supervised_entries(self):
        if self.variant == "FML":
            return list(self.gold)
        return [e for e in self.gold if e[0] == self.target_language]


@dataclass
class LabeledExample:
    ids: np.ndarray
    label: int
    weak: bool
    language: str

    def __post_init__(self):
        if self.weak and self.label == LABELS["neutral"]:
            raise ValueError("weak examples cannot be neutral")


def preprocess_text(text):
    return textprep.tokenize(textprep.normalize(text))


def apply_weight(items, weight):
    """Deterministic corpus weighting: repeat whole copies, then a prefix."""
    if weight <= 0:
        return []
    whole = int(weight)
    frac = weight - whole
    out = list(items) * whole
    out += list(items[: int(round(frac * len(items)))])
    return out


def read_raw_lines(path):
    with open(path, encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f]


def read_gold_tsv(path):
    """Supervised corpus rows: id<TAB>label<TAB>text."""
    rows = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}: malformed row at line {lineno}")
            ex_id, label, text = parts
            if label not in LABELS:
                raise ValueError(f"{path}: bad label {label!r} at line {lineno}")
            rows.append((ex_id, LABELS[label], text))
    return rows


def weak_examples_from_tokens(token_seqs, language, voc, n_max):
    """Weak-label tokenized tweets; mixed/absent polarities are dropped."""
    out = []
    for tokens in token_seqs:
        labeled = textprep.weak_label(tokens)
        if labeled is None:
            continue
        polarity, stripped = labeled
        if not stripped:
            continue
        out.append(
            LabeledExample(
                ids=vocab_mod.encode(voc, stripped, n_max),
                label=LABELS["positive" if polarity == "positive" else "negative"],
                weak=True,
                language=language,
            )
        )
    return out


def balance_classes(examples, seed):
    """Down-sample to equal positive/negative counts."""
    pos = [e for e in examples if e.label == LABELS["positive"]]
    neg = [e for e in examples if e.label == LABELS["negative"]]
    n = min(len(pos), len(neg))
    rng = np.random.default_rng(seed)
    kept = [pos[i] for i in sorted(rng.permutation(len(pos))[:n])]
    kept += [neg[i] for i in sorted(rng.permutation(len(neg))[:n])]
    return kept


def split_validation(data, fraction, seed):
    """Uniform random split; |validation| = round(fraction * |data|)."""
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must be in (0, 1)")
    n = len(data)
    if n < 2:
        raise ValueError("need at least 2 examples to split")
    n_val = round(fraction * n)
    if n_val < 1 or n_val >= n:
        raise ValueError("fraction yields an empty split side")
    perm = np.random.default_rng(seed).permutation(n)
    val_idx = set(perm[:n_val].tolist())
    train = [data[i] for i in range(n) if i not in val_idx]
    validation = [data[i] for i in perm[:n_val]]
    return train, validation


def evaluate_examples(params, examples, batch_size=256):
    """(f1_pn score, confusion matrix) for a labeled example list."""
    cm = metrics.ConfusionMatrix()
    ids = np.stack([e.ids for e in examples])
    golds = np.array([e.label for e in examples])
    for lo in range(0, len(examples), batch_size):
        preds = network.predict(params, ids[lo : lo + batch_size])
        for g, p in zip(golds[lo : lo + batch_size], np.atleast_1d(preds)):
            cm.add(int(g), int(p))
    return metrics.f1_pn(cm), cm


def run_phase(params, data, cfg, validation):
    """Mini-batch AdaDelta training with periodic validation scoring.

    Returns the snapshot with the highest validation f1_pn (earliest on
    ties) and the full (step, score) history."""
    if cfg.epochs == 0:
        return params, []
    if not data:
        raise ValueError("empty training data")
    if not validation:
        raise ValueError("empty validation data")
    ids = np.stack([e.ids for e in data])
    labels = np.array([e.label for e in data], dtype=np.int64)
    opt = AdaDelta(params.tensors)
    best, best_score = None, -1.0
    history = []
    step = 0
    last_eval_step = -1

    def evaluate():
        nonlocal best, best_score, last_eval_step
        if step == last_eval_step:
            return
        score, _ = evaluate_examples(params, validation)
        history.append((step, score))
        if score > best_score:
            best, best_score = params.copy(), score
        last_eval_step = step

    for epoch in range(cfg.epochs):
        perm = np.random.default_rng((cfg.seed, epoch)).permutation(len(data))
        for lo in range(0, len(data), cfg.batch_size):
            batch = perm[lo : lo + cfg.batch_size]
            loss, grads = network.loss_and_grads(
                params, ids[batch], labels[batch],
                freeze_embeddings=cfg.freeze_embeddings,
            )
            if not np.isfinite(loss):
                raise ValueError("diverged")
            opt.step(params.tensors, grads)
            step += 1
            if cfg.eval_every and step % cfg.eval_every == 0:
                evaluate()
        evaluate()
    return best, history


def write_manifest(path, entries):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for k, v in entries.items():
            f.write(f"{k}={v}\n")


def read_manifest(path):
    out = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if line:
                k, _, v = line.partition("=")
                out[k] = v
    return out


def run_three_phase(
    mix,
    arch,
    skipgram_cfg,
    distant_cfg,
    supervised_cfg,
    out_dir,
    *,
    init="pretrained",
    min_count=15,
    val_fraction=0.1,
    balance_distant=False,
    threads=1,
    manifest_extra=None,
):
    """Run the full pipeline and write a trained model directory.

    Any phase is skippable by setting its epochs to 0.  Returns the path of
    the final model directory (``<out_dir>/model``)."""
    from tweetcnn import __version__

    if init not in ("pretrained", "random"):
        raise ValueError(f"unknown init mode {init!r}")
    os.makedirs(out_dir, exist_ok=True)
    t_start = time.perf_counter()

    # corpus assembly
    distant_token_seqs = []  # (language, tokens), emoticons still present
    for lang, path, weight in mix.distant_entries():
        lines = apply_weight(read_raw_lines(path), weight)
        for line in lines:
            tokens = preprocess_text(line)
            if tokens:
                distant_token_seqs.append((lang, tokens))
    gold_rows = []  # (language, label, tokens)
    for lang, path, weight in mix.supervised_entries():
        rows = apply_weight(read_gold_tsv(path), weight)
        for _, label, text in rows:
            tokens = preprocess_text(text)
            if tokens:
                gold_rows.append((lang, label, tokens))
    if distant_cfg.epochs > 0 and not distant_token_seqs:
        raise ValueError("empty distant corpus")
    if not gold_rows:
        raise ValueError("empty supervised corpus")

    all_token_seqs = [t for _, t in distant_token_seqs] + [t for _, _, t in gold_rows]
    voc = vocab_mod.build_vocab(all_token_seqs, min_count)

    manifest = {
        "tool_version": __version__,
        "status": "running",
        "variant": mix.variant,
        "target_language": mix.target_language,
        "arch": arch.name,
        "n_max": arch.n_max,
        "d": skipgram_cfg.dim,
        "V": len(voc),
        "init": init,
        "min_count": min_count,
        "val_fraction": val_fraction,
        "balance_distant": int(balance_distant),
        "threads": threads,
        "skipgram_seed": skipgram_cfg.seed,
        "skipgram_epochs": skipgram_cfg.epochs,
        "skipgram_window": skipgram_cfg.window,
        "skipgram_negatives": skipgram_cfg.negatives,
        "skipgram_subsample": skipgram_cfg.subsample_t,
        "skipgram_lr0": skipgram_cfg.lr0,
        "distant_seed": distant_cfg.seed,
        "distant_epochs": distant_cfg.epochs,
        "distant_batch_size": distant_cfg.batch_size,
        "distant_eval_every": distant_cfg.eval_every,
        "freeze_embeddings": int(distant_cfg.freeze_embeddings),
        "supervised_seed": supervised_cfg.seed,
        "supervised_epochs": supervised_cfg.epochs,
        "supervised_batch_size": supervised_cfg.batch_size,
        "distant_corpora": ";".join(f"{l}:{p}:{w}" for l, p, w in mix.distant),
        "gold_corpora": ";".join(f"{l}:{p}:{w}" for l, p, w in mix.gold),
    }
    if manifest_extra:
        manifest.update(manifest_extra)
    manifest_path = os.path.join(out_dir, "manifest.txt")
    write_manifest(manifest_path, manifest)

    voc.save_tsv(os.path.join(out_dir, "vocab.tsv"))
    dim = skipgram_cfg.dim
    history = []  # (step, phase, score)

    # phase i: word embeddings
    t0 = time.perf_counter()
    use_pretrained = init == "pretrained" and skipgram_cfg.epochs > 0
    if use_pretrained:
        sequences = [voc.ids(tokens) for _, tokens in distant_token_seqs]
        table = embed.train_skipgram(sequences, voc, skipgram_cfg, threads=threads)
        embed.save_embeddings_bin(os.path.join(out_dir, "embeddings.bin"), table)
        net_init = table
    else:
        net_init = "random"
    manifest["time_phase1_s"] = f"{time.perf_counter() - t0:.3f}"

    params = network.build(
        arch, len(voc), dim, init=net_init, seed=distant_cfg.seed + 1000003
    )

    # phase ii: distant supervision
    weak = []
    for lang, tokens in distant_token_seqs:
        weak.extend(weak_examples_from_tokens([tokens], lang, voc, arch.n_max))
    gold = [
        LabeledExample(
            ids=vocab_mod.encode(voc, tokens, arch.n_max),
            label=label, weak=False, language=lang,
        )
        for lang, label, tokens in gold_rows
    ]
    train_gold, validation = split_validation(
        gold, val_fraction, supervised_cfg.seed + 999331
    )

    t0 = time.perf_counter()
    if distant_cfg.epochs > 0:
        if not weak:
            raise ValueError("empty distant corpus")
        if balance_distant:
            weak = balance_classes(weak, distant_cfg.seed)
        best, hist = run_phase(params, weak, distant_cfg, validation)
        params = best
        history += [(s, "distant", f) for s, f in hist]
        network.save_model(os.path.join(out_dir, "phase2"), params, voc)
    manifest["time_phase2_s"] = f"{time.perf_counter() - t0:.3f}"

    # phase iii: supervised fine-tuning
    t0 = time.perf_counter()
    if supervised_cfg.epochs > 0:
        best, hist = run_phase(params, train_gold, supervised_cfg, validation)
        params = best
        history += [(s, "supervised", f) for s, f in hist]
    manifest["time_phase3_s"] = f"{time.perf_counter() - t0:.3f}"

    model_dir = os.path.join(out_dir, "model")
    network.save_model(model_dir, params, voc)
    with open(os.path.join(out_dir, "history.tsv"), "w", encoding="utf-8", newline="\n") as f:
        for s, phase, score in history:
            f.write(f"{s}\t{phase}\t{score:.6f}\n")
    manifest["time_total_s"] = f"{time.perf_counter() - t_start:.3f}"
    manifest["status"] = "finished"
    write_manifest(manifest_path, manifest)
    return model_dir
