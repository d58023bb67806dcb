"""Command-line front-end.

Exit codes: 0 success, 2 usage/input error, 1 internal error.  Diagnostics
go to stderr, data to stdout or to the named output files."""

import argparse
import os
import sys

import numpy as np

from tweetcnn import embed, metrics, network, pipeline, textprep, vocab as vocab_mod


class InputError(Exception):
    """User-facing problem with inputs or configuration (exit code 2)."""


# --- configuration ----------------------------------------------------------

CONFIG_DEFAULTS = {
    "arch": "L2",
    "d": "52",
    "n_max": "60",
    "min_count": "15",
    "seed": "1",
    "variant": "SL",
    "target_language": "",
    "distant_corpora": "",
    "gold_corpora": "",
    "init": "pretrained",
    "skipgram_window": "5",
    "skipgram_negatives": "5",
    "skipgram_subsample": "1e-5",
    "skipgram_epochs": "3",
    "skipgram_lr0": "0.025",
    "distant_epochs": "1",
    "distant_batch_size": "128",
    "distant_eval_every": "1000",
    "freeze_embeddings": "0",
    "supervised_epochs": "20",
    "supervised_batch_size": "32",
    "supervised_eval_every": "0",
    "val_fraction": "0.1",
    "balance_distant": "0",
    "threads": "1",
    "out_dir": "run",
}


def parse_config_file(path):
    out = {}
    try:
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise InputError(f"{path}: expected key=value at line {lineno}")
                k, _, v = line.partition("=")
                out[k.strip()] = v.strip()
    except OSError as e:
        raise InputError(str(e))
    return out


def resolve_config(config_path=None, overrides=(), seed=None, threads=None):
    """Precedence: defaults < config file < command-line overrides."""
    cfg = dict(CONFIG_DEFAULTS)
    if config_path:
        cfg.update(parse_config_file(config_path))
    for item in overrides:
        if "=" not in item:
            raise InputError(f"override must be key=value: {item!r}")
        k, _, v = item.partition("=")
        cfg[k.strip()] = v.strip()
    if seed is not None:
        cfg["seed"] = str(seed)
    if threads is not None:
        cfg["threads"] = str(threads)
    unknown = set(cfg) - set(CONFIG_DEFAULTS)
    if unknown:
        raise InputError("unknown config keys: " + ", ".join(sorted(unknown)))
    return cfg


def _parse_corpora(text):
    """``lang:path[:weight]`` entries separated by commas."""
    entries = []
    for item in [x for x in text.split(",") if x.strip()]:
        parts = item.strip().split(":")
        if len(parts) == 2:
            lang, path = parts
            weight = 1.0
        elif len(parts) == 3:
            lang, path = parts[0], parts[1]
            weight = float(parts[2])
        else:
            raise InputError(f"bad corpus entry {item!r} (want lang:path[:weight])")
        entries.append((lang, path, weight))
    return entries


def build_run(cfg):
    """Turn a resolved flat config into pipeline objects."""
    try:
        seed = int(cfg["seed"])
        arch = network.make_arch(cfg["arch"], n_max=int(cfg["n_max"]))
        mix = pipeline.CorpusMix(
            variant=cfg["variant"],
            distant=_parse_corpora(cfg["distant_corpora"]),
            gold=_parse_corpora(cfg["gold_corpora"]),
            target_language=cfg["target_language"],
        )
        sg = embed.SkipGramConfig(
            window=int(cfg["skipgram_window"]),
            dim=int(cfg["d"]),
            negatives=int(cfg["skipgram_negatives"]),
            subsample_t=float(cfg["skipgram_subsample"]),
            epochs=int(cfg["skipgram_epochs"]),
            lr0=float(cfg["skipgram_lr0"]),
            seed=seed,
        )
        distant = pipeline.default_distant_config(
            seed=seed,
            epochs=int(cfg["distant_epochs"]),
            batch_size=int(cfg["distant_batch_size"]),
            eval_every=int(cfg["distant_eval_every"]),
            freeze_embeddings=bool(int(cfg["freeze_embeddings"])),
        )
        supervised = pipeline.default_supervised_config(
            seed=seed,
            epochs=int(cfg["supervised_epochs"]),
            batch_size=int(cfg["supervised_batch_size"]),
            eval_every=int(cfg["supervised_eval_every"]),
        )
    except ValueError as e:
        raise InputError(str(e))
    return mix, arch, sg, distant, supervised


# --- subcommands ------------------------------------------------------------

def cmd_preprocess(args):
    lines = _read_lines(args.input)
    with open(args.output, "w", encoding="utf-8", newline="\n") as f:
        for line in lines:
            f.write(" ".join(pipeline.preprocess_text(line)) + "\n")
    return 0


def cmd_weak_label(args):
    lines = _read_lines(args.input)
    kept_pos = kept_neg = discarded = 0
    with open(args.out_pos, "w", encoding="utf-8", newline="\n") as fpos, open(
        args.out_neg, "w", encoding="utf-8", newline="\n"
    ) as fneg:
        for line in lines:
            labeled = textprep.weak_label(line.split())
            if labeled is None or not labeled[1]:
                discarded += 1
                continue
            polarity, tokens = labeled
            if polarity == "positive":
                fpos.write(" ".join(tokens) + "\n")
                kept_pos += 1
            else:
                fneg.write(" ".join(tokens) + "\n")
                kept_neg += 1
    print(f"kept_positive={kept_pos}")
    print(f"kept_negative={kept_neg}")
    print(f"discarded={discarded}")
    return 0


def cmd_build_vocab(args):
    def corpus():
        for path in args.inputs:
            for line in _read_lines(path):
                tokens = line.split()
                if tokens:
                    yield tokens

    try:
        voc = vocab_mod.build_vocab(corpus(), args.min_count)
    except ValueError as e:
        raise InputError(str(e))
    voc.save_tsv(args.output)
    print(f"vocab_size={len(voc)}", file=sys.stderr)
    return 0


def cmd_train_embeddings(args):
    voc = _load_vocab(args.vocab)
    sequences = [voc.ids(line.split()) for line in _read_lines(args.corpus) if line.split()]
    cfg = embed.SkipGramConfig(
        window=args.window, dim=args.dim, negatives=args.negatives,
        subsample_t=args.subsample, epochs=args.epochs, lr0=args.lr0,
        seed=args.seed,
    )
    try:
        table = embed.train_skipgram(sequences, voc, cfg, threads=args.threads)
    except ValueError as e:
        raise InputError(str(e))
    embed.save_embeddings_bin(args.output, table)
    if args.text_output:
        embed.save_embeddings_text(args.text_output, table, voc)
    return 0


def _run_training(args, force_supervised_epochs=None):
    cfg = resolve_config(args.config, args.set, seed=args.seed, threads=args.threads)
    if force_supervised_epochs is not None:
        cfg["supervised_epochs"] = str(force_supervised_epochs)
    if args.out_dir:
        cfg["out_dir"] = args.out_dir
    mix, arch, sg, distant, supervised = build_run(cfg)
    try:
        model_dir = pipeline.run_three_phase(
            mix, arch, sg, distant, supervised, cfg["out_dir"],
            init=cfg["init"],
            min_count=int(cfg["min_count"]),
            val_fraction=float(cfg["val_fraction"]),
            balance_distant=bool(int(cfg["balance_distant"])),
            threads=int(cfg["threads"]),
            manifest_extra={"config_source": args.config or ""},
        )
    except (OSError, ValueError) as e:
        raise InputError(str(e))
    print(model_dir)
    return 0


def cmd_train(args):
    return _run_training(args)


def cmd_pretrain(args):
    # phases i + ii only: the phase-ii best checkpoint becomes the model
    return _run_training(args, force_supervised_epochs=0)


def _encode_text(text, voc, n_max):
    return vocab_mod.encode(voc, pipeline.preprocess_text(text), n_max)


def cmd_evaluate(args):
    params, voc = _load_model(args.model_dir)
    try:
        rows = pipeline.read_gold_tsv(args.gold)
    except ValueError as e:
        raise InputError(str(e))
    cm = metrics.ConfusionMatrix()
    for _, label, text in rows:
        pred = network.predict(params, _encode_text(text, voc, params.arch.n_max))
        cm.add(label, pred)
    sys.stdout.write(metrics.report(cm))
    return 0


def cmd_predict(args):
    params, voc = _load_model(args.model_dir)
    for line in _read_lines(args.input):
        probs = network.forward(params, _encode_text(line, voc, params.arch.n_max))
        label = metrics.CLASS_NAMES[int(np.argmax(probs))]
        print(f"{label}\t{probs[0]:.4f}\t{probs[1]:.4f}\t{probs[2]:.4f}")
    return 0


def cmd_project_embeddings(args):
    table, voc = _load_embedding_table(args.model_dir)
    tokens = [t for t in _read_lines(args.tokens) if t.strip()]
    ids = []
    for tok in tokens:
        if tok not in voc:
            raise InputError(f"unknown token: {tok}")
        ids.append(voc.id(tok))
    try:
        coords = embed.pca_project_2d(table, ids)
    except ValueError as e:
        raise InputError(str(e))
    with open(args.output, "w", encoding="utf-8", newline="\n") as f:
        for tok, (x, y) in zip(tokens, coords):
            f.write(f"{tok}\t{x:.6f}\t{y:.6f}\n")
    if args.pair:
        a, _, b = args.pair.partition(",")
        for tok in (a, b):
            if tok not in voc:
                raise InputError(f"unknown token: {tok}")
        try:
            sim = embed.cosine(table[voc.id(a)], table[voc.id(b)])
        except ValueError as e:
            raise InputError(str(e))
        print(f"{a}\t{b}\t{sim:.4f}")
    return 0


# --- helpers ----------------------------------------------------------------

def _read_lines(path):
    try:
        with open(path, encoding="utf-8") as f:
            return [line.rstrip("\n") for line in f]
    except OSError as e:
        raise InputError(str(e))


def _load_vocab(path):
    try:
        return vocab_mod.Vocabulary.load_tsv(path)
    except (OSError, ValueError) as e:
        raise InputError(str(e))


def _load_model(model_dir):
    try:
        return network.load_model(model_dir)
    except (OSError, ValueError, KeyError) as e:
        raise InputError(f"cannot load model from {model_dir}: {e}")


def _load_embedding_table(model_dir):
    """Accept either a trained model directory or a phase-i output directory
    (embeddings.bin + vocab.tsv)."""
    emb_path = os.path.join(model_dir, "embedding.bin")
    if os.path.exists(emb_path):
        params, voc = _load_model(model_dir)
        return params.tensors["embedding"], voc
    alt = os.path.join(model_dir, "embeddings.bin")
    if os.path.exists(alt):
        try:
            table = embed.load_embeddings_bin(alt)
            voc = vocab_mod.Vocabulary.load_tsv(os.path.join(model_dir, "vocab.tsv"))
        except (OSError, ValueError) as e:
            raise InputError(str(e))
        if len(voc) != table.shape[0]:
            raise InputError(f"{model_dir}: vocab/embedding size mismatch")
        return table, voc
    raise InputError(f"no embedding table found in {model_dir}")


def _add_train_flags(p):
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (repeatable)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None,
                   help=">1 enables the nondeterministic parallel skip-gram mode")
    p.add_argument("--out-dir", default=None)


def make_parser():
    parser = argparse.ArgumentParser(prog="tweetcnn")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="normalize and tokenize raw tweets")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("weak-label", help="route preprocessed tweets by emoticon polarity")
    p.add_argument("input")
    p.add_argument("out_pos")
    p.add_argument("out_neg")
    p.set_defaults(func=cmd_weak_label)

    p = sub.add_parser("build-vocab", help="build vocab.tsv from preprocessed corpora")
    p.add_argument("inputs", nargs="+")
    p.add_argument("output")
    p.add_argument("--min-count", type=int, default=15)
    p.set_defaults(func=cmd_build_vocab)

    p = sub.add_parser("train-embeddings", help="skip-gram training on a preprocessed corpus")
    p.add_argument("corpus")
    p.add_argument("--vocab", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--text-output", default=None)
    p.add_argument("--dim", type=int, default=52)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--subsample", type=float, default=1e-5)
    p.add_argument("--epochs", type=int, default=3)
    p.add_argument("--lr0", type=float, default=0.025)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_train_embeddings)

    p = sub.add_parser("pretrain", help="phases i+ii (embeddings + distant supervision)")
    _add_train_flags(p)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("train", help="full three-phase training")
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a model against a gold TSV")
    p.add_argument("model_dir")
    p.add_argument("gold")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="classify raw tweets, one per line")
    p.add_argument("model_dir")
    p.add_argument("input")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("project-embeddings", help="2-D PCA projection of selected tokens")
    p.add_argument("model_dir")
    p.add_argument("tokens", help="file with one token per line")
    p.add_argument("output")
    p.add_argument("--pair", default=None, metavar="TOKA,TOKB",
                   help="also print the cosine similarity of two tokens")
    p.set_defaults(func=cmd_project_embeddings)

    return parser


def main(argv=None):
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code else 0
    try:
        return args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        return 1
    except Exception as e:  # internal failure
        print(f"internal error: {e}", file=sys.stderr)
        return 1


def entry():
    sys.exit(main())
