"""``segword`` command line.

Exit codes: 0 success, 2 invalid configuration or arguments, 3 no positive
pairs for cross-view AP, 4 dimension mismatch, 5 corrupt model container,
6 utterance-id mismatch or malformed input line. ``SEGWORD_NUM_THREADS``
caps the BLAS thread pool.
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .container import (
    ContainerError,
    ModelContainer,
    embedder_container,
    embedder_from_container,
    recognizer_container,
    recognizer_from_container,
)
from .datasets import (
    DatasetError,
    read_dataset,
    read_pairs,
    read_transcripts,
    read_vocab,
    write_dataset,
    write_pairs,
    write_transcripts,
    write_vocab,
)
from .dp import dp_tables, format_tables
from .embeddings import MultiViewModel, init_acoustic_view, init_written_view, pretrain, transfer_init
from .lattice import Vocabulary, format_segmentation, label_map
from .metrics import align, corpus_wer, per_frequency_substitutions, wer
from .synthetic import generate, make_task
from .training import SegmentalModel, decode, init_model, train

log = logging.getLogger("segword")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_POSITIVES = 3
EXIT_DIM_MISMATCH = 4
EXIT_CORRUPT = 5
EXIT_MISMATCH = 6


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# shared helpers


def _load_vocab(cfg: RunConfig) -> Vocabulary:
    alphabet = cfg.paths.get("alphabet")
    return read_vocab(cfg.path("vocab"), alphabet=alphabet)


def _input_dim(dataset) -> int:
    dims = {u.features.shape[1] for u in dataset}
    if len(dims) > 1:
        raise CliError(EXIT_DIM_MISMATCH, f"utterances disagree on feature dimension: {sorted(dims)}")
    if not dims:
        raise ConfigError("dataset is empty")
    return dims.pop()


def _write_or_print(path: Optional[Path], text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")


def _load_container(path: str) -> ModelContainer:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"model file {p} not found")
    return ModelContainer.load(p)


# ---------------------------------------------------------------------------
# commands


def cmd_gen(args) -> int:
    """Write a synthetic train/dev/test corpus plus a matching run configuration."""
    out = Path(args.out)
    task = make_task(vocab_size=args.vocab_size, noise=args.noise, zipf=args.zipf, seed=args.seed)
    train_set = generate(task, args.n_train, seed=args.seed + 1, prefix="train")
    dev_set = generate(task, args.n_dev, seed=args.seed + 2, zipf=args.dev_zipf, prefix="dev")
    test_set = generate(task, args.n_dev, seed=args.seed + 3, zipf=args.dev_zipf, prefix="test")
    for name, ds in (("train", train_set), ("dev", dev_set), ("test", test_set)):
        write_dataset(out, ds, name=name)
    write_vocab(out / "vocab.txt", train_set.with_counts())
    write_pairs(out / "dev.pairs", dev_set)
    write_transcripts(out / "test.ref", [(u.uid, task.vocab.decode(u.labels)) for u in test_set])
    longest = task.longest_word
    conf = [
        "train = train.manifest",
        "dev = dev.manifest",
        "vocab = vocab.txt",
        f"alphabet = {task.vocab.alphabet.chars}",
        "dev_pairs = dev.pairs",
        f"vocab_size = {args.vocab_size}",
        f"max_segment = {max(2 * longest, 8)}",
        "pooling = mean",
        "feature_dim = 32",
        "embed_dim = 32",
        "dropout = 0.0",
        "lr = 0.005",
        "b2_init = unigram",
        "epochs = 10",
        "pretrain.lr = 0.003",
        "pretrain.max_frames = 500",
        "pretrain.max_steps = 1000",
    ]
    (out / "run.conf").write_text("\n".join(conf) + "\n", encoding="utf-8")
    print(f"wrote {len(train_set)}/{len(dev_set)}/{len(test_set)} utterances and run.conf to {out}")
    return EXIT_OK


def cmd_pretrain(args) -> int:
    cfg = load_config(args.config, args.set)
    cfg.require_existing("train", "vocab")
    out = cfg.path("out")
    if "dev_pairs" in cfg.paths:
        cfg.require_existing("dev", "dev_pairs")
    else:
        cfg.require_existing("dev")
    if args.dry_run:
        print(f"config ok: pretrain {cfg.path('train')} -> {out} ({cfg.pretrain.max_steps} steps max)")
        return EXIT_OK
    vocab = _load_vocab(cfg)
    train_set = read_dataset(cfg.path("train"), vocab)
    dev_set = read_dataset(cfg.path("dev"), vocab)
    segs, labels = train_set.word_segments()
    if not segs:
        raise CliError(EXIT_NO_POSITIVES, "training manifest carries no word segmentations")
    if "dev_pairs" in cfg.paths:
        dev_segs, dev_labels = read_pairs(cfg.path("dev_pairs"), dev_set)
    else:
        dev_segs, dev_labels = dev_set.word_segments()
    if len(dev_labels) == 0:
        raise CliError(EXIT_NO_POSITIVES, "no dev word pairs: cross-view AP has no positives")
    tc = cfg.train
    rng = np.random.default_rng(tc.seed)
    model = MultiViewModel(
        init_acoustic_view(
            _input_dim(train_set), tc.feature_dim, tc.embed_dim, tc.pooling, tc.context, tc.stride, tc.effective_dropout, rng=rng
        ),
        init_written_view(len(vocab.alphabet), tc.embed_dim, rng=rng),
    )
    res = pretrain(model, segs, labels, vocab, dev_segs, dev_labels, cfg.pretrain)
    meta = {"best_ap": res.best_ap, "best_step": res.best_step, "steps": res.steps}
    embedder_container(res.model, vocab, meta).save(out)
    lines = "".join(f"{step}\t{loss:.6f}\t{ap:.6f}\t{lr:.6g}\n" for step, loss, ap, lr in res.log)
    _write_or_print(cfg.path("log", required=False), lines)
    print(f"best dev AP {res.best_ap:.4f} at step {res.best_step}; wrote {out}", file=sys.stderr)
    return EXIT_OK


def _pretrained_model(path: str, cfg: RunConfig, vocab: Vocabulary, input_dim: int, log_unigram):
    emb, emb_vocab = embedder_from_container(_load_container(path))
    tc = cfg.train
    f = emb.f
    want = 2 * input_dim if tc.stack else input_dim
    checks = [
        ("input feature dim", f.encoder.input_dim, want),
        ("feature_dim", f.acoustic.feature_dim, tc.feature_dim),
        ("embed_dim", f.embed_dim, tc.embed_dim),
        ("pooling", f.acoustic.pooling, tc.pooling),
        ("context", f.encoder.context, tc.context),
        ("stride", f.encoder.stride, tc.stride),
    ]
    bad = [f"{name}: checkpoint {a}, run {b}" for name, a, b in checks if a != b]
    if bad:
        raise CliError(EXIT_DIM_MISMATCH, "initial checkpoint does not fit this run: " + "; ".join(bad))
    # written embeddings must be composed with the checkpoint's own character indices
    table = emb.g.table(Vocabulary(vocab.words, emb_vocab.alphabet))
    enc, sc = transfer_init(f, table, b2=log_unigram)
    return SegmentalModel(replace(enc, dropout=tc.effective_dropout), sc, tc.stack), table


def cmd_train(args) -> int:
    if args.agwe_reg is not None and not 0.0 <= args.agwe_reg <= 1.0:
        raise ConfigError(f"--agwe-reg must lie in [0, 1], got {args.agwe_reg}")
    overrides = list(args.set)
    if args.agwe_reg is not None:
        overrides.append(f"agwe_lambda={args.agwe_reg}")
    if args.init is not None:
        overrides.append("init=pretrained")
    cfg = load_config(args.config, overrides)
    tc = cfg.train
    if tc.agwe_lambda > 0 and args.init is None:
        raise ConfigError("written-embedding regularisation needs --init with a pre-trained checkpoint")
    if tc.init == "pretrained" and args.init is None:
        raise ConfigError("init = pretrained needs --init")
    cfg.require_existing("train", "dev", "vocab")
    out = cfg.path("out")
    if args.init is not None and not Path(args.init).is_file():
        raise ConfigError(f"initial checkpoint {args.init} not found")
    if args.dry_run:
        print(f"config ok: train {cfg.path('train')} -> {out} (init {tc.init}, agwe_lambda {tc.agwe_lambda:g})")
        return EXIT_OK
    vocab = _load_vocab(cfg)
    if len(vocab) != tc.vocab_size:
        raise CliError(EXIT_DIM_MISMATCH, f"vocab_size = {tc.vocab_size} but {cfg.path('vocab')} lists {len(vocab)} words")
    train_set = read_dataset(cfg.path("train"), vocab)
    dev_set = read_dataset(cfg.path("dev"), vocab)
    input_dim = _input_dim(train_set)
    if _input_dim(dev_set) != input_dim:
        raise CliError(EXIT_DIM_MISMATCH, "train and dev feature dimensions differ")
    counted = train_set.with_counts()
    log_unigram = counted.log_unigram() if tc.b2_init == "unigram" else None
    agwe_table = None
    if args.init is not None:
        model, agwe_table = _pretrained_model(args.init, cfg, vocab, input_dim, log_unigram)
    else:
        model = init_model(tc, input_dim, log_unigram=log_unigram)
    if tc.agwe_lambda > 0:
        log.info("written-embedding L2 regularisation active, lambda %g", tc.agwe_lambda)
    log_path = cfg.path("log", required=False)
    header_line = "epoch\tloss\tdev_wer\tlr\n"

    def on_epoch(res):
        if log_path is not None:
            log_path.parent.mkdir(parents=True, exist_ok=True)
            log_path.write_text(header_line + res.format_log(), encoding="utf-8")

    res = train(tc, train_set, dev_set, model=model, agwe_table=agwe_table if tc.agwe_lambda > 0 else None, on_epoch=on_epoch)
    on_epoch(res)
    if log_path is None:
        sys.stdout.write(header_line + res.format_log())
    meta = {
        "init": tc.init,
        "init_checkpoint": str(args.init) if args.init else None,
        "agwe_lambda": tc.agwe_lambda,
        "best_dev_wer": res.best_dev_wer,
        "epochs": tc.epochs,
        "skipped_utterances": res.skipped,
        "config": tc.as_dict(),
    }
    recognizer_container(res.best_model, counted, tc.max_segment, meta).save(out)
    if args.dump_tables:
        d = Path(args.dump_tables)
        d.mkdir(parents=True, exist_ok=True)
        for u in dev_set:
            W = res.best_model.lattice(u.features, tc.max_segment)
            (d / f"{u.uid}.tables.txt").write_text(format_tables(dp_tables(W, u.labels)), encoding="utf-8")
    print(f"best dev WER {res.best_dev_wer:.4f}; wrote {out}", file=sys.stderr)
    return EXIT_OK


def cmd_decode(args) -> int:
    model, vocab, S = recognizer_from_container(_load_container(args.model))
    if not Path(args.data).is_file():
        raise ConfigError(f"manifest {args.data} not found")
    data = read_dataset(args.data, vocab, require_labels=False)
    want = model.encoder.input_dim // (2 if model.stack else 1)
    for u in data:
        if u.features.shape[1] != want:
            raise CliError(EXIT_DIM_MISMATCH, f"{u.uid}: feature dim {u.features.shape[1]}, model expects {want}")
    S = args.max_segment or S
    hyps, segs = [], []
    for u in data:
        pi = decode(model, u.features, S)
        hyps.append((u.uid, vocab.decode(label_map(pi))))
        segs.append(f"{u.uid} {format_segmentation(pi)}".rstrip() + "\n")
    text = "".join(" ".join([uid, *words]) + "\n" for uid, words in hyps)
    _write_or_print(Path(args.out) if args.out else None, text)
    if args.dump_segments:
        Path(args.dump_segments).write_text("".join(segs), encoding="utf-8")
    return EXIT_OK


def cmd_eval(args) -> int:
    for p in (args.hyp, args.ref):
        if not Path(p).is_file():
            raise ConfigError(f"{p} not found")
    hyp = read_transcripts(args.hyp)
    ref = read_transcripts(args.ref)
    missing = sorted(set(ref) - set(hyp))
    extra = sorted(set(hyp) - set(ref))
    if missing or extra:
        parts = []
        if missing:
            parts.append("no hypothesis for: " + " ".join(missing))
        if extra:
            parts.append("no reference for: " + " ".join(extra))
        raise CliError(EXIT_MISMATCH, "utterance ids differ; " + "; ".join(parts))
    empty = [uid for uid, words in ref.items() if not words]
    if empty:
        raise CliError(EXIT_MISMATCH, "malformed reference (no words) for: " + " ".join(empty))
    lines = ["id\terrors\twords\twer"]
    alignments = []
    for uid, words in ref.items():
        r = wer(hyp[uid], words)
        errors = r.substitutions + r.insertions + r.deletions
        lines.append(f"{uid}\t{errors}\t{len(words)}\t{100 * r.rate:.1f}%")
        alignments.append(align(hyp[uid], words))
    total = corpus_wer([(hyp[u], ref[u]) for u in ref])
    n = sum(len(w) for w in ref.values())
    lines.append(
        f"corpus WER {100 * total.rate:.1f}% ({total.substitutions} sub, {total.insertions} ins, "
        f"{total.deletions} del / {n} words)"
    )
    if args.counts:
        vocab = read_vocab(args.counts)
        if vocab.counts is None:
            raise ConfigError(f"{args.counts} carries no word counts")
        counts = dict(zip(vocab.words, vocab.counts))
        hist = per_frequency_substitutions(alignments, counts)
        lines.append("train_count\treferences\tsubstitution_rate")
        for label, refs, rate in zip(hist.labels(), hist.references, hist.rates):
            lines.append(f"{label}\t{refs}\t{100 * rate:.1f}%")
    print("\n".join(lines))
    return EXIT_OK


def cmd_bench(args) -> int:
    from .bench import denominator_sv_sweep, run_bench

    Ts = [int(t) for t in args.T.split(",")]
    report = run_bench(
        Ts,
        S=args.S,
        V=args.V,
        label_length=None if args.label_length <= 0 else args.label_length,
        repeats=args.repeats,
        seed=args.seed,
    )
    sys.stdout.write(report.format())
    if args.sv_sweep:
        rows, fit = denominator_sv_sweep(T=max(Ts), repeats=args.repeats, seed=args.seed)
        print("S*V\tforward_denominator_ms")
        for sv, t in rows:
            print(f"{sv}\t{1e3 * t:.3f}")
        print(f"# forward_denominator vs S*V: R^2 {fit['r2']:.4f}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="segword", description="Whole-word segmental recogniser toolkit.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0, help="-v for progress, -vv for debug output")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", help="key = value run configuration")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
        p.add_argument("--dry-run", action="store_true", help="validate the configuration and exit")

    p = sub.add_parser("gen", parents=[common], help="write a synthetic corpus and run.conf")
    p.add_argument("--out", required=True)
    p.add_argument("--vocab-size", type=int, default=50)
    p.add_argument("--n-train", type=int, default=400)
    p.add_argument("--n-dev", type=int, default=100)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--zipf", type=float, default=1.0)
    p.add_argument("--dev-zipf", type=float, default=None, help="dev/test Zipf exponent (0 draws words uniformly)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("pretrain", parents=[common], help="multi-view acoustic/written embedding training")
    with_config(p)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("train", parents=[common], help="train the segmental recogniser")
    with_config(p)
    p.add_argument("--init", help="pre-trained embedder checkpoint")
    p.add_argument("--agwe-reg", type=float, default=None, metavar="LAMBDA", help="weight of the L2 pull toward written embeddings")
    p.add_argument("--dump-tables", metavar="DIR", help="write DP tables of every dev utterance as text")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("decode", parents=[common], help="Viterbi transcripts for a manifest")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="manifest to decode")
    p.add_argument("--out", help="transcript file (default stdout)")
    p.add_argument("--dump-segments", metavar="FILE", help="write 'id t:s:label ...' segmentations")
    p.add_argument("--max-segment", type=int, default=None)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("eval", parents=[common], help="WER of a hypothesis file against references")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--counts", help="vocabulary file with training counts, for the per-frequency table")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", parents=[common], help="time the loss and Viterbi over a grid of lengths")
    p.add_argument("--T", default="64,128,256,512,1024", help="comma-separated lengths")
    p.add_argument("--S", type=int, default=8)
    p.add_argument("--V", type=int, default=64)
    p.add_argument("--label-length", type=int, default=8, help="words per lattice; 0 grows it with T")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--sv-sweep", action="store_true", help="also time the forward pass against S*V")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)
    return ap


def _thread_limit():
    value = os.environ.get("SEGWORD_NUM_THREADS")
    if not value:
        return contextlib.nullcontext()
    try:
        n = int(value)
    except ValueError:
        raise ConfigError(f"SEGWORD_NUM_THREADS must be an integer, got {value!r}") from None
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=max(1, n))


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else (logging.INFO if args.verbose == 1 else logging.DEBUG)
    logging.basicConfig(level=level, format="%(name)s: %(message)s")
    try:
        with _thread_limit():
            return args.func(args)
    except CliError as exc:
        print(f"segword: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, FileNotFoundError) as exc:
        print(f"segword: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ContainerError as exc:
        print(f"segword: {exc}", file=sys.stderr)
        return EXIT_CORRUPT
    except DatasetError as exc:
        print(f"segword: {exc}", file=sys.stderr)
        return EXIT_MISMATCH


if __name__ == "__main__":
    sys.exit(main())
