"""Canned end-to-end runs on the synthetic task.

:func:`run_init_study` pre-trains the two embedding views once, then trains
recognisers from random and from pre-trained initialisation (optionally
with the written-embedding penalty at several weights) under identical
seeds, and reports dev WER per epoch and substitution rates on rare words
of a held-out test set.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .embeddings import (
    MultiViewModel,
    PretrainConfig,
    PretrainResult,
    init_acoustic_view,
    init_written_view,
    pretrain,
    transfer_init,
)
from .metrics import FrequencyHistogram, per_frequency_substitutions
from .synthetic import Dataset, SyntheticTask, generate, make_task
from .training import SegmentalModel, TrainConfig, TrainResult, evaluate, init_model, train

log = logging.getLogger(__name__)

__all__ = ["StudyConfig", "StudyData", "StudyResult", "make_study_data", "pretrain_views", "run_init_study"]


@dataclass
class StudyConfig:
    vocab_size: int = 100
    zipf: float = 1.2
    noise: float = 0.3
    n_train: int = 300
    n_dev: int = 150
    n_test: int = 150
    n_pair_dev: int = 100
    feature_dim: int = 32
    embed_dim: int = 32
    pooling: str = "mean"
    pretrain_steps: int = 1000
    pretrain_lr: float = 0.003
    pretrain_max_frames: int = 500
    epochs: int = 30
    lr: float = 0.003
    max_segment: int = 16
    lambdas: tuple[float, ...] = ()
    rare_below: int = 10
    seed: int = 0


@dataclass
class StudyData:
    task: SyntheticTask
    train: Dataset
    dev: Dataset  # uniform labels, drives learning-rate halving
    test: Dataset  # uniform labels, substitution histograms
    pair_dev: Dataset  # pre-training early stopping


def make_study_data(cfg: StudyConfig) -> StudyData:
    """Zipf-distributed training words; dev and test draw words uniformly so rare words are well represented."""
    task = make_task(vocab_size=cfg.vocab_size, noise=cfg.noise, zipf=cfg.zipf, seed=cfg.seed)
    return StudyData(
        task,
        generate(task, cfg.n_train, seed=cfg.seed + 1, prefix="train"),
        generate(task, cfg.n_dev, seed=cfg.seed + 2, zipf=0.0, prefix="dev"),
        generate(task, cfg.n_test, seed=cfg.seed + 3, zipf=0.0, prefix="test"),
        generate(task, cfg.n_pair_dev, seed=cfg.seed + 4, prefix="pairdev"),
    )


def pretrain_views(cfg: StudyConfig, data: StudyData) -> PretrainResult:
    rng = np.random.default_rng(cfg.seed)
    model = MultiViewModel(
        init_acoustic_view(data.task.feature_dim, cfg.feature_dim, cfg.embed_dim, cfg.pooling, rng=rng),
        init_written_view(len(data.task.vocab.alphabet), cfg.embed_dim, rng=rng),
    )
    segs, labels = data.train.word_segments()
    dev_segs, dev_labels = data.pair_dev.word_segments()
    pcfg = PretrainConfig(
        max_steps=cfg.pretrain_steps, lr=cfg.pretrain_lr, max_frames=cfg.pretrain_max_frames, seed=cfg.seed
    )
    return pretrain(model, segs, labels, data.task.vocab, dev_segs, dev_labels, pcfg)


@dataclass
class StudyResult:
    config: StudyConfig
    data: StudyData
    pretrained: PretrainResult
    runs: dict[str, TrainResult] = field(default_factory=dict)
    histograms: dict[str, FrequencyHistogram] = field(default_factory=dict)

    def dev_wer(self, name: str) -> list[float]:
        return [e.dev_wer for e in self.runs[name].log]

    def rare_rate(self, name: str) -> float:
        """Substitution rate over test words seen fewer than ``rare_below`` times in training."""
        h = self.histograms[name]
        return float(h.substitutions[0] / max(h.references[0], 1))

    def summary(self) -> str:
        names = list(self.runs)
        lines = ["epoch\t" + "\t".join(names)]
        for k in range(len(self.runs[names[0]].log)):
            lines.append(f"{k}\t" + "\t".join(f"{self.runs[n].log[k].dev_wer:.3f}" for n in names))
        lines.append("rare\t" + "\t".join(f"{self.rare_rate(n):.3f}" for n in names))
        return "\n".join(lines)


def run_init_study(cfg: StudyConfig = StudyConfig(), data: Optional[StudyData] = None) -> StudyResult:
    """Runs are named ``random``, ``awe`` and ``awe+reg=<lam>`` for each ``lam`` in ``cfg.lambdas``."""
    data = make_study_data(cfg) if data is None else data
    pre = pretrain_views(cfg, data)
    log.info("pre-training best dev AP %.4f at step %d", pre.best_ap, pre.best_step)
    log_unigram = data.train.with_counts().log_unigram()
    table = pre.model.g.table(data.task.vocab)
    enc, sc = transfer_init(pre.model.f, table, b2=log_unigram)
    tcfg = TrainConfig(
        vocab_size=cfg.vocab_size,
        epochs=cfg.epochs,
        lr=cfg.lr,
        dropout=0.0,
        pooling=cfg.pooling,
        feature_dim=cfg.feature_dim,
        embed_dim=cfg.embed_dim,
        max_segment=cfg.max_segment,
        b2_init="unigram",
        seed=cfg.seed,
    )
    out = StudyResult(cfg, data, pre)
    random_model = init_model(tcfg, data.task.feature_dim, log_unigram=log_unigram, rng=np.random.default_rng(cfg.seed))
    out.runs["random"] = train(tcfg, data.train, data.dev, model=random_model)
    out.runs["awe"] = train(replace(tcfg, init="pretrained"), data.train, data.dev, model=SegmentalModel(enc, sc))
    for lam in cfg.lambdas:
        c = replace(tcfg, init="pretrained", agwe_lambda=lam)
        out.runs[f"awe+reg={lam:g}"] = train(c, data.train, data.dev, model=SegmentalModel(enc, sc), agwe_table=table)
    counts = data.train.label_counts()
    for name, res in out.runs.items():
        _, alignments = evaluate(res.model, data.test, cfg.max_segment)
        out.histograms[name] = per_frequency_substitutions(alignments, counts, edges=(0, cfg.rare_below))
    return out
