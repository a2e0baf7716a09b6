"""End-to-end training of the whole-word segmental recogniser."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .dp import InfeasibleLabelsWarning, loss_and_gradient, viterbi
from .embeddings import agwe_penalty
from .encoder import EncoderParams, encode, encode_backward, init_encoder, output_length
from .lattice import Segmentation, label_map
from .metrics import align, corpus_wer
from .optim import Adam
from .scorer import ScorerParams, init_scorer_params, score_backprop, score_lattice

log = logging.getLogger(__name__)

__all__ = [
    "DROPOUT_BY_VOCAB",
    "default_dropout",
    "TrainConfig",
    "TrainingDiverged",
    "SegmentalModel",
    "init_model",
    "stack_frames",
    "batch_cap_segments",
    "utterance_loss",
    "decode",
    "evaluate",
    "EpochLog",
    "TrainResult",
    "train",
]

# vocabulary size relative to the reference size -> dropout
DROPOUT_BY_VOCAB = ((1.0, 0.25), (2.0, 0.35), (4.0, 0.45))


def default_dropout(vocab_size: int, reference_vocab: int = 5000) -> float:
    ratio = vocab_size / reference_vocab
    for limit, rate in DROPOUT_BY_VOCAB:
        if ratio <= limit:
            return rate
    return DROPOUT_BY_VOCAB[-1][1]


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    vocab_size: int = 50
    max_segment: int = 32
    batch_size: int = 16
    lr: float = 0.001
    lr_decay: float = 2.0
    patience: int = 1
    epochs: int = 10
    dropout: Optional[float] = None
    dropout_reference_vocab: int = 5000
    agwe_lambda: float = 0.0
    init: str = "random"
    pooling: str = "concat"
    feature_dim: int = 32
    embed_dim: int = 32
    context: int = 1
    stride: int = 1
    stack: bool = False
    b2_init: str = "zero"
    grad_clip: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.agwe_lambda <= 1.0:
            raise ValueError(f"agwe_lambda must lie in [0, 1], got {self.agwe_lambda}")
        if self.init not in ("random", "pretrained"):
            raise ValueError(f"init must be 'random' or 'pretrained', got {self.init!r}")
        if self.b2_init not in ("zero", "unigram"):
            raise ValueError(f"b2_init must be 'zero' or 'unigram', got {self.b2_init!r}")
        if self.max_segment < 1 or self.batch_size < 1 or self.epochs < 0 or self.patience < 1:
            raise ValueError("max_segment, batch_size and patience must be >= 1, epochs >= 0")

    @property
    def effective_dropout(self) -> float:
        if self.dropout is not None:
            return self.dropout
        return default_dropout(self.vocab_size, self.dropout_reference_vocab)

    def as_dict(self) -> dict:
        return asdict(self)


def stack_frames(X: np.ndarray, return_padded: bool = False):
    """Concatenate frames pairwise: ``[T, F] -> [ceil(T/2), 2F]``.

    An odd final frame is paired with zeros; ``return_padded`` also returns
    whether that happened.
    """
    X = np.asarray(X)
    T, F = X.shape
    padded = T % 2 == 1
    if padded:
        X = np.concatenate([X, np.zeros((1, F), dtype=X.dtype)])
    out = X.reshape(-1, 2 * F)
    return (out, padded) if return_padded else out


def batch_cap_segments(batch: Iterable[tuple[int, int]], max_segment: int = 32) -> int:
    """``min(2 * max(ceil(T / K)), max_segment)`` over ``(T, K)`` pairs of a batch."""
    ratios = []
    for T, K in batch:
        if K < 1:
            raise ValueError("every utterance needs at least one word")
        ratios.append(-(-int(T) // int(K)))
    return min(2 * max(ratios), max_segment)


@dataclass(frozen=True)
class SegmentalModel:
    encoder: EncoderParams
    scorer: ScorerParams
    stack: bool = False

    def arrays(self) -> dict[str, np.ndarray]:
        out = {f"enc.{k}": v for k, v in self.encoder.arrays().items()}
        out.update(self.scorer.arrays())
        return out

    def with_arrays(self, arrays) -> "SegmentalModel":
        enc = {k[4:]: v for k, v in arrays.items() if k.startswith("enc.")}
        sc = {k: v for k, v in arrays.items() if not k.startswith("enc.")}
        return replace(self, encoder=self.encoder.with_arrays(**enc), scorer=self.scorer.with_arrays(**sc))

    def prepare(self, X: np.ndarray) -> np.ndarray:
        return stack_frames(X) if self.stack else np.asarray(X, dtype=np.float64)

    def encoded_length(self, T_in: int) -> int:
        T = -(-T_in // 2) if self.stack else T_in
        return output_length(T, self.encoder.stride)

    def lattice(self, X: np.ndarray, S: int) -> np.ndarray:
        H, _ = encode(self.prepare(X), self.encoder)
        return score_lattice(H, self.scorer, min(S, H.shape[0]))


def init_model(config: TrainConfig, input_dim: int, log_unigram: Optional[np.ndarray] = None, rng=None) -> SegmentalModel:
    rng = np.random.default_rng(config.seed if rng is None else rng)
    F_in = 2 * input_dim if config.stack else input_dim
    enc = init_encoder(F_in, config.feature_dim, config.context, config.stride, config.effective_dropout, rng=rng)
    b2 = log_unigram if config.b2_init == "unigram" else None
    sc = init_scorer_params(config.feature_dim, config.embed_dim, config.vocab_size, config.pooling, rng=rng, b2=b2)
    return SegmentalModel(enc, sc, config.stack)


def utterance_loss(
    model: SegmentalModel,
    X: np.ndarray,
    labels: Sequence[int],
    S: int,
    train: bool = False,
    rng=None,
    need_grad: bool = True,
):
    """Marginal log loss of one utterance and its gradient w.r.t. every model array.

    Returns ``(loss, grads)``; ``grads`` is ``None`` when the labels cannot be
    realised (loss ``inf``) or when ``need_grad`` is false.
    """
    H, cache = encode(model.prepare(X), model.encoder, train=train, rng=rng)
    S = min(S, H.shape[0])
    W = score_lattice(H, model.scorer, S)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", InfeasibleLabelsWarning)
        res = loss_and_gradient(W, labels)
    if not res.feasible or not need_grad:
        return res.loss, None
    dH, grads = score_backprop(H, model.scorer, S, res.grad)
    _, enc_grads = encode_backward(cache, dH)
    grads.update({f"enc.{k}": v for k, v in enc_grads.items()})
    return res.loss, grads


def decode(model: SegmentalModel, X: np.ndarray, S: int) -> Segmentation:
    return viterbi(model.lattice(X, S))[0]


def evaluate(model: SegmentalModel, dataset, S: int):
    """Corpus WER of Viterbi transcripts, plus the per-utterance alignments."""
    pairs, alignments = [], []
    for utt in dataset:
        hyp = label_map(decode(model, utt.features, S))
        pairs.append((hyp, utt.labels))
        alignments.append(align(hyp, utt.labels))
    return corpus_wer(pairs), alignments


class EpochLog(NamedTuple):
    epoch: int
    loss: float
    dev_wer: float
    lr: float


@dataclass
class TrainResult:
    model: SegmentalModel
    best_model: SegmentalModel
    best_dev_wer: float
    log: list[EpochLog] = field(default_factory=list)
    skipped: int = 0

    def format_log(self) -> str:
        lines = [f"{e.epoch}\t{e.loss:.6f}\t{e.dev_wer:.6f}\t{e.lr:.6g}" for e in self.log]
        return "\n".join(lines) + ("\n" if lines else "")


def train(
    config: TrainConfig,
    train_set,
    dev_set,
    model: Optional[SegmentalModel] = None,
    agwe_table: Optional[np.ndarray] = None,
    on_epoch=None,
) -> TrainResult:
    """Adam on the marginal log loss, halving the rate when dev WER stalls.

    With ``agwe_lambda > 0`` each utterance's loss becomes
    ``(1 - lam) * loss + lam * sum_{v in L} |A2[v] - agwe_table[v]|^2``.
    Returns the last and best-on-dev models and one :class:`EpochLog` per
    epoch (epoch 0 is the untrained model).
    """
    rng = np.random.default_rng(config.seed)
    if model is None:
        input_dim = train_set.utterances[0].features.shape[1]
        model = init_model(config, input_dim, rng=rng)
    lam = config.agwe_lambda
    if lam > 0 and agwe_table is None:
        raise ValueError("agwe_lambda > 0 needs the written embedding table")
    opt = Adam(lr=config.lr, clip=config.grad_clip)
    params = model.arrays()
    utts = list(train_set)

    def dev_wer(m):
        return evaluate(m, dev_set, config.max_segment)[0].rate

    best_wer = dev_wer(model)
    result = TrainResult(model, model, best_wer, [EpochLog(0, float("nan"), best_wer, opt.lr)])
    stale = 0
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(utts))
        losses = []
        for start in range(0, len(order), config.batch_size):
            batch = [utts[k] for k in order[start : start + config.batch_size]]
            m = model.with_arrays(params)
            S_eff = batch_cap_segments(
                [(m.encoded_length(len(u.features)), len(u.labels)) for u in batch], config.max_segment
            )
            total = {}
            n = 0
            for u in batch:
                loss, grads = utterance_loss(m, u.features, u.labels, S_eff, train=True, rng=rng)
                if grads is None:
                    if math.isnan(loss):
                        raise TrainingDiverged(f"NaN loss on {u.uid} at epoch {epoch}")
                    result.skipped += 1
                    continue
                if not math.isfinite(loss):
                    raise TrainingDiverged(f"non-finite loss {loss} on {u.uid} at epoch {epoch}")
                if lam > 0:
                    penalty, dA2 = agwe_penalty(params["A2"], u.labels, agwe_table)
                    loss = (1 - lam) * loss + lam * penalty
                    grads = {k: (1 - lam) * v for k, v in grads.items()}
                    grads["A2"] = grads["A2"] + lam * dA2
                for k, v in grads.items():
                    total[k] = total[k] + v if k in total else v
                losses.append(loss)
                n += 1
            if n == 0:
                continue
            params = opt.step(params, {k: v / n for k, v in total.items()})
            if any(not np.all(np.isfinite(v)) for v in params.values()):
                raise TrainingDiverged(f"non-finite parameters after a step in epoch {epoch}")
        model = model.with_arrays(params)
        wer = dev_wer(model)
        mean_loss = float(np.mean(losses)) if losses else float("nan")
        if math.isnan(mean_loss) and losses:
            raise TrainingDiverged(f"loss became NaN at epoch {epoch}")
        result.log.append(EpochLog(epoch, mean_loss, wer, opt.lr))
        log.info("epoch %d loss %.4f dev WER %.4f lr %.2e", epoch, mean_loss, wer, opt.lr)
        if wer < best_wer:
            best_wer, result.best_model, stale = wer, model, 0
        else:
            stale += 1
            if stale >= config.patience:
                opt.lr /= config.lr_decay
                stale = 0
        if on_epoch is not None:
            on_epoch(result)
    result.model = model
    result.best_dev_wer = best_wer
    return result
