"""Joint acoustic / written word embeddings and their transfer into the scorer.

The acoustic view ``f`` is the recogniser's own front end (frame encoder
followed by segment pooling and ``relu(A1 . + b1)``), applied to isolated
word segments. The written view ``g`` composes an embedding from the
word's characters, so every vocabulary word gets one, seen or not.

Both views are trained with three triplet terms on cosine distance, using
semi-hard negatives drawn from the mini-batch.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .encoder import EncoderParams, encode_padded, encode_padded_backward, init_encoder
from .lattice import Vocabulary
from .optim import Adam
from .scorer import AcousticParams, ScorerParams, init_scorer_params

log = logging.getLogger(__name__)

__all__ = [
    "ZeroVectorWarning",
    "cosine_distance",
    "cosine_distance_matrix",
    "semi_hard_negatives",
    "contrastive_loss",
    "ContrastiveResult",
    "average_precision",
    "crossview_ap",
    "agwe_penalty",
    "agwe_regularized_loss",
    "WrittenView",
    "init_written_view",
    "AcousticView",
    "init_acoustic_view",
    "MultiViewModel",
    "PairBatch",
    "PretrainConfig",
    "PretrainResult",
    "m_schedule",
    "frame_capped_batches",
    "pretrain",
    "transfer_init",
    "export_acoustic_view",
]

EPS = 1e-12


class ZeroVectorWarning(RuntimeWarning):
    """Cosine distance involving a zero vector was taken to be 1."""


def cosine_distance(a, b) -> float:
    """``1 - a.b / (|a| |b|)``; a zero vector counts as orthogonal (distance 1)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        warnings.warn("cosine distance with a zero vector set to 1", ZeroVectorWarning, stacklevel=2)
        return 1.0
    return float(np.clip(1.0 - a @ b / (na * nb), 0.0, 2.0))


def _unit(X: np.ndarray):
    norms = np.linalg.norm(X, axis=-1, keepdims=True)
    return X / np.maximum(norms, EPS), np.maximum(norms, EPS)


def cosine_distance_matrix(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Pairwise cosine distances ``[len(A), len(B)]``; zero rows are orthogonal to everything."""
    Au, _ = _unit(np.asarray(A, dtype=np.float64))
    Bu, _ = _unit(np.asarray(B, dtype=np.float64))
    return 1.0 - Au @ Bu.T


# ---------------------------------------------------------------------------
# contrastive objective


@dataclass
class _BatchGeometry:
    labels: np.ndarray  # [N] vocabulary ids
    words: np.ndarray  # [U] distinct vocabulary ids in the batch
    row: np.ndarray  # [N] position of labels[i] in words
    d_fg: np.ndarray  # [N, U]  d(f(X_i), g(words[u]))
    d_gg: np.ndarray  # [U, U]
    pos: np.ndarray  # [N]     d(f(X_i), g(v_i))


def _geometry(f_emb, g_table, labels) -> _BatchGeometry:
    labels = np.asarray(labels, dtype=np.int64)
    words, row = np.unique(labels, return_inverse=True)
    G = np.asarray(g_table, dtype=np.float64)[words]
    d_fg = cosine_distance_matrix(f_emb, G)
    d_gg = cosine_distance_matrix(G, G)
    pos = d_fg[np.arange(labels.size), row]
    return _BatchGeometry(labels, words, row, d_fg, d_gg, pos)


def _candidates(geo: _BatchGeometry, i: int, term: int):
    """Indices (into ``geo.words`` for terms 0/2, into the batch for term 1) and their distances."""
    u = geo.row[i]
    pos = geo.pos[i]
    if term == 0:
        d = geo.d_fg[i]
        ok = (np.arange(d.size) != u) & (d > pos)
    elif term == 1:
        d = geo.d_fg[:, u]
        ok = (geo.row != u) & (d > pos)
    elif term == 2:
        d = geo.d_gg[u]
        ok = (np.arange(d.size) != u) & (d > pos)
    else:
        raise ValueError(f"term must be 0, 1 or 2, got {term}")
    idx = np.flatnonzero(ok)
    return idx, d[idx]


def semi_hard_negatives(f_emb, g_table, labels, i: int, term: int) -> np.ndarray:
    """Semi-hard negatives for anchor ``i``.

    * term 0: words ``v' != v_i`` in the batch with ``d(f(X_i), g(v')) > d(f(X_i), g(v_i))``
      (returned as vocabulary ids);
    * term 1: batch segments ``j`` labelled ``!= v_i`` with ``d(g(v_i), f(X_j)) > d(g(v_i), f(X_i))``
      (returned as batch indices);
    * term 2: words ``v' != v_i`` in the batch with ``d(g(v_i), g(v')) > d(g(v_i), f(X_i))``.
    """
    geo = _geometry(f_emb, g_table, labels)
    idx, _ = _candidates(geo, i, term)
    return idx if term == 1 else geo.words[idx]


@dataclass(frozen=True)
class ContrastiveResult:
    loss: float
    grad_f: Optional[np.ndarray] = None
    grad_g: Optional[np.ndarray] = None
    active: int = 0


def contrastive_loss(
    f_emb: np.ndarray,
    g_table: np.ndarray,
    labels: Sequence[int],
    margin: float = 0.45,
    M: int = 6,
    return_grad: bool = False,
) -> ContrastiveResult:
    """Three-term triplet loss summed over anchors.

    Each term is the mean hinge ``[margin + d_pos - d_neg]_+`` over the ``M``
    closest members of its semi-hard set (0 if the set is empty).
    ``g_table`` holds written embeddings indexed by vocabulary id; only rows
    for words present in ``labels`` are used. Gradients, when requested, are
    w.r.t. ``f_emb`` and the full ``g_table``.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    f_emb = np.asarray(f_emb, dtype=np.float64)
    g_table = np.asarray(g_table, dtype=np.float64)
    geo = _geometry(f_emb, g_table, labels)
    N, U = geo.d_fg.shape
    c_fg = np.zeros((N, U))  # coefficient on d(f_i, g_u)
    c_gg = np.zeros((U, U))
    total = 0.0
    active = 0
    for i in range(N):
        u = geo.row[i]
        for term in (0, 1, 2):
            idx, d = _candidates(geo, i, term)
            if idx.size == 0:
                continue
            if idx.size > M:
                keep = np.argpartition(d, M - 1)[:M]
                idx, d = idx[keep], d[keep]
            hinge = margin + geo.pos[i] - d
            on = hinge > 0
            if not on.any():
                continue
            w = 1.0 / idx.size
            total += w * hinge[on].sum()
            active += int(on.sum())
            c_fg[i, u] += w * on.sum()
            if term == 0:
                np.subtract.at(c_fg[i], idx[on], w)
            elif term == 1:
                np.subtract.at(c_fg[:, u], idx[on], w)
            else:
                np.subtract.at(c_gg[u], idx[on], w)
    if not return_grad:
        return ContrastiveResult(float(total), active=active)
    Fu, Fn = _unit(f_emb)
    Gu, Gn = _unit(g_table[geo.words])
    cos_fg = 1.0 - geo.d_fg
    cos_gg = 1.0 - geo.d_gg
    # d(1 - cos(a, b))/da = -(b_hat - cos * a_hat) / |a|
    grad_f = -(c_fg @ Gu - (c_fg * cos_fg).sum(axis=1, keepdims=True) * Fu) / Fn
    sym = c_gg + c_gg.T
    grad_gw = -(c_fg.T @ Fu - (c_fg * cos_fg).sum(axis=0)[:, None] * Gu) / Gn
    grad_gw -= (sym @ Gu - (sym * cos_gg).sum(axis=1, keepdims=True) * Gu) / Gn
    grad_g = np.zeros_like(g_table)
    grad_g[geo.words] = grad_gw
    return ContrastiveResult(float(total), grad_f, grad_g, active)


# ---------------------------------------------------------------------------
# cross-view evaluation


def average_precision(scores: np.ndarray, positive: np.ndarray) -> float:
    """Area under the step precision-recall curve, thresholds at distinct scores."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    positive = np.asarray(positive, dtype=bool).ravel()
    n_pos = positive.sum()
    if n_pos == 0:
        raise ValueError("average precision is undefined without positive pairs")
    order = np.argsort(-scores, kind="mergesort")
    s = scores[order]
    tp = np.cumsum(positive[order])
    # last index of every run of tied scores
    ends = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    tp = tp[ends]
    precision = tp / (ends + 1)
    recall = tp / n_pos
    return float(np.sum(np.diff(np.r_[0.0, recall]) * precision))


def crossview_ap(f_emb: np.ndarray, labels: Sequence[int], g_table: np.ndarray) -> float:
    """AP of deciding "segment i is word v" by cosine distance, over all segment/word pairs."""
    d = cosine_distance_matrix(f_emb, g_table)
    positive = np.zeros_like(d, dtype=bool)
    positive[np.arange(d.shape[0]), np.asarray(labels)] = True
    return average_precision(-d, positive)


# ---------------------------------------------------------------------------
# regularisation toward written embeddings


def agwe_penalty(A2: np.ndarray, labels: Sequence[int], g_table: np.ndarray):
    """``sum_{v in L} |A2[v] - g(v)|^2`` (each occurrence counted) and its gradient w.r.t. ``A2``."""
    labels = np.asarray(labels, dtype=np.int64)
    diff = A2[labels] - g_table[labels]
    grad = np.zeros(A2.shape)
    np.add.at(grad, labels, 2.0 * diff)
    return float(np.sum(diff * diff)), grad


def agwe_regularized_loss(seg_loss: float, A2: np.ndarray, labels: Sequence[int], g_table: np.ndarray, lam: float) -> float:
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    if lam == 0.0:
        return float(seg_loss)
    penalty, _ = agwe_penalty(A2, labels, g_table)
    return float((1.0 - lam) * seg_loss + lam * penalty)


# ---------------------------------------------------------------------------
# the two views


@dataclass(frozen=True)
class WrittenView:
    """Characters -> embeddings -> width-3 convolution + tanh -> mean -> affine."""

    C: np.ndarray  # [alphabet, E]
    Wc: np.ndarray  # [H, 3E]
    bc: np.ndarray  # [H]
    Wo: np.ndarray  # [D, H]
    bo: np.ndarray  # [D]

    @property
    def embed_dim(self) -> int:
        return self.Wo.shape[0]

    def arrays(self) -> dict[str, np.ndarray]:
        return {"C": self.C, "Wc": self.Wc, "bc": self.bc, "Wo": self.Wo, "bo": self.bo}

    def with_arrays(self, **arrays) -> "WrittenView":
        return replace(self, **arrays)

    def embed(self, char_ids: Sequence[Sequence[int]]) -> np.ndarray:
        return self.forward(char_ids)[0]

    def table(self, vocab: Vocabulary) -> np.ndarray:
        """Embedding of every vocabulary word, ``[V, D]``."""
        return self.embed(vocab.char_ids)

    def forward(self, char_ids: Sequence[Sequence[int]]):
        U = len(char_ids)
        L = max(len(c) for c in char_ids)
        ids = np.zeros((U, L), dtype=np.int64)
        mask = np.zeros((U, L))
        for k, c in enumerate(char_ids):
            ids[k, : len(c)] = c
            mask[k, : len(c)] = 1.0
        lengths = mask.sum(axis=1, keepdims=True)
        E = self.C.shape[1]
        emb = self.C[ids] * mask[:, :, None]
        padded = np.zeros((U, L + 2, E))
        padded[:, 1:-1] = emb
        ctx = np.concatenate([padded[:, :-2], padded[:, 1:-1], padded[:, 2:]], axis=2)
        z = np.tanh(ctx @ self.Wc.T + self.bc)
        pooled = (z * mask[:, :, None]).sum(axis=1) / lengths
        out = pooled @ self.Wo.T + self.bo
        return out, (ids, mask, lengths, ctx, z, pooled)

    def backward(self, cache, dout: np.ndarray) -> dict[str, np.ndarray]:
        ids, mask, lengths, ctx, z, pooled = cache
        E = self.C.shape[1]
        grads = {"Wo": dout.T @ pooled, "bo": dout.sum(axis=0)}
        dz = (dout @ self.Wo)[:, None, :] * (mask / lengths)[:, :, None]
        dpre = dz * (1.0 - z**2)
        grads["Wc"] = np.einsum("ulh,ulk->hk", dpre, ctx)
        grads["bc"] = dpre.sum(axis=(0, 1))
        dctx = dpre @ self.Wc
        dpad = np.zeros((ids.shape[0], ids.shape[1] + 2, E))
        dpad[:, :-2] += dctx[:, :, :E]
        dpad[:, 1:-1] += dctx[:, :, E : 2 * E]
        dpad[:, 2:] += dctx[:, :, 2 * E :]
        demb = dpad[:, 1:-1] * mask[:, :, None]
        dC = np.zeros(self.C.shape)
        np.add.at(dC, ids, demb)
        grads["C"] = dC
        return grads


def init_written_view(alphabet_size: int, D: int, char_dim: int = 16, hidden: int = 64, rng=None) -> WrittenView:
    rng = np.random.default_rng(rng)

    def glorot(n_out, n_in):
        lim = np.sqrt(6.0 / (n_in + n_out))
        return rng.uniform(-lim, lim, size=(n_out, n_in))

    return WrittenView(
        C=rng.normal(scale=1.0, size=(alphabet_size, char_dim)),
        Wc=glorot(hidden, 3 * char_dim),
        bc=np.zeros(hidden),
        Wo=glorot(D, hidden),
        bo=np.zeros(D),
    )


@dataclass(frozen=True)
class AcousticView:
    """Encoder plus segment pooling and ``relu(A1 . + b1)``: the recogniser's ``f_ac``."""

    encoder: EncoderParams
    acoustic: AcousticParams

    @property
    def embed_dim(self) -> int:
        return self.acoustic.embed_dim

    def arrays(self) -> dict[str, np.ndarray]:
        out = {f"enc.{k}": v for k, v in self.encoder.arrays().items()}
        out.update(self.acoustic.arrays())
        return out

    def with_arrays(self, **arrays) -> "AcousticView":
        enc = {k[4:]: v for k, v in arrays.items() if k.startswith("enc.")}
        ac = {k: v for k, v in arrays.items() if not k.startswith("enc.")}
        return AcousticView(self.encoder.with_arrays(**enc), self.acoustic.with_arrays(**ac))

    def embed(self, segments: Sequence[np.ndarray]) -> np.ndarray:
        return self.forward(segments)[0]

    def forward(self, segments: Sequence[np.ndarray], train: bool = False, rng=None):
        lengths = np.array([len(x) for x in segments])
        if lengths.min() < 1:
            raise ValueError("empty segment")
        F0 = self.encoder.input_dim
        X = np.zeros((len(segments), lengths.max(), F0))
        for k, x in enumerate(segments):
            X[k, : len(x)] = x
        H, hl, enc_cache = encode_padded(X, lengths, self.encoder, train=train, rng=rng)
        ac = self.acoustic
        N = len(segments)
        rows = np.arange(N)
        valid = np.arange(H.shape[1])[None, :] < hl[:, None]
        weights = None
        if ac.pooling == "concat":
            pooled = np.concatenate([H[:, 0], H[rows, hl - 1]], axis=1)
        elif ac.pooling == "mean":
            pooled = H.sum(axis=1) / hl[:, None]
        else:
            z = np.where(valid, H @ ac.g, -np.inf)
            z = z - z.max(axis=1, keepdims=True)
            weights = np.exp(z)
            weights /= weights.sum(axis=1, keepdims=True)
            pooled = np.einsum("nl,nlf->nf", weights, H)
        pre = pooled @ ac.A1.T + ac.b1
        out = np.maximum(pre, 0.0)
        return out, (H, hl, enc_cache, pooled, pre, weights)

    def backward(self, cache, dout: np.ndarray) -> dict[str, np.ndarray]:
        H, hl, enc_cache, pooled, pre, weights = cache
        ac = self.acoustic
        N, Lh, F = H.shape
        rows = np.arange(N)
        dpre = dout * (pre > 0)
        grads = {"A1": dpre.T @ pooled, "b1": dpre.sum(axis=0)}
        dpool = dpre @ ac.A1
        dH = np.zeros_like(H)
        if ac.pooling == "concat":
            dH[:, 0] += dpool[:, :F]
            dH[rows, hl - 1] += dpool[:, F:]
        elif ac.pooling == "mean":
            valid = np.arange(Lh)[None, :] < hl[:, None]
            dH += (dpool / hl[:, None])[:, None, :] * valid[:, :, None]
        else:
            dH += weights[:, :, None] * dpool[:, None, :]
            dw = np.einsum("nf,nlf->nl", dpool, H)
            dz = weights * (dw - (weights * dw).sum(axis=1, keepdims=True))
            grads["g"] = np.einsum("nl,nlf->f", dz, H)
            dH += dz[:, :, None] * ac.g[None, None, :]
        for k, v in encode_padded_backward(enc_cache, dH).items():
            grads[f"enc.{k}"] = v
        return grads


def init_acoustic_view(
    F_in: int, F: int, D: int, pooling: str = "concat", context: int = 1, stride: int = 1, dropout: float = 0.0, rng=None
) -> AcousticView:
    rng = np.random.default_rng(rng)
    enc = init_encoder(F_in, F, context=context, stride=stride, dropout=dropout, rng=rng)
    sp = init_scorer_params(F, D, 1, pooling, rng=rng)
    return AcousticView(enc, sp.acoustic)


@dataclass(frozen=True)
class MultiViewModel:
    f: AcousticView
    g: WrittenView

    def arrays(self) -> dict[str, np.ndarray]:
        out = {f"f.{k}": v for k, v in self.f.arrays().items()}
        out.update({f"g.{k}": v for k, v in self.g.arrays().items()})
        return out

    def with_arrays(self, arrays) -> "MultiViewModel":
        fa = {k[2:]: v for k, v in arrays.items() if k.startswith("f.")}
        ga = {k[2:]: v for k, v in arrays.items() if k.startswith("g.")}
        return MultiViewModel(self.f.with_arrays(**fa), self.g.with_arrays(**ga))


# ---------------------------------------------------------------------------
# pre-training loop


@dataclass(frozen=True)
class PairBatch:
    segments: tuple[np.ndarray, ...]
    labels: np.ndarray
    margin: float = 0.45
    M: int = 6

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if len(self.segments) != len(self.labels):
            raise ValueError("one label per segment")

    @property
    def frames(self) -> int:
        return int(sum(len(x) for x in self.segments))


@dataclass
class PretrainConfig:
    margin: float = 0.45
    m_start: int = 64
    m_step: int = 1
    m_floor: int = 6
    max_frames: int = 2000
    lr: float = 5e-4
    lr_factor: float = 10.0
    patience: int = 300
    min_lr: float = 1e-9
    max_steps: int = 5000
    eval_every: int = 100
    seed: int = 0


def m_schedule(step: int, start: int = 64, decrement: int = 1, floor: int = 6) -> int:
    """Negatives averaged per term at 0-based batch ``step``."""
    return max(floor, start - decrement * step)


def frame_capped_batches(lengths: Sequence[int], max_frames: int, rng: np.random.Generator):
    """Shuffle pair indices and cut them into batches of at most ``max_frames`` frames."""
    order = rng.permutation(len(lengths))
    batch, frames = [], 0
    for k in order:
        n = int(lengths[k])
        if batch and frames + n > max_frames:
            yield np.array(batch)
            batch, frames = [], 0
        batch.append(k)
        frames += n
    if batch:
        yield np.array(batch)


@dataclass
class PretrainResult:
    model: MultiViewModel
    best_ap: float
    best_step: int
    steps: int
    log: list = field(default_factory=list)  # (step, loss, dev_ap, lr)


def pretrain(
    model: MultiViewModel,
    segments: Sequence[np.ndarray],
    labels: Sequence[int],
    vocab: Vocabulary,
    dev_segments: Sequence[np.ndarray],
    dev_labels: Sequence[int],
    config: PretrainConfig = PretrainConfig(),
) -> PretrainResult:
    """Multi-view training with early stopping on dev cross-view AP.

    The learning rate is divided by ``lr_factor`` whenever dev AP has not
    improved for ``patience`` steps; training stops once it falls below
    ``min_lr`` or after ``max_steps``. The best-AP parameters are returned.
    """
    if len(dev_labels) == 0:
        raise ValueError("no dev pairs to evaluate cross-view AP on")
    rng = np.random.default_rng(config.seed)
    labels = np.asarray(labels, dtype=np.int64)
    lengths = [len(x) for x in segments]
    opt = Adam(lr=config.lr, clip=5.0)
    params = model.arrays()
    char_ids = vocab.char_ids

    def evaluate(m: MultiViewModel) -> float:
        return crossview_ap(m.f.embed(dev_segments), dev_labels, m.g.table(vocab))

    best_ap = evaluate(model)
    best, best_step, last_improve = model, 0, 0
    result = PretrainResult(model, best_ap, 0, 0, [(0, float("nan"), best_ap, opt.lr)])
    log.info("pretrain step 0 dev AP %.4f", best_ap)
    step = 0
    running = []
    while step < config.max_steps and opt.lr >= config.min_lr:
        for idx in frame_capped_batches(lengths, config.max_frames, rng):
            if step >= config.max_steps or opt.lr < config.min_lr:
                break
            m = model.with_arrays(params)
            batch_labels = labels[idx]
            words = np.unique(batch_labels)
            f_emb, f_cache = m.f.forward([segments[k] for k in idx], train=True, rng=rng)
            g_emb, g_cache = m.g.forward([char_ids[w] for w in words])
            g_table = np.zeros((len(vocab), g_emb.shape[1]))
            g_table[words] = g_emb
            M = m_schedule(step, config.m_start, config.m_step, config.m_floor)
            res = contrastive_loss(f_emb, g_table, batch_labels, config.margin, M, return_grad=True)
            n = len(idx)
            grads = {f"f.{k}": v / n for k, v in m.f.backward(f_cache, res.grad_f).items()}
            grads.update({f"g.{k}": v / n for k, v in m.g.backward(g_cache, res.grad_g[words]).items()})
            params = opt.step(params, grads)
            running.append(res.loss / n)
            step += 1
            if step % config.eval_every == 0:
                model_now = model.with_arrays(params)
                ap = evaluate(model_now)
                result.log.append((step, float(np.mean(running)), ap, opt.lr))
                running = []
                log.info("pretrain step %d loss %.4f dev AP %.4f lr %.2e", step, result.log[-1][1], ap, opt.lr)
                if ap > best_ap:
                    best_ap, best, best_step, last_improve = ap, model_now, step, step
                elif step - last_improve >= config.patience:
                    opt.lr /= config.lr_factor
                    last_improve = step
    result.model, result.best_ap, result.best_step, result.steps = best, best_ap, best_step, step
    return result


# ---------------------------------------------------------------------------
# transfer into the recogniser


def transfer_init(
    awe: AcousticView, agwe_table: np.ndarray, b2: Optional[np.ndarray] = None
) -> tuple[EncoderParams, ScorerParams]:
    """Recogniser parameters from pre-trained views.

    The encoder and ``A1``/``b1`` (and ``g`` for attention pooling) are taken
    from the acoustic view; row ``v`` of ``A2`` is the written embedding of
    word ``v``. ``b2`` defaults to zeros.
    """
    agwe_table = np.asarray(agwe_table, dtype=np.float64)
    if agwe_table.ndim != 2 or agwe_table.shape[1] != awe.embed_dim:
        raise ValueError(
            f"written embedding dim {agwe_table.shape[-1]} != acoustic embedding dim {awe.embed_dim}"
        )
    V = agwe_table.shape[0]
    ac = awe.acoustic
    scorer = ScorerParams(
        A1=ac.A1.copy(),
        b1=ac.b1.copy(),
        A2=agwe_table.copy(),
        b2=np.zeros(V) if b2 is None else np.asarray(b2, dtype=np.float64).copy(),
        pooling=ac.pooling,
        g=None if ac.g is None else ac.g.copy(),
    )
    enc = awe.encoder.with_arrays(W=awe.encoder.W.copy(), b=awe.encoder.b.copy())
    return enc, scorer


def export_acoustic_view(encoder: EncoderParams, scorer: ScorerParams) -> AcousticView:
    """The acoustic half of a recogniser, as an :class:`AcousticView`."""
    return AcousticView(encoder, scorer.acoustic)
