"""Whole-word segmental sequence recognition with factored segment scores.

The pieces, bottom up:

* :mod:`segword.lattice`: segmentations, vocabularies, brute-force path enumeration.
* :mod:`segword.dp`: log-space forward/backward, marginal log loss, gradients, Viterbi.
* :mod:`segword.scorer`: pooled segment embeddings dotted with label embeddings.
* :mod:`segword.encoder`: a small frame encoder.
* :mod:`segword.embeddings`: acoustic/written embedding pre-training and transfer.
* :mod:`segword.training`, :mod:`segword.synthetic`, :mod:`segword.metrics`: training on synthetic data.
* :mod:`segword.container`, :mod:`segword.datasets`, :mod:`segword.config`, :mod:`segword.cli`: files and commands.
"""

__version__ = "0.1.0"

from .dp import (
    DPTables,
    dp_tables,
    forward_denominator,
    forward_numerator,
    loss_and_gradient,
    loss_gradient,
    marginal_log_loss,
    viterbi,
)
from .lattice import Segment, Segmentation, Vocabulary, enumerate_paths, label_map, validate
from .scorer import ScorerParams, embed_segments, init_scorer_params, score_backprop, score_lattice

__all__ = [
    "__version__",
    "DPTables",
    "Segment",
    "Segmentation",
    "ScorerParams",
    "Vocabulary",
    "dp_tables",
    "embed_segments",
    "enumerate_paths",
    "forward_denominator",
    "forward_numerator",
    "init_scorer_params",
    "label_map",
    "loss_and_gradient",
    "loss_gradient",
    "marginal_log_loss",
    "score_backprop",
    "score_lattice",
    "validate",
    "viterbi",
]
