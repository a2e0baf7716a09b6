"""A tiny score lattice, solved by dynamic programming and by brute force.

Run: python3 demos/01_lattice_walkthrough.py
"""

import numpy as np

from segword.dp import (
    dp_tables,
    format_tables,
    loss_and_gradient,
    numerator_posteriors,
    segment_posteriors,
    viterbi,
)
from segword.lattice import count_paths, enumerate_paths, mask_invalid

rng = np.random.default_rng(0)
T, S, V = 5, 3, 2
W = mask_invalid(rng.normal(size=(T, S, V)))
labels = [1, 0]
print(f"lattice T={T} S={S} V={V}, labels {labels}, {count_paths(T, S, V)} segmentations")

# brute force: score every path, normalise in log space
paths = list(enumerate_paths(T, S, V))
scores = np.array([p.score(W) for p in paths])
log_z = np.logaddexp.reduce(scores)
log_num = np.logaddexp.reduce([sc for p, sc in zip(paths, scores) if [v for _, _, v in p] == labels])
print(f"enumeration: log Z {log_z:.10f}  loss {log_z - log_num:.10f}")

tables = dp_tables(W, labels)
res = loss_and_gradient(W, labels)
print(f"forward:     log Z {tables.log_partition:.10f}  loss {res.loss:.10f}")
print()
print(format_tables(tables))

# the gradient is expected segment counts under all paths minus under label paths
post = segment_posteriors(W)
npost = numerator_posteriors(W, labels)
print(f"expected segments per path {post.sum():.4f}; numerator mass {npost.sum():.4f} (= {len(labels)} labels)")
print(f"gradient range [{res.grad.min():.4f}, {res.grad.max():.4f}]")

best, score = viterbi(W)
print(f"viterbi {best} score {score:.4f}; best enumerated score {scores.max():.4f}")
