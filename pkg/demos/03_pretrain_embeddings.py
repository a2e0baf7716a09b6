"""Pre-train acoustic and written word embeddings on a synthetic vocabulary.

Each word is a sequence of characters, each character a noisy frame template.
The acoustic view pools frames; the written view reads the spelling. Cross-view
average precision measures how well acoustic segments retrieve their own word.

Run: python3 demos/03_pretrain_embeddings.py
"""

import numpy as np

from segword.embeddings import (
    MultiViewModel,
    PretrainConfig,
    cosine_distance_matrix,
    init_acoustic_view,
    init_written_view,
    pretrain,
)
from segword.synthetic import generate, make_task

task = make_task(vocab_size=30, noise=0.3, seed=0)
train = generate(task, 200, seed=1)
dev = generate(task, 60, seed=2)
segs, labels = train.word_segments()
dev_segs, dev_labels = dev.word_segments()
print(f"{len(task.vocab)} words, {len(segs)} training segments, {len(dev_segs)} dev segments")

model = MultiViewModel(
    init_acoustic_view(task.feature_dim, 32, 32, "mean", rng=0),
    init_written_view(len(task.vocab.alphabet), 32, rng=0),
)
res = pretrain(model, segs, labels, task.vocab, dev_segs, dev_labels, PretrainConfig(max_steps=600, lr=3e-3, max_frames=400))
print("step\tloss\tdev AP\tlr")
for step, loss, ap, lr in res.log:
    print(f"{step}\t{loss:.4f}\t{ap:.4f}\t{lr:.1e}")
print(f"best dev AP {res.best_ap:.4f} at step {res.best_step}")

# nearest written embedding for a few dev segments
f = res.model.f.embed(dev_segs[:8])
d = cosine_distance_matrix(f, res.model.g.table(task.vocab))
for k, row in enumerate(d):
    print(f"segment of {task.vocab.words[dev_labels[k]]!r:8s} -> nearest word {task.vocab.words[int(row.argmin())]!r}")
