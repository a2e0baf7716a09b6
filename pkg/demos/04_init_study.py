"""Random against pre-trained initialisation on a rare-word-heavy task.

Word frequencies follow a Zipf law, so most of the vocabulary is seen only a
handful of times in training. Both recognisers see identical data and seeds.
Takes about a minute.

Run: python3 demos/04_init_study.py
"""

from segword.recipes import StudyConfig, run_init_study

cfg = StudyConfig(vocab_size=60, n_train=200, n_dev=100, n_test=100, pretrain_steps=600, epochs=12, lambdas=(0.03,))
res = run_init_study(cfg)
counts = res.data.train.label_counts()
rare = sum(1 for v in range(cfg.vocab_size) if counts.get(v, 0) < cfg.rare_below)
print(f"{rare} of {cfg.vocab_size} words occur fewer than {cfg.rare_below} times in training")
print(f"pre-training dev AP {res.pretrained.best_ap:.3f}")
print()
print("dev WER per epoch, then rare-word substitution rate on the test set")
print(res.summary())
