"""Analytic gradients against central differences, from the lattice up to the encoder.

Run: python3 demos/02_gradient_check.py
"""

import numpy as np

from segword.dp import loss_gradient, marginal_log_loss, mask_invalid
from segword.encoder import init_encoder
from segword.scorer import init_scorer_params
from segword.training import SegmentalModel, utterance_loss


def central_diff(f, x, eps=1e-6):
    x = x.copy()
    g = np.zeros_like(x)
    for i in np.ndindex(x.shape):
        old = x[i]
        x[i] = old + eps
        up = f(x)
        x[i] = old - eps
        g[i] = (up - f(x)) / (2 * eps)
        x[i] = old
    return g


def rel_err(a, b):
    return np.abs(a - b).max() / max(np.abs(a).max(), np.abs(b).max())


rng = np.random.default_rng(3)
W = rng.normal(size=(6, 3, 4))
labels = [2, 0, 3]
valid = np.isfinite(mask_invalid(W))
g = loss_gradient(W, labels)
fd = central_diff(lambda x: marginal_log_loss(x, labels), W)
print(f"lattice gradient: max relative error {rel_err(g[valid], fd[valid]):.2e}")

enc = init_encoder(3, 4, context=1, rng=rng)
sc = init_scorer_params(4, 4, 4, "attention", rng=rng).with_arrays(g=rng.normal(size=4))
model = SegmentalModel(enc, sc)
X = rng.normal(size=(8, 3))
loss, grads = utterance_loss(model, X, labels, S=3)
arrays = model.arrays()
print(f"end-to-end loss {loss:.6f}")
for name, value in arrays.items():
    fd = central_diff(lambda x: utterance_loss(model.with_arrays({**arrays, name: x}), X, labels, 3, need_grad=False)[0], value)
    print(f"  {name:6s} shape {str(value.shape):10s} max relative error {rel_err(grads[name], fd):.2e}")
