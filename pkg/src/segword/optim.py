"""Adam over a dict of named float64 arrays."""

from __future__ import annotations

from typing import Mapping

import numpy as np


class Adam:
    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8, clip: float = 0.0):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.clip = clip
        self.step_count = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    def step(self, params: Mapping[str, np.ndarray], grads: Mapping[str, np.ndarray]) -> dict[str, np.ndarray]:
        """Return updated copies of ``params``; keys missing from ``grads`` are left alone."""
        self.step_count += 1
        if self.clip > 0:
            norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
            scale = min(1.0, self.clip / (norm + 1e-12))
        else:
            scale = 1.0
        b1, b2 = self.beta1, self.beta2
        corr1 = 1.0 - b1**self.step_count
        corr2 = 1.0 - b2**self.step_count
        out = dict(params)
        for name, g in grads.items():
            g = np.asarray(g, dtype=np.float64) * scale
            m = self._m.get(name)
            if m is None:
                m = self._m[name] = np.zeros_like(g)
                self._v[name] = np.zeros_like(g)
            v = self._v[name]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            out[name] = params[name] - self.lr * (m / corr1) / (np.sqrt(v / corr2) + self.eps)
        return out
