"""Wall-time and memory probes for the DP kernels and the scorer."""

from __future__ import annotations

import time
import tracemalloc
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .dp import InfeasibleLabelsWarning, forward_denominator, loss_and_gradient, viterbi
from .scorer import init_scorer_params, score_lattice

__all__ = [
    "Timing",
    "BenchReport",
    "median_time",
    "linear_fit",
    "run_bench",
    "denominator_sv_sweep",
    "scoring_peak_memory",
    "memory_probe",
]


def median_time(fn: Callable[[], object], repeats: int = 5, warmup: int = 1) -> float:
    for _ in range(warmup):
        fn()
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def linear_fit(x: Sequence[float], y: Sequence[float]) -> dict:
    """Least-squares ``y = a x + b`` with R^2, plus the slope of ``log y`` on ``log x``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size < 2:
        return {"slope": float("nan"), "intercept": float("nan"), "r2": float("nan"), "loglog_slope": float("nan")}
    a, b = np.polyfit(x, y, 1)
    resid = y - (a * x + b)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    ok = (x > 0) & (y > 0)
    loglog = float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0]) if ok.sum() >= 2 else float("nan")
    return {"slope": float(a), "intercept": float(b), "r2": r2, "loglog_slope": loglog}


@dataclass
class Timing:
    T: int
    S: int
    V: int
    K: int
    loss_seconds: float
    viterbi_seconds: float


@dataclass
class BenchReport:
    timings: list[Timing] = field(default_factory=list)
    loss_fit: dict = field(default_factory=dict)
    viterbi_fit: dict = field(default_factory=dict)
    memory: dict = field(default_factory=dict)

    def format(self) -> str:
        lines = ["T\tS\tV\tK\tloss_fwd_bwd_ms\tviterbi_ms"]
        for r in self.timings:
            lines.append(f"{r.T}\t{r.S}\t{r.V}\t{r.K}\t{1e3 * r.loss_seconds:.3f}\t{1e3 * r.viterbi_seconds:.3f}")
        for name, fit in (("loss", self.loss_fit), ("viterbi", self.viterbi_fit)):
            if fit:
                lines.append(
                    f"# {name} vs T: slope {1e3 * fit['slope']:.4g} ms/step  R^2 {fit['r2']:.4f}"
                    f"  log-log slope {fit['loglog_slope']:.3f}"
                )
        if self.memory:
            m = self.memory
            lines.append(
                f"# scoring aux peak bytes: V={m['V']} {m['peak_V']}  V={2 * m['V']} {m['peak_2V']}"
                f"  ratio {m['ratio']:.3f}"
            )
        return "\n".join(lines) + "\n"


def run_bench(
    Ts: Sequence[int] = (64, 128, 256, 512, 1024),
    S: int = 8,
    V: int = 64,
    label_length: Optional[int] = 8,
    frames_per_label: int = 4,
    repeats: int = 5,
    seed: int = 0,
    memory: bool = True,
) -> BenchReport:
    """Median loss forward+backward and Viterbi time on random lattices.

    Each lattice gets a random label sequence of ``label_length`` words
    (capped at ``T``). With ``label_length=None`` it gets
    ``ceil(T / frames_per_label)`` words instead, which adds the
    ``O(T |L| S)`` numerator work to the sweep.
    """
    rng = np.random.default_rng(seed)
    report = BenchReport()
    for T in Ts:
        W = rng.standard_normal((T, S, V))
        K = -(-T // frames_per_label) if label_length is None else min(label_length, T)
        labels = rng.integers(0, V, size=max(K, 1))

        def loss():
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", InfeasibleLabelsWarning)
                loss_and_gradient(W, labels)

        report.timings.append(
            Timing(T, S, V, K, median_time(loss, repeats), median_time(lambda: viterbi(W), repeats))
        )
    if len(Ts) >= 2:
        x = [r.T for r in report.timings]
        report.loss_fit = linear_fit(x, [r.loss_seconds for r in report.timings])
        report.viterbi_fit = linear_fit(x, [r.viterbi_seconds for r in report.timings])
    if memory:
        report.memory = memory_probe(T=min(max(Ts), 256), S=S, V=V, seed=seed)
    return report


def denominator_sv_sweep(
    T: int = 256,
    sv: Sequence[tuple[int, int]] = ((8, 128), (8, 256), (16, 256), (16, 512), (32, 512)),
    repeats: int = 5,
    seed: int = 0,
) -> tuple[list[tuple[int, float]], dict]:
    """Forward-denominator time against ``S * V`` at fixed ``T``."""
    rng = np.random.default_rng(seed)
    rows = []
    for S, V in sv:
        W = rng.standard_normal((T, S, V))
        rows.append((S * V, median_time(lambda: forward_denominator(W), repeats)))
    return rows, linear_fit([r[0] for r in rows], [r[1] for r in rows])


def scoring_peak_memory(
    T: int, S: int, V: int, F: int = 32, D: int = 32, pooling: str = "concat", seed: int = 0, repeats: int = 3
) -> int:
    """Peak bytes allocated while scoring, minus the ``[T, S, V]`` output itself.

    Small Python-object allocations jitter by a few hundred bytes between
    calls, so the smallest of ``repeats`` traced calls is reported.
    """
    rng = np.random.default_rng(seed)
    H = rng.standard_normal((T, F))
    params = init_scorer_params(F, D, V, pooling, rng=rng)
    score_lattice(H, params, S)  # warm caches outside the trace
    peaks = []
    for _ in range(repeats):
        tracemalloc.start()
        try:
            tracemalloc.reset_peak()
            base = tracemalloc.get_traced_memory()[0]
            W = score_lattice(H, params, S)
            peak = tracemalloc.get_traced_memory()[1] - base
        finally:
            tracemalloc.stop()
        peaks.append(peak - (W.base.nbytes if W.base is not None else W.nbytes))
        del W
    return int(min(peaks))


def memory_probe(T: int = 256, S: int = 8, V: int = 64, seed: int = 0, **kw) -> dict:
    a = scoring_peak_memory(T, S, V, seed=seed, **kw)
    b = scoring_peak_memory(T, S, 2 * V, seed=seed, **kw)
    return {"T": T, "S": S, "V": V, "peak_V": a, "peak_2V": b, "ratio": b / a if a else float("nan")}
