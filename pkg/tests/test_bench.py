import math

import numpy as np
import pytest

from segword.bench import linear_fit, median_time, memory_probe, run_bench, scoring_peak_memory


def test_linear_fit_exact_line():
    fit = linear_fit([1, 2, 4, 8], [3, 5, 9, 17])
    assert fit["slope"] == pytest.approx(2.0)
    assert fit["intercept"] == pytest.approx(1.0)
    assert fit["r2"] == pytest.approx(1.0)


def test_linear_fit_power_law_slope():
    x = np.array([10.0, 20, 40, 80])
    assert linear_fit(x, 3 * x**2)["loglog_slope"] == pytest.approx(2.0)


def test_linear_fit_degenerate():
    assert math.isnan(linear_fit([1], [1])["r2"])
    assert linear_fit([1, 2, 3], [5, 5, 5])["r2"] == 1.0


def test_linear_fit_noise_lowers_r2():
    rng = np.random.default_rng(0)
    x = np.arange(20.0)
    assert linear_fit(x, rng.standard_normal(20))["r2"] < 0.5


def test_median_time_calls():
    calls = []
    t = median_time(lambda: calls.append(1), repeats=3, warmup=2)
    assert len(calls) == 5 and t >= 0


def test_run_bench_small():
    rep = run_bench([8, 16, 32], S=2, V=3, repeats=1, memory=False)
    assert [r.T for r in rep.timings] == [8, 16, 32]
    assert all(r.loss_seconds > 0 and r.viterbi_seconds > 0 for r in rep.timings)
    assert "r2" in rep.loss_fit and "R^2" in rep.format()


def test_run_bench_label_length_caps():
    rep = run_bench([3], S=2, V=2, label_length=8, repeats=1, memory=False)
    assert rep.timings[0].K == 3 and not rep.loss_fit
    rep = run_bench([10], S=2, V=2, label_length=None, frames_per_label=4, repeats=1, memory=False)
    assert rep.timings[0].K == 3


def test_scoring_memory_independent_of_vocab():
    probe = memory_probe(T=64, S=4, V=16)
    assert probe["peak_V"] > 0
    assert probe["ratio"] <= 1.0


def test_scoring_memory_grows_with_T():
    assert scoring_peak_memory(128, 4, 8) > scoring_peak_memory(32, 4, 8)
