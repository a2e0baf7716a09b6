import math
import warnings
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from segword.dp import (
    InfeasibleLabelsWarning,
    backward_denominator,
    backward_numerator,
    dp_tables,
    format_tables,
    forward_denominator,
    forward_numerator,
    logsumexp,
    loss_and_gradient,
    loss_gradient,
    marginal_log_loss,
    numerator_posteriors,
    posterior_check,
    segment_posteriors,
    viterbi,
)
from segword.lattice import label_map, mask_invalid, validate

GOLDEN = Path(__file__).parent / "golden"


@st.composite
def instances(draw, T_max=6, S_max=3, V_max=3):
    T = draw(st.integers(1, T_max))
    S = draw(st.integers(1, S_max))
    V = draw(st.integers(1, V_max))
    seed = draw(st.integers(0, 2**31))
    rng = np.random.default_rng(seed)
    W = rng.normal(scale=2.0, size=(T, S, V))
    K = draw(st.integers(-(-T // S), T))
    L = rng.integers(0, V, size=K).tolist()
    return W, L


def test_logsumexp_all_neg_inf():
    assert logsumexp(np.array([-np.inf, -np.inf])) == -np.inf
    out = logsumexp(np.array([[0.0, -np.inf], [-np.inf, -np.inf]]), axis=1)
    assert out[0] == 0.0 and out[1] == -np.inf


def test_logsumexp_large_values():
    assert np.isclose(logsumexp(np.array([1000.0, 1000.0])), 1000 + math.log(2))


class TestExamples:
    def test_forward_denominator(self):
        assert forward_denominator(np.zeros((1, 1, 1)))[-1] == 0.0
        assert np.isclose(forward_denominator(np.zeros((3, 2, 2)))[-1], math.log(16), rtol=0, atol=1e-12)

    def test_forward_numerator(self):
        assert forward_numerator(np.zeros((2, 2, 2)), [0, 1])[2, 2] == 0.0
        assert np.isclose(forward_numerator(np.zeros((3, 2, 2)), [0, 1])[3, 2], math.log(2))

    def test_numerator_too_long(self):
        with pytest.warns(InfeasibleLabelsWarning):
            a = forward_numerator(np.zeros((2, 2, 2)), [0, 1, 0])
        assert a[2, 3] == -np.inf

    def test_loss(self):
        assert marginal_log_loss(np.array([[[3.7]]]), [0]) == 0.0
        assert np.isclose(marginal_log_loss(np.zeros((3, 2, 2)), [0, 1]), math.log(8))
        assert np.isclose(math.log(8), 2.0794, atol=1e-4)

    def test_backward(self):
        assert backward_denominator(np.zeros((1, 1, 1)))[0] == 0.0

    def test_gradient_trivial(self):
        assert np.all(loss_gradient(np.array([[[1.3]]]), [0]) == 0.0)

    def test_viterbi_single_choice(self):
        pi, score = viterbi(np.array([[[-1.0, 2.0, 0.0]]]))
        assert pi.segments == ((0, 1, 1),) and score == 2.0

    def test_viterbi_zero_lattice_takes_one_long_segment(self):
        for T in range(1, 6):
            pi, score = viterbi(np.zeros((T, T + 1, 3)))
            assert pi.segments == ((0, T, 0),) and score == 0.0

    def test_viterbi_empty(self):
        pi, score = viterbi(np.zeros((0, 2, 2)))
        assert len(pi) == 0 and score == 0.0

    def test_posterior_check_zero(self):
        assert posterior_check(np.zeros((5, 3, 2)), [0, 1]).max_deviation < 1e-12


@settings(max_examples=60, deadline=None)
@given(instances())
def test_forward_matches_enumeration(inst):
    W, L = inst
    assert np.isclose(forward_denominator(W)[-1], oracles.brute_log_partition(W), rtol=1e-10, atol=0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", InfeasibleLabelsWarning)
        num = forward_numerator(W, L)[-1, -1]
    assert np.isclose(num, oracles.brute_log_numerator(W, L), rtol=1e-10, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(instances())
def test_loss_is_minus_log_probability(inst):
    W, L = inst
    loss = marginal_log_loss(W, L)
    assert np.isclose(loss, oracles.brute_loss(W, L), rtol=1e-8, atol=1e-12)
    assert loss >= -1e-12


@settings(max_examples=60, deadline=None)
@given(instances())
def test_forward_backward_agree(inst):
    W, L = inst
    assert np.isclose(backward_denominator(W)[0], forward_denominator(W)[-1], rtol=1e-10, atol=1e-12)
    assert np.isclose(backward_numerator(W, L)[0, 0], forward_numerator(W, L)[-1, -1], rtol=1e-10, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(instances())
def test_table_invariants(inst):
    W, L = inst
    tab = dp_tables(W, L)
    T, S, _ = W.shape
    K = len(L)
    assert tab.log_alpha_d[0] == 0 and tab.log_beta_d[T] == 0
    assert tab.log_alpha_n[0, 0] == 0 and tab.log_beta_n[T, K] == 0
    t = np.arange(T + 1)[:, None]
    y = np.arange(K + 1)[None, :]
    assert np.all(np.isneginf(tab.log_alpha_n[(t < y) | (t > y * S)]))
    assert np.all(tab.log_alpha_d + tab.log_beta_d <= tab.log_partition + 1e-9)
    assert tab.log_numerator <= tab.log_partition + 1e-12


def test_numerator_equals_denominator_when_single_label_path():
    # V=1 and S=1: one path, and it carries the labels
    W = np.random.default_rng(0).normal(size=(4, 1, 1))
    tab = dp_tables(W, [0, 0, 0, 0])
    assert np.isclose(tab.log_numerator, tab.log_partition)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(1)
    for _ in range(5):
        W = rng.normal(size=(4, 2, 3))
        L = rng.integers(0, 3, size=int(rng.integers(2, 5))).tolist()
        g = loss_gradient(W, L)
        Wm = mask_invalid(W)
        fd = oracles.central_diff(lambda x: marginal_log_loss(x, L), W)
        valid = np.isfinite(Wm)
        assert oracles.rel_err(g[valid], fd[valid]) <= 1e-6
        assert np.all(g[~valid] == 0)


@settings(max_examples=40, deadline=None)
@given(instances())
def test_posteriors_match_enumeration(inst):
    W, L = inst
    post = segment_posteriors(W)
    assert np.allclose(post, oracles.brute_posteriors(W), atol=1e-10)
    paths = oracles.all_paths(*W.shape)
    sc = oracles.path_scores(W, paths)
    p = np.exp(sc - oracles.lse(sc))
    expected_count = float(p @ np.array([len(q) for q in paths]))
    assert abs(post.sum() - expected_count) <= 1e-8
    assert abs(numerator_posteriors(W, L).sum() - len(L)) <= 1e-6


@settings(max_examples=40, deadline=None)
@given(instances())
def test_gradient_bounds(inst):
    W, L = inst
    g = loss_gradient(W, L)
    assert np.all(g >= -1 - 1e-12) and np.all(g <= 1 + 1e-12)
    assert np.all(g[np.isneginf(mask_invalid(W))] == 0)


def test_infeasible_labels_flagged():
    W = np.zeros((3, 1, 2))
    with pytest.warns(InfeasibleLabelsWarning):
        res = loss_and_gradient(W, [0, 1])
    assert not res.feasible and res.loss == np.inf and not res.grad.any()
    with pytest.warns(InfeasibleLabelsWarning):
        assert marginal_log_loss(W, [0, 1, 0, 1]) == np.inf


def test_label_outside_vocabulary():
    with pytest.raises(ValueError):
        marginal_log_loss(np.zeros((2, 2, 2)), [0, 2])


@settings(max_examples=60, deadline=None)
@given(instances(T_max=7, S_max=4, V_max=3))
def test_viterbi_matches_brute_force(inst):
    W, _ = inst
    pi, score = viterbi(W)
    best, best_score = oracles.brute_viterbi(W)
    assert pi.segments == best
    assert np.isclose(score, best_score, rtol=1e-12, atol=1e-12)
    assert validate(pi, W.shape[0], W.shape[2]) is None


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(1, 4), st.integers(1, 3), st.integers(0, 2**31))
def test_viterbi_tie_rule_on_integer_lattices(T, S, V, seed):
    # small integers make many exact ties
    W = np.random.default_rng(seed).integers(-1, 2, size=(T, S, V)).astype(float)
    pi, _ = viterbi(W)
    assert pi.segments == oracles.brute_viterbi(W)[0]


def test_viterbi_prefers_longer_then_lower_label():
    W = np.zeros((2, 2, 2))
    assert viterbi(W)[0].segments == ((0, 2, 0),)
    W[0, 1, :] = -1.0
    assert viterbi(W)[0].segments == ((0, 1, 0), (1, 1, 0))


@settings(max_examples=40, deadline=None)
@given(instances(), st.floats(0.1, 50.0))
def test_viterbi_invariant_to_lowering_off_path_cell(inst, c):
    W, _ = inst
    pi, _ = viterbi(W)
    on_path = set((t, s - 1, v) for t, s, v in pi.segments)
    T, S, V = W.shape
    cells = [(t, s, v) for t in range(T) for s in range(S) for v in range(V) if t + s < T and (t, s, v) not in on_path]
    if not cells:
        return
    W2 = W.copy()
    W2[cells[len(cells) // 2]] -= c
    assert viterbi(W2)[0] == pi


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 7), st.integers(1, 3), st.floats(-20, 20))
def test_viterbi_constant_shift_with_equal_length_paths(T, V, c):
    W = np.random.default_rng(T * 7 + V).normal(size=(T, 1, V))
    pi, score = viterbi(W)
    pi2, score2 = viterbi(W + c)
    assert pi2 == pi and np.isclose(score2, score + c * T)


def reverse_time(W):
    T, S, V = W.shape
    Wm = mask_invalid(W)
    R = np.full_like(Wm, -np.inf)
    for t in range(T):
        for s in range(1, S + 1):
            if t + s <= T:
                R[T - t - s, s - 1] = Wm[t, s - 1]
    return R


@settings(max_examples=40, deadline=None)
@given(instances())
def test_time_reversal_swaps_alpha_and_beta(inst):
    W, L = inst
    T, K = W.shape[0], len(L)
    R = reverse_time(W)
    assert np.allclose(forward_denominator(R), backward_denominator(W)[::-1], atol=1e-10)
    a = forward_numerator(R, L[::-1])
    b = backward_numerator(W, L)[::-1, ::-1]
    both = np.isfinite(a) | np.isfinite(b)
    assert np.array_equal(np.isfinite(a), np.isfinite(b))
    assert np.allclose(a[both], b[both], atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(instances(T_max=10, S_max=4, V_max=4))
def test_posterior_check_random(inst):
    W, L = inst
    assert posterior_check(W, L).max_deviation < 1e-8


def test_posterior_check_large_magnitudes():
    rng = np.random.default_rng(3)
    for _ in range(10):
        W = rng.choice([-80.0, 80.0], size=(9, 4, 3)) + rng.normal(size=(9, 4, 3))
        L = rng.integers(0, 3, size=4).tolist()
        rep = posterior_check(W, L)
        assert rep.max_deviation < 1e-6
        assert np.isfinite(marginal_log_loss(W, L))


def test_single_precision_input_accumulates_in_double():
    W = np.random.default_rng(4).normal(size=(12, 4, 5)).astype(np.float32)
    L = [1, 2, 3, 4]
    a = forward_denominator(W)
    assert a.dtype == np.float64
    assert np.isclose(marginal_log_loss(W, L), marginal_log_loss(W.astype(np.float64), L), rtol=1e-12)


def test_viterbi_decodes_label_map_consistent():
    W = np.random.default_rng(5).normal(size=(8, 3, 4))
    pi, score = viterbi(W)
    assert np.isclose(pi.score(W), score)
    assert len(label_map(pi)) == len(pi)


def _read_tables(text):
    tables, name = {}, None
    for line in text.splitlines():
        if line.startswith("#"):
            _, name, *shape = line.split()
            tables[name] = []
        else:
            tables[name].append([float(x) for x in line.split()[1:]])
    return {k: np.array(v) for k, v in tables.items()}


@pytest.mark.parametrize("name", sorted(p.name[: -len(".tables")] for p in GOLDEN.glob("*.tables")))
def test_golden_tables(name):
    W = np.load(GOLDEN / f"{name}.W.npy")
    L = [int(x) for x in (GOLDEN / f"{name}.labels").read_text().split()]
    golden = _read_tables((GOLDEN / f"{name}.tables").read_text())
    current = _read_tables(format_tables(dp_tables(W, L)))
    for key, arr in golden.items():
        assert np.array_equal(np.isneginf(arr), np.isneginf(current[key])), key
        fin = np.isfinite(arr)
        assert np.allclose(arr[fin], current[key][fin], rtol=1e-10, atol=1e-10), key
    # the stored tables themselves agree with enumeration
    assert np.isclose(golden["log_alpha_d"][-1, 0], oracles.brute_log_partition(W), rtol=1e-10)
    assert np.isclose(golden["log_alpha_n"][-1, -1], oracles.brute_log_numerator(W, L), rtol=1e-10)
