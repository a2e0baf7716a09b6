import numpy as np
import pytest

import oracles
from segword.encoder import encode, encode_backward, encode_padded, encode_padded_backward, init_encoder, output_length


@pytest.mark.parametrize("T,r", [(1, 1), (5, 1), (5, 2), (8, 4), (9, 4), (3, 4)])
def test_output_length(T, r):
    enc = init_encoder(3, 4, stride=r, rng=0)
    H, _ = encode(np.ones((T, 3)), enc)
    assert H.shape == (output_length(T, r), 4) == (-(-T // r), 4)


def test_average_pooling_values():
    enc = init_encoder(2, 3, context=0, stride=2, rng=1)
    X = np.random.default_rng(0).normal(size=(5, 2))
    full, _ = encode(X, enc)
    frames = np.tanh(X @ enc.W.T + enc.b)
    assert np.allclose(full[0], frames[:2].mean(axis=0))
    assert np.allclose(full[2], frames[4])


def test_eval_mode_deterministic_and_dropout_only_in_training():
    enc = init_encoder(3, 6, dropout=0.5, rng=0)
    X = np.random.default_rng(1).normal(size=(10, 3))
    a, _ = encode(X, enc)
    b, _ = encode(X, enc)
    assert np.array_equal(a, b)
    c, _ = encode(X, enc, train=True, rng=2)
    assert not np.array_equal(a, c)
    assert np.isclose(c.mean(), a.mean(), atol=0.3)


def test_input_dim_checked():
    with pytest.raises(ValueError):
        encode(np.ones((4, 2)), init_encoder(3, 4, rng=0))
    with pytest.raises(ValueError):
        init_encoder(3, 4, stride=0)


@pytest.mark.parametrize("context,stride", [(0, 1), (1, 1), (2, 3)])
def test_backward_matches_finite_differences(context, stride):
    rng = np.random.default_rng(context * 10 + stride)
    enc = init_encoder(3, 4, context=context, stride=stride, rng=rng)
    enc = enc.with_arrays(b=rng.normal(scale=0.2, size=4))
    X = rng.normal(size=(7, 3))
    H, cache = encode(X, enc)
    R = rng.normal(size=H.shape)
    dX, grads = encode_backward(cache, R)
    assert oracles.rel_err(dX, oracles.central_diff(lambda x: (encode(x, enc)[0] * R).sum(), X)) < 1e-7
    for name in ("W", "b"):
        fd = oracles.central_diff(lambda x: (encode(X, enc.with_arrays(**{name: x}))[0] * R).sum(), getattr(enc, name))
        assert oracles.rel_err(grads[name], fd) < 1e-7


def test_padded_batch_equals_individual_encoding():
    rng = np.random.default_rng(3)
    enc = init_encoder(2, 3, context=1, stride=2, rng=rng)
    segs = [rng.normal(size=(n, 2)) for n in (1, 4, 5)]
    X = np.zeros((3, 5, 2))
    for k, s in enumerate(segs):
        X[k, : len(s)] = s
    H, hl, cache = encode_padded(X, np.array([1, 4, 5]), enc)
    for k, s in enumerate(segs):
        ref, _ = encode(s, enc)
        assert hl[k] == len(ref)
        assert np.allclose(H[k, : hl[k]], ref, atol=1e-14)
        assert not H[k, hl[k] :].any()
    R = rng.normal(size=H.shape)
    grads = encode_padded_backward(cache, R)
    fd = oracles.central_diff(lambda w: (encode_padded(X, np.array([1, 4, 5]), enc.with_arrays(W=w))[0] * R).sum(), enc.W)
    assert oracles.rel_err(grads["W"], fd) < 1e-7
