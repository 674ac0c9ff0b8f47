import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from codedspline import _dense, codec, spline_core as sc
from codedspline.errors import InvalidAbscissae, InvalidExponent, InvalidLambda, ResponseOutOfRange, TooFewPoints


def task_for(x, N=32, M=10.0):
    return codec.CodedTask.create(np.asarray(x, float), N, M)


def test_defaults():
    np.testing.assert_allclose(codec.default_alpha(4), [0.2, 0.4, 0.6, 0.8])
    np.testing.assert_allclose(codec.default_beta(4), [0.25, 0.5, 0.75, 1.0])


def test_task_shapes():
    t = task_for(np.zeros((5, 3)), N=20)
    assert (t.K, t.N, t.d) == (5, 20, 3)


@pytest.mark.parametrize(
    "kwargs, exc",
    [
        (dict(inputs=np.zeros(2), N=8), TooFewPoints),
        (dict(inputs=np.zeros(6), N=5), TooFewPoints),
        (dict(inputs=np.zeros(3), N=8, alpha=[0.2, 0.2, 0.6]), InvalidAbscissae),
        (dict(inputs=np.zeros(3), N=8, alpha=[0.2, 0.4]), InvalidAbscissae),
        (dict(inputs=np.zeros(3), N=8, alpha=[0.2, 0.4, 1.5]), InvalidAbscissae),
    ],
)
def test_task_validation(kwargs, exc):
    with pytest.raises(exc):
        codec.CodedTask.create(M=1.0, **kwargs)


def test_linear_encoder():
    alpha = codec.default_alpha(4)
    enc = codec.design_encoder(task_for(2 * alpha + 1))
    x = np.linspace(alpha[0], alpha[-1], 50)
    np.testing.assert_allclose(enc(x)[:, 0], 2 * x + 1, atol=1e-12)
    assert codec.encode(enc, [0.5])[0, 0] == pytest.approx(2.0)


def test_constant_encoder():
    enc = codec.design_encoder(task_for(np.full((5, 2), [1.5, -0.5])))
    np.testing.assert_allclose(codec.encode(enc, codec.default_beta(16)), np.tile([1.5, -0.5], (16, 1)), atol=1e-12)


def test_encoder_interpolates():
    x = np.random.default_rng(0).normal(size=(7, 2))
    t = task_for(x)
    enc = codec.design_encoder(t)
    assert np.max(np.abs(enc(t.alpha) - x)) <= 1e-9


def test_smoothing_encoder_matches_dense():
    rng = np.random.default_rng(1)
    x = rng.normal(size=5)
    t = task_for(x)
    enc = codec.design_encoder(t, 1e-3)
    c, d = _dense.dense_coefficients(t.alpha, x, 1e-3)
    grid = np.linspace(0, 1, 33)
    np.testing.assert_allclose(enc(grid)[:, 0], _dense.dense_evaluate(t.alpha, c, d, grid), atol=1e-8)


def test_encode_matches_component_evaluate():
    x = np.random.default_rng(2).normal(size=(6, 3))
    enc = codec.design_encoder(task_for(x))
    beta = codec.default_beta(40)
    coded = codec.encode(enc, beta)
    for j, comp in enumerate(enc.components):
        np.testing.assert_array_equal(coded[:, j], sc.evaluate(comp, beta))


def test_negative_lambda_e():
    with pytest.raises(InvalidLambda):
        codec.design_encoder(task_for(np.zeros(4)), -1e-3)


@pytest.mark.parametrize(
    "N, a, J, C, expected",
    [
        (100, 0.5, 1.0, 1.0, 10**-1.6),
        (2, 0.0, 1e6, 1.0, 1.0),
        (10, 0.0, 1e-12, 1.0, 1e-4 * (1 + 1e-9)),
        (1024, 0.0, 1.0, 1.0, 1024**-1.6),
    ],
)
def test_choose_lambda_d(N, a, J, C, expected):
    assert codec.choose_lambda_d(N, a, J, C) == pytest.approx(expected, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 10**6), st.floats(0, 0.999), st.floats(1e-8, 1e8), st.floats(1e-3, 1e3))
def test_lambda_d_stays_in_bracket(N, a, J, C):
    lam = codec.choose_lambda_d(N, a, J, C)
    assert C * float(N) ** -4 < lam <= 1.0 or C * float(N) ** -4 >= 1.0


@pytest.mark.parametrize("a", [-0.1, 1.0, 1.5])
def test_choose_lambda_d_bad_exponent(a):
    with pytest.raises(InvalidExponent):
        codec.choose_lambda_d(100, a)


def test_decode_constant():
    beta = codec.default_beta(20)
    out = codec.decode(beta, np.tile([0.3, -2.0], (20, 1)), 0.05, codec.default_alpha(4))
    np.testing.assert_allclose(out, np.tile([0.3, -2.0], (4, 1)), atol=1e-12)


def test_identity_pipeline_without_adversary():
    alpha = codec.default_alpha(5)
    x = 0.5 * alpha + 0.1
    t = task_for(x, N=64)
    enc = codec.design_encoder(t)
    est = codec.decode(t.beta, codec.encode(enc, t.beta), 1e-8, t.alpha)
    assert np.max(np.abs(est[:, 0] - x)) <= 1e-4


def test_decode_matches_dense():
    rng = np.random.default_rng(4)
    beta = codec.default_beta(16)
    y = rng.uniform(-1, 1, 16)
    alpha = np.array([0.3, 0.7])
    c, d = _dense.dense_coefficients(beta, y, 0.01)
    np.testing.assert_allclose(codec.decode(beta, y, 0.01, alpha)[:, 0], _dense.dense_evaluate(beta, c, d, alpha), atol=1e-8)


def test_decode_response_policies():
    beta = codec.default_beta(8)
    y = np.zeros(8)
    y[3] = 5.0
    clamped = codec.decode(beta, y, 0.1, [0.5], M=1.0)
    y_clip = np.minimum(y, 1.0)
    np.testing.assert_allclose(clamped, codec.decode(beta, y_clip, 0.1, [0.5]))
    with pytest.raises(ResponseOutOfRange):
        codec.decode(beta, y, 0.1, [0.5], M=1.0, policy="reject")


@pytest.mark.parametrize("lam", [0.0, 1.5])
def test_decode_lambda_range(lam):
    with pytest.raises(InvalidLambda):
        codec.decode(codec.default_beta(8), np.zeros(8), lam, [0.5])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_decode_is_linear(seed, a, b):
    rng = np.random.default_rng(seed)
    beta = codec.default_beta(24)
    y1, y2 = rng.normal(size=(2, 24, 2))
    alpha = codec.default_alpha(5)
    lhs = codec.decode(beta, a * y1 + b * y2, 1e-3, alpha)
    rhs = a * codec.decode(beta, y1, 1e-3, alpha) + b * codec.decode(beta, y2, 1e-3, alpha)
    np.testing.assert_allclose(lhs, rhs, atol=1e-8)


def test_component_permutation():
    rng = np.random.default_rng(5)
    beta = codec.default_beta(30)
    y = rng.normal(size=(30, 3))
    perm = [2, 0, 1]
    alpha = codec.default_alpha(4)
    np.testing.assert_array_equal(codec.decode(beta, y[:, perm], 0.01, alpha), codec.decode(beta, y, 0.01, alpha)[:, perm])


def test_vector_spline_requires_shared_knots():
    a = sc.fit(sc.RegressionData([0.1, 0.5, 0.9], [0, 1, 0]), 0.1)
    b = sc.fit(sc.RegressionData([0.2, 0.5, 0.9], [0, 1, 0]), 0.1)
    with pytest.raises(ValueError):
        codec.VectorSpline((a, b))
