import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from sqgauss import gaussian
from sqgauss.errors import InvalidConfigError, InvalidInputError
from sqgauss.gaussian import AffineMap
from sqgauss.head import (HeadConfig, HeadModel, backward, forward,
                          forward_cached, init_head, predict, predict_batch,
                          predict_moments, predict_points, relu)
from sqgauss.losses import batch_loss_and_grad
from sqgauss.gradcheck import check_gradient


def zero_final_layer(model):
    model.weights[-1][:] = 0.0
    model.biases[-1][:] = 0.0
    return model


@pytest.mark.parametrize('variant, width', [('full', 20), ('independent', 10),
                                            ('mse', 5)])
def test_output_dim(variant, width):
    config = HeadConfig(input_dim=3, variant=variant)
    assert config.output_dim == width
    assert config.layer_dims == (3, 256, 64, width)


def test_init_shapes():
    model = init_head(HeadConfig(input_dim=3, hidden_dims=[4], variant='mse'))
    assert [w.shape for w in model.weights] == [(4, 3), (5, 4)]
    assert [b.shape for b in model.biases] == [(4, ), (5, )]
    assert_array_equal(model.biases[0], 0.0)


def test_init_glorot_bounds():
    model = init_head(HeadConfig(input_dim=30, hidden_dims=(20, ), seed=4))
    assert np.max(np.abs(model.weights[0])) <= np.sqrt(6.0 / 50)


def test_init_deterministic():
    config = HeadConfig(input_dim=7, hidden_dims=(5, 3), seed=42)
    assert init_head(config) == init_head(config)
    other = init_head(HeadConfig(input_dim=7, hidden_dims=(5, 3), seed=43))
    assert init_head(config) != other


@pytest.mark.parametrize('kwargs', [
    dict(input_dim=0),
    dict(input_dim=3, hidden_dims=(4, 0)),
    dict(input_dim=3, hidden_dims=()),
    dict(input_dim=3, variant='gaussian'),
    dict(input_dim=3, dropout_rate=1.0),
    dict(input_dim=3, seed=-1),
])
def test_invalid_config(kwargs):
    with pytest.raises(InvalidConfigError):
        HeadConfig(**kwargs)


def test_relu():
    assert_array_equal(relu(np.array([-1.0, 2.0])), [0.0, 2.0])


def test_forward_identity_layers():
    config = HeadConfig(input_dim=5, hidden_dims=(5, ), variant='mse')
    model = HeadModel(config, [np.eye(5), np.eye(5)], [np.zeros(5)] * 2)
    x = np.array([0.5, 1.0, 2.0, 0.0, 3.5])
    assert_array_equal(forward(model, x), x)


def test_forward_hand_example():
    config = HeadConfig(input_dim=2, hidden_dims=(2, ), variant='mse',
                        n_dims=1)
    model = HeadModel(config, [[[1.0, 0.0], [0.0, -1.0]], [[1.0, 1.0]]],
                      [[0.0, 0.0], [0.5]])
    raw, cache = forward_cached(model, [1.0, 1.0])
    assert_array_equal(cache[-1], [[1.0, 0.0]])
    assert_array_equal(raw, [[1.5]])
    assert_array_equal(forward(model, [1.0, 1.0]), [1.5])


def test_forward_dimension_mismatch(small_model):
    with pytest.raises(InvalidInputError):
        forward(small_model, np.zeros(5))


def test_forward_final_layer_homogeneous(rng, small_model):
    x = rng.normal(size=(4, 6))
    scaled = small_model.copy()
    scaled.weights[-1] *= 2.0
    scaled.biases[-1] *= 2.0
    assert_array_equal(forward(scaled, x), 2.0 * forward(small_model, x))


def test_dropout_zero_training_matches_eval(rng, small_model):
    x = rng.normal(size=(4, 6))
    assert_array_equal(forward(small_model, x, training=True, dropout_seed=9),
                       forward(small_model, x))


def test_dropout_seeded(rng):
    model = init_head(HeadConfig(input_dim=6, hidden_dims=(16, ),
                                 dropout_rate=0.5))
    x = rng.normal(size=(3, 6))
    a = forward(model, x, training=True, dropout_seed=1)
    assert_array_equal(a, forward(model, x, training=True, dropout_seed=1))
    assert not np.array_equal(a, forward(model, x))


@pytest.mark.parametrize('seed', [None, -1, 0.5])
def test_dropout_requires_seed(rng, seed):
    model = init_head(HeadConfig(input_dim=6, hidden_dims=(16, ),
                                 dropout_rate=0.5))
    x = rng.normal(size=(3, 6))
    with pytest.raises(InvalidInputError):
        forward(model, x, training=True, dropout_seed=seed)
    forward(model, x, dropout_seed=seed)


def test_model_validation():
    config = HeadConfig(input_dim=2, hidden_dims=(2, ), variant='mse')
    with pytest.raises(InvalidInputError):
        HeadModel(config, [np.eye(2)], [np.zeros(2)])
    with pytest.raises(InvalidInputError):
        HeadModel(config, [np.eye(2), np.zeros((5, 3))],
                  [np.zeros(2), np.zeros(5)])
    with pytest.raises(InvalidInputError):
        HeadModel(config, [np.full((2, 2), np.nan), np.zeros((5, 2))],
                  [np.zeros(2), np.zeros(5)])


def test_backward_finite_differences(rng, variant):
    config = HeadConfig(input_dim=3, hidden_dims=(4, 3), variant=variant,
                        dropout_rate=0.25, seed=2)
    model = init_head(config)
    x = rng.normal(size=(5, 3))
    y = rng.uniform(1, 5, size=(5, 5))
    affine = AffineMap.rating_scale()
    key = 'W0'
    shape = model.params[key].shape

    def loss(flat):
        trial = model.copy()
        trial.params[key][:] = flat.reshape(shape)
        raw, _ = forward_cached(trial, x, training=True, dropout_seed=3)
        return float(np.sum(batch_loss_and_grad(variant, raw, y, affine)[0]))

    def grad(flat):
        trial = model.copy()
        trial.params[key][:] = flat.reshape(shape)
        raw, cache = forward_cached(trial, x, training=True, dropout_seed=3)
        _, d_raw = batch_loss_and_grad(variant, raw, y, affine)
        return backward(trial, cache, d_raw)[key].ravel()

    assert check_gradient(loss, grad, model.params[key].ravel()) < 1e-5


def test_backward_keys(small_model, rng):
    raw, cache = forward_cached(small_model, rng.normal(size=(2, 6)))
    grads = backward(small_model, cache, np.ones_like(raw))
    assert set(grads) == set(small_model.params)
    for key, value in grads.items():
        assert value.shape == small_model.params[key].shape


def test_params_share_memory(small_model):
    small_model.params['b0'][0] = 7.0
    assert small_model.biases[0][0] == 7.0


def test_predict_zero_final_layer(rng):
    model = zero_final_layer(init_head(HeadConfig(input_dim=6, seed=1)))
    pred = predict(model, rng.normal(size=6), AffineMap.rating_scale())
    assert_array_equal(pred.point, np.full(5, 3.0))
    assert_allclose(pred.gaussian.cov, 4 * np.log(2.0) ** 2 * np.eye(5),
                    rtol=1e-12, atol=1e-12)
    assert_allclose(pred.gaussian.cov[0, 0], 1.921812, atol=1e-6)


def test_predict_independent_has_zero_correlations(rng):
    model = init_head(HeadConfig(input_dim=6, hidden_dims=(8, ),
                                 variant='independent'))
    for x in rng.normal(size=(20, 6)):
        cov = predict(model, x).gaussian.cov
        assert_array_equal(cov[~np.eye(5, dtype=bool)], 0.0)


def test_predict_mse_placeholder(rng):
    model = init_head(HeadConfig(input_dim=6, hidden_dims=(8, ),
                                 variant='mse'))
    pred = predict(model, rng.normal(size=6))
    assert not pred.probabilistic
    assert_array_equal(pred.gaussian.cov, np.eye(5))


def test_point_equals_mean(rng, small_model):
    for pred in predict_batch(small_model, rng.normal(size=(10, 6))):
        assert pred.point is pred.gaussian.mean


def test_predict_always_spd(rng):
    for k in range(200):
        config = HeadConfig(input_dim=4, hidden_dims=(6, ), seed=k)
        model = init_head(config)
        for w in model.weights:
            w *= rng.uniform(0.5, 2.0)
        for x in rng.normal(size=(5, 4)):
            g = predict(model, x).gaussian
            gaussian.check_factor(g.chol, g.cov)


def test_predict_on_ill_conditioned_outputs(rng):
    # zero weights: the raw output is the final bias
    model = zero_final_layer(init_head(HeadConfig(input_dim=3,
                                                  hidden_dims=(4, ))))
    for raw in rng.normal(scale=3.0, size=(1000, 20)):
        model.biases[-1][:] = raw
        g = predict(model, np.ones(3)).gaussian
        assert_allclose(g.mean, 2.0 * raw[:5] + 3.0)
        assert np.all(np.diag(g.chol) >= 2.0 * gaussian.DIAGONAL_FLOOR)


def test_predict_moments_match_single(rng, small_model):
    x = rng.normal(size=(6, 6))
    means, covs = predict_moments(small_model, x)
    assert_array_equal(means, predict_points(small_model, x))
    for k, pred in enumerate(predict_batch(small_model, x)):
        assert_allclose(means[k], pred.point, rtol=1e-12)
        assert_allclose(covs[k], pred.gaussian.cov, rtol=1e-12, atol=1e-14)


def test_predict_rejects_matrix(small_model):
    with pytest.raises(InvalidInputError):
        predict(small_model, np.zeros((2, 6)))
