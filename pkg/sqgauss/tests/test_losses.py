import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from sqgauss import gaussian, losses
from sqgauss.errors import InvalidInputError, NumericFailureError
from sqgauss.gaussian import AffineMap, GaussianParams
from sqgauss.gradcheck import check_gradient

from .utils import random_spd


def full_label_loss(raw, y, affine):
    n = affine.dim
    latent = gaussian.gaussian_from_raw(raw[:n], raw[n:])
    return losses.gnll_loss(gaussian.affine_transform(latent, affine), y)


def test_gnll_examples():
    y = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    assert losses.gnll_loss(GaussianParams(y, np.eye(5)), y) == 0.0
    assert_allclose(losses.gnll_loss(GaussianParams([1.0], [[1.0]]), [2.0]),
                    0.5, rtol=1e-15)
    g = GaussianParams([0.0, 0.0], np.diag([1.0, 4.0]))
    assert_allclose(losses.gnll_loss(g, [1.0, 2.0]), 1.693147, atol=1e-6)


def test_gnll_dimension_mismatch():
    with pytest.raises(InvalidInputError):
        losses.gnll_loss(GaussianParams(np.zeros(2), np.eye(2)), np.zeros(3))


def test_gnll_excludes_normalizer(rng):
    g = GaussianParams(rng.normal(size=5), random_spd(rng, 5))
    y = rng.normal(size=5)
    assert_allclose(-gaussian.log_density(g, y),
                    losses.gnll_loss(g, y) + 2.5 * gaussian.LOG_2PI,
                    rtol=1e-12)


def test_gnll_permutation_invariant(rng):
    g = GaussianParams(rng.normal(size=5), random_spd(rng, 5))
    y = rng.normal(size=5)
    perm = rng.permutation(5)
    permuted = GaussianParams(g.mean[perm], g.cov[np.ix_(perm, perm)])
    assert_allclose(losses.gnll_loss(permuted, y[perm]),
                    losses.gnll_loss(g, y), rtol=1e-12)


def test_gnll_translation_consistent(rng):
    g = GaussianParams(rng.normal(size=5), random_spd(rng, 5))
    y = rng.normal(size=5)
    c = rng.normal(size=5)
    shifted = GaussianParams(g.mean + c, g.cov)
    assert_allclose(losses.gnll_loss(shifted, y + c), losses.gnll_loss(g, y),
                    rtol=1e-12)


def test_gnll_minimized_at_label(rng):
    g = GaussianParams(rng.normal(size=5), random_spd(rng, 5))
    assert_array_equal(losses.gnll_grad_mean(g, g.mean), np.zeros(5))


def test_gnll_identity_proportional_to_mse(rng):
    for _ in range(20):
        mean = rng.normal(size=5)
        y = rng.uniform(1, 5, size=5)
        gnll = losses.gnll_grad_mean(GaussianParams(mean, np.eye(5)), y)
        assert_allclose(gnll, 2.5 * losses.mse_grad(mean, y), rtol=1e-12,
                        atol=1e-12)


def test_mse_examples():
    assert losses.mse_loss([3.0, 3.0], [3.0, 3.0]) == 0.0
    assert losses.mse_loss([3.0, 3.0], [1.0, 5.0]) == 4.0
    assert_array_equal(losses.mse_grad([3.0, 3.0], [1.0, 5.0]), [2.0, -2.0])
    with pytest.raises(InvalidInputError):
        losses.mse_loss([3.0], [1.0, 5.0])


def test_grad_raw_zero_residual(rng):
    affine = AffineMap.rating_scale()
    raw = rng.normal(size=20)
    y = affine.apply(raw[:5])
    grad = losses.gnll_grad_raw(raw, y, affine)
    assert_allclose(grad.d_mean, 0.0, atol=1e-12)


def test_grad_raw_scalar_affine():
    affine = AffineMap([[2.0]], [3.0])
    m = 0.37
    grad = losses.gnll_grad_raw([m, -0.4], [3.0 + 2.0 * m], affine)
    assert_allclose(grad.d_mean, [0.0], atol=1e-14)


def test_grad_raw_non_finite(rng):
    raw = rng.normal(size=20)
    raw[0] = np.inf
    with pytest.raises(NumericFailureError) as info:
        losses.gnll_grad_raw(raw, np.full(5, 3.0), AffineMap.rating_scale())
    assert info.value.block.startswith('d_')


def test_grad_raw_wrong_length():
    with pytest.raises(InvalidInputError):
        losses.gnll_grad_raw(np.zeros(10), np.zeros(5), AffineMap.rating_scale())


def test_full_gradient_finite_differences(rng):
    affine = AffineMap.rating_scale()
    for _ in range(100):
        raw = rng.normal(size=20)
        y = rng.uniform(1, 5, size=5)

        def grad(r):
            g = losses.gnll_grad_raw(r, y, affine)
            return np.concatenate([g.d_mean, g.d_tri])

        err = check_gradient(lambda r: full_label_loss(r, y, affine), grad,
                             raw)
        assert err < 1e-5


def test_independent_gradient_finite_differences(rng):
    affine = AffineMap.rating_scale()
    for _ in range(100):
        raw = rng.normal(size=10)
        y = rng.uniform(1, 5, size=5)

        def loss(r):
            return losses.diag_gnll_loss(r[:5], r[5:], y, affine)

        def grad(r):
            g = losses.diag_gnll_grad_raw(r[:5], r[5:], y, affine)
            return np.concatenate([g.d_mean, g.d_tri])

        assert check_gradient(loss, grad, raw) < 1e-5


def test_mse_gradient_finite_differences(rng):
    affine = AffineMap.rating_scale()
    for _ in range(100):
        raw = rng.normal(size=5)
        y = rng.uniform(1, 5, size=5)
        err = check_gradient(
            lambda m: losses.mse_loss(affine.apply(m), y),
            lambda m: losses.mse_grad_raw(m, y, affine), raw)
        assert err < 1e-5


def test_independent_matches_full(rng):
    affine = AffineMap.rating_scale()
    rows, cols = np.tril_indices(5)
    for _ in range(50):
        means = rng.normal(size=5)
        sd_raw = rng.normal(size=5)
        y = rng.uniform(1, 5, size=5)

        tri = np.zeros(15)
        tri[rows == cols] = sd_raw
        full = full_label_loss(np.concatenate([means, tri]), y, affine)
        assert_allclose(losses.diag_gnll_loss(means, sd_raw, y, affine), full,
                        rtol=1e-12, atol=1e-12)


def test_independent_scalar_case():
    affine = AffineMap.identity(1)
    assert_allclose(losses.diag_gnll_loss([0.0], [0.541325], [1.0], affine),
                    0.5, atol=1e-6)
    assert_allclose(losses.diag_gnll_loss(np.zeros(5), np.full(5, 0.541325),
                                          np.zeros(5), AffineMap.identity()),
                    0.0, atol=1e-6)


@pytest.mark.parametrize('variant, width', [('full', 20), ('independent', 10),
                                            ('mse', 5)])
def test_batch_loss_matches_single(rng, variant, width):
    affine = AffineMap.rating_scale()
    assert losses.raw_output_dim(variant) == width
    raw = rng.normal(size=(8, width))
    y = rng.uniform(1, 5, size=(8, 5))
    loss, d_raw = losses.batch_loss_and_grad(variant, raw, y, affine)
    assert loss.shape == (8, )
    assert d_raw.shape == (8, width)

    for k in range(8):
        if variant == 'full':
            expected = full_label_loss(raw[k], y[k], affine)
            g = losses.gnll_grad_raw(raw[k], y[k], affine)
            expected_grad = np.concatenate([g.d_mean, g.d_tri])
        elif variant == 'independent':
            expected = losses.diag_gnll_loss(raw[k, :5], raw[k, 5:], y[k],
                                             affine)
            g = losses.diag_gnll_grad_raw(raw[k, :5], raw[k, 5:], y[k], affine)
            expected_grad = np.concatenate([g.d_mean, g.d_tri])
        else:
            expected = losses.mse_loss(affine.apply(raw[k]), y[k])
            expected_grad = losses.mse_grad_raw(raw[k], y[k], affine)
        assert_allclose(loss[k], expected, rtol=1e-12, atol=1e-12)
        assert_allclose(d_raw[k], expected_grad, rtol=1e-12, atol=1e-14)


def test_batch_wrong_width():
    with pytest.raises(InvalidInputError):
        losses.batch_loss_and_grad('full', np.zeros((2, 10)), np.zeros((2, 5)),
                                   AffineMap.rating_scale())
    with pytest.raises(InvalidInputError):
        losses.raw_output_dim('diagonal')
