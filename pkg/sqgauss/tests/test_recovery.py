'''End-to-end training on synthetic data with a known noise covariance'''
import numpy as np
import pytest

from sqgauss import diagnostics, gaussian
from sqgauss.dataio import SynthSpec, generate_synthetic
from sqgauss.gaussian import AffineMap
from sqgauss.head import HeadConfig
from sqgauss.metrics import evaluate
from sqgauss.trainer import TrainConfig, train


@pytest.fixture(scope='module')
def synthetic_task():
    spec = SynthSpec.default(feature_dim=32, sample_count=6000, seed=7)
    data, truth = generate_synthetic(spec)
    return data[:5000], data[5000:], truth


def strongest_pair(cov):
    corr = gaussian.correlation_matrix(cov)
    np.fill_diagonal(corr, 0.0)
    i, j = np.unravel_index(np.argmax(np.abs(corr)), corr.shape)
    return (min(i, j), max(i, j)), corr[i, j]


@pytest.mark.slow
def test_recovers_noise_floor_and_correlation(synthetic_task):
    train_set, holdout, truth = synthetic_task
    head_cfg = HeadConfig(input_dim=32, seed=0)
    model, trace = train(train_set, holdout, head_cfg, TrainConfig())
    assert len(trace) == 30

    report = evaluate(model, holdout)
    noise_sd = np.sqrt(np.diag(truth.true_cov))
    for rec, sd in zip(report.records, noise_sd):
        assert rec.rmse <= 1.2 * sd, rec

    pair, true_corr = strongest_pair(truth.true_cov)
    assert pair == (0, 1)
    scatter = diagnostics.emit_correlation_scatter(model, holdout,
                                                   dim_pair=pair)
    assert abs(scatter['predicted_corr'].mean() - true_corr) <= 0.1


@pytest.mark.slow
def test_affine_map_helps_early_training(synthetic_task):
    train_set, holdout, _ = synthetic_task
    head_cfg = HeadConfig(input_dim=32, seed=0)
    rmse = {}
    for name, affine in (('with', AffineMap.rating_scale()),
                         ('without', AffineMap.identity())):
        model, _ = train(train_set, holdout, head_cfg,
                         TrainConfig(epochs=5, affine=affine))
        rmse[name] = evaluate(model, holdout).mean_rmse
    assert rmse['without'] > rmse['with']
