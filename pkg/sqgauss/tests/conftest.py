import numpy as np
import pytest

from sqgauss.dataio import SynthSpec, default_noise_cov, generate_synthetic
from sqgauss.head import HeadConfig, init_head


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def synth_spec():
    return SynthSpec.default(feature_dim=6, sample_count=200, seed=3)


@pytest.fixture
def synth_data(synth_spec):
    data, _ = generate_synthetic(synth_spec)
    return data


@pytest.fixture(params=['full', 'independent', 'mse'])
def variant(request):
    return request.param


@pytest.fixture
def small_model(variant):
    return init_head(HeadConfig(input_dim=6, hidden_dims=(8, 4),
                                variant=variant, seed=11))


@pytest.fixture
def noise_cov():
    return default_noise_cov()
