import numpy as np
import pytest

from sqgauss import checkpoint as ckpt
from sqgauss.dataio import Dataset, SynthSpec, generate_synthetic
from sqgauss.errors import InvalidConfigError, InvalidInputError, NumericFailureError
from sqgauss.gaussian import AffineMap
from sqgauss.head import HeadConfig, init_head
from sqgauss.trainer import TrainConfig, TrainTrace, mean_loss, train


def small_run(data, variant='full', **kwargs):
    head_cfg = HeadConfig(input_dim=data.feature_dim, hidden_dims=(16, 8),
                          variant=variant, seed=kwargs.pop('init_seed', 0))
    cfg = TrainConfig(variant=variant, **kwargs)
    return head_cfg, cfg


def test_defaults():
    cfg = TrainConfig()
    assert cfg.learning_rate == 1e-4
    assert (cfg.beta1, cfg.beta2) == (0.9, 0.999)
    assert cfg.epochs == 30
    assert cfg.affine == AffineMap.rating_scale()


@pytest.mark.parametrize('kwargs', [
    dict(learning_rate=-1.0),
    dict(beta1=1.0),
    dict(beta2=-0.1),
    dict(epsilon=0.0),
    dict(epochs=0),
    dict(batch_size=0),
    dict(variant='normal'),
])
def test_invalid_config(kwargs):
    with pytest.raises(InvalidConfigError):
        TrainConfig(**kwargs)


def test_zero_learning_rate_keeps_model(synth_data):
    head_cfg, cfg = small_run(synth_data, learning_rate=0.0, epochs=1)
    model, trace = train(synth_data, None, head_cfg, cfg)
    assert model == init_head(head_cfg)
    assert len(trace) == 1


def test_deterministic(synth_data, variant):
    head_cfg, cfg = small_run(synth_data, variant, epochs=2,
                              learning_rate=1e-3, batch_size=16, seed=5)
    model_a, trace_a = train(synth_data, synth_data, head_cfg, cfg)
    model_b, trace_b = train(synth_data, synth_data, head_cfg, cfg)
    assert ckpt.to_bytes(model_a) == ckpt.to_bytes(model_b)
    assert trace_a.train_losses == trace_b.train_losses
    assert ([r.val_loss for r in trace_a] == [r.val_loss for r in trace_b])


def test_seed_changes_order(synth_data):
    head_cfg, cfg = small_run(synth_data, epochs=1, learning_rate=1e-3,
                              seed=1)
    model_a, _ = train(synth_data, None, head_cfg, cfg)
    head_cfg, cfg = small_run(synth_data, epochs=1, learning_rate=1e-3,
                              seed=2)
    model_b, _ = train(synth_data, None, head_cfg, cfg)
    assert model_a != model_b


def test_loss_decreases():
    spec = SynthSpec.default(feature_dim=8, sample_count=1000, seed=21)
    data, _ = generate_synthetic(spec)
    head_cfg = HeadConfig(input_dim=8, hidden_dims=(32, 16), seed=0)
    model, trace = train(data, None, head_cfg, TrainConfig(epochs=10))
    assert trace[-1].train_loss < trace[0].train_loss
    assert all(np.isfinite(trace.train_losses))


def test_single_sample_step_follows_gradient(rng):
    improved = 0
    for k in range(100):
        data = Dataset(rng.normal(size=(1, 4)), rng.uniform(1, 5, size=(1, 5)))
        head_cfg = HeadConfig(input_dim=4, hidden_dims=(6, ), seed=k)
        cfg = TrainConfig(learning_rate=1e-6, epochs=1, batch_size=1)
        start = init_head(head_cfg)
        before = mean_loss(start, data, cfg.affine)
        model, _ = train(data, None, head_cfg, cfg)
        improved += mean_loss(model, data, cfg.affine) < before
    assert improved >= 95


def test_val_loss_and_callback(synth_data):
    head_cfg, cfg = small_run(synth_data, epochs=3, learning_rate=1e-3)
    seen = []
    model, trace = train(synth_data[np.arange(150)],
                         synth_data[np.arange(150, 200)], head_cfg, cfg,
                         callback=lambda record, m: seen.append(record.epoch))
    assert seen == [1, 2, 3]
    assert [r.epoch for r in trace] == [1, 2, 3]
    assert all(r.val_loss is not None and np.isfinite(r.val_loss)
               for r in trace)


def test_partial_batch_used(synth_data):
    # 200 samples in batches of 64 leave a final batch of 8
    head_cfg, cfg = small_run(synth_data, epochs=1, batch_size=64,
                              learning_rate=1e-3)
    _, trace = train(synth_data, None, head_cfg, cfg)
    assert np.isfinite(trace[0].train_loss)


def test_variant_mismatch(synth_data):
    head_cfg, _ = small_run(synth_data, 'full')
    with pytest.raises(InvalidConfigError):
        train(synth_data, None, head_cfg, TrainConfig(variant='mse'))


def test_feature_dim_mismatch(synth_data):
    head_cfg = HeadConfig(input_dim=synth_data.feature_dim + 1)
    with pytest.raises(InvalidInputError):
        train(synth_data, None, head_cfg, TrainConfig())


def test_nan_abort_reports_position(rng):
    data = Dataset(rng.normal(size=(4, 3)), np.full((4, 5), 3.0))
    head_cfg = HeadConfig(input_dim=3, hidden_dims=(8, ), seed=0)
    model = init_head(head_cfg)
    # mean far from the labels with a floored diagonal overflows the loss
    model.biases[-1][0] = 1e300
    model.biases[-1][5] = -1e4
    with np.errstate(all='ignore'):
        with pytest.raises(NumericFailureError) as info:
            train(data, None, head_cfg, TrainConfig(epochs=1, batch_size=2),
                  model=model)
    assert info.value.epoch == 1
    assert info.value.batch == 0


def test_trace_table(synth_data, tmp_path):
    head_cfg, cfg = small_run(synth_data, epochs=2)
    _, trace = train(synth_data, None, head_cfg, cfg)
    text = trace.format_table(include_time=False)
    lines = text.splitlines()
    assert lines[0].split() == list(TrainTrace.columns)
    assert len(lines) == 3
    assert lines[1].split()[2] == '-'

    path = tmp_path / 'trace.txt'
    trace.write(path, include_time=False)
    assert path.read_text() == text
    assert list(trace.to_frame().columns) == list(TrainTrace.columns)
