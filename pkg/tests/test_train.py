import numpy as np
import pytest

from bodycomp.nnet import ArchitectureSpec, DivergenceError, TrainConfig, init_model, train
from bodycomp.nnet.train import evaluate
from bodycomp.nnet.model import stack_samples

ARCH = ArchitectureSpec(image_side=16, conv_channels=(2, 3, 4), struct_widths=(8, 8), trunk_widths=(16, 8), head_widths=(8,))


def cfg(**kw):
    base = dict(epochs=3, batch_size=16, seed=5)
    base.update(kw)
    return TrainConfig(**base)


def test_config_invariants():
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValueError):
        TrainConfig(loss_weight_pbf=-1.0)
    with pytest.raises(ValueError):
        TrainConfig(loss_weight_pbf=0.0, loss_weight_smm=0.0)


def test_training_reduces_loss(tiny_samples):
    train_set, val_set, stats = tiny_samples
    model, history = train(init_model(ARCH, 0, stats), train_set, val_set, cfg(epochs=30))
    assert len(history) == 30
    assert history[-1].train_loss < history[0].train_loss


def test_history_is_deterministic(tiny_samples):
    train_set, val_set, stats = tiny_samples
    _, h1 = train(init_model(ARCH, 0, stats), train_set, val_set, cfg())
    m2, h2 = train(init_model(ARCH, 0, stats), train_set, val_set, cfg())
    assert h1 == h2
    _, h3 = train(init_model(ARCH, 0, stats), train_set, val_set, cfg(seed=6))
    assert h3 != h1


def test_returns_best_validation_checkpoint(tiny_samples):
    train_set, val_set, stats = tiny_samples
    model, history = train(init_model(ARCH, 0, stats), train_set, val_set, cfg(epochs=6, learning_rate=0.02))
    w = np.asarray(cfg().loss_weights)
    val_loss, _, _ = evaluate(model, stack_samples(val_set), w)
    assert val_loss == min(r.val_loss for r in history)


def test_pbf_head_frozen_when_its_weight_is_zero(tiny_samples):
    train_set, val_set, stats = tiny_samples
    start = init_model(ARCH, 0, stats)
    model, _ = train(start, train_set, val_set, cfg(loss_weight_pbf=0.0))
    for k in start.params:
        same = np.array_equal(model.params[k], start.params[k])
        if k.startswith("head_pbf"):
            assert same, k
        elif k.startswith("trunk"):
            assert not same, k


def test_input_model_is_not_modified(tiny_samples):
    train_set, val_set, stats = tiny_samples
    start = init_model(ARCH, 0, stats)
    before = {k: v.copy() for k, v in start.params.items()}
    train(start, train_set, val_set, cfg(epochs=1))
    assert all(np.array_equal(before[k], start.params[k]) for k in before)


def test_divergence_reports_epoch_and_batch(tiny_samples):
    train_set, val_set, stats = tiny_samples
    with pytest.raises(DivergenceError, match=r"epoch \d+, batch \d+"), np.errstate(all="ignore"):
        train(init_model(ARCH, 0, stats), train_set, val_set, cfg(learning_rate=1e305, epochs=5))


def test_empty_sets_rejected(tiny_samples):
    train_set, val_set, stats = tiny_samples
    with pytest.raises(ValueError):
        train(init_model(ARCH, 0, stats), [], val_set, cfg())


def test_without_augmentation(tiny_samples):
    train_set, val_set, stats = tiny_samples
    c = cfg(augment_images=False, augment_structured=False)
    _, h1 = train(init_model(ARCH, 0, stats), train_set, val_set, c)
    _, h2 = train(init_model(ARCH, 0, stats), train_set, val_set, cfg())
    assert h1 != h2
