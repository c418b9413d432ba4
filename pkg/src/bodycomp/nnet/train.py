"""Mini-batch Adam training with validation checkpointing."""

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..preprocess import PreprocessConfig, augment_sample
from ..rng import substream
from .model import TargetStats, batch_loss_from_z, forward_batch, loss_and_grads, stack_samples
from .ops import NonFiniteError

log = logging.getLogger(__name__)


class DivergenceError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    epochs: int = 40
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    loss_weight_pbf: float = 1.0
    loss_weight_smm: float = 1.0
    seed: int = 0
    augment_images: bool = True
    augment_structured: bool = True

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.loss_weight_pbf < 0 or self.loss_weight_smm < 0:
            raise ValueError("loss weights must be >= 0")
        if self.loss_weight_pbf + self.loss_weight_smm <= 0:
            raise ValueError("at least one loss weight must be positive")

    @property
    def loss_weights(self):
        return (self.loss_weight_pbf, self.loss_weight_smm)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    val_mae_pbf: float
    val_mae_smm: float


class Adam:
    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for k, g in grads.items():
            m = self.m[k]
            v = self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            params[k] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def evaluate(model, batch, weights, chunk=64):
    """(loss, mae_pbf, mae_smm) of ``model`` on a prepared Batch."""
    n = len(batch)
    z = np.empty((n, 2))
    for start in range(0, n, chunk):
        sl = slice(start, start + chunk)
        part = type(batch)([a[sl] for a in batch.images], batch.structured[sl], batch.targets[sl])
        z[sl] = forward_batch(model, part)
    zt = model.target_stats.standardize(batch.targets)
    pred = model.target_stats.destandardize(z)
    mae = np.mean(np.abs(batch.targets - pred), axis=0)
    return batch_loss_from_z(z, zt, weights), float(mae[0]), float(mae[1])


def train(model, train_set, val_set, cfg=TrainConfig(), pp_cfg=None, set_target_stats=True, progress=None):
    """Train ``model`` (a copy is updated) and return (best model, history).

    Target standardization statistics are taken from the training set unless
    ``set_target_stats`` is False.  Augmentation for sample i in epoch e draws
    from substream (seed, e, i).
    """
    if not train_set or not val_set:
        raise ValueError("train and validation sets must be non-empty")
    pp_cfg = pp_cfg or PreprocessConfig(image_side=model.arch.image_side)
    model = model.copy()
    if set_target_stats:
        model.target_stats = TargetStats.from_targets([s.targets for s in train_set])
    weights = np.asarray(cfg.loss_weights, dtype=np.float64)
    opt = Adam(model.params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)
    val_batch = stack_samples(val_set)
    plain_train = None if (cfg.augment_images or cfg.augment_structured) else stack_samples(train_set)
    aug_cfg = PreprocessConfig(
        margin=pp_cfg.margin,
        image_side=pp_cfg.image_side,
        max_rotation_deg=pp_cfg.max_rotation_deg if cfg.augment_images else 0.0,
        pixel_noise_sd=pp_cfg.pixel_noise_sd if cfg.augment_images else 0.0,
        structured_rel_sd=pp_cfg.structured_rel_sd if cfg.augment_structured else 0.0,
        chin_degree=pp_cfg.chin_degree,
    )
    n = len(train_set)
    history = []
    best_loss, best_params = math.inf, {k: v.copy() for k, v in model.params.items()}
    for epoch in range(1, cfg.epochs + 1):
        order = substream(cfg.seed, epoch).permutation(n)
        total = 0.0
        for b, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            if plain_train is not None:
                batch = type(plain_train)(
                    [a[idx] for a in plain_train.images], plain_train.structured[idx], plain_train.targets[idx]
                )
            else:
                batch = stack_samples(
                    [augment_sample(train_set[i], model.norm_stats, aug_cfg, substream(cfg.seed, epoch, i)) for i in idx]
                )
            try:
                value, grads = loss_and_grads(model, batch, weights)
            except NonFiniteError as exc:
                raise DivergenceError(f"epoch {epoch}, batch {b}: {exc}") from None
            if not math.isfinite(value):
                raise DivergenceError(f"epoch {epoch}, batch {b}: non-finite loss")
            opt.step(model.params, grads)
            total += value * len(idx)
        val_loss, mae_pbf, mae_smm = evaluate(model, val_batch, weights)
        if not math.isfinite(val_loss):
            raise DivergenceError(f"epoch {epoch}: non-finite validation loss")
        rec = EpochRecord(epoch, total / n, val_loss, mae_pbf, mae_smm)
        history.append(rec)
        log.info(
            "epoch %d train %.4f val %.4f mae pbf %.3f smm %.3f",
            epoch, rec.train_loss, rec.val_loss, rec.val_mae_pbf, rec.val_mae_smm,
        )
        if progress is not None:
            progress(rec)
        if val_loss < best_loss:
            best_loss = val_loss
            best_params = {k: v.copy() for k, v in model.params.items()}
    model.params = best_params
    return model, history
