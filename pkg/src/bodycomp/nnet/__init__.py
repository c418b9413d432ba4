from .io import load_model, save_model
from .model import (
    HEADS,
    IMAGE_BRANCHES,
    ArchitectureSpec,
    Batch,
    NetworkModel,
    TargetStats,
    backward,
    forward,
    forward_batch,
    init_model,
    loss,
    loss_and_grads,
    param_shapes,
    predict_batch,
    predict_fast,
    stack_samples,
)
from .ops import NonFiniteError
from .train import Adam, DivergenceError, EpochRecord, TrainConfig, train
