from .checkpoint import load_array, load_checkpoint, save_array, save_checkpoint
from .model import (
    BatchCache,
    MlpModel,
    ParamGrad,
    SampleCache,
    classification_error,
    forward,
    forward_batch,
    grad,
    init_gaussian_rowscaled,
    init_xavier,
    logit_jacobian,
    logit_jacobians_batch,
    loss,
    loss_and_grad,
    q_factor,
    softmax_hessian,
)
from .training import TrainingRun, train_sgd

__all__ = [
    "BatchCache",
    "MlpModel",
    "ParamGrad",
    "SampleCache",
    "TrainingRun",
    "classification_error",
    "forward",
    "forward_batch",
    "grad",
    "init_gaussian_rowscaled",
    "init_xavier",
    "load_array",
    "load_checkpoint",
    "logit_jacobian",
    "logit_jacobians_batch",
    "loss",
    "loss_and_grad",
    "q_factor",
    "save_array",
    "save_checkpoint",
    "softmax_hessian",
    "train_sgd",
]
