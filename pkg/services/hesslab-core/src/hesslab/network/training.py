# =============================================================================
# hesslab - SGD Training
# =============================================================================

from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np
from loguru import logger

from ..core.errors import PreconditionError, TrainingError
from ..core.random import make_rng
from ..data.datasets import Dataset
from .model import MlpModel, loss_and_grad

# Plain SGD: batch 128, fixed lr 0.01, no momentum, no weight decay
DEFAULT_LR = 0.01
DEFAULT_BATCH = 128
DEFAULT_MOMENTUM = 0.0
DEFAULT_WEIGHT_DECAY = 0.0


@dataclass
class TrainingRun:
    model: MlpModel
    snapshots: Dict[int, MlpModel] = field(default_factory=dict)
    epoch_losses: List[float] = field(default_factory=list)


def train_sgd(
    model: MlpModel,
    data: Dataset,
    lr: float = DEFAULT_LR,
    batch: int = DEFAULT_BATCH,
    epochs: int = 1,
    momentum: float = DEFAULT_MOMENTUM,
    weight_decay: float = DEFAULT_WEIGHT_DECAY,
    seed: int = 0,
    snapshot_epochs: Sequence[int] = (),
) -> TrainingRun:
    """
    Mini-batch SGD on the mean cross-entropy.

    Each epoch visits the samples in a fresh seeded permutation. Momentum and
    weight decay follow the usual heavy-ball form ``v <- mu v + g + wd w``, with
    the decay applied to every parameter, biases included.
    ``snapshot_epochs`` lists epoch counts (0 = before training) at which a
    copy of the model is kept.
    """
    if lr < 0 or batch < 1 or epochs < 0:
        raise PreconditionError("invalid SGD hyperparameters", {"lr": lr, "batch": batch, "epochs": epochs})
    if data.dim != model.layer_dims[0]:
        raise PreconditionError("dataset dim does not match the model", {"data": data.dim, "model": model.layer_dims[0]})

    wanted = set(int(e) for e in snapshot_epochs)
    params = model.flatten()
    velocity = np.zeros_like(params)
    current = model.with_params(params)
    run = TrainingRun(model=current)
    if 0 in wanted:
        run.snapshots[0] = current.copy()

    for epoch in range(1, epochs + 1):
        order = make_rng(seed, epoch).permutation(data.n_samples)
        total, seen = 0.0, 0
        for start in range(0, data.n_samples, batch):
            rows = order[start : start + batch]
            value, g = loss_and_grad(current, data.inputs[rows], data.labels[rows])
            if not np.isfinite(value):
                raise TrainingError(f"loss diverged in epoch {epoch}", epoch=epoch)
            step = g.flatten()
            if weight_decay:
                step = step + weight_decay * params
            if momentum:
                velocity = momentum * velocity + step
                step = velocity
            params = params - lr * step
            current = current.with_params(params)
            total += value * rows.size
            seen += rows.size
        run.epoch_losses.append(total / max(seen, 1))
        logger.debug(f"epoch {epoch}/{epochs}: mean loss {run.epoch_losses[-1]:.6f}")
        if epoch in wanted:
            run.snapshots[epoch] = current.copy()

    if epochs:
        logger.info(f"trained {epochs} epochs, final mean loss {run.epoch_losses[-1]:.6f}")
    run.model = current
    return run
