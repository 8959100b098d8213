"""
Training protocol: batch-size-1 Adam epochs with early stopping, k-fold
cross-validation and test-set evaluation.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.errors import ShapeError, TrainingError
from app.schemas import QUANTITIES
from app.network.model import (
    ModelConfig,
    ModelParams,
    NormalizationStats,
    backward,
    forward,
    init_params,
)
from app.network.numerics import RandomStream, derive_seed
from app.oracle.dataset import Dataset
from app.training.metrics import (
    SummaryStats,
    add_weight_penalty_gradient,
    composite_loss,
    loss_output_gradient,
    population_std,
    relative_l2,
    weight_penalty,
)
from app.training.optimizer import AdamState, adam_step

logger = logging.getLogger(__name__)

StopReason = Literal["early_stopping", "max_epochs"]


class TrainConfig(BaseModel):
    """Optimizer and protocol settings."""

    model_config = ConfigDict(frozen=True)

    learning_rate: float = Field(1e-3, gt=0)
    l2_lambda: float = Field(1e-8, ge=0)
    max_epochs: int = Field(500, ge=1)
    patience: int = Field(10, ge=1)
    batch_size: int = 1
    k_folds: int = Field(5, ge=2)
    seed: int = Field(0, ge=0)
    test_fraction: float = Field(0.2, gt=0, lt=1)
    final_holdout: float = Field(0.1, gt=0, lt=1)

    @field_validator("batch_size")
    @classmethod
    def _single_sample_batches(cls, value: int) -> int:
        if value != 1:
            raise ValueError(f"batch_size must be 1 (per-sample Adam updates), got {value}")
        return value


class EpochRecord(BaseModel):
    epoch: int
    train_loss: float
    val_loss: float


class History(BaseModel):
    """Per-epoch losses of one train_fold run."""

    epochs: List[EpochRecord] = []
    best_epoch: int = 0
    best_val_loss: float = float("inf")
    stop_reason: StopReason = "max_epochs"
    adam_steps: int = 0

    @property
    def epochs_run(self) -> int:
        return len(self.epochs)


class FoldResult(BaseModel):
    fold: int
    train_size: int
    val_size: int
    best_val_loss: float
    best_epoch: int
    epochs_run: int
    stop_reason: StopReason
    adam_steps: int


class CVReport(BaseModel):
    """Cross-validation summary; losses are composite MSE in normalized space."""

    k_folds: int
    seed: int
    folds: List[FoldResult]
    mean_val_loss: float
    std_val_loss: float
    loss_space: str = "normalized"
    fold_indices: List[List[int]]
    test_indices: Optional[List[int]] = None
    config: Dict[str, Any] = {}


class QuantityMetrics(BaseModel):
    mse: List[float]
    relative_l2: List[float]
    mse_stats: SummaryStats
    relative_l2_stats: SummaryStats
    best_index: int
    worst_index: int


class EvalReport(BaseModel):
    """Per-sample test metrics, T, v, k in that order."""

    split: str = "test"
    n_samples: int
    sample_indices: List[int]
    T: QuantityMetrics
    v: QuantityMetrics
    k: QuantityMetrics
    mse_space: str = "normalized"
    relative_l2_unit: str = "percent"
    config: Dict[str, Any] = {}


def _check_shared_mesh(a: Dataset, b: Dataset) -> None:
    if a.mesh is b.mesh:
        return
    if a.mesh.n_nodes != b.mesh.n_nodes or not np.array_equal(a.mesh.coords, b.mesh.coords):
        raise TrainingError("training and validation sets must share one mesh")


def _check_model_fits(dataset: Dataset, model_config: ModelConfig) -> None:
    if dataset.n1 != model_config.n1 or dataset.mesh.n_nodes != model_config.n_nodes:
        raise ShapeError(
            f"dataset (n1={dataset.n1}, N={dataset.mesh.n_nodes}) does not fit the model "
            f"(n1={model_config.n1}, N={model_config.n_nodes})"
        )


def validation_loss(params: ModelParams, dataset: Dataset, targets: List[np.ndarray], l2_lambda: float) -> float:
    """Mean per-sample MSE sum (dropout off) plus the weight penalty."""
    total = 0.0
    for sample, target in zip(dataset.samples, targets):
        pred, _ = forward(params, sample, dataset.mesh)
        total += composite_loss(pred, target, params, 0.0).composite
    reg = l2_lambda * weight_penalty(params) if l2_lambda else 0.0
    return total / len(targets) + reg


def train_fold(
    train_set: Dataset,
    val_set: Dataset,
    config: TrainConfig,
    model_config: ModelConfig,
    seed: int,
    norm: Optional[NormalizationStats] = None,
) -> Tuple[ModelParams, History]:
    """
    Train one model with early stopping on the validation set.

    Args:
        train_set: Samples used for Adam updates, one step per sample
        val_set: Samples used for the stopping criterion
        config: Optimizer and protocol settings
        model_config: Layer widths; n1 and N must match the data
        seed: Root seed for initialization, shuffling and dropout
        norm: Scaling; fitted on train_set when omitted

    Returns:
        (params restored from the best validation epoch, history)
    """
    if len(train_set) == 0 or len(val_set) == 0:
        raise TrainingError(f"empty split: {len(train_set)} training and {len(val_set)} validation samples")
    _check_shared_mesh(train_set, val_set)
    _check_model_fits(train_set, model_config)

    mesh = train_set.mesh
    if norm is None:
        norm = NormalizationStats.from_training_data(train_set.ranges, mesh, train_set.targets())
    root = RandomStream(seed)
    params = init_params(model_config, norm, derive_seed(seed, 0))
    shuffle_stream = root.fork(1)
    dropout_stream = root.fork(2)
    state = AdamState.zeros_like(params)

    train_targets = [norm.normalize_outputs(s.as_array()) for s in train_set.snapshots]
    val_targets = [norm.normalize_outputs(s.as_array()) for s in val_set.snapshots]

    history = History()
    best_params = params.copy()
    stale = 0
    for epoch in range(1, config.max_epochs + 1):
        running = 0.0
        for i in shuffle_stream.permutation(len(train_set)):
            pred, trace = forward(params, train_set.samples[i], mesh, dropout_stream)
            target = train_targets[i]
            running += composite_loss(pred, target, params, 0.0).composite
            grads = backward(params, trace, loss_output_gradient(pred, target))
            add_weight_penalty_gradient(grads, params, config.l2_lambda)
            adam_step(state, params, grads, config.learning_rate)
            history.adam_steps += 1

        reg = config.l2_lambda * weight_penalty(params) if config.l2_lambda else 0.0
        train_loss = running / len(train_set) + reg
        val_loss = validation_loss(params, val_set, val_targets, config.l2_lambda)
        history.epochs.append(EpochRecord(epoch=epoch, train_loss=train_loss, val_loss=val_loss))
        logger.debug(f"epoch {epoch}: train {train_loss:.6e}, validation {val_loss:.6e}")

        if val_loss < history.best_val_loss:
            history.best_val_loss = val_loss
            history.best_epoch = epoch
            best_params = params.copy()
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                history.stop_reason = "early_stopping"
                break

    if history.stop_reason == "early_stopping" and history.epochs_run <= 2:
        logger.warning(f"Early stopping after {history.epochs_run} epochs; validation loss never improved")
    logger.info(
        f"Fold training finished after {history.epochs_run} epochs ({history.stop_reason}); "
        f"best epoch {history.best_epoch}, validation loss {history.best_val_loss:.6e}"
    )
    return best_params, history


def split_positions(n: int, fraction: float, seed: int) -> Tuple[List[int], List[int]]:
    """Seeded split of range(n) into (kept, held_out), held_out ~ fraction * n."""
    if n < 2:
        raise TrainingError(f"cannot split {n} sample(s) into two non-empty parts")
    n_held = min(max(int(round(n * fraction)), 1), n - 1)
    order = RandomStream(seed).permutation(n)
    return sorted(int(i) for i in order[n_held:]), sorted(int(i) for i in order[:n_held])


def kfold_partition(n: int, k: int, seed: int) -> List[List[int]]:
    """Seeded partition of range(n) into k disjoint folds whose sizes differ by at most 1."""
    if k < 2:
        raise TrainingError(f"k_folds must be >= 2, got {k}")
    if n < k:
        raise TrainingError(f"{n} samples cannot fill {k} folds")
    order = RandomStream(seed).permutation(n)
    return [sorted(int(i) for i in fold) for fold in np.array_split(order, k)]


def cross_validate(
    train_dataset: Dataset,
    config: TrainConfig,
    model_config: ModelConfig,
    workers: int = 1,
) -> CVReport:
    """
    k-fold cross-validation with train_fold on each fold.

    Folds are independent (own seed, read-only data) and may run on `workers`
    threads; results are reported in fold order.
    """
    folds = kfold_partition(len(train_dataset), config.k_folds, derive_seed(config.seed, 0))
    positions = set(range(len(train_dataset)))

    def run(j: int) -> FoldResult:
        val_positions = folds[j]
        train_positions = sorted(positions.difference(val_positions))
        _, history = train_fold(
            train_dataset.subset(train_positions),
            train_dataset.subset(val_positions),
            config,
            model_config,
            seed=derive_seed(config.seed, j + 1),
        )
        logger.info(f"Fold {j + 1}/{config.k_folds}: validation loss {history.best_val_loss:.6e}")
        return FoldResult(
            fold=j,
            train_size=len(train_positions),
            val_size=len(val_positions),
            best_val_loss=history.best_val_loss,
            best_epoch=history.best_epoch,
            epochs_run=history.epochs_run,
            stop_reason=history.stop_reason,
            adam_steps=history.adam_steps,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(config.k_folds)))
    else:
        results = [run(j) for j in range(config.k_folds)]

    losses = [r.best_val_loss for r in results]
    origin = train_dataset.indices
    return CVReport(
        k_folds=config.k_folds,
        seed=config.seed,
        folds=results,
        mean_val_loss=float(np.mean(losses)),
        std_val_loss=population_std(losses),
        fold_indices=[[origin[p] for p in fold] for fold in folds],
    )


def _quantity_metrics(mse: List[float], rel: List[float], indices: List[int]) -> QuantityMetrics:
    return QuantityMetrics(
        mse=mse,
        relative_l2=rel,
        mse_stats=SummaryStats.from_values(mse),
        relative_l2_stats=SummaryStats.from_values(rel),
        best_index=indices[int(np.argmin(rel))],
        worst_index=indices[int(np.argmax(rel))],
    )


def evaluate(params: ModelParams, test_set: Dataset, split: str = "test") -> EvalReport:
    """
    Per-sample normalized MSE and physical relative L2 (%) for T, v and k.
    """
    if len(test_set) == 0:
        raise TrainingError("cannot evaluate on an empty dataset")
    _check_model_fits(test_set, params.config)
    norm = params.norm
    mse: Dict[str, List[float]] = {q: [] for q in QUANTITIES}
    rel: Dict[str, List[float]] = {q: [] for q in QUANTITIES}
    for sample, snapshot in zip(test_set.samples, test_set.snapshots):
        pred_norm, _ = forward(params, sample, test_set.mesh)
        target = snapshot.as_array()
        target_norm = norm.normalize_outputs(target)
        physical = norm.denormalize_outputs(pred_norm)
        for q, name in enumerate(QUANTITIES):
            mse[name].append(float(np.mean((target_norm[q] - pred_norm[q]) ** 2)))
            rel[name].append(relative_l2(physical[q], target[q]))

    indices = test_set.indices
    per_quantity = {name: _quantity_metrics(mse[name], rel[name], indices) for name in QUANTITIES}
    logger.info(
        f"Evaluated {len(test_set)} {split} samples: relative L2 "
        + ", ".join(f"{name} {per_quantity[name].relative_l2_stats.mean:.4f}%" for name in QUANTITIES)
    )
    return EvalReport(split=split, n_samples=len(test_set), sample_indices=indices, **per_quantity)


class TrainReport(BaseModel):
    """Everything the train command records next to a checkpoint."""

    cv: Optional[CVReport] = None
    test_indices: List[int]
    holdout_indices: List[int]
    final_history: History
    config: Dict[str, Any] = {}
