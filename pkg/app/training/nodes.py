"""
Nodes of the train pipeline: split, cross-validate, final fit.
"""

import logging
from typing import Any, Dict

from app.network.numerics import derive_seed
from app.training.loop import cross_validate, split_positions, train_fold
from app.training.state import TrainPipelineState, held_out_indices

logger = logging.getLogger(__name__)

# stream indices under the run seed; 0 and 1..k belong to cross-validation
SPLIT_STREAM = 1 << 20
HOLDOUT_STREAM = SPLIT_STREAM + 1
FINAL_FIT_STREAM = SPLIT_STREAM + 2


def split_node(state: TrainPipelineState) -> Dict[str, Any]:
    """Seeded train/test split of the full dataset."""
    config = state["train_config"]
    dataset = state["dataset"]
    train_positions, test_positions = split_positions(
        len(dataset), config.test_fraction, derive_seed(config.seed, SPLIT_STREAM)
    )
    state["train_positions"] = train_positions
    state["test_positions"] = test_positions
    state["train_set"] = dataset.subset(train_positions)
    logger.info(f"Split {len(dataset)} samples into {len(train_positions)} train / {len(test_positions)} test")
    return state


def cross_validate_node(state: TrainPipelineState) -> Dict[str, Any]:
    """k-fold cross-validation on the train partition."""
    report = cross_validate(
        state["train_set"],
        state["train_config"],
        state["model_config"],
        workers=state["workers"],
    )
    state["cv_report"] = report.model_copy(update={"test_indices": held_out_indices(state)})
    logger.info(
        f"Cross-validation: composite MSE {report.mean_val_loss:.6e} +/- {report.std_val_loss:.6e}"
    )
    return state


def final_fit_node(state: TrainPipelineState) -> Dict[str, Any]:
    """
    Retrain on the whole train partition, stopping on an internal holdout.
    """
    config = state["train_config"]
    train_set = state["train_set"]
    fit_positions, holdout_positions = split_positions(
        len(train_set), config.final_holdout, derive_seed(config.seed, HOLDOUT_STREAM)
    )
    holdout = train_set.subset(holdout_positions)
    params, history = train_fold(
        train_set.subset(fit_positions),
        holdout,
        config,
        state["model_config"],
        seed=derive_seed(config.seed, FINAL_FIT_STREAM),
    )
    state["params"] = params
    state["final_history"] = history
    state["holdout_indices"] = holdout.indices
    return state


def should_cross_validate(state: TrainPipelineState) -> str:
    """Route to cross-validation unless it was disabled."""
    return "cross_validate" if state["run_cv"] else "final_fit"
