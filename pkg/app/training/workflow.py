"""
LangGraph definition of the train pipeline.
"""

import logging

from langgraph.graph import END, StateGraph

from app.network.model import ModelConfig
from app.oracle.dataset import Dataset
from app.training.loop import TrainConfig
from app.training.nodes import (
    cross_validate_node,
    final_fit_node,
    should_cross_validate,
    split_node,
)
from app.training.state import TrainPipelineState, create_initial_state

logger = logging.getLogger(__name__)


def create_train_pipeline():
    """
    Build the train pipeline: split -> [cross_validate] -> final_fit.

    Returns:
        Compiled LangGraph workflow
    """
    workflow = StateGraph(TrainPipelineState)

    workflow.add_node("split", split_node)
    workflow.add_node("cross_validate", cross_validate_node)
    workflow.add_node("final_fit", final_fit_node)

    workflow.set_entry_point("split")

    workflow.add_conditional_edges(
        "split",
        should_cross_validate,
        {
            "cross_validate": "cross_validate",
            "final_fit": "final_fit",
        },
    )

    workflow.add_edge("cross_validate", "final_fit")
    workflow.add_edge("final_fit", END)

    pipeline = workflow.compile()
    logger.debug("Train pipeline compiled")
    return pipeline


def run_train_pipeline(
    dataset: Dataset,
    train_config: TrainConfig,
    model_config: ModelConfig,
    run_cv: bool = True,
    workers: int = 1,
) -> TrainPipelineState:
    """
    Run the full train protocol on one dataset.

    Args:
        dataset: Full oracle dataset
        train_config: Optimizer and protocol settings
        model_config: Layer widths; n1 and N must match the dataset
        run_cv: Run k-fold cross-validation before the final fit
        workers: Threads for parallel folds

    Returns:
        Final pipeline state with params, cv_report and final_history
    """
    initial_state = create_initial_state(dataset, train_config, model_config, run_cv, workers)
    return create_train_pipeline().invoke(initial_state)
