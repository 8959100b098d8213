"""
State carried through the train pipeline graph.
"""

from typing import List, Optional, TypedDict

from app.network.model import ModelConfig, ModelParams
from app.oracle.dataset import Dataset
from app.training.loop import CVReport, History, TrainConfig


class TrainPipelineState(TypedDict):
    """
    State schema for the train pipeline.

    This state is passed between nodes in the LangGraph workflow.
    """
    # Inputs
    dataset: Dataset
    train_config: TrainConfig
    model_config: ModelConfig
    run_cv: bool
    workers: int

    # 80/20 split, positions into `dataset`
    train_positions: List[int]
    test_positions: List[int]
    train_set: Optional[Dataset]

    # Results
    cv_report: Optional[CVReport]
    params: Optional[ModelParams]
    final_history: Optional[History]
    holdout_indices: List[int]


def create_initial_state(
    dataset: Dataset,
    train_config: TrainConfig,
    model_config: ModelConfig,
    run_cv: bool = True,
    workers: int = 1,
) -> TrainPipelineState:
    """Create the initial pipeline state for one dataset."""
    return TrainPipelineState(
        dataset=dataset,
        train_config=train_config,
        model_config=model_config,
        run_cv=run_cv,
        workers=workers,
        train_positions=[],
        test_positions=[],
        train_set=None,
        cv_report=None,
        params=None,
        final_history=None,
        holdout_indices=[],
    )


def held_out_indices(state: TrainPipelineState) -> List[int]:
    """Source indices of the held-out test split."""
    origin = state["dataset"].indices
    return [origin[p] for p in state["test_positions"]]
