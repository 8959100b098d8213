"""
Loss and error metrics for the T, v, k regression.
"""

from typing import List, Sequence, Union

import numpy as np
from pydantic import BaseModel

from app.errors import NumericalError, ShapeError
from app.schemas import QUANTITIES, FieldSnapshot
from app.network.model import Gradients, LayerTree

FieldValues = Union[FieldSnapshot, np.ndarray]


class LossReport(BaseModel):
    """Composite loss components; composite = ((mse_T + mse_v) + mse_k) + reg_term."""

    mse_T: float
    mse_v: float
    mse_k: float
    reg_term: float
    composite: float


def _as_fields(values: FieldValues, name: str) -> np.ndarray:
    arr = values.as_array() if isinstance(values, FieldSnapshot) else np.asarray(values, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != len(QUANTITIES):
        raise ShapeError(f"{name}: expected (3, N) fields, got shape {arr.shape}")
    return arr


def weight_penalty(params: LayerTree) -> float:
    """Sum of squared weight entries in declared layer order; biases excluded."""
    total = 0.0
    for weight in params.weights():
        total += float(np.sum(weight * weight))
    return total


def composite_loss(pred: FieldValues, target: FieldValues, params: LayerTree, l2_lambda: float) -> LossReport:
    p = _as_fields(pred, "prediction")
    t = _as_fields(target, "target")
    if p.shape != t.shape:
        raise ShapeError(f"prediction has shape {p.shape} but target has shape {t.shape}")
    mse = [float(np.mean((t[q] - p[q]) ** 2)) for q in range(len(QUANTITIES))]
    reg = l2_lambda * weight_penalty(params) if l2_lambda else 0.0
    composite = ((mse[0] + mse[1]) + mse[2]) + reg
    return LossReport(mse_T=mse[0], mse_v=mse[1], mse_k=mse[2], reg_term=reg, composite=composite)


def loss_output_gradient(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    """d(sum of per-quantity MSE)/d(pred), shape (3, N)."""
    p = _as_fields(pred, "prediction")
    t = _as_fields(target, "target")
    return 2.0 * (p - t) / p.shape[1]


def add_weight_penalty_gradient(grads: Gradients, params: LayerTree, l2_lambda: float) -> Gradients:
    """Adds 2 * lambda * w to every weight gradient in place."""
    if l2_lambda:
        for g, w in zip(grads.weights(), params.weights()):
            g += 2.0 * l2_lambda * w
    return grads


def relative_l2(pred, target) -> float:
    """100 * ||target - pred|| / ||target||, in percent."""
    p = np.asarray(pred, dtype=np.float64).ravel()
    t = np.asarray(target, dtype=np.float64).ravel()
    if p.shape != t.shape:
        raise ShapeError(f"relative L2: prediction length {p.shape[0]} differs from target length {t.shape[0]}")
    denom = float(np.linalg.norm(t))
    if denom == 0.0:
        raise NumericalError("relative L2 is undefined for an all-zero target")
    return 100.0 * float(np.linalg.norm(t - p)) / denom


class SummaryStats(BaseModel):
    mean: float
    std: float
    min: float
    q25: float
    median: float
    q75: float
    max: float

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "SummaryStats":
        arr = np.asarray(values, dtype=np.float64)
        if arr.size == 0:
            raise ShapeError("summary statistics need at least one value")
        q25, median, q75 = np.percentile(arr, [25.0, 50.0, 75.0])
        return cls(
            mean=float(arr.mean()),
            std=float(arr.std()),
            min=float(arr.min()),
            q25=float(q25),
            median=float(median),
            q75=float(q75),
            max=float(arr.max()),
        )


def population_std(values: List[float]) -> float:
    return float(np.std(np.asarray(values, dtype=np.float64)))
