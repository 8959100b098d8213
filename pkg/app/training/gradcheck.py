"""
Central finite-difference check of the analytic reverse pass.
"""

import logging
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel

from app.schemas import CenterPlaneMesh, InputSample
from app.network.model import ForwardTrace, ModelParams, backward, forward
from app.network.numerics import RandomStream
from app.training.metrics import add_weight_penalty_gradient, composite_loss, loss_output_gradient

logger = logging.getLogger(__name__)

# denominators below this are clamped: gradients smaller than the floor are
# held to an absolute tolerance of RELATIVE_FLOOR times the relative one
RELATIVE_FLOOR = 1e-4

SUBNETS = ("branch1", "branch2", "trunk")


class GradCheckResult(BaseModel):
    max_relative_error: float
    worst_tensor: str
    worst_entry: int
    n_checked: int
    n_skipped: int = 0


def relative_error(analytic: float, numeric: float) -> float:
    """|a - n| / max(|a|, |n|, RELATIVE_FLOOR)."""
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), RELATIVE_FLOOR)


def relu_pattern(trace: ForwardTrace) -> List[np.ndarray]:
    """Which hidden units sit on the positive side of the ReLU."""
    return [z > 0.0 for name in SUBNETS for z in trace[name]["pre_activations"][:-1]]


def _same_pattern(a: List[np.ndarray], b: List[np.ndarray]) -> bool:
    return all(np.array_equal(x, y) for x, y in zip(a, b))


def finite_difference_check(
    params: ModelParams,
    sample: InputSample,
    mesh: CenterPlaneMesh,
    target: np.ndarray,
    seed: int = 0,
    step: float = 1e-6,
    l2_lambda: float = 0.0,
    max_entries: Optional[int] = None,
) -> GradCheckResult:
    """
    Compare backward() with (L(theta + step) - L(theta - step)) / (2 step) entry by entry.

    Every loss evaluation runs in training mode from a fresh stream seeded with
    `seed`, so the dropout masks are the same ones the analytic pass saw.
    `params` is perturbed in place and restored.

    Entries whose +-step perturbation moves any hidden unit across the ReLU
    kink are skipped and counted in `n_skipped`: the loss is not
    differentiable there, so the one-sided slopes disagree with any
    subgradient. Relative errors use a floor of RELATIVE_FLOOR in the
    denominator.
    """

    def loss() -> Tuple[float, List[np.ndarray]]:
        pred, trace = forward(params, sample, mesh, RandomStream(seed))
        return composite_loss(pred, target, params, l2_lambda).composite, relu_pattern(trace)

    pred, trace = forward(params, sample, mesh, RandomStream(seed))
    pattern = relu_pattern(trace)
    grads = backward(params, trace, loss_output_gradient(pred, target))
    add_weight_penalty_gradient(grads, params, l2_lambda)

    worst = (0.0, "", -1)
    checked = 0
    skipped = 0
    for (name, theta), g in zip(params.named_tensors(), grads.arrays()):
        flat_theta = theta.reshape(-1)
        flat_g = g.reshape(-1)
        limit = flat_theta.size if max_entries is None else min(flat_theta.size, max_entries)
        for j in range(limit):
            original = flat_theta[j]
            flat_theta[j] = original + step
            plus, plus_pattern = loss()
            flat_theta[j] = original - step
            minus, minus_pattern = loss()
            flat_theta[j] = original
            if not (_same_pattern(pattern, plus_pattern) and _same_pattern(pattern, minus_pattern)):
                skipped += 1
                continue
            err = relative_error(float(flat_g[j]), (plus - minus) / (2.0 * step))
            checked += 1
            if err > worst[0]:
                worst = (err, name, j)

    logger.debug(
        f"Gradient check over {checked} entries ({skipped} on a ReLU kink): "
        f"max relative error {worst[0]:.3e} ({worst[1]})"
    )
    return GradCheckResult(
        max_relative_error=worst[0],
        worst_tensor=worst[1],
        worst_entry=worst[2],
        n_checked=checked,
        n_skipped=skipped,
    )
