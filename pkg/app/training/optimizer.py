"""
Adam with bias correction over every tensor of the operator network.
"""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from app.errors import ShapeError
from app.network.model import LayerTree, ModelParams


@dataclass
class AdamState:
    """First and second moment accumulators, one pair per parameter tensor."""

    m: List[np.ndarray]
    v: List[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params: LayerTree, **hyper) -> "AdamState":
        arrays = params.arrays()
        return cls(
            m=[np.zeros_like(a) for a in arrays],
            v=[np.zeros_like(a) for a in arrays],
            **hyper,
        )


def adam_step(
    state: AdamState,
    params: ModelParams,
    grads: LayerTree,
    lr: float,
) -> Tuple[AdamState, ModelParams]:
    """
    One Adam update, applied to `params` in place.

    m <- b1 m + (1 - b1) g
    v <- b2 v + (1 - b2) g^2
    theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
    """
    thetas = params.arrays()
    gs = grads.arrays()
    if len(gs) != len(thetas) or len(state.m) != len(thetas):
        raise ShapeError(
            f"adam: {len(thetas)} parameter tensors, {len(gs)} gradients, {len(state.m)} accumulators"
        )
    names = [name for name, _ in params.named_tensors()]
    for name, theta, g, m in zip(names, thetas, gs, state.m):
        if theta.shape != g.shape or theta.shape != m.shape:
            raise ShapeError(
                f"adam: {name} has shape {theta.shape}, gradient {g.shape}, accumulator {m.shape}"
            )

    state.t += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1 ** state.t
    correction2 = 1.0 - b2 ** state.t
    for theta, g, m, v in zip(thetas, gs, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        theta -= lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
    return state, params
