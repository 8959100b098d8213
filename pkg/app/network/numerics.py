"""
Dense numerical kernel shared by the operator network and the training loop.

All arrays are 64-bit floats. Random draws come from a Philox counter-based
generator so a stream seeded twice replays bit-exactly.
"""

from typing import Tuple, Union

import numpy as np

from app.errors import ConfigError, NumericalError, ShapeError

DTYPE = np.float64
SEED_MASK = (1 << 64) - 1

# Dense matrices are plain 2-D float64 arrays, row-major.
DenseMatrix = np.ndarray

Shape = Union[int, Tuple[int, ...]]


def derive_seed(seed: int, index: int) -> int:
    """Child seed for fold / sample / stage `index` of a parent seed."""
    mixed = np.random.SeedSequence([int(seed) & SEED_MASK, int(index) & SEED_MASK])
    return int(mixed.generate_state(1, dtype=np.uint64)[0])


class RandomStream:
    """
    Seedable random stream backed by numpy's Philox bit generator.

    Philox advances a 256-bit counter per draw, so the state never repeats
    within 2^64 draws. A stream is single-owner; parallel work gets its own
    stream through `fork`.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & SEED_MASK
        self._generator = np.random.Generator(np.random.Philox(key=self.seed))

    def reset(self, seed: int = None) -> None:
        if seed is not None:
            self.seed = int(seed) & SEED_MASK
        self._generator = np.random.Generator(np.random.Philox(key=self.seed))

    def fork(self, index: int) -> "RandomStream":
        return RandomStream(derive_seed(self.seed, index))

    def random(self, shape: Shape) -> np.ndarray:
        return self._generator.random(shape, dtype=DTYPE)

    def uniform(self, low: float, high: float, shape: Shape = None) -> Union[float, np.ndarray]:
        return self._generator.uniform(low, high, shape)

    def permutation(self, n: int) -> np.ndarray:
        return self._generator.permutation(n)


def as_vector(x, name: str = "vector") -> np.ndarray:
    arr = np.asarray(x, dtype=DTYPE)
    if arr.ndim != 1:
        raise ShapeError(f"{name}: expected a 1-D vector, got shape {arr.shape}")
    return arr


def check_finite(x: np.ndarray, where: str) -> np.ndarray:
    if not np.all(np.isfinite(x)):
        bad = int(np.size(x) - np.count_nonzero(np.isfinite(x)))
        raise NumericalError(f"{bad} non-finite value(s) in {where}")
    return x


def matvec(m: DenseMatrix, x) -> np.ndarray:
    """y = m @ x with explicit shape checking."""
    m = np.asarray(m, dtype=DTYPE)
    x = np.asarray(x, dtype=DTYPE)
    if m.ndim != 2 or x.ndim != 1 or m.shape[1] != x.shape[0]:
        raise ShapeError(f"matvec: matrix {m.shape} incompatible with vector {x.shape}")
    return m @ x


def dense_rows(x: np.ndarray, weight: DenseMatrix, bias: np.ndarray) -> np.ndarray:
    """Affine layer applied to every row of `x`: x @ W.T + b."""
    if x.ndim != 2 or x.shape[1] != weight.shape[1] or bias.shape != (weight.shape[0],):
        raise ShapeError(
            f"dense layer: input {x.shape} incompatible with weight {weight.shape} "
            f"and bias {bias.shape}"
        )
    return x @ weight.T + bias


def relu(x) -> np.ndarray:
    return np.maximum(np.asarray(x, dtype=DTYPE), 0.0)


def relu_grad(x) -> np.ndarray:
    # subgradient at exactly 0 is 0
    return np.where(np.asarray(x, dtype=DTYPE) > 0.0, 1.0, 0.0)


def dropout_mask(stream: RandomStream, shape: Shape, rate: float) -> np.ndarray:
    """
    Inverted dropout mask: 0 with probability `rate`, else 1 / (1 - rate).

    A rate of 0 returns ones without consuming the stream.
    """
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must lie in [0, 1), got {rate}")
    if rate == 0.0:
        return np.ones(shape, dtype=DTYPE)
    keep = stream.random(shape) >= rate
    return keep.astype(DTYPE) / (1.0 - rate)


def glorot_bound(rows: int, cols: int) -> float:
    return float(np.sqrt(6.0 / (rows + cols)))


def init_dense(stream: RandomStream, rows: int, cols: int) -> DenseMatrix:
    """Weight matrix drawn uniform in +/- sqrt(6 / (rows + cols))."""
    if rows < 1 or cols < 1:
        raise ShapeError(f"init_dense: rows and cols must be >= 1, got {rows}x{cols}")
    bound = glorot_bound(rows, cols)
    return stream.uniform(-bound, bound, (rows, cols)).astype(DTYPE)


def init_bias(rows: int) -> np.ndarray:
    return np.zeros(rows, dtype=DTYPE)
