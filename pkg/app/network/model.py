"""
Multi-input operator network for center-plane virtual sensing.

Branch 1 encodes the rod heat-flux profile, branch 2 encodes the inlet
scalars (temperature, velocity), and the trunk encodes every node position
into one scalar. The three encodings are fused element-wise,

    h = phi1 * phi2 * psi

and three linear heads map h to T, v and k in normalized space. The reverse
pass is written out by hand; every product-rule term through the fusion is
explicit.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, TypedDict

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.errors import ShapeError
from app.schemas import QUANTITIES, CenterPlaneMesh, FieldSnapshot, InputRanges, InputSample
from app.network.numerics import (
    RandomStream,
    check_finite,
    dense_rows,
    dropout_mask,
    init_bias,
    init_dense,
    matvec,
    relu,
    relu_grad,
)

logger = logging.getLogger(__name__)

COORD_DIM = 2
HEAD_NAMES = ("head_T", "head_v", "head_k")

Layer = Tuple[np.ndarray, np.ndarray]  # (weight (out, in), bias (out,))


class ModelConfig(BaseModel):
    """Layer widths of the operator network."""

    model_config = ConfigDict(frozen=True)

    n1: int = Field(100, ge=1)
    n_scalar: int = Field(2, ge=1)
    branch_hidden: Tuple[int, ...] = (512, 512, 512)
    trunk_hidden: Tuple[int, ...] = (300, 300, 300)
    n_nodes: int = Field(1733, ge=1)
    dropout_rate: float = Field(0.2, ge=0.0, lt=1.0)

    @field_validator("branch_hidden", "trunk_hidden")
    @classmethod
    def _positive_widths(cls, value: Tuple[int, ...]) -> Tuple[int, ...]:
        if any(width < 1 for width in value):
            raise ValueError(f"hidden widths must be >= 1, got {list(value)}")
        return tuple(int(width) for width in value)

    def layer_sizes(self) -> Dict[str, List[int]]:
        return {
            "branch1": [self.n1, *self.branch_hidden, self.n_nodes],
            "branch2": [self.n_scalar, *self.branch_hidden, self.n_nodes],
            "trunk": [COORD_DIM, *self.trunk_hidden, 1],
            "head_T": [self.n_nodes, self.n_nodes],
            "head_v": [self.n_nodes, self.n_nodes],
            "head_k": [self.n_nodes, self.n_nodes],
        }

    def layer_shapes(self) -> Dict[str, List[Tuple[int, int]]]:
        """(rows, cols) of every weight matrix, per sub-network."""
        return {
            name: [(sizes[i + 1], sizes[i]) for i in range(len(sizes) - 1)]
            for name, sizes in self.layer_sizes().items()
        }


def count_params(config: ModelConfig) -> int:
    """Exact trainable parameter count (weights plus biases)."""
    return sum(
        rows * cols + rows
        for shapes in config.layer_shapes().values()
        for rows, cols in shapes
    )


class NormalizationStats(BaseModel):
    """
    Scaling applied around the network.

    Inputs are min-max scaled with fixed operating ranges (flux, T_in, v_in),
    coordinates with the pitch-square bounding box, and outputs are z-scored
    per quantity with statistics of the training split.
    """

    model_config = ConfigDict(frozen=True)

    input_min: Tuple[float, float, float]
    input_max: Tuple[float, float, float]
    coord_min: Tuple[float, float]
    coord_max: Tuple[float, float]
    output_mean: Tuple[float, float, float]
    output_std: Tuple[float, float, float]

    @model_validator(mode="after")
    def _valid_scales(self) -> "NormalizationStats":
        for lo, hi in zip(self.input_min + self.coord_min, self.input_max + self.coord_max):
            if not hi > lo:
                raise ValueError(f"normalization: max {hi} must exceed min {lo}")
        if any(not std > 0 for std in self.output_std):
            raise ValueError(f"normalization: output std must be positive, got {self.output_std}")
        return self

    @classmethod
    def from_training_data(
        cls, ranges: InputRanges, mesh: CenterPlaneMesh, targets: np.ndarray
    ) -> "NormalizationStats":
        """Build stats from the operating ranges and (S, 3, N) training targets."""
        targets = np.asarray(targets, dtype=np.float64)
        if targets.ndim != 3 or targets.shape[1] != len(QUANTITIES):
            raise ShapeError(f"normalization: expected targets of shape (S, 3, N), got {targets.shape}")
        mean = targets.mean(axis=(0, 2))
        std = targets.std(axis=(0, 2))
        # constant quantity in the training split
        std = np.where(std > 0.0, std, 1.0)
        (x0, y0), (x1, y1) = mesh.bounds
        return cls(
            input_min=(0.0, ranges.t_in[0], ranges.v_in[0]),
            input_max=(ranges.p_max[1], ranges.t_in[1], ranges.v_in[1]),
            coord_min=(x0, y0),
            coord_max=(x1, y1),
            output_mean=tuple(float(x) for x in mean),
            output_std=tuple(float(x) for x in std),
        )

    def as_flat(self) -> Tuple[float, ...]:
        return (
            *self.input_min, *self.input_max, *self.coord_min,
            *self.coord_max, *self.output_mean, *self.output_std,
        )

    @classmethod
    def from_flat(cls, values: Sequence[float]) -> "NormalizationStats":
        v = [float(x) for x in values]
        return cls(
            input_min=tuple(v[0:3]),
            input_max=tuple(v[3:6]),
            coord_min=tuple(v[6:8]),
            coord_max=tuple(v[8:10]),
            output_mean=tuple(v[10:13]),
            output_std=tuple(v[13:16]),
        )

    def normalize_inputs(self, sample: InputSample) -> Tuple[np.ndarray, np.ndarray]:
        lo = np.asarray(self.input_min)
        span = np.asarray(self.input_max) - lo
        flux = (sample.p_rod - lo[0]) / span[0]
        scalars = (np.array([sample.t_in, sample.v_in]) - lo[1:]) / span[1:]
        return flux, scalars

    def normalize_coords(self, coords: np.ndarray) -> np.ndarray:
        lo = np.asarray(self.coord_min)
        return (coords - lo) / (np.asarray(self.coord_max) - lo)

    def normalize_outputs(self, values: np.ndarray) -> np.ndarray:
        mean = np.asarray(self.output_mean)[:, None]
        std = np.asarray(self.output_std)[:, None]
        return (np.asarray(values, dtype=np.float64) - mean) / std

    def denormalize_outputs(self, values: np.ndarray) -> np.ndarray:
        mean = np.asarray(self.output_mean)[:, None]
        std = np.asarray(self.output_std)[:, None]
        return np.asarray(values, dtype=np.float64) * std + mean


@dataclass
class LayerTree:
    """Weights and biases laid out per sub-network in declared order."""

    branch1: List[Layer]
    branch2: List[Layer]
    trunk: List[Layer]
    head_T: Layer
    head_v: Layer
    head_k: Layer

    def groups(self) -> List[Tuple[str, List[Layer]]]:
        return [
            ("branch1", self.branch1),
            ("branch2", self.branch2),
            ("trunk", self.trunk),
            ("head_T", [self.head_T]),
            ("head_v", [self.head_v]),
            ("head_k", [self.head_k]),
        ]

    @property
    def heads(self) -> List[Layer]:
        return [self.head_T, self.head_v, self.head_k]

    def named_tensors(self) -> List[Tuple[str, np.ndarray]]:
        named = []
        for group, layers in self.groups():
            for i, (weight, bias) in enumerate(layers):
                prefix = group if group in HEAD_NAMES else f"{group}.{i}"
                named.append((f"{prefix}.weight", weight))
                named.append((f"{prefix}.bias", bias))
        return named

    def arrays(self) -> List[np.ndarray]:
        return [tensor for _, tensor in self.named_tensors()]

    def weights(self) -> List[np.ndarray]:
        return [weight for _, layers in self.groups() for weight, _ in layers]


@dataclass
class Gradients(LayerTree):
    """Loss derivatives with the same layout as the parameters."""

    @classmethod
    def zeros_like(cls, tree: LayerTree) -> "Gradients":
        def zeros(layers: List[Layer]) -> List[Layer]:
            return [(np.zeros_like(w), np.zeros_like(b)) for w, b in layers]

        return cls(
            branch1=zeros(tree.branch1),
            branch2=zeros(tree.branch2),
            trunk=zeros(tree.trunk),
            head_T=zeros([tree.head_T])[0],
            head_v=zeros([tree.head_v])[0],
            head_k=zeros([tree.head_k])[0],
        )


@dataclass
class ModelParams(LayerTree):
    """Every trainable tensor plus the configuration and scaling it belongs to."""

    config: ModelConfig = field(default_factory=ModelConfig)
    norm: Optional[NormalizationStats] = None

    def check_shapes(self) -> None:
        expected = self.config.layer_shapes()
        for group, layers in self.groups():
            shapes = [tuple(w.shape) for w, _ in layers]
            if shapes != expected[group]:
                raise ShapeError(f"{group}: expected weight shapes {expected[group]}, found {shapes}")
            for (rows, _), (_, bias) in zip(shapes, layers):
                if bias.shape != (rows,):
                    raise ShapeError(f"{group}: expected bias of length {rows}, found {bias.shape}")

    def copy(self) -> "ModelParams":
        def clone(layers: List[Layer]) -> List[Layer]:
            return [(w.copy(), b.copy()) for w, b in layers]

        return ModelParams(
            branch1=clone(self.branch1),
            branch2=clone(self.branch2),
            trunk=clone(self.trunk),
            head_T=clone([self.head_T])[0],
            head_v=clone([self.head_v])[0],
            head_k=clone([self.head_k])[0],
            config=self.config,
            norm=self.norm,
        )


def init_params(config: ModelConfig, norm: NormalizationStats, seed: int) -> ModelParams:
    """Glorot-uniform weights and zero biases, drawn in declared layer order."""
    stream = RandomStream(seed)
    shapes = config.layer_shapes()
    layers = {
        group: [(init_dense(stream, rows, cols), init_bias(rows)) for rows, cols in group_shapes]
        for group, group_shapes in shapes.items()
    }
    return ModelParams(
        branch1=layers["branch1"],
        branch2=layers["branch2"],
        trunk=layers["trunk"],
        head_T=layers["head_T"][0],
        head_v=layers["head_v"][0],
        head_k=layers["head_k"][0],
        config=config,
        norm=norm,
    )


class SubnetTrace(TypedDict):
    """Per-layer record of one branch or trunk pass."""
    inputs: List[np.ndarray]
    pre_activations: List[np.ndarray]
    masks: List[np.ndarray]


class ForwardTrace(TypedDict):
    """Everything the reverse pass needs from one training-mode forward."""
    branch1: SubnetTrace
    branch2: SubnetTrace
    trunk: SubnetTrace
    phi1: np.ndarray
    phi2: np.ndarray
    psi: np.ndarray
    h: np.ndarray
    outputs: np.ndarray


def _empty_subnet_trace() -> SubnetTrace:
    return SubnetTrace(inputs=[], pre_activations=[], masks=[])


def _subnet_forward(
    name: str,
    layers: List[Layer],
    x: np.ndarray,
    stream: Optional[RandomStream],
    rate: float,
    trace: Optional[SubnetTrace],
) -> np.ndarray:
    """Hidden layers are affine + ReLU (+ dropout when a stream is given); the last is affine."""
    a = x
    last = len(layers) - 1
    for i, (weight, bias) in enumerate(layers):
        z = check_finite(dense_rows(a, weight, bias), f"{name} layer {i}")
        if trace is not None:
            trace["inputs"].append(a)
            trace["pre_activations"].append(z)
        if i == last:
            return z
        a = relu(z)
        if stream is not None:
            mask = dropout_mask(stream, a.shape, rate)
            a = a * mask
            if trace is not None:
                trace["masks"].append(mask)
    return a


def _check_inputs(params: ModelParams, sample: InputSample, mesh: CenterPlaneMesh) -> None:
    config = params.config
    if params.norm is None:
        raise ShapeError("model parameters carry no normalization statistics")
    if sample.n1 != config.n1:
        raise ShapeError(f"flux profile has {sample.n1} points but branch 1 expects n1={config.n1}")
    if config.n_scalar != 2:
        raise ShapeError(f"branch 2 expects n_scalar={config.n_scalar} inputs but samples carry 2 (t_in, v_in)")
    if mesh.n_nodes != config.n_nodes:
        raise ShapeError(f"mesh has N={mesh.n_nodes} nodes but the model expects N={config.n_nodes}")
    params.check_shapes()


def forward(
    params: ModelParams,
    sample: InputSample,
    mesh: CenterPlaneMesh,
    stream: Optional[RandomStream] = None,
) -> Tuple[np.ndarray, Optional[ForwardTrace]]:
    """
    Evaluate the network on one sample over all mesh nodes.

    Passing a stream selects training mode: dropout is drawn from the stream
    and a ForwardTrace is returned. Without a stream the pass is deterministic
    and no trace is kept.

    Returns:
        (outputs, trace) with outputs of shape (3, N) in normalized T, v, k order
    """
    _check_inputs(params, sample, mesh)
    norm = params.norm
    rate = params.config.dropout_rate
    flux, scalars = norm.normalize_inputs(sample)
    coords = norm.normalize_coords(mesh.coords)

    trace = None
    if stream is not None:
        trace = {name: _empty_subnet_trace() for name in ("branch1", "branch2", "trunk")}

    def sub(name: str) -> Optional[SubnetTrace]:
        return trace[name] if trace is not None else None

    phi1 = _subnet_forward("branch1", params.branch1, flux[None, :], stream, rate, sub("branch1"))[0]
    phi2 = _subnet_forward("branch2", params.branch2, scalars[None, :], stream, rate, sub("branch2"))[0]
    psi = _subnet_forward("trunk", params.trunk, coords, stream, rate, sub("trunk"))[:, 0]

    h = phi1 * phi2 * psi
    outputs = np.stack([matvec(weight, h) + bias for weight, bias in params.heads])
    check_finite(outputs, "output heads")

    if trace is None:
        return outputs, None
    return outputs, ForwardTrace(
        branch1=trace["branch1"],
        branch2=trace["branch2"],
        trunk=trace["trunk"],
        phi1=phi1,
        phi2=phi2,
        psi=psi,
        h=h,
        outputs=outputs,
    )


def _subnet_backward(name: str, layers: List[Layer], trace: SubnetTrace, d_out: np.ndarray) -> List[Layer]:
    n_layers = len(layers)
    if len(trace["pre_activations"]) != n_layers or len(trace["masks"]) != n_layers - 1:
        raise ShapeError(
            f"{name}: trace holds {len(trace['pre_activations'])} layers but parameters hold {n_layers}"
        )
    grads: List[Layer] = [None] * n_layers
    dz = d_out
    for i in reversed(range(n_layers)):
        weight, _ = layers[i]
        a_in = trace["inputs"][i]
        if a_in.shape[1] != weight.shape[1] or dz.shape[1] != weight.shape[0]:
            raise ShapeError(
                f"{name} layer {i}: trace input {a_in.shape} and gradient {dz.shape} "
                f"do not match weight {weight.shape}"
            )
        grads[i] = (dz.T @ a_in, dz.sum(axis=0))
        if i == 0:
            break
        da = (dz @ weight) * trace["masks"][i - 1]
        dz = da * relu_grad(trace["pre_activations"][i - 1])
    return grads


def backward(params: ModelParams, trace: ForwardTrace, output_grads) -> Gradients:
    """
    Reverse pass from d(loss)/d(outputs), shape (3, N), to every weight and bias.
    """
    g = np.asarray(output_grads, dtype=np.float64)
    n_nodes = trace["h"].shape[0]
    if g.shape != (len(QUANTITIES), n_nodes):
        raise ShapeError(f"output gradients have shape {g.shape}, expected {(len(QUANTITIES), n_nodes)}")
    if n_nodes != params.config.n_nodes:
        raise ShapeError(f"trace has N={n_nodes} nodes but parameters expect N={params.config.n_nodes}")

    h, phi1, phi2, psi = trace["h"], trace["phi1"], trace["phi2"], trace["psi"]
    head_grads = []
    dh = np.zeros_like(h)
    for q, (weight, _) in enumerate(params.heads):
        head_grads.append((np.outer(g[q], h), g[q].copy()))
        dh += weight.T @ g[q]

    # product rule through h = phi1 * phi2 * psi
    d_phi1 = dh * phi2 * psi
    d_phi2 = dh * phi1 * psi
    d_psi = dh * phi1 * phi2

    return Gradients(
        branch1=_subnet_backward("branch1", params.branch1, trace["branch1"], d_phi1[None, :]),
        branch2=_subnet_backward("branch2", params.branch2, trace["branch2"], d_phi2[None, :]),
        trunk=_subnet_backward("trunk", params.trunk, trace["trunk"], d_psi[:, None]),
        head_T=head_grads[0],
        head_v=head_grads[1],
        head_k=head_grads[2],
    )


def predict(params: ModelParams, sample: InputSample, mesh: CenterPlaneMesh) -> FieldSnapshot:
    """Eval-mode forward followed by per-quantity denormalization to physical units."""
    outputs, _ = forward(params, sample, mesh)
    return FieldSnapshot.from_array(params.norm.denormalize_outputs(outputs))
