"""
MIOCK001 checkpoint file.

    magic "MIOCK001"
    config block:  u32 n1, n_scalar, N, n_branch_hidden, n_trunk_hidden,
                   u32 branch widths, u32 trunk widths, f8 dropout_rate
    norm block:    16 x f8 (input min/max, coord min/max, output mean/std)
    layer blocks:  branch1, branch2, trunk, head_T, head_v, head_k, each as
                   u32 rows, u32 cols, rows*cols f8 row-major, rows f8 bias

All fields little-endian.
"""

import logging
from typing import Dict, List

from pydantic import ValidationError

from app.errors import FormatError, ShapeError
from app.network.model import Layer, ModelConfig, ModelParams, NormalizationStats
from app.storage.binary import BinaryReader, BinaryWriter, PathLike, atomic_write, read_bytes

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"MIOCK001"
NORM_FIELDS = 16


def encode_checkpoint(params: ModelParams) -> bytes:
    params.check_shapes()
    config = params.config
    w = BinaryWriter()
    w.magic(CHECKPOINT_MAGIC)
    w.u32(config.n1, config.n_scalar, config.n_nodes, len(config.branch_hidden), len(config.trunk_hidden))
    w.u32(*config.branch_hidden, *config.trunk_hidden)
    w.f64([config.dropout_rate])
    w.f64(params.norm.as_flat())
    for _, layers in params.groups():
        for weight, bias in layers:
            w.u32(*weight.shape)
            w.f64(weight)
            w.f64(bias)
    return w.getvalue()


def decode_checkpoint(data: bytes, source: str = "<bytes>") -> ModelParams:
    r = BinaryReader(data, source)
    r.magic(CHECKPOINT_MAGIC)
    n1, n_scalar, n_nodes, n_branch, n_trunk = r.u32(5)
    widths = r.u32(n_branch + n_trunk)
    (dropout_rate,) = r.f64(1, "dropout rate")
    try:
        config = ModelConfig(
            n1=n1,
            n_scalar=n_scalar,
            n_nodes=n_nodes,
            branch_hidden=widths[:n_branch],
            trunk_hidden=widths[n_branch:],
            dropout_rate=float(dropout_rate),
        )
        norm = NormalizationStats.from_flat(r.f64(NORM_FIELDS, "normalization block"))
    except ValidationError as e:
        raise FormatError(f"{source}: invalid configuration before byte offset {r.offset}: {e}") from e

    layers: Dict[str, List[Layer]] = {}
    for group, shapes in config.layer_shapes().items():
        layers[group] = []
        for i, (rows, cols) in enumerate(shapes):
            at = r.offset
            found = r.u32(2)
            if found != (rows, cols):
                raise ShapeError(
                    f"{source}: layer {group}.{i} at byte offset {at} has shape {found}, "
                    f"configuration requires {(rows, cols)}"
                )
            weight = r.f64(rows * cols, f"{group}.{i} weight").reshape(rows, cols)
            bias = r.f64(rows, f"{group}.{i} bias")
            layers[group].append((weight, bias))
    r.finish()
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


def write_checkpoint(path: PathLike, params: ModelParams) -> None:
    atomic_write(path, encode_checkpoint(params))
    logger.info(f"Wrote checkpoint ({len(params.arrays())} tensors) to {path}")


def read_checkpoint(path: PathLike) -> ModelParams:
    params = decode_checkpoint(read_bytes(path), str(path))
    logger.info(f"Read checkpoint n1={params.config.n1}, N={params.config.n_nodes} from {path}")
    return params
