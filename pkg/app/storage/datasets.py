"""
MIODS001 dataset file.

    offset  size        field
    0       8           magic "MIODS001"
    8       4 x u32     n_samples, n1, N, n_scalar
    24      6 x f8      ranges: p_max lo/hi, t_in lo/hi, v_in lo/hi
    72      u64         generation seed
    80      3 x f8      pitch, rod_diameter, length
    104     N x 3 f8    mesh nodes (x, y, wall_distance)
    ...     per sample  p_rod[n1], t_in, v_in, T[N], v[N], k[N]

All fields little-endian. The mesh plane is mid-length by convention.
"""

import logging
import os
from typing import NamedTuple, Tuple

import numpy as np
from pydantic import ValidationError

from app.errors import FormatError
from app.schemas import CenterPlaneMesh, FieldSnapshot, InputRanges, InputSample
from app.network.numerics import SEED_MASK
from app.oracle.dataset import Dataset
from app.oracle.fields import within_ranges
from app.oracle.properties import GeometrySpec
from app.storage.binary import BinaryReader, BinaryWriter, PathLike, atomic_write, read_bytes

logger = logging.getLogger(__name__)

DATASET_MAGIC = b"MIODS001"
HEADER_BYTES = 104
N_SCALAR = 2


def dataset_file_size(n_samples: int, n1: int, n_nodes: int) -> int:
    return HEADER_BYTES + 8 * (3 * n_nodes + n_samples * (n1 + N_SCALAR + 3 * n_nodes))


def encode_dataset(dataset: Dataset) -> bytes:
    mesh = dataset.mesh
    geom = dataset.geometry
    w = BinaryWriter()
    w.magic(DATASET_MAGIC)
    w.u32(len(dataset), dataset.n1, mesh.n_nodes, N_SCALAR)
    w.f64(dataset.ranges.as_flat())
    w.u64(int(dataset.seed) & SEED_MASK)
    w.f64([geom.pitch, geom.rod_diameter, geom.length])
    w.f64(np.column_stack([mesh.coords, mesh.wall_distance]))
    for sample, snap in zip(dataset.samples, dataset.snapshots):
        w.f64(sample.p_rod)
        w.f64([sample.t_in, sample.v_in])
        w.f64(snap.as_array())
    return w.getvalue()


class DatasetHeader(NamedTuple):
    n_samples: int
    n1: int
    n_nodes: int
    ranges: InputRanges
    seed: int
    geometry: GeometrySpec
    mesh: CenterPlaneMesh


def _decode_header(r: BinaryReader, total_size: int) -> DatasetHeader:
    """Reads magic, header and mesh block; checks the declared file size."""
    source = r.source
    r.magic(DATASET_MAGIC)
    n_samples, n1, n_nodes, n_scalar = r.u32(4)
    if n_scalar != N_SCALAR:
        raise FormatError(f"{source}: n_scalar at byte offset 20 is {n_scalar}, expected {N_SCALAR}")
    expected = dataset_file_size(n_samples, n1, n_nodes)
    if total_size != expected:
        raise FormatError(
            f"{source}: header declares {expected} bytes "
            f"(n_samples={n_samples}, n1={n1}, N={n_nodes}) but file has {total_size}"
        )
    try:
        ranges = InputRanges.from_flat(r.f64(6, "ranges"))
        seed = r.u64()
        pitch, rod_diameter, length = r.f64(3, "geometry")
        geometry = GeometrySpec(pitch=pitch, rod_diameter=rod_diameter, length=length)
        nodes = r.f64(3 * n_nodes, "mesh block").reshape(n_nodes, 3)
        mesh = CenterPlaneMesh(
            coords=nodes[:, :2],
            wall_distance=nodes[:, 2],
            pitch=pitch,
            rod_diameter=rod_diameter,
            z_plane=geometry.mid_plane,
        )
    except (ValidationError, ValueError) as e:
        raise FormatError(f"{source}: invalid header near byte offset {r.offset}: {e}") from e
    return DatasetHeader(n_samples, n1, n_nodes, ranges, seed, geometry, mesh)


def decode_dataset(data: bytes, source: str = "<bytes>") -> Dataset:
    r = BinaryReader(data, source)
    n_samples, n1, n_nodes, ranges, seed, geometry, mesh = _decode_header(r, len(data))
    try:
        samples, snapshots = [], []
        for i in range(n_samples):
            p_rod = r.f64(n1, f"sample {i}")
            t_in, v_in = r.f64(N_SCALAR, f"sample {i}")
            fields = r.f64(3 * n_nodes, f"sample {i}").reshape(3, n_nodes)
            sample = InputSample(p_rod=p_rod, t_in=t_in, v_in=v_in)
            samples.append(sample)
            snapshots.append(FieldSnapshot.from_array(fields, out_of_range=not within_ranges(sample, ranges)))
    except (ValidationError, ValueError) as e:
        raise FormatError(f"{source}: invalid content near byte offset {r.offset}: {e}") from e
    r.finish()
    return Dataset(
        mesh=mesh,
        samples=samples,
        snapshots=snapshots,
        seed=seed,
        ranges=ranges,
        geometry=geometry,
    )


def write_dataset(path: PathLike, dataset: Dataset) -> None:
    atomic_write(path, encode_dataset(dataset))
    logger.info(f"Wrote dataset with {len(dataset)} samples to {path}")


def read_dataset(path: PathLike) -> Dataset:
    dataset = decode_dataset(read_bytes(path), str(path))
    logger.info(f"Read dataset with {len(dataset)} samples, N={dataset.mesh.n_nodes} from {path}")
    return dataset


def read_mesh(path: PathLike) -> Tuple[CenterPlaneMesh, GeometrySpec]:
    """Mesh and geometry of a dataset file without loading its samples."""
    try:
        total_size = os.path.getsize(path)
        with open(path, "rb") as handle:
            head = handle.read(HEADER_BYTES)
            n_nodes = int.from_bytes(head[16:20], "little") if len(head) >= 20 else 0
            head += handle.read(24 * n_nodes)
    except OSError as e:
        raise FormatError(f"cannot read {path}: {e}") from e
    header = _decode_header(BinaryReader(head, str(path)), total_size)
    return header.mesh, header.geometry
