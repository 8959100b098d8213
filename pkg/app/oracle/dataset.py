"""
Oracle dataset generation: seeded sampling of operating conditions and the
corresponding center-plane fields.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from app.errors import OracleError
from app.schemas import DEFAULT_RANGES, CenterPlaneMesh, FieldSnapshot, InputRanges, InputSample
from app.network.numerics import RandomStream
from app.oracle.axial import DEFAULT_AXIAL_POINTS, sample_heat_flux
from app.oracle.fields import synthesize_fields
from app.oracle.properties import DEFAULT_GEOMETRY, FluidProperties, GeometrySpec

logger = logging.getLogger(__name__)

DEFAULT_SENSORS = 100


class Dataset(BaseModel):
    """Samples and their snapshots on one shared mesh, with provenance."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    mesh: CenterPlaneMesh
    samples: List[InputSample]
    snapshots: List[FieldSnapshot]
    seed: int = 0
    ranges: InputRanges = DEFAULT_RANGES
    geometry: GeometrySpec = DEFAULT_GEOMETRY
    source_indices: Optional[List[int]] = None

    @model_validator(mode="after")
    def _consistent(self) -> "Dataset":
        if len(self.samples) != len(self.snapshots):
            raise ValueError(f"dataset: {len(self.samples)} samples but {len(self.snapshots)} snapshots")
        n1 = {s.n1 for s in self.samples}
        if len(n1) > 1:
            raise ValueError(f"dataset: flux profiles of differing lengths {sorted(n1)}")
        for i, snap in enumerate(self.snapshots):
            if snap.n_nodes != self.mesh.n_nodes:
                raise ValueError(f"dataset: snapshot {i} has {snap.n_nodes} nodes, mesh has {self.mesh.n_nodes}")
        if self.source_indices is not None and len(self.source_indices) != len(self.samples):
            raise ValueError("dataset: source_indices length differs from sample count")
        return self

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def n1(self) -> int:
        return self.samples[0].n1 if self.samples else 0

    @property
    def indices(self) -> List[int]:
        """Index of every sample in the dataset it was cut from."""
        if self.source_indices is None:
            return list(range(len(self.samples)))
        return list(self.source_indices)

    def subset(self, positions: Sequence[int]) -> "Dataset":
        positions = [int(p) for p in positions]
        origin = self.indices
        return Dataset(
            mesh=self.mesh,
            samples=[self.samples[p] for p in positions],
            snapshots=[self.snapshots[p] for p in positions],
            seed=self.seed,
            ranges=self.ranges,
            geometry=self.geometry,
            source_indices=[origin[p] for p in positions],
        )

    def targets(self) -> np.ndarray:
        """All snapshots stacked as (S, 3, N)."""
        return np.stack([snap.as_array() for snap in self.snapshots])


def draw_conditions(stream: RandomStream, ranges: InputRanges) -> Tuple[float, float, float]:
    """(P_max, T_in, v_in), each uniform over its interval, drawn in that order."""
    p_max = float(stream.uniform(*ranges.p_max))
    t_in = float(stream.uniform(*ranges.t_in))
    v_in = float(stream.uniform(*ranges.v_in))
    return p_max, t_in, v_in


def generate_dataset(
    n_samples: int,
    seed: int,
    geom: GeometrySpec,
    props: FluidProperties,
    mesh: CenterPlaneMesh,
    ranges: InputRanges = DEFAULT_RANGES,
    n1: int = DEFAULT_SENSORS,
    n_z: int = DEFAULT_AXIAL_POINTS,
    workers: int = 1,
) -> Dataset:
    """
    Sample operating conditions and synthesize their fields.

    Sample i draws from its own stream forked from the root seed, so the
    result does not depend on `workers`.

    Args:
        n_samples: Number of samples (>= 1)
        seed: Root seed of the sampler
        geom: Subchannel geometry, must match the mesh
        props: Coolant properties
        mesh: Center-plane mesh shared by all snapshots
        ranges: Sampling intervals
        n1: Sensor points per flux profile
        n_z: Axial grid of the energy balance
        workers: Thread count for synthesis

    Returns:
        Dataset in sample-index order
    """
    if n_samples < 1:
        raise OracleError(f"n_samples must be >= 1, got {n_samples}")
    root = RandomStream(seed)

    def build(index: int) -> Tuple[InputSample, FieldSnapshot]:
        p_max, t_in, v_in = draw_conditions(root.fork(index), ranges)
        sample = InputSample(p_rod=sample_heat_flux(p_max, n1, geom.length), t_in=t_in, v_in=v_in)
        return sample, synthesize_fields(sample, geom, props, mesh, n_z=n_z, ranges=ranges)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(build, range(n_samples)))
    else:
        results = [build(i) for i in range(n_samples)]

    logger.info(f"Generated {n_samples} oracle samples on {mesh.n_nodes} nodes (seed {seed})")
    return Dataset(
        mesh=mesh,
        samples=[sample for sample, _ in results],
        snapshots=[snapshot for _, snapshot in results],
        seed=seed,
        ranges=ranges,
        geometry=geom,
    )
