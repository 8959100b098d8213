"""
Domain records shared by the oracle, the operator network and storage.
"""

from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

QUANTITIES = ("T", "v", "k")

# slack for floating-point geometry tests on mesh nodes
GEOMETRY_TOLERANCE = 1e-12


def _frozen_array(value, ndim: int, name: str) -> np.ndarray:
    arr = np.array(value, dtype=np.float64, copy=True)
    if arr.ndim != ndim:
        raise ValueError(f"{name}: expected {ndim}-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: contains non-finite values")
    arr.flags.writeable = False
    return arr


class InputRanges(BaseModel):
    """Closed sampling intervals of the three operating parameters."""

    model_config = ConfigDict(frozen=True)

    p_max: Tuple[float, float] = (540.0, 660.0)  # kW/m^2
    t_in: Tuple[float, float] = (536.4, 655.6)  # K
    v_in: Tuple[float, float] = (4.05, 4.95)  # m/s

    @model_validator(mode="after")
    def _ordered(self) -> "InputRanges":
        for name in ("p_max", "t_in", "v_in"):
            low, high = getattr(self, name)
            if not high > low:
                raise ValueError(f"range {name}: upper bound {high} must exceed lower bound {low}")
        return self

    def as_flat(self) -> Tuple[float, ...]:
        return (*self.p_max, *self.t_in, *self.v_in)

    @classmethod
    def from_flat(cls, values) -> "InputRanges":
        v = [float(x) for x in values]
        return cls(p_max=(v[0], v[1]), t_in=(v[2], v[3]), v_in=(v[4], v[5]))

    def contains(self, p_max: float, t_in: float, v_in: float) -> bool:
        return (
            self.p_max[0] <= p_max <= self.p_max[1]
            and self.t_in[0] <= t_in <= self.t_in[1]
            and self.v_in[0] <= v_in <= self.v_in[1]
        )


DEFAULT_RANGES = InputRanges()


class InputSample(BaseModel):
    """One operating condition: rod heat-flux profile plus inlet scalars."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    p_rod: np.ndarray  # kW/m^2 at the n1 sensor points
    t_in: float = Field(gt=0)  # K
    v_in: float = Field(gt=0)  # m/s

    @field_validator("p_rod", mode="before")
    @classmethod
    def _p_rod_array(cls, value) -> np.ndarray:
        arr = _frozen_array(value, 1, "p_rod")
        if np.any(arr < 0):
            raise ValueError("p_rod: heat flux must be non-negative")
        return arr

    @property
    def n1(self) -> int:
        return int(self.p_rod.shape[0])

    @property
    def p_max(self) -> float:
        return float(self.p_rod.max()) if self.p_rod.size else 0.0


class CenterPlaneMesh(BaseModel):
    """Node positions and wall distances on the subchannel center plane."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    coords: np.ndarray  # (N, 2) meters
    wall_distance: np.ndarray  # (N,) meters
    pitch: float = Field(gt=0)
    rod_diameter: float = Field(gt=0)
    z_plane: float = Field(ge=0)
    target_n: Optional[int] = None

    @field_validator("coords", mode="before")
    @classmethod
    def _coords_array(cls, value) -> np.ndarray:
        arr = _frozen_array(value, 2, "coords")
        if arr.shape[1] != 2:
            raise ValueError(f"coords: expected shape (N, 2), got {arr.shape}")
        return arr

    @field_validator("wall_distance", mode="before")
    @classmethod
    def _wall_distance_array(cls, value) -> np.ndarray:
        return _frozen_array(value, 1, "wall_distance")

    @model_validator(mode="after")
    def _inside_subchannel(self) -> "CenterPlaneMesh":
        if self.coords.shape[0] != self.wall_distance.shape[0]:
            raise ValueError(
                f"mesh: {self.coords.shape[0]} coordinates but "
                f"{self.wall_distance.shape[0]} wall distances"
            )
        if np.any(self.wall_distance < 0):
            raise ValueError("mesh: wall distance must be non-negative")
        tol = GEOMETRY_TOLERANCE
        if np.any(self.coords < -tol) or np.any(self.coords > self.pitch + tol):
            raise ValueError("mesh: node outside the pitch square")
        radius = 0.5 * self.rod_diameter
        for cx, cy in rod_centers(self.pitch):
            dist = np.hypot(self.coords[:, 0] - cx, self.coords[:, 1] - cy)
            if np.any(dist < radius - tol):
                raise ValueError(f"mesh: node inside the rod centered at ({cx}, {cy})")
        return self

    @property
    def n_nodes(self) -> int:
        return int(self.coords.shape[0])

    @property
    def bounds(self) -> Tuple[Tuple[float, float], Tuple[float, float]]:
        return (0.0, 0.0), (self.pitch, self.pitch)

    def subset(self, indices) -> "CenterPlaneMesh":
        idx = np.asarray(indices, dtype=np.int64)
        return CenterPlaneMesh(
            coords=self.coords[idx],
            wall_distance=self.wall_distance[idx],
            pitch=self.pitch,
            rod_diameter=self.rod_diameter,
            z_plane=self.z_plane,
            target_n=self.target_n,
        )


def rod_centers(pitch: float) -> List[Tuple[float, float]]:
    """Centers of the four quarter rods at the corners of the pitch square."""
    return [(0.0, 0.0), (pitch, 0.0), (pitch, pitch), (0.0, pitch)]


class FieldSnapshot(BaseModel):
    """Temperature, velocity and turbulence kinetic energy on the mesh nodes."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    T: np.ndarray  # K
    v: np.ndarray  # m/s
    k: np.ndarray  # m^2/s^2
    out_of_range: bool = False

    @field_validator("T", "v", "k", mode="before")
    @classmethod
    def _field_array(cls, value, info) -> np.ndarray:
        return _frozen_array(value, 1, info.field_name)

    @model_validator(mode="after")
    def _same_length(self) -> "FieldSnapshot":
        lengths = {self.T.shape[0], self.v.shape[0], self.k.shape[0]}
        if len(lengths) != 1:
            raise ValueError(f"snapshot: field lengths differ {sorted(lengths)}")
        return self

    @property
    def n_nodes(self) -> int:
        return int(self.T.shape[0])

    def as_array(self) -> np.ndarray:
        """Fields stacked as a (3, N) array in T, v, k order."""
        return np.stack([self.T, self.v, self.k])

    @classmethod
    def from_array(cls, values: np.ndarray, out_of_range: bool = False) -> "FieldSnapshot":
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != len(QUANTITIES):
            raise ValueError(f"snapshot: expected a (3, N) array, got {values.shape}")
        return cls(T=values[0], v=values[1], k=values[2], out_of_range=out_of_range)
