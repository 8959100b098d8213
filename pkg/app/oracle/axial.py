"""
Axial energy balance along the heated subchannel and the Nusselt data reduction.

The bulk temperature follows from integrating the rod heat flux along z; the
wall temperature adds q / h with h from the Weisman bundle correlation. The
round trip then recovers h(z) = q / (T_w - T_b), averages it over the length
and compares the resulting Nusselt number with the correlation.
"""

import logging
from typing import List, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy.integrate import cumulative_trapezoid, trapezoid

from app.errors import OracleError
from app.schemas import InputSample
from app.oracle.correlations import reynolds, weisman_factor, weisman_nusselt
from app.oracle.properties import FluidProperties, GeometrySpec

logger = logging.getLogger(__name__)

MIN_AXIAL_POINTS = 16
DEFAULT_AXIAL_POINTS = 256
CONVERGENCE_GRID = (16, 32, 64, 128, 256)

KW = 1000.0  # flux profiles are stored in kW/m^2


def sensor_positions(n1: int, length: float) -> np.ndarray:
    """Cell-center positions z_j = (j + 1/2) * length / n1."""
    if n1 < 2:
        raise OracleError(f"flux profile needs at least 2 sensor points, got n1={n1}")
    return (np.arange(n1, dtype=np.float64) + 0.5) * (length / n1)


def sample_heat_flux(p_max: float, n1: int, length: float) -> np.ndarray:
    """
    Sinusoidal rod heat flux at the n1 branch sensor points.

    Args:
        p_max: Peak heat flux in kW/m^2
        n1: Number of sensor points (>= 2)
        length: Heated length in meters

    Returns:
        q_j = p_max * sin(pi * z_j / length), strictly positive for p_max > 0
    """
    z = sensor_positions(n1, length)
    return p_max * np.sin(np.pi * z / length)


class AxialProfile(BaseModel):
    """Axial distributions of flux, bulk and wall temperature and h."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    z: np.ndarray  # m
    q: np.ndarray  # W/m^2
    t_b: np.ndarray  # K
    t_w: np.ndarray  # K
    h: np.ndarray  # W/(m^2 K)
    t_in: float
    v_in: float

    @field_validator("z", "q", "t_b", "t_w", "h", mode="before")
    @classmethod
    def _vector(cls, value, info) -> np.ndarray:
        arr = np.array(value, dtype=np.float64, copy=True)
        if arr.ndim != 1:
            raise ValueError(f"{info.field_name}: expected 1-D array, got shape {arr.shape}")
        arr.flags.writeable = False
        return arr

    @model_validator(mode="after")
    def _same_grid(self) -> "AxialProfile":
        n = self.z.shape[0]
        if n < 2:
            raise ValueError("axial profile needs at least 2 points")
        for name in ("q", "t_b", "t_w", "h"):
            if getattr(self, name).shape[0] != n:
                raise ValueError(f"axial profile: {name} has {getattr(self, name).shape[0]} points, z has {n}")
        return self

    @property
    def n_z(self) -> int:
        return int(self.z.shape[0])

    @property
    def heated_length(self) -> float:
        return float(self.z[-1] - self.z[0])

    def at(self, z_plane: float) -> tuple:
        """(T_b, T_w) linearly interpolated at one axial position."""
        return float(np.interp(z_plane, self.z, self.t_b)), float(np.interp(z_plane, self.z, self.t_w))


def axial_profiles(
    sample: InputSample,
    geom: GeometrySpec,
    props: FluidProperties,
    n_z: int = DEFAULT_AXIAL_POINTS,
) -> AxialProfile:
    """
    Energy balance on a uniform grid of n_z points over [0, length].

    The sensor flux is linearly interpolated onto the grid and held at the
    end sensor values between the outermost sensors and the channel ends.
    """
    if n_z < MIN_AXIAL_POINTS:
        raise OracleError(f"axial grid needs n_z >= {MIN_AXIAL_POINTS}, got {n_z}")
    z = np.linspace(0.0, geom.length, n_z)
    q = np.interp(z, sensor_positions(sample.n1, geom.length), sample.p_rod * KW)

    re = reynolds(geom, props, sample.v_in)
    nu = weisman_nusselt(re, props.prandtl, geom.pitch_to_diameter)
    h = nu * props.thermal_conductivity / geom.hydraulic_diameter

    mass_heat_rate = props.density * sample.v_in * geom.flow_area * props.specific_heat
    t_b = sample.t_in + (geom.wetted_perimeter / mass_heat_rate) * cumulative_trapezoid(q, z, initial=0.0)
    t_w = t_b + q / h

    return AxialProfile(
        z=z,
        q=q,
        t_b=t_b,
        t_w=t_w,
        h=np.full(n_z, h),
        t_in=sample.t_in,
        v_in=sample.v_in,
    )


def average_coefficient(z: np.ndarray, h: np.ndarray) -> float:
    """h_avg = (1 / L) * integral of h(z) dz, trapezoid rule."""
    span = float(z[-1] - z[0])
    if not span > 0:
        raise OracleError("axial grid must span a positive length")
    return float(trapezoid(h, z) / span)


class NusseltReport(BaseModel):
    h_avg: float
    nu_avg: float
    nu_weisman: float
    margin_percent: float
    reynolds: float
    prandtl: float
    weisman_factor: float
    n_z: int


def nusselt_roundtrip(profile: AxialProfile, geom: GeometrySpec, props: FluidProperties) -> NusseltReport:
    """Recover h(z) from the temperatures, average it, and compare with Weisman."""
    dt = profile.t_w - profile.t_b
    # where q = 0 the wall and bulk coincide and h is taken from the closure
    h_local = np.divide(profile.q, dt, out=np.array(profile.h, copy=True), where=dt > 0.0)
    h_avg = average_coefficient(profile.z, h_local)

    re = reynolds(geom, props, profile.v_in)
    nu_weisman = weisman_nusselt(re, props.prandtl, geom.pitch_to_diameter)
    nu_avg = h_avg * geom.hydraulic_diameter / props.thermal_conductivity
    margin = abs(nu_avg - nu_weisman) / nu_weisman * 100.0

    logger.debug(f"Nusselt round trip at n_z={profile.n_z}: Nu_avg={nu_avg:.6g}, margin={margin:.3e}%")
    return NusseltReport(
        h_avg=h_avg,
        nu_avg=nu_avg,
        nu_weisman=nu_weisman,
        margin_percent=margin,
        reynolds=re,
        prandtl=props.prandtl,
        weisman_factor=weisman_factor(geom.pitch_to_diameter),
        n_z=profile.n_z,
    )


class MarginPoint(BaseModel):
    n_z: int
    margin_percent: float


def margin_convergence(
    sample: InputSample,
    geom: GeometrySpec,
    props: FluidProperties,
    n_z_values: Sequence[int] = CONVERGENCE_GRID,
) -> List[MarginPoint]:
    """Round-trip margin for each axial resolution, in the order given."""
    points = []
    for n_z in n_z_values:
        report = nusselt_roundtrip(axial_profiles(sample, geom, props, n_z), geom, props)
        points.append(MarginPoint(n_z=n_z, margin_percent=report.margin_percent))
    return points
