"""
Ground-truth T, v, k fields on the center plane.

Closures, with d the node wall distance and r = d / d_max:

    v = v_max * r^(1/7)                    v_max set so the node mean equals v_in
    T = T_w + (T_b - T_w) * r^(1/7)        bulk and wall values at z_plane
    k = u_tau^2 * (3 r (1 - r) + 0.1)      u_tau from the Blasius friction factor
"""

import logging
import math

import numpy as np

from app.errors import OracleError
from app.schemas import DEFAULT_RANGES, CenterPlaneMesh, FieldSnapshot, InputRanges, InputSample
from app.oracle.axial import DEFAULT_AXIAL_POINTS, axial_profiles
from app.oracle.correlations import friction_velocity, reynolds
from app.oracle.properties import FluidProperties, GeometrySpec

logger = logging.getLogger(__name__)

POWER_LAW_EXPONENT = 1.0 / 7.0
TKE_BUMP = 3.0
TKE_FLOOR = 0.1


def check_mesh_geometry(mesh: CenterPlaneMesh, geom: GeometrySpec) -> None:
    if not math.isclose(mesh.pitch, geom.pitch, rel_tol=1e-12) or not math.isclose(
        mesh.rod_diameter, geom.rod_diameter, rel_tol=1e-12
    ):
        raise OracleError(
            f"mesh geometry (P={mesh.pitch}, D={mesh.rod_diameter}) does not match "
            f"configured geometry (P={geom.pitch}, D={geom.rod_diameter})"
        )


def within_ranges(sample: InputSample, ranges: InputRanges) -> bool:
    """
    Inlet scalars inside their intervals and peak sensor flux not above the
    upper P_max bound. The sensor peak sits just below the sine peak, so the
    lower P_max bound is not checked against it.
    """
    return (
        ranges.t_in[0] <= sample.t_in <= ranges.t_in[1]
        and ranges.v_in[0] <= sample.v_in <= ranges.v_in[1]
        and sample.p_max <= ranges.p_max[1]
    )


def synthesize_fields(
    sample: InputSample,
    geom: GeometrySpec,
    props: FluidProperties,
    mesh: CenterPlaneMesh,
    n_z: int = DEFAULT_AXIAL_POINTS,
    ranges: InputRanges = DEFAULT_RANGES,
) -> FieldSnapshot:
    """
    Evaluate the oracle closures on every mesh node.

    Inputs outside `ranges` are still evaluated; the snapshot is flagged
    out_of_range and a warning is logged.
    """
    check_mesh_geometry(mesh, geom)
    out_of_range = not within_ranges(sample, ranges)
    if out_of_range:
        logger.warning(
            f"Oracle inputs outside the sampling ranges: peak flux {sample.p_max:.4g} kW/m^2, "
            f"T_in {sample.t_in:.4g} K, v_in {sample.v_in:.4g} m/s"
        )

    d = mesh.wall_distance
    d_max = float(d.max())
    if not d_max > 0:
        raise OracleError("mesh has no node away from the rod walls")
    r = d / d_max
    shape = r ** POWER_LAW_EXPONENT

    profile = axial_profiles(sample, geom, props, n_z)
    t_b, t_w = profile.at(mesh.z_plane)

    v = sample.v_in * shape / shape.mean()
    t = np.clip(t_w + (t_b - t_w) * shape, min(t_b, t_w), max(t_b, t_w))

    u_tau = friction_velocity(sample.v_in, reynolds(geom, props, sample.v_in))
    k = u_tau ** 2 * (TKE_BUMP * r * (1.0 - r) + TKE_FLOOR)

    return FieldSnapshot(T=t, v=v, k=k, out_of_range=out_of_range)
