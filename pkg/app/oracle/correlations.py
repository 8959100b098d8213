"""
Dimensionless-group correlations for turbulent flow in a square rod lattice.

- Reynolds number on the hydraulic diameter
- Entrance length Z_L = 4.4 Re^(1/6)
- Weisman bundle Nusselt number, psi * 0.023 Re^0.8 Pr^0.333
- Blasius friction factor and friction velocity
"""

import logging
from typing import Iterable, List, Tuple

import numpy as np
from pydantic import BaseModel

from app.errors import OracleError
from app.oracle.properties import FluidProperties, GeometrySpec

logger = logging.getLogger(__name__)

# P/D band where the Weisman square-array correlation is used
WEISMAN_PD_BAND: Tuple[float, float] = (1.1, 1.5)

# default inlet velocity interval, m/s
VELOCITY_SWEEP = (4.05, 4.95)


def _require_positive(value: float, name: str) -> float:
    if not value > 0 or not np.isfinite(value):
        raise OracleError(f"{name} must be positive and finite, got {value}")
    return float(value)


def reynolds(geom: GeometrySpec, props: FluidProperties, v_in: float) -> float:
    """Re = rho * v * D_h / mu."""
    v_in = _require_positive(v_in, "inlet velocity")
    return props.density * v_in * geom.hydraulic_diameter / props.dynamic_viscosity


def entrance_length_number(re: float) -> float:
    """Dimensionless entrance length Z_L = 4.4 Re^(1/6)."""
    re = _require_positive(re, "Reynolds number")
    return 4.4 * re ** (1.0 / 6.0)


def entrance_length(re: float, hydraulic_diameter: float) -> float:
    """Hydrodynamic entrance length in meters, Z_L * D_h."""
    hydraulic_diameter = _require_positive(hydraulic_diameter, "hydraulic diameter")
    return entrance_length_number(re) * hydraulic_diameter


class EntranceLengthRow(BaseModel):
    v_in: float
    reynolds: float
    z_l: float
    length: float
    sufficient: bool


def entrance_length_table(
    geom: GeometrySpec,
    props: FluidProperties,
    velocities: Iterable[float] = None,
) -> List[EntranceLengthRow]:
    """
    Entrance length over a sweep of inlet velocities.

    Args:
        geom: Subchannel geometry; a row is sufficient when L < geom.length
        props: Coolant properties
        velocities: Inlet velocities in m/s; 10 points over [4.05, 4.95] by default

    Returns:
        One row per velocity, in the order given
    """
    if velocities is None:
        velocities = np.linspace(*VELOCITY_SWEEP, 10)
    rows = []
    for v_in in velocities:
        re = reynolds(geom, props, float(v_in))
        z_l = entrance_length_number(re)
        length = z_l * geom.hydraulic_diameter
        rows.append(
            EntranceLengthRow(
                v_in=float(v_in),
                reynolds=re,
                z_l=z_l,
                length=length,
                sufficient=length < geom.length,
            )
        )
    return rows


def weisman_factor(p_over_d: float) -> float:
    """Square-array bundle factor psi = 1.130 P/D - 0.2609."""
    low, high = WEISMAN_PD_BAND
    if not low <= p_over_d <= high:
        raise OracleError(
            f"P/D = {p_over_d} is outside the Weisman correlation band [{low}, {high}]"
        )
    return 1.130 * p_over_d - 0.2609


def weisman_nusselt(re: float, pr: float, p_over_d: float) -> float:
    """Fully developed bundle Nusselt number."""
    re = _require_positive(re, "Reynolds number")
    pr = _require_positive(pr, "Prandtl number")
    return weisman_factor(p_over_d) * 0.023 * re ** 0.8 * pr ** 0.333


def blasius_friction(re: float) -> float:
    """Darcy friction factor, smooth turbulent flow."""
    re = _require_positive(re, "Reynolds number")
    return 0.316 * re ** -0.25


def friction_velocity(v_in: float, re: float) -> float:
    """u_tau = v * sqrt(f / 8) with the Blasius friction factor."""
    v_in = _require_positive(v_in, "inlet velocity")
    return v_in * float(np.sqrt(blasius_friction(re) / 8.0))
