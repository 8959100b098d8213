"""
Subchannel geometry and coolant property sets used by the oracle.

Geometry defaults are typical 17x17 PWR lattice values. Coolant properties are
constant, evaluated for liquid water at 564 K and 15.5 MPa.
"""

import math

from pydantic import BaseModel, ConfigDict, Field, model_validator

REFERENCE_TEMPERATURE = 564.0  # K
REFERENCE_PRESSURE = 15.5e6  # Pa

# Validation point used for the Nusselt round trip
REFERENCE_VELOCITY = 3.5  # m/s
REFERENCE_P_MAX = 600.0  # kW/m^2
REFERENCE_REYNOLDS = 336243.43


class GeometrySpec(BaseModel):
    """Square-lattice subchannel: four quarter rods around one coolant passage."""

    model_config = ConfigDict(frozen=True)

    pitch: float = Field(0.0126, gt=0)  # m
    rod_diameter: float = Field(0.0095, gt=0)  # m
    length: float = Field(0.800, gt=0)  # m

    @model_validator(mode="after")
    def _rods_fit(self) -> "GeometrySpec":
        if not self.pitch > self.rod_diameter:
            raise ValueError(
                f"geometry: pitch {self.pitch} must exceed rod diameter {self.rod_diameter}"
            )
        return self

    @property
    def flow_area(self) -> float:
        return self.pitch ** 2 - math.pi * self.rod_diameter ** 2 / 4.0

    @property
    def wetted_perimeter(self) -> float:
        return math.pi * self.rod_diameter

    @property
    def hydraulic_diameter(self) -> float:
        return 4.0 * self.flow_area / self.wetted_perimeter

    @property
    def pitch_to_diameter(self) -> float:
        return self.pitch / self.rod_diameter

    @property
    def mid_plane(self) -> float:
        return 0.5 * self.length


class FluidProperties(BaseModel):
    """Constant single-phase coolant properties."""

    model_config = ConfigDict(frozen=True)

    density: float = Field(743.3, gt=0)  # kg/m^3
    dynamic_viscosity: float = Field(9.07e-5, gt=0)  # Pa s
    specific_heat: float = Field(5460.0, gt=0)  # J/(kg K)
    thermal_conductivity: float = Field(0.5630, gt=0)  # W/(m K)

    @property
    def prandtl(self) -> float:
        return self.dynamic_viscosity * self.specific_heat / self.thermal_conductivity


DEFAULT_GEOMETRY = GeometrySpec()
PWR_WATER_564K = FluidProperties()
