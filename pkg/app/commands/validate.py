"""
validate: Nusselt round trip and entrance-length sweep of the oracle.
"""

import argparse
import logging
from typing import Any, Dict, List

import numpy as np
from pydantic import BaseModel

from app.commands import add_config_argument, resolve_config
from app.config import RunConfig
from app.oracle.axial import (
    CONVERGENCE_GRID,
    MarginPoint,
    NusseltReport,
    axial_profiles,
    margin_convergence,
    nusselt_roundtrip,
    sample_heat_flux,
)
from app.oracle.correlations import EntranceLengthRow, entrance_length_table, reynolds, weisman_factor
from app.oracle.properties import REFERENCE_P_MAX, REFERENCE_REYNOLDS, REFERENCE_TEMPERATURE, REFERENCE_VELOCITY
from app.schemas import InputSample
from app.storage.reports import write_report

logger = logging.getLogger(__name__)

MARGIN_LIMIT_PERCENT = 1.0
# round-off slack when comparing margins that are already near zero
CONVERGENCE_SLACK = 1e-9


class ValidateReport(BaseModel):
    nusselt: NusseltReport
    convergence: List[MarginPoint]
    entrance_lengths: List[EntranceLengthRow]
    pitch_to_diameter: float
    weisman_factor: float
    reference_reynolds: float
    reynolds_at_reference: float
    reynolds_gap_percent: float
    margin_pass: bool
    convergence_pass: bool
    entrance_length_pass: bool
    config: Dict[str, Any] = {}


def reference_sample(n1: int, length: float) -> InputSample:
    return InputSample(
        p_rod=sample_heat_flux(REFERENCE_P_MAX, n1, length),
        t_in=REFERENCE_TEMPERATURE,
        v_in=REFERENCE_VELOCITY,
    )


def is_converging(points: List[MarginPoint]) -> bool:
    return all(b.margin_percent <= a.margin_percent + CONVERGENCE_SLACK for a, b in zip(points, points[1:]))


def build_validate_report(config: RunConfig) -> ValidateReport:
    geom, fluid = config.geometry, config.fluid
    sample = reference_sample(config.n1, geom.length)
    nusselt = nusselt_roundtrip(axial_profiles(sample, geom, fluid, config.n_z), geom, fluid)
    convergence = margin_convergence(sample, geom, fluid, CONVERGENCE_GRID)
    table = entrance_length_table(geom, fluid, np.linspace(*config.ranges.v_in, 10))
    re_ref = reynolds(geom, fluid, REFERENCE_VELOCITY)
    return ValidateReport(
        nusselt=nusselt,
        convergence=convergence,
        entrance_lengths=table,
        pitch_to_diameter=geom.pitch_to_diameter,
        weisman_factor=weisman_factor(geom.pitch_to_diameter),
        reference_reynolds=REFERENCE_REYNOLDS,
        reynolds_at_reference=re_ref,
        reynolds_gap_percent=abs(re_ref - REFERENCE_REYNOLDS) / REFERENCE_REYNOLDS * 100.0,
        margin_pass=nusselt.margin_percent <= MARGIN_LIMIT_PERCENT,
        convergence_pass=is_converging(convergence),
        entrance_length_pass=all(row.sufficient for row in table),
        config=config.echo(),
    )


def register(subparsers) -> None:
    parser = subparsers.add_parser("validate", help="check the oracle against its correlations")
    parser.add_argument("--n-z", type=int, default=None, help="axial grid points (default 256)")
    parser.add_argument("--report", default=None, help="output validation report (JSON)")
    add_config_argument(parser)
    parser.set_defaults(handler=run)


def _verdict(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


def run(args: argparse.Namespace) -> None:
    config = resolve_config(args, {"n_z": args.n_z})
    report = build_validate_report(config)
    if args.report:
        write_report(args.report, report)

    nusselt = report.nusselt
    print(f"P/D = {report.pitch_to_diameter:.4f}, psi = {report.weisman_factor:.4f}")
    print(
        f"Re at {REFERENCE_VELOCITY} m/s = {report.reynolds_at_reference:.2f} "
        f"(reference {REFERENCE_REYNOLDS:.2f}, gap {report.reynolds_gap_percent:.2f}%)"
    )
    print(
        f"Nu_avg = {nusselt.nu_avg:.6g}, Nu_weisman = {nusselt.nu_weisman:.6g}, "
        f"margin = {nusselt.margin_percent:.3e}% [{_verdict(report.margin_pass)}: <= {MARGIN_LIMIT_PERCENT}%]"
    )
    for point in report.convergence:
        print(f"  n_z = {point.n_z:4d}: margin {point.margin_percent:.3e}%")
    print(f"margin convergence [{_verdict(report.convergence_pass)}]")
    for row in report.entrance_lengths:
        print(f"  v_in = {row.v_in:.3f} m/s: Re = {row.reynolds:.0f}, Z_L = {row.z_l:.3f}, L = {row.length:.4f} m")
    print(f"entrance length below {config.geometry.length} m [{_verdict(report.entrance_length_pass)}]")
