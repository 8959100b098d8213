"""
bench: eval-forward latency of a checkpoint against one oracle evaluation.
"""

import argparse
import logging
import platform
import time
from typing import Any, Dict, List

import numpy as np
from pydantic import BaseModel

from app.commands import add_config_argument, resolve_config
from app.errors import ConfigError
from app.network.model import ModelParams, forward
from app.oracle.axial import sample_heat_flux
from app.oracle.fields import synthesize_fields
from app.schemas import CenterPlaneMesh, InputRanges, InputSample
from app.storage.checkpoints import read_checkpoint
from app.storage.datasets import read_mesh
from app.storage.reports import write_report

logger = logging.getLogger(__name__)

REFERENCE_INFERENCE_SECONDS = 5.24e-3
REFERENCE_CFD_SECONDS = 587.0
CAVEAT = (
    "speedup is measured against the analytic oracle, not a CFD solve; "
    "the 587 s CFD reference is quoted for context only"
)


class BenchReport(BaseModel):
    iterations: int
    n_nodes: int
    mean_seconds: float
    p50_seconds: float
    p99_seconds: float
    min_seconds: float
    max_seconds: float
    oracle_seconds: float
    speedup_vs_oracle: float
    reference_inference_seconds: float = REFERENCE_INFERENCE_SECONDS
    reference_cfd_seconds: float = REFERENCE_CFD_SECONDS
    caveat: str = CAVEAT
    machine: str
    config: Dict[str, Any] = {}


def machine_descriptor() -> str:
    return (
        f"{platform.platform()}; {platform.machine()} {platform.processor() or 'unknown cpu'}; "
        f"python {platform.python_version()}; numpy {np.__version__}"
    )


def midpoint_sample(ranges: InputRanges, n1: int, length: float) -> InputSample:
    return InputSample(
        p_rod=sample_heat_flux(0.5 * sum(ranges.p_max), n1, length),
        t_in=0.5 * sum(ranges.t_in),
        v_in=0.5 * sum(ranges.v_in),
    )


def time_forward(params: ModelParams, sample: InputSample, mesh: CenterPlaneMesh, iters: int) -> List[float]:
    durations = []
    for _ in range(iters):
        started = time.perf_counter()
        forward(params, sample, mesh)
        durations.append(time.perf_counter() - started)
    return durations


def register(subparsers) -> None:
    parser = subparsers.add_parser("bench", help="time eval forwards against the oracle")
    parser.add_argument("--model", required=True, help="checkpoint file")
    parser.add_argument("--dataset", required=True, help="dataset file providing the mesh")
    parser.add_argument("--iters", type=int, default=100, help="timed forwards (default 100)")
    parser.add_argument("--report", default=None, help="output bench report (JSON)")
    add_config_argument(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> None:
    if args.iters < 1:
        raise ConfigError(f"--iters must be >= 1, got {args.iters}")
    config = resolve_config(args)
    params = read_checkpoint(args.model)
    mesh, geometry = read_mesh(args.dataset)
    sample = midpoint_sample(config.ranges, params.config.n1, geometry.length)

    durations = np.asarray(time_forward(params, sample, mesh, args.iters))
    started = time.perf_counter()
    synthesize_fields(sample, geometry, config.fluid, mesh, n_z=config.n_z, ranges=config.ranges)
    oracle_seconds = time.perf_counter() - started

    mean = float(durations.mean())
    p50, p99 = (float(x) for x in np.percentile(durations, [50.0, 99.0]))
    report = BenchReport(
        iterations=args.iters,
        n_nodes=mesh.n_nodes,
        mean_seconds=mean,
        p50_seconds=p50,
        p99_seconds=p99,
        min_seconds=float(durations.min()),
        max_seconds=float(durations.max()),
        oracle_seconds=oracle_seconds,
        speedup_vs_oracle=oracle_seconds / mean if mean > 0 else float("inf"),
        machine=machine_descriptor(),
        config=config.echo(),
    )
    if args.report:
        write_report(args.report, report)

    print(f"forward latency over {args.iters} runs at N={mesh.n_nodes}: mean {mean:.6e} s, p50 {p50:.6e} s, p99 {p99:.6e} s")
    print(f"reference inference time: {REFERENCE_INFERENCE_SECONDS:.3e} s")
    print(f"oracle evaluation: {oracle_seconds:.6e} s, speedup {report.speedup_vs_oracle:.3g}x")
    print(f"note: {CAVEAT}")
    print(f"machine: {report.machine}")
