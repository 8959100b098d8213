"""
infer: predict center-plane fields for one operating condition.
"""

import argparse
import logging
import time

import numpy as np

from app.commands import add_config_argument, resolve_config
from app.errors import ShapeError
from app.network.model import predict
from app.oracle.axial import sample_heat_flux
from app.oracle.fields import within_ranges
from app.schemas import InputSample
from app.storage.checkpoints import read_checkpoint
from app.storage.datasets import read_mesh

logger = logging.getLogger(__name__)

CSV_HEADER = "x,y,T,v,k"


def register(subparsers) -> None:
    parser = subparsers.add_parser("infer", help="predict fields for one operating condition")
    parser.add_argument("--model", required=True, help="checkpoint file")
    parser.add_argument("--dataset", required=True, help="dataset file providing the mesh")
    parser.add_argument("--p-max", type=float, required=True, help="peak rod heat flux, kW/m^2")
    parser.add_argument("--t-in", type=float, required=True, help="inlet temperature, K")
    parser.add_argument("--v-in", type=float, required=True, help="inlet velocity, m/s")
    parser.add_argument("--out", required=True, help="output CSV (x,y,T,v,k)")
    add_config_argument(parser)
    parser.set_defaults(handler=run)


def write_fields_csv(path: str, coords: np.ndarray, fields: np.ndarray) -> None:
    table = np.column_stack([coords, fields.T])
    np.savetxt(path, table, delimiter=",", header=CSV_HEADER, comments="", fmt="%.17g")


def run(args: argparse.Namespace) -> None:
    config = resolve_config(args)
    params = read_checkpoint(args.model)
    mesh, geometry = read_mesh(args.dataset)
    if mesh.n_nodes != params.config.n_nodes:
        raise ShapeError(f"dataset mesh has N={mesh.n_nodes} nodes, checkpoint expects N={params.config.n_nodes}")

    sample = InputSample(
        p_rod=sample_heat_flux(args.p_max, params.config.n1, geometry.length),
        t_in=args.t_in,
        v_in=args.v_in,
    )
    if not within_ranges(sample, config.ranges):
        logger.warning("Inference inputs lie outside the training ranges")

    started = time.perf_counter()
    snapshot = predict(params, sample, mesh)
    elapsed = time.perf_counter() - started

    fields = snapshot.as_array()
    negative = int(np.count_nonzero(fields[2] < 0.0))
    if negative:
        logger.info(f"Clipped turbulence kinetic energy to 0 at {negative} nodes")
        fields[2] = np.maximum(fields[2], 0.0)
    write_fields_csv(args.out, mesh.coords, fields)

    print(f"nodes: {mesh.n_nodes}")
    print(f"inference time: {elapsed:.6e} s")
    print(f"wrote {args.out}")
