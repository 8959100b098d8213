"""
generate: sample operating conditions and write an oracle dataset.
"""

import argparse
import logging
import time

from app.commands import add_config_argument, resolve_config
from app.oracle.dataset import generate_dataset
from app.oracle.mesh import generate_mesh
from app.storage.datasets import write_dataset

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("generate", help="generate an oracle dataset file")
    parser.add_argument("--samples", type=int, default=None, help="number of samples (default 5000)")
    parser.add_argument("--seed", type=int, default=None, help="sampler seed (default 0)")
    parser.add_argument("--mesh-nodes", type=int, default=None, help="target node count (default 1733)")
    parser.add_argument("--workers", type=int, default=None, help="synthesis threads (default 1)")
    parser.add_argument("--out", required=True, help="output dataset path")
    add_config_argument(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> None:
    config = resolve_config(
        args,
        {"samples": args.samples, "seed": args.seed, "mesh_nodes": args.mesh_nodes, "workers": args.workers},
    )
    mesh = generate_mesh(config.geometry, config.mesh_nodes)
    started = time.perf_counter()
    dataset = generate_dataset(
        config.samples,
        config.seed,
        config.geometry,
        config.fluid,
        mesh,
        ranges=config.ranges,
        n1=config.n1,
        n_z=config.n_z,
        workers=config.workers,
    )
    elapsed = time.perf_counter() - started
    write_dataset(args.out, dataset)

    ranges = config.ranges
    print(f"nodes: N={mesh.n_nodes} (target {config.mesh_nodes})")
    print(
        f"ranges: P_max {list(ranges.p_max)} kW/m^2, T_in {list(ranges.t_in)} K, v_in {list(ranges.v_in)} m/s"
    )
    print(f"samples: {len(dataset)} in {elapsed:.3f} s ({elapsed / len(dataset) * 1e3:.3f} ms per sample)")
    print(f"wrote {args.out}")
