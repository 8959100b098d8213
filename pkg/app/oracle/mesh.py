"""
Center-plane node layout for one square-lattice subchannel.
"""

import logging
from typing import Optional, Tuple

import numpy as np

from app.errors import OracleError
from app.schemas import CenterPlaneMesh, rod_centers
from app.oracle.properties import GeometrySpec

logger = logging.getLogger(__name__)

MIN_NODES = 16
DEFAULT_TARGET_NODES = 1733


def _lattice(geom: GeometrySpec, m: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Cell-centered m x m lattice over the pitch square with rod interiors removed,
    plus m // 4 nodes on each quarter-rod wall.
    """
    pitch = geom.pitch
    radius = 0.5 * geom.rod_diameter
    xs = (np.arange(m, dtype=np.float64) + 0.5) * (pitch / m)
    near = xs  # offset from the x = 0 (or y = 0) rods
    far = xs[::-1]  # offset from the x = P (or y = P) rods, mirrored by index

    ii, jj = np.meshgrid(np.arange(m), np.arange(m), indexing="xy")
    ii, jj = ii.ravel(), jj.ravel()
    dist = np.stack([
        np.hypot(near[ii], near[jj]),
        np.hypot(far[ii], near[jj]),
        np.hypot(far[ii], far[jj]),
        np.hypot(near[ii], far[jj]),
    ])
    closest = dist.min(axis=0)
    keep = closest >= radius
    lattice = np.column_stack([xs[ii[keep]], xs[jj[keep]]])
    lattice_d = closest[keep] - radius

    n_arc = m // 4
    walls = []
    if n_arc:
        offsets = (np.arange(n_arc, dtype=np.float64) + 0.5) * (0.5 * np.pi / n_arc)
        for quarter, (cx, cy) in enumerate(rod_centers(pitch)):
            theta = quarter * 0.5 * np.pi + offsets
            walls.append(np.column_stack([cx + radius * np.cos(theta), cy + radius * np.sin(theta)]))
    wall_nodes = np.concatenate(walls) if walls else np.empty((0, 2))
    # rounding can put wall nodes a hair outside the square
    wall_nodes = np.clip(wall_nodes, 0.0, pitch)

    coords = np.concatenate([lattice, wall_nodes])
    wall_distance = np.concatenate([lattice_d, np.zeros(wall_nodes.shape[0])])
    return coords, wall_distance


def lattice_size_for(geom: GeometrySpec, target_n: int) -> int:
    """Lattice resolution m whose node count is closest to target_n."""
    best_m, best_gap = None, None
    m = 2
    while True:
        count = _lattice(geom, m)[0].shape[0]
        gap = abs(count - target_n)
        if best_gap is None or gap < best_gap:
            best_m, best_gap = m, gap
        if count > 2 * target_n + MIN_NODES:
            return best_m
        m += 1


def generate_mesh(
    geom: GeometrySpec,
    target_n: int = DEFAULT_TARGET_NODES,
    z_plane: Optional[float] = None,
) -> CenterPlaneMesh:
    """
    Deterministic structured mesh of the subchannel center plane.

    Args:
        geom: Subchannel geometry
        target_n: Desired node count; the achieved count is the closest the lattice allows
        z_plane: Axial position of the plane, mid-length by default

    Returns:
        CenterPlaneMesh with wall distance = min over rods of (distance to center - D/2)
    """
    if target_n < MIN_NODES:
        raise OracleError(f"mesh target of {target_n} nodes is below the minimum of {MIN_NODES}")
    if z_plane is None:
        z_plane = geom.mid_plane
    if not 0.0 <= z_plane <= geom.length:
        raise OracleError(f"z_plane {z_plane} lies outside the heated length [0, {geom.length}]")

    m = lattice_size_for(geom, target_n)
    coords, wall_distance = _lattice(geom, m)
    if coords.shape[0] < MIN_NODES:
        raise OracleError(f"mesh produced only {coords.shape[0]} nodes, need at least {MIN_NODES}")

    logger.info(f"Generated center-plane mesh: {coords.shape[0]} nodes (target {target_n}, lattice {m}x{m})")
    return CenterPlaneMesh(
        coords=coords,
        wall_distance=wall_distance,
        pitch=geom.pitch,
        rod_diameter=geom.rod_diameter,
        z_plane=z_plane,
        target_n=target_n,
    )
