import os
import sys
from pathlib import Path
from typing import Tuple

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.schemas import CenterPlaneMesh, InputSample
from app.network.model import ModelConfig, ModelParams, NormalizationStats, init_params
from app.oracle.dataset import generate_dataset
from app.oracle.mesh import generate_mesh
from app.oracle.properties import DEFAULT_GEOMETRY, PWR_WATER_564K

DATA_DIR = Path(__file__).parent / "data"


def make_center_mesh(n_nodes: int, seed: int = 0) -> CenterPlaneMesh:
    """Random nodes in a small square around the subchannel center, clear of every rod."""
    geom = DEFAULT_GEOMETRY
    rng = np.random.default_rng(seed)
    half = 0.5 * geom.pitch
    coords = rng.uniform(half - 0.0015, half + 0.0015, size=(n_nodes, 2))
    corners = np.array([[0.0, 0.0], [geom.pitch, 0.0], [geom.pitch, geom.pitch], [0.0, geom.pitch]])
    dist = np.linalg.norm(coords[:, None, :] - corners[None, :, :], axis=2).min(axis=1)
    return CenterPlaneMesh(
        coords=coords,
        wall_distance=dist - 0.5 * geom.rod_diameter,
        pitch=geom.pitch,
        rod_diameter=geom.rod_diameter,
        z_plane=geom.mid_plane,
    )


def make_norm(mesh: CenterPlaneMesh) -> NormalizationStats:
    return NormalizationStats(
        input_min=(0.0, 536.4, 4.05),
        input_max=(660.0, 655.6, 4.95),
        coord_min=(0.0, 0.0),
        coord_max=(mesh.pitch, mesh.pitch),
        output_mean=(590.0, 4.5, 0.05),
        output_std=(20.0, 0.8, 0.02),
    )


def make_sample(n1: int, p_max: float = 600.0, t_in: float = 580.0, v_in: float = 4.5) -> InputSample:
    z = (np.arange(n1) + 0.5) / n1
    return InputSample(p_rod=p_max * np.sin(np.pi * z), t_in=t_in, v_in=v_in)


@pytest.fixture(scope="session")
def geometry():
    return DEFAULT_GEOMETRY


@pytest.fixture(scope="session")
def fluid():
    return PWR_WATER_564K


@pytest.fixture
def tiny_mesh():
    """Six nodes around the subchannel center."""
    return make_center_mesh(6)


@pytest.fixture
def tiny_config():
    return ModelConfig(n1=4, branch_hidden=(6, 5), trunk_hidden=(5, 4), n_nodes=6, dropout_rate=0.2)


@pytest.fixture
def tiny_params(tiny_config, tiny_mesh):
    return init_params(tiny_config, make_norm(tiny_mesh), seed=11)


@pytest.fixture
def tiny_sample():
    return make_sample(4)


@pytest.fixture(scope="session")
def small_mesh(geometry):
    """Oracle mesh with a few dozen nodes."""
    return generate_mesh(geometry, 40)


@pytest.fixture(scope="session")
def small_dataset(geometry, fluid, small_mesh):
    """Twelve oracle samples, n1=8, on the small mesh."""
    return generate_dataset(12, 3, geometry, fluid, small_mesh, n1=8, n_z=32)


@pytest.fixture
def small_model_config(small_dataset):
    return ModelConfig(
        n1=small_dataset.n1,
        branch_hidden=(8, 8),
        trunk_hidden=(8,),
        n_nodes=small_dataset.mesh.n_nodes,
        dropout_rate=0.0,
    )


@pytest.fixture
def data_dir():
    return DATA_DIR


def make_hand_built_model() -> Tuple[ModelParams, InputSample, CenterPlaneMesh]:
    """
    n1=2, hidden [2], trunk hidden [2], N=2 with small integer weights and
    identity scaling, so every intermediate value can be worked out by hand.
    The same weights are stored in data/golden_checkpoint.bin.
    """
    pitch = DEFAULT_GEOMETRY.pitch
    mesh = CenterPlaneMesh(
        coords=[[0.5 * pitch, 0.5 * pitch], [0.5 * pitch, 0.25 * pitch]],
        wall_distance=[0.001, 0.001],
        pitch=pitch,
        rod_diameter=DEFAULT_GEOMETRY.rod_diameter,
        z_plane=DEFAULT_GEOMETRY.mid_plane,
    )
    norm = NormalizationStats(
        input_min=(0.0, 0.0, 0.0),
        input_max=(1.0, 1.0, 1.0),
        coord_min=(0.0, 0.0),
        coord_max=(pitch, pitch),
        output_mean=(0.0, 0.0, 0.0),
        output_std=(1.0, 1.0, 1.0),
    )
    config = ModelConfig(n1=2, branch_hidden=(2,), trunk_hidden=(2,), n_nodes=2, dropout_rate=0.0)
    a = np.array
    params = ModelParams(
        branch1=[(a([[1.0, 0.0], [0.0, 1.0]]), a([0.0, 0.0])), (a([[1.0, 1.0], [1.0, -1.0]]), a([0.0, 2.0]))],
        branch2=[(a([[1.0, 0.0], [0.0, 2.0]]), a([0.0, -1.0])), (a([[1.0, 0.0], [0.0, 1.0]]), a([0.0, 0.0]))],
        trunk=[(a([[2.0, 0.0], [0.0, 4.0]]), a([0.0, 0.0])), (a([[1.0, 1.0]]), a([0.5]))],
        head_T=(a([[1.0, 0.0], [0.0, 1.0]]), a([0.0, 0.0])),
        head_v=(a([[1.0, 1.0], [0.0, 0.0]]), a([1.0, 1.0])),
        head_k=(a([[0.0, 2.0], [-1.0, 0.0]]), a([0.0, 0.0])),
        config=config,
        norm=norm,
    )
    sample = InputSample(p_rod=[1.0, 2.0], t_in=3.0, v_in=1.0)
    return params, sample, mesh
