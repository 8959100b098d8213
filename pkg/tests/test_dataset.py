import numpy as np
import pytest

from app.errors import OracleError
from app.schemas import InputRanges
from app.network.numerics import RandomStream
from app.oracle.dataset import Dataset, draw_conditions, generate_dataset


@pytest.mark.unit
@pytest.mark.oracle
class TestDrawConditions:
    def test_inside_closed_intervals(self):
        ranges = InputRanges()
        root = RandomStream(99)
        for i in range(200):
            p_max, t_in, v_in = draw_conditions(root.fork(i), ranges)
            assert ranges.contains(p_max, t_in, v_in)

    def test_custom_ranges(self):
        ranges = InputRanges(p_max=(100.0, 101.0), t_in=(500.0, 501.0), v_in=(1.0, 1.5))
        p_max, t_in, v_in = draw_conditions(RandomStream(1), ranges)
        assert 100.0 <= p_max <= 101.0 and 500.0 <= t_in <= 501.0 and 1.0 <= v_in <= 1.5


@pytest.mark.oracle
class TestGenerateDataset:
    """Seeded oracle datasets."""

    def test_shapes(self, small_dataset, small_mesh):
        assert len(small_dataset) == 12
        assert small_dataset.n1 == 8
        assert small_dataset.mesh is small_mesh
        assert small_dataset.targets().shape == (12, 3, small_mesh.n_nodes)
        assert small_dataset.indices == list(range(12))

    def test_samples_within_table_ranges(self, small_dataset):
        ranges = small_dataset.ranges
        for sample, snap in zip(small_dataset.samples, small_dataset.snapshots):
            assert ranges.t_in[0] <= sample.t_in <= ranges.t_in[1]
            assert ranges.v_in[0] <= sample.v_in <= ranges.v_in[1]
            assert sample.p_max <= ranges.p_max[1]
            assert not snap.out_of_range

    def test_same_seed_same_dataset(self, geometry, fluid, small_mesh, small_dataset):
        again = generate_dataset(12, 3, geometry, fluid, small_mesh, n1=8, n_z=32)
        assert np.array_equal(again.targets(), small_dataset.targets())
        assert all(np.array_equal(a.p_rod, b.p_rod) for a, b in zip(again.samples, small_dataset.samples))

    def test_worker_count_does_not_change_output(self, geometry, fluid, small_mesh, small_dataset):
        threaded = generate_dataset(12, 3, geometry, fluid, small_mesh, n1=8, n_z=32, workers=4)
        assert np.array_equal(threaded.targets(), small_dataset.targets())

    def test_prefix_stable_across_sizes(self, geometry, fluid, small_mesh, small_dataset):
        shorter = generate_dataset(5, 3, geometry, fluid, small_mesh, n1=8, n_z=32)
        assert np.array_equal(shorter.targets(), small_dataset.targets()[:5])

    def test_different_seed(self, geometry, fluid, small_mesh, small_dataset):
        other = generate_dataset(3, 4, geometry, fluid, small_mesh, n1=8, n_z=32)
        assert other.samples[0].t_in != small_dataset.samples[0].t_in

    def test_needs_a_sample(self, geometry, fluid, small_mesh):
        with pytest.raises(OracleError):
            generate_dataset(0, 3, geometry, fluid, small_mesh)


@pytest.mark.unit
@pytest.mark.oracle
class TestDatasetSubset:
    def test_subset_maps_source_indices(self, small_dataset):
        part = small_dataset.subset([2, 7, 9])
        nested = part.subset([0, 2])
        assert part.indices == [2, 7, 9]
        assert nested.indices == [2, 9]
        assert nested.samples[1] is small_dataset.samples[9]

    def test_snapshot_count_must_match(self, small_dataset):
        with pytest.raises(ValueError, match="snapshots"):
            Dataset(mesh=small_dataset.mesh, samples=small_dataset.samples, snapshots=small_dataset.snapshots[:3])
