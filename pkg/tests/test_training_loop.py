import numpy as np
import pytest

from app.errors import ShapeError, TrainingError
from app.schemas import FieldSnapshot
from app.oracle.dataset import Dataset
from app.training.loop import (
    TrainConfig,
    cross_validate,
    evaluate,
    kfold_partition,
    split_positions,
    train_fold,
)
from tests.conftest import make_sample


def quick_config(**overrides) -> TrainConfig:
    settings = dict(max_epochs=2, patience=10, k_folds=3, seed=5, l2_lambda=0.0)
    settings.update(overrides)
    return TrainConfig(**settings)


def halves(dataset: Dataset):
    return dataset.subset(range(0, 8)), dataset.subset(range(8, len(dataset)))


@pytest.mark.unit
@pytest.mark.training
class TestTrainConfig:
    def test_defaults(self):
        config = TrainConfig()
        assert (config.learning_rate, config.l2_lambda) == (1e-3, 1e-8)
        assert (config.max_epochs, config.patience, config.k_folds, config.batch_size) == (500, 10, 5, 1)

    @pytest.mark.parametrize(
        "overrides",
        [{"learning_rate": 0.0}, {"l2_lambda": -1.0}, {"patience": 0}, {"k_folds": 1}, {"batch_size": 4}],
    )
    def test_rejects_invalid(self, overrides):
        with pytest.raises(ValueError):
            TrainConfig(**overrides)


@pytest.mark.training
class TestTrainFold:
    """Epoch loop with early stopping."""

    def test_single_epoch_step_count(self, small_dataset, small_model_config):
        train_set, val_set = halves(small_dataset)
        _, history = train_fold(train_set, val_set, quick_config(max_epochs=1), small_model_config, seed=1)
        assert history.adam_steps == len(train_set)
        assert history.epochs_run == 1
        assert history.stop_reason == "max_epochs"
        assert history.best_epoch == 1

    def test_patience_one_stops_at_epoch_two(self, small_dataset, small_model_config, mocker):
        train_set, val_set = halves(small_dataset)
        reference, _ = train_fold(train_set, val_set, quick_config(max_epochs=1), small_model_config, seed=1)

        mocker.patch("app.training.loop.validation_loss", side_effect=[1.0, 2.0, 3.0])
        params, history = train_fold(
            train_set, val_set, quick_config(max_epochs=5, patience=1), small_model_config, seed=1
        )
        assert history.stop_reason == "early_stopping"
        assert history.epochs_run == 2
        assert history.best_epoch == 1
        assert history.adam_steps == 2 * len(train_set)
        for restored, expected in zip(params.arrays(), reference.arrays()):
            assert np.array_equal(restored, expected)

    def test_equal_loss_is_not_improvement(self, small_dataset, small_model_config, mocker):
        train_set, val_set = halves(small_dataset)
        mocker.patch("app.training.loop.validation_loss", side_effect=[1.0, 0.5, 0.5, 0.5])
        _, history = train_fold(
            train_set, val_set, quick_config(max_epochs=10, patience=2), small_model_config, seed=1
        )
        assert history.best_epoch == 2
        assert history.epochs_run == 4

    def test_reproducible(self, small_dataset, small_model_config):
        train_set, val_set = halves(small_dataset)
        a, hist_a = train_fold(train_set, val_set, quick_config(), small_model_config, seed=3)
        b, hist_b = train_fold(train_set, val_set, quick_config(), small_model_config, seed=3)
        assert hist_a == hist_b
        assert all(np.array_equal(x, y) for x, y in zip(a.arrays(), b.arrays()))

    def test_best_never_worse_than_recorded(self, small_dataset, small_model_config):
        train_set, val_set = halves(small_dataset)
        _, history = train_fold(train_set, val_set, quick_config(max_epochs=4), small_model_config, seed=2)
        assert history.best_val_loss == min(e.val_loss for e in history.epochs)

    def test_empty_split(self, small_dataset, small_model_config):
        with pytest.raises(TrainingError):
            train_fold(small_dataset.subset([]), small_dataset, quick_config(), small_model_config, seed=0)

    def test_model_must_fit_data(self, small_dataset, small_model_config):
        train_set, val_set = halves(small_dataset)
        wrong = small_model_config.model_copy(update={"n1": small_model_config.n1 + 1})
        with pytest.raises(ShapeError):
            train_fold(train_set, val_set, quick_config(), wrong, seed=0)


@pytest.mark.unit
@pytest.mark.training
class TestPartitions:
    """Seeded splits and k-fold partitions."""

    def test_kfold_partition_law_over_many_seeds(self):
        rng = np.random.default_rng(2024)
        for seed in range(100):
            k = int(rng.integers(2, 11))
            n = int(rng.integers(k, 150))
            folds = kfold_partition(n, k, seed)
            flat = [i for fold in folds for i in fold]
            assert len(folds) == k
            assert sorted(flat) == list(range(n))
            sizes = [len(fold) for fold in folds]
            assert max(sizes) - min(sizes) <= 1

    def test_hundred_samples_five_folds(self):
        folds = kfold_partition(100, 5, seed=0)
        assert [len(f) for f in folds] == [20] * 5

    def test_kfold_deterministic(self):
        assert kfold_partition(37, 5, 9) == kfold_partition(37, 5, 9)
        assert kfold_partition(37, 5, 9) != kfold_partition(37, 5, 10)

    def test_kfold_too_few_samples(self):
        with pytest.raises(TrainingError):
            kfold_partition(4, 5, 0)

    def test_split_positions(self):
        kept, held = split_positions(10, 0.2, seed=4)
        assert len(held) == 2
        assert sorted(kept + held) == list(range(10))
        assert split_positions(10, 0.2, seed=4) == (kept, held)

    def test_split_needs_two_samples(self):
        with pytest.raises(TrainingError):
            split_positions(1, 0.2, seed=0)


@pytest.mark.training
class TestCrossValidate:
    """k-fold protocol."""

    def test_report_shape(self, small_dataset, small_model_config):
        report = cross_validate(small_dataset, quick_config(), small_model_config)
        assert report.k_folds == 3
        assert [f.fold for f in report.folds] == [0, 1, 2]
        assert sorted(i for fold in report.fold_indices for i in fold) == list(range(12))
        losses = [f.best_val_loss for f in report.folds]
        assert report.mean_val_loss == pytest.approx(np.mean(losses))
        assert report.std_val_loss == pytest.approx(np.std(losses))
        assert all(f.train_size + f.val_size == 12 for f in report.folds)

    def test_identical_seeds_reproduce_report(self, small_dataset, small_model_config):
        first = cross_validate(small_dataset, quick_config(), small_model_config)
        second = cross_validate(small_dataset, quick_config(), small_model_config)
        assert first.model_dump() == second.model_dump()

    def test_threaded_folds_match_sequential(self, small_dataset, small_model_config):
        sequential = cross_validate(small_dataset, quick_config(), small_model_config)
        threaded = cross_validate(small_dataset, quick_config(), small_model_config, workers=3)
        assert sequential.model_dump() == threaded.model_dump()

    def test_fold_indices_refer_to_source(self, small_dataset, small_model_config):
        part = small_dataset.subset([1, 3, 4, 6, 8, 9])
        report = cross_validate(part, quick_config(max_epochs=1), small_model_config)
        assert sorted(i for fold in report.fold_indices for i in fold) == [1, 3, 4, 6, 8, 9]

    def test_dataset_smaller_than_k(self, small_dataset, small_model_config):
        with pytest.raises(TrainingError):
            cross_validate(small_dataset.subset([0, 1]), quick_config(), small_model_config)

    def test_zero_targets_drive_loss_down(self, small_dataset, small_model_config):
        zeros = [FieldSnapshot.from_array(np.zeros((3, small_dataset.mesh.n_nodes)))] * len(small_dataset)
        degenerate = small_dataset.model_copy(update={"snapshots": zeros})
        config = quick_config(max_epochs=15, learning_rate=3e-3)
        report = cross_validate(degenerate, config, small_model_config)
        assert report.mean_val_loss >= 0.0
        train_set, val_set = halves(degenerate)
        _, history = train_fold(train_set, val_set, config, small_model_config, seed=0)
        assert history.best_val_loss < history.epochs[0].val_loss


@pytest.mark.training
class TestEvaluate:
    """Per-sample test metrics."""

    def test_perfect_predictor(self, tiny_params, tiny_mesh):
        zero = tiny_params.copy()
        for tensor in zero.arrays():
            tensor[...] = 0.0
        n = tiny_mesh.n_nodes
        snapshot = FieldSnapshot(T=np.full(n, 590.0), v=np.full(n, 4.5), k=np.full(n, 0.05))
        dataset = Dataset(mesh=tiny_mesh, samples=[make_sample(4)], snapshots=[snapshot])
        report = evaluate(zero, dataset)
        for metrics in (report.T, report.v, report.k):
            assert metrics.relative_l2 == [0.0]
            assert metrics.mse == [0.0]

    def test_report_keeps_source_order(self, small_dataset, small_model_config):
        train_set, val_set = halves(small_dataset)
        params, _ = train_fold(train_set, val_set, quick_config(max_epochs=1), small_model_config, seed=0)
        report = evaluate(params, small_dataset.subset([3, 5, 7]), split="holdout")
        assert report.split == "holdout"
        assert report.n_samples == 3
        assert report.sample_indices == [3, 5, 7]
        for metrics in (report.T, report.v, report.k):
            assert len(metrics.relative_l2) == 3
            assert all(value >= 0.0 for value in metrics.relative_l2)
            assert metrics.relative_l2_stats.mean == pytest.approx(np.mean(metrics.relative_l2))
            assert {metrics.best_index, metrics.worst_index} <= {3, 5, 7}

    def test_empty_test_set(self, tiny_params, tiny_mesh):
        with pytest.raises(TrainingError):
            evaluate(tiny_params, Dataset(mesh=tiny_mesh, samples=[], snapshots=[]))
