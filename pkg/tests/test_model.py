import numpy as np
import pytest

from app.errors import NumericalError, ShapeError
from app.schemas import InputRanges, InputSample
from app.network.model import (
    ModelConfig,
    ModelParams,
    NormalizationStats,
    backward,
    count_params,
    forward,
    init_params,
    predict,
)
from app.network.numerics import RandomStream
from tests.conftest import make_center_mesh, make_hand_built_model, make_norm, make_sample


def zeroed(params: ModelParams) -> ModelParams:
    out = params.copy()
    for tensor in out.arrays():
        tensor[...] = 0.0
    return out


@pytest.mark.unit
@pytest.mark.network
class TestModelConfig:
    """Layer chain and parameter counts."""

    def test_defaults_match_reference_architecture(self):
        config = ModelConfig()
        sizes = config.layer_sizes()
        assert sizes["branch1"] == [100, 512, 512, 512, 1733]
        assert sizes["branch2"] == [2, 512, 512, 512, 1733]
        assert sizes["trunk"] == [2, 300, 300, 300, 1]
        assert config.dropout_rate == 0.2

    def test_count_params_defaults(self):
        branch1 = 100 * 512 + 512 + 2 * (512 * 512 + 512) + 512 * 1733 + 1733
        branch2 = 2 * 512 + 512 + 2 * (512 * 512 + 512) + 512 * 1733 + 1733
        trunk = 2 * 300 + 300 + 300 * 300 + 300 + 300 * 300 + 300 + 300 * 1 + 1
        heads = 3 * (1733 * 1733 + 1733)
        assert count_params(ModelConfig()) == branch1 + branch2 + trunk + heads == 12_078_797

    def test_count_params_tiny(self, tiny_config):
        assert count_params(tiny_config) == 360

    def test_count_params_degenerate_chain(self):
        config = ModelConfig(n1=5, branch_hidden=(), trunk_hidden=(), n_nodes=1)
        # branch1 5->1, branch2 2->1, trunk 2->1, three 1->1 heads
        assert count_params(config) == (5 + 1) + (2 + 1) + (2 + 1) + 3 * 2

    def test_rejects_zero_width(self):
        with pytest.raises(ValueError):
            ModelConfig(branch_hidden=(4, 0))

    def test_rejects_dropout_of_one(self):
        with pytest.raises(ValueError):
            ModelConfig(dropout_rate=1.0)


@pytest.mark.unit
@pytest.mark.network
class TestForward:
    """Forward pass in eval and training mode."""

    def test_hand_computed_outputs(self):
        params, sample, mesh = make_hand_built_model()
        outputs, trace = forward(params, sample, mesh)
        assert trace is None
        # phi1 = [3, 1], phi2 = [3, 1], psi = [3.5, 2.5], h = [31.5, 2.5]
        expected = np.array([[31.5, 2.5], [35.0, 1.0], [5.0, -31.5]])
        assert np.allclose(outputs, expected, rtol=0, atol=1e-12)

    def test_hand_computed_trace(self):
        params, sample, mesh = make_hand_built_model()
        _, trace = forward(params, sample, mesh, RandomStream(0))
        assert np.allclose(trace["phi1"], [3.0, 1.0])
        assert np.allclose(trace["phi2"], [3.0, 1.0])
        assert np.allclose(trace["psi"], [3.5, 2.5])
        assert np.allclose(trace["h"], [31.5, 2.5])

    def test_zero_weights_give_zero_outputs(self, tiny_params, tiny_sample, tiny_mesh):
        outputs, _ = forward(zeroed(tiny_params), tiny_sample, tiny_mesh)
        assert np.array_equal(outputs, np.zeros((3, 6)))

    def test_identity_heads_pass_h_through(self, tiny_config, tiny_mesh, tiny_sample):
        config = tiny_config.model_copy(update={"dropout_rate": 0.0})
        params = init_params(config, make_norm(tiny_mesh), seed=4)
        for weight, bias in params.heads:
            weight[...] = np.eye(6)
            bias[...] = 0.0
        outputs, trace = forward(params, tiny_sample, tiny_mesh, RandomStream(1))
        for row in outputs:
            assert np.array_equal(row, trace["h"])

    def test_eval_mode_is_bit_identical(self, tiny_params, tiny_sample, tiny_mesh):
        first, _ = forward(tiny_params, tiny_sample, tiny_mesh)
        second, _ = forward(tiny_params, tiny_sample, tiny_mesh)
        assert np.array_equal(first, second)

    def test_training_mode_replays_with_same_seed(self, tiny_params, tiny_sample, tiny_mesh):
        a, trace_a = forward(tiny_params, tiny_sample, tiny_mesh, RandomStream(8))
        b, trace_b = forward(tiny_params, tiny_sample, tiny_mesh, RandomStream(8))
        assert np.array_equal(a, b)
        for mask_a, mask_b in zip(trace_a["branch1"]["masks"], trace_b["branch1"]["masks"]):
            assert np.array_equal(mask_a, mask_b)

    def test_dropout_only_on_hidden_layers(self, tiny_params, tiny_sample, tiny_mesh):
        _, trace = forward(tiny_params, tiny_sample, tiny_mesh, RandomStream(2))
        assert len(trace["branch1"]["masks"]) == 2
        assert len(trace["trunk"]["masks"]) == 2
        assert trace["trunk"]["masks"][0].shape == (6, 5)

    def test_wrong_flux_length(self, tiny_params, tiny_mesh):
        with pytest.raises(ShapeError, match="n1=4"):
            forward(tiny_params, make_sample(5), tiny_mesh)

    def test_wrong_node_count(self, tiny_params, tiny_sample):
        with pytest.raises(ShapeError, match="N=7"):
            forward(tiny_params, tiny_sample, make_center_mesh(7))

    def test_nan_names_the_layer(self, tiny_params, tiny_sample, tiny_mesh):
        tiny_params.branch1[0][0][0, 0] = np.nan
        with pytest.raises(NumericalError, match="branch1 layer 0"):
            forward(tiny_params, tiny_sample, tiny_mesh)

    def test_trunk_locality(self, tiny_config, tiny_mesh, tiny_sample):
        config = tiny_config.model_copy(update={"dropout_rate": 0.0})
        params = init_params(config, make_norm(tiny_mesh), seed=21)
        _, before = forward(params, tiny_sample, tiny_mesh, RandomStream(0))
        coords = np.array(tiny_mesh.coords)
        coords[2] += 1e-4
        moved = tiny_mesh.model_copy(update={"coords": coords})
        _, after = forward(params, tiny_sample, moved, RandomStream(0))
        changed = np.flatnonzero(before["h"] != after["h"])
        assert set(changed) <= {2}

    def test_fusion_is_symmetric_in_the_branches(self, tiny_mesh):
        config = ModelConfig(n1=2, branch_hidden=(5,), trunk_hidden=(4,), n_nodes=6, dropout_rate=0.0)
        norm = make_norm(tiny_mesh)
        params = init_params(config, norm, seed=13)
        # flux chosen so both branches see the same normalized input
        _, scalars = norm.normalize_inputs(make_sample(2))
        sample = InputSample(p_rod=scalars * norm.input_max[0], t_in=580.0, v_in=4.5)
        swapped = params.copy()
        swapped.branch1, swapped.branch2 = swapped.branch2, swapped.branch1

        _, before = forward(params, sample, tiny_mesh, RandomStream(0))
        _, after = forward(swapped, sample, tiny_mesh, RandomStream(0))
        assert np.allclose(after["phi1"], before["phi2"], rtol=1e-12, atol=1e-12)
        assert np.allclose(after["phi2"], before["phi1"], rtol=1e-12, atol=1e-12)
        assert np.allclose(after["h"], before["h"], rtol=1e-12, atol=1e-12)
        assert not np.allclose(before["phi1"], before["phi2"])


@pytest.mark.unit
@pytest.mark.network
class TestBackward:
    """Analytic reverse pass."""

    def test_zero_output_gradient(self, tiny_params, tiny_sample, tiny_mesh):
        _, trace = forward(tiny_params, tiny_sample, tiny_mesh, RandomStream(3))
        grads = backward(tiny_params, trace, np.zeros((3, 6)))
        assert all(not np.any(g) for g in grads.arrays())

    def test_gradient_is_linear_in_output_gradient(self, tiny_params, tiny_sample, tiny_mesh):
        _, trace = forward(tiny_params, tiny_sample, tiny_mesh, RandomStream(3))
        g = np.random.default_rng(0).normal(size=(3, 6))
        single = backward(tiny_params, trace, g)
        doubled = backward(tiny_params, trace, 2.0 * g)
        for a, b in zip(single.arrays(), doubled.arrays()):
            assert np.allclose(2.0 * a, b, rtol=1e-13, atol=1e-15)

    def test_gradient_shapes_mirror_params(self, tiny_params, tiny_sample, tiny_mesh):
        _, trace = forward(tiny_params, tiny_sample, tiny_mesh, RandomStream(3))
        grads = backward(tiny_params, trace, np.ones((3, 6)))
        assert [g.shape for g in grads.arrays()] == [p.shape for p in tiny_params.arrays()]

    def test_head_gradient_is_outer_product(self, tiny_params, tiny_sample, tiny_mesh):
        _, trace = forward(tiny_params, tiny_sample, tiny_mesh, RandomStream(3))
        g = np.arange(18, dtype=float).reshape(3, 6)
        grads = backward(tiny_params, trace, g)
        assert np.allclose(grads.head_v[0], np.outer(g[1], trace["h"]))
        assert np.array_equal(grads.head_k[1], g[2])

    def test_output_gradient_shape_checked(self, tiny_params, tiny_sample, tiny_mesh):
        _, trace = forward(tiny_params, tiny_sample, tiny_mesh, RandomStream(3))
        with pytest.raises(ShapeError):
            backward(tiny_params, trace, np.zeros((3, 5)))

    def test_trace_from_other_architecture(self, tiny_params, tiny_sample, tiny_mesh, tiny_config):
        _, trace = forward(tiny_params, tiny_sample, tiny_mesh, RandomStream(3))
        other_config = tiny_config.model_copy(update={"branch_hidden": (6,)})
        other = init_params(other_config, tiny_params.norm, seed=1)
        with pytest.raises(ShapeError):
            backward(other, trace, np.ones((3, 6)))


@pytest.mark.unit
@pytest.mark.network
class TestNormalizationAndPredict:
    """Scaling around the network."""

    def test_zero_network_predicts_output_mean(self, tiny_params, tiny_sample, tiny_mesh):
        snapshot = predict(zeroed(tiny_params), tiny_sample, tiny_mesh)
        assert np.all(snapshot.T == 590.0)
        assert np.all(snapshot.v == 4.5)
        assert np.all(snapshot.k == 0.05)

    def test_output_round_trip(self, tiny_mesh):
        norm = make_norm(tiny_mesh)
        values = np.random.default_rng(1).normal(loc=[[590.0], [4.5], [0.05]], scale=1.0, size=(3, 6))
        back = norm.denormalize_outputs(norm.normalize_outputs(values))
        assert np.allclose(back, values, rtol=1e-12, atol=0)

    def test_inputs_scaled_to_unit_interval(self, tiny_mesh):
        norm = make_norm(tiny_mesh)
        flux, scalars = norm.normalize_inputs(make_sample(4, p_max=660.0, t_in=536.4, v_in=4.95))
        assert np.all((flux >= 0.0) & (flux <= 1.0))
        assert np.allclose(scalars, [0.0, 1.0])
        coords = norm.normalize_coords(tiny_mesh.coords)
        assert np.all((coords > 0.0) & (coords < 1.0))

    def test_from_training_data_floors_constant_std(self, tiny_mesh):
        targets = np.zeros((4, 3, 6))
        targets[:, 0, :] = np.arange(6)
        norm = NormalizationStats.from_training_data(InputRanges(), tiny_mesh, targets)
        assert norm.output_mean == (2.5, 0.0, 0.0)
        assert norm.output_std[1:] == (1.0, 1.0)
        assert norm.input_max[0] == 660.0
        assert norm.coord_max == (tiny_mesh.pitch, tiny_mesh.pitch)

    def test_flat_round_trip(self, tiny_mesh):
        norm = make_norm(tiny_mesh)
        assert NormalizationStats.from_flat(norm.as_flat()) == norm

    def test_rejects_non_positive_std(self, tiny_mesh):
        values = list(make_norm(tiny_mesh).as_flat())
        values[14] = 0.0
        with pytest.raises(ValueError, match="std"):
            NormalizationStats.from_flat(values)


@pytest.mark.unit
@pytest.mark.network
class TestModelParams:
    """Parameter container."""

    def test_tensor_order(self, tiny_params):
        names = [name for name, _ in tiny_params.named_tensors()]
        assert names[:4] == ["branch1.0.weight", "branch1.0.bias", "branch1.1.weight", "branch1.1.bias"]
        assert names[-2:] == ["head_k.weight", "head_k.bias"]
        assert len(tiny_params.weights()) == 3 + 3 + 3 + 3

    def test_copy_is_independent(self, tiny_params):
        clone = tiny_params.copy()
        clone.trunk[0][0][0, 0] += 1.0
        assert clone.trunk[0][0][0, 0] != tiny_params.trunk[0][0][0, 0]

    def test_init_is_seeded(self, tiny_config, tiny_mesh):
        a = init_params(tiny_config, make_norm(tiny_mesh), seed=5)
        b = init_params(tiny_config, make_norm(tiny_mesh), seed=5)
        assert all(np.array_equal(x, y) for x, y in zip(a.arrays(), b.arrays()))
        assert all(not np.any(bias) for _, layers in a.groups() for _, bias in layers)

    def test_check_shapes_detects_wrong_head(self, tiny_params):
        tiny_params.head_T = (np.zeros((5, 5)), np.zeros(5))
        with pytest.raises(ShapeError, match="head_T"):
            tiny_params.check_shapes()
