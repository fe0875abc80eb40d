import pytest
import torch

from gravtrainer import NetSpec, build_model, parameter_count


class TestNetSpec:
    def test_divisibility_enforced(self):
        with pytest.raises(ValueError):
            NetSpec(resize_target=20, depth=4)  # 20 % 8 != 0
        NetSpec(resize_target=24, depth=3)  # 24 % 4 == 0

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            NetSpec(variant="transformer")

    def test_lstm_drops_autoencoder(self):
        spec = NetSpec(resize_target=16, depth=3, variant="lstm")
        assert not spec.with_autoencoder


class TestPlainModel:
    def test_output_shapes(self):
        spec = NetSpec(resize_target=32, base_filters=4, depth=4)
        model = build_model(spec)
        out = model(torch.randn(2, 1, 9, 9))
        assert out["seg"].shape == (2, 1, 32, 32, 32)
        assert out["reg"].shape == (2, 1, 32, 32, 32)
        assert out["ae"].shape == (2, 1, 32, 32)

    def test_zero_input_finite_and_bounded(self):
        spec = NetSpec(resize_target=16, base_filters=4, depth=3)
        model = build_model(spec)
        model.eval()
        out = model(torch.zeros(1, 1, 5, 5))
        for v in out.values():
            assert torch.isfinite(v).all()
        assert out["seg"].min() >= 0.0
        assert out["seg"].max() <= 1.0

    def test_parameter_count_grows_with_filters(self):
        small = parameter_count(build_model(NetSpec(resize_target=16, base_filters=4, depth=3)))
        large = parameter_count(build_model(NetSpec(resize_target=16, base_filters=8, depth=3)))
        assert large > small

    def test_resize_input_shape(self):
        spec = NetSpec(resize_target=16, base_filters=4, depth=3)
        model = build_model(spec)
        assert model.resize_input(torch.randn(3, 1, 9, 9)).shape == (3, 1, 16, 16)


class TestSequenceModel:
    def spec(self):
        return NetSpec(resize_target=16, base_filters=4, depth=3, variant="lstm")

    def test_output_shapes(self):
        model = build_model(self.spec())
        out = model(torch.randn(2, 10, 1, 9, 9))
        assert out["seg"].shape == (2, 1, 16, 16, 16)
        assert out["reg"].shape == (2, 1, 16, 16, 16)
        assert "ae" not in out

    def test_order_sensitivity(self):
        # Weak at random init (BatchNorm swallows most of it) but never zero;
        # the trained-model check in test_train is the strong version.
        torch.manual_seed(0)
        model = build_model(self.spec())
        model.eval()
        seq = torch.randn(1, 10, 1, 9, 9)
        with torch.no_grad():
            a = model(seq)["reg"]
            b = model(seq.flip(1))["reg"]
        assert float((a - b).abs().max()) > 1e-8

    def test_lstm_stack_config(self):
        model = build_model(self.spec())
        kernels = [cell.gates.kernel_size[0] for cell in model.cells]
        assert kernels == [7, 5, 3]
        assert all(cell.hidden == 16 for cell in model.cells)
