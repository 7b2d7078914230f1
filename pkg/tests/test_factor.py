import numpy as np
import pytest
import torch

from lowlight import (CheckpointError, FactorNet, FactorNetConfig, count_macs,
                      count_params, init_factor_net, load_checkpoint,
                      save_checkpoint)
from lowlight.factor import DepthwiseSeparableConv

# closed-form block sums for the default width-32 topology
BLOCK_PARAMS = 158 + 3 * 1376 + 2 * 2720 + 835
PER_PIXEL_MACS = 123 + 3 * 1312 + 2 * 2624 + 768


class TestArchitecture:
    def test_default_param_count(self):
        assert BLOCK_PARAMS == 10_561
        assert count_params(FactorNet()) == 10_561

    def test_degenerate_block_count(self):
        # depthwise 3x3 on one channel: 9 + 1 bias; pointwise 1x1: 1 + 1 bias
        assert count_params(DepthwiseSeparableConv(1, 1)) == 12

    def test_width_doubling_roughly_quadruples_pointwise(self):
        def pointwise_params(width):
            net = FactorNet(FactorNetConfig(width=width))
            return sum(b.pw.weight.numel() for b in net.blocks)

        ratio = pointwise_params(64) / pointwise_params(32)
        assert 3.5 < ratio < 4.1

    def test_shape_preservation(self):
        net = FactorNet()
        for h, w in ((1, 1), (7, 5), (64, 96)):
            out = net(torch.rand(3, h, w))
            assert out.shape == (3, h, w)

    def test_output_strictly_inside_tanh_range(self, rng):
        net = init_factor_net(seed=3)
        out = net(torch.tensor(rng.uniform(0, 1, (2, 3, 16, 16)), dtype=torch.float32))
        assert out.min() > -1.0 and out.max() < 1.0

    def test_zero_weights_give_zero_factor(self):
        net = FactorNet()
        with torch.no_grad():
            for p in net.parameters():
                p.zero_()
        out = net(torch.rand(3, 9, 9))
        assert torch.equal(out, torch.zeros(3, 9, 9))

    def test_deterministic_forward(self, rng):
        net = init_factor_net(seed=0)
        x = torch.tensor(rng.uniform(0, 1, (3, 12, 12)), dtype=torch.float32)
        assert torch.equal(net(x), net(x))

    def test_rejects_bad_width(self):
        with pytest.raises(ValueError):
            FactorNetConfig(width=0)


class TestInit:
    def test_same_seed_is_bit_identical(self):
        a = init_factor_net(seed=7)
        b = init_factor_net(seed=7)
        for pa, pb in zip(a.parameters(), b.parameters()):
            assert torch.equal(pa, pb)

    def test_seeds_differ(self):
        a = init_factor_net(seed=7)
        b = init_factor_net(seed=8)
        assert any(not torch.equal(pa, pb) for pa, pb in zip(a.parameters(), b.parameters()))

    def test_kernel_std_near_002(self):
        # width 128 provides > 1e5 kernel entries for a tight sample estimate
        net = init_factor_net(FactorNetConfig(width=128), seed=0)
        entries = np.concatenate([
            b.dw.weight.detach().numpy().ravel() for b in net.blocks
        ] + [
            b.pw.weight.detach().numpy().ravel() for b in net.blocks
        ])
        assert entries.size >= 100_000
        assert 0.019 <= entries.std() <= 0.021

    def test_biases_are_exactly_zero(self):
        net = init_factor_net(seed=11)
        for block in net.blocks:
            assert torch.equal(block.dw.bias, torch.zeros_like(block.dw.bias))
            assert torch.equal(block.pw.bias, torch.zeros_like(block.pw.bias))


class TestMacs:
    def test_per_pixel_count(self):
        assert PER_PIXEL_MACS == 10_075
        assert count_macs(FactorNet(), 1, 1) == 10_075

    def test_linear_in_area(self):
        net = FactorNet()
        base = count_macs(net, 10, 10)
        assert count_macs(net, 20, 10) == 2 * base
        assert count_macs(net, 30, 40) == 12 * base

    def test_benchmark_resolution(self):
        assert count_macs(FactorNet(), 900, 1200) == 10_075 * 900 * 1200


class TestCheckpoint:
    def test_round_trip_is_exact(self, tmp_path):
        net = init_factor_net(seed=5)
        path = tmp_path / "ckpt.npz"
        save_checkpoint(net, path)
        back = load_checkpoint(path)
        for a, b in zip(net.state_dict().values(), back.state_dict().values()):
            assert torch.equal(a, b)

    def test_truncated_file_fails_cleanly(self, tmp_path):
        path = tmp_path / "ckpt.npz"
        save_checkpoint(init_factor_net(seed=5), path)
        data = path.read_bytes()
        path.write_bytes(data[: len(data) // 2])
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_width_mismatch_names_block(self, tmp_path):
        path = tmp_path / "wide.npz"
        save_checkpoint(init_factor_net(FactorNetConfig(width=64), seed=0), path)
        with pytest.raises(CheckpointError, match="block1"):
            load_checkpoint(path, expected_width=32)

    def test_not_a_checkpoint(self, tmp_path):
        path = tmp_path / "junk.npz"
        np.savez(path, foo=np.zeros(3))
        with pytest.raises(CheckpointError, match="manifest"):
            load_checkpoint(path)

    def test_missing_array_named(self, tmp_path):
        path = tmp_path / "ckpt.npz"
        save_checkpoint(init_factor_net(seed=5), path)
        with np.load(path) as npz:
            arrays = {k: npz[k] for k in npz.files}
        arrays.pop("block3.pw.weight")
        np.savez(path, **arrays)
        with pytest.raises(CheckpointError, match="block3.pw.weight"):
            load_checkpoint(path)


class TestGradients:
    def test_parameter_gradients_match_finite_differences(self, rng):
        net = init_factor_net(seed=2).double()
        x = torch.tensor(rng.uniform(0, 1, (3, 8, 8)), dtype=torch.float64)
        weights = torch.tensor(rng.normal(size=(3, 8, 8)))

        def objective():
            return (net(x) * weights).sum()

        net.zero_grad()
        objective().backward()

        params = list(net.parameters())
        eps = 1e-3
        checked, close = 0, 0
        for _ in range(120):
            p = params[rng.integers(0, len(params))]
            idx = tuple(rng.integers(0, s) for s in p.shape)
            with torch.no_grad():
                orig = float(p[idx])
                p[idx] = orig + eps
                up = float(objective())
                p[idx] = orig - eps
                down = float(objective())
                p[idx] = orig
            fd = (up - down) / (2 * eps)
            analytic = float(p.grad[idx])
            scale = max(abs(fd), abs(analytic), 1e-8)
            checked += 1
            if abs(fd - analytic) / scale <= 1e-3:
                close += 1
        assert close / checked >= 0.99
