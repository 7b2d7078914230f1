import numpy as np
import pytest
import torch

from lowlight import CurveConfig, apply_curve, curve_step


class TestCurveStep:
    def test_zero_factor_is_identity(self, rng):
        x = rng.uniform(0, 1, (3, 8, 8))
        out = curve_step(x, np.zeros_like(x))
        assert np.array_equal(out, x)

    def test_endpoints_are_fixed(self, rng):
        r = rng.uniform(-1, 1, (3, 4, 4))
        assert np.array_equal(curve_step(np.zeros((3, 4, 4)), r), np.zeros((3, 4, 4)))
        assert np.array_equal(curve_step(np.ones((3, 4, 4)), r), np.ones((3, 4, 4)))

    def test_hand_values(self):
        assert float(curve_step(np.array(0.5), np.array(-0.8))) == pytest.approx(0.7, abs=1e-12)
        assert float(curve_step(np.array(0.5), np.array(1.0))) == pytest.approx(0.25, abs=1e-12)

    def test_shape_mismatch_rejected(self, rng):
        with pytest.raises(ValueError, match="shapes differ"):
            curve_step(rng.uniform(0, 1, (3, 4, 4)), rng.uniform(-1, 1, (3, 4, 5)))


class TestApplyCurve:
    def test_single_step_equals_curve_step(self, rng):
        x = rng.uniform(0, 1, (3, 6, 6))
        r = rng.uniform(-1, 1, (3, 6, 6))
        assert np.array_equal(apply_curve(x, r, CurveConfig(steps=1)), curve_step(x, r))

    def test_two_step_hand_value(self):
        out = apply_curve(np.array(0.25), np.array(-1.0), CurveConfig(steps=2))
        assert float(out) == pytest.approx(0.68359375, abs=1e-12)

    def test_zero_factor_any_depth(self, rng):
        x = rng.uniform(0, 1, (3, 5, 5))
        out = apply_curve(x, np.zeros_like(x), CurveConfig(steps=13))
        assert np.array_equal(out, x)

    def test_range_preserved_order2(self, rng):
        x = rng.uniform(0, 1, (3, 32, 32))
        r = rng.uniform(-1, 1, (3, 32, 32))
        out = apply_curve(x, r, CurveConfig(steps=8))
        assert out.min() >= 0.0 and out.max() <= 1.0

    def test_monotone_in_value(self, rng):
        # f'(v) = 1 + r(2v - 1) >= 0 on the domain, so order preserved
        v = np.sort(rng.uniform(0, 1, 4096))
        r = np.full_like(v, rng.uniform(-1, 1))
        out = apply_curve(v, r, CurveConfig(steps=8))
        assert np.all(np.diff(out) >= 0)

    def test_directionality(self, rng):
        v = rng.uniform(0.05, 0.95, 1024)
        brightened = apply_curve(v, np.full_like(v, -0.5), CurveConfig(steps=1))
        darkened = apply_curve(v, np.full_like(v, 0.5), CurveConfig(steps=1))
        assert np.all(brightened > v)
        assert np.all(darkened < v)

    def test_higher_order_clamps_with_warning(self, rng):
        x = rng.uniform(0, 1, (3, 4, 4))
        r = rng.uniform(-1, 1, (3, 4, 4))
        with pytest.warns(UserWarning, match="clamping"):
            out = apply_curve(x, r, CurveConfig(order=3, steps=4))
        assert out.min() >= 0.0 and out.max() <= 1.0

    def test_config_validation(self):
        with pytest.raises(ValueError):
            CurveConfig(order=0)
        with pytest.raises(ValueError):
            CurveConfig(steps=0)


class TestCurveGradients:
    def test_gradients_match_finite_differences(self, rng):
        x0 = torch.tensor(rng.uniform(0.1, 0.9, (3, 5, 5)), dtype=torch.float64)
        r0 = torch.tensor(rng.uniform(-0.9, 0.9, (3, 5, 5)), dtype=torch.float64)
        cfg = CurveConfig(steps=4)

        x = x0.clone().requires_grad_(True)
        r = r0.clone().requires_grad_(True)
        weights = torch.tensor(rng.normal(size=(3, 5, 5)))
        (apply_curve(x, r, cfg) * weights).sum().backward()

        eps = 1e-6
        for var, grad in ((x0, x.grad), (r0, r.grad)):
            for _ in range(20):
                idx = tuple(rng.integers(0, s) for s in var.shape)
                plus, minus = var.clone(), var.clone()
                plus[idx] += eps
                minus[idx] -= eps
                if var is x0:
                    fd = ((apply_curve(plus, r0, cfg) - apply_curve(minus, r0, cfg))
                          * weights).sum() / (2 * eps)
                else:
                    fd = ((apply_curve(x0, plus, cfg) - apply_curve(x0, minus, cfg))
                          * weights).sum() / (2 * eps)
                assert float(grad[idx]) == pytest.approx(float(fd), rel=1e-4, abs=1e-8)
