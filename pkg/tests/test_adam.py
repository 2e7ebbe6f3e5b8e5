import numpy as np
import pytest

from src.core import AdamOptimizer


class TestAdam:
    def test_first_step_is_lr_times_sign(self, rng):
        param = rng.normal(size=(5, 3))
        grad = rng.normal(size=(5, 3))
        start = param.copy()
        AdamOptimizer(param.shape, lr=0.01).step(param, grad)
        np.testing.assert_allclose(start - param, 0.01 * np.sign(grad), rtol=1e-9)

    def test_lazy_rows(self, rng):
        param = rng.normal(size=(6, 2))
        grad = rng.normal(size=(6, 2))
        rows = np.array([True, False, True, False, False, True])
        optimizer = AdamOptimizer(param.shape, lr=0.1)
        start = param.copy()
        optimizer.step(param, grad, rows)
        np.testing.assert_array_equal(param[~rows], start[~rows])
        assert not np.any(optimizer.m[~rows]) and not np.any(optimizer.v[~rows])
        assert np.all(param[rows] != start[rows])

    def test_minimises_quadratic(self):
        target = np.array([1.0, -2.0, 0.5])
        param = np.zeros(3)
        optimizer = AdamOptimizer(param.shape, lr=0.01)
        for _ in range(2000):
            optimizer.step(param, 2.0 * (param - target))
        np.testing.assert_allclose(param, target, atol=0.05)

    def test_zero_gradient_does_not_move(self):
        param = np.ones(4)
        AdamOptimizer(param.shape, lr=1.0).step(param, np.zeros(4))
        np.testing.assert_array_equal(param, np.ones(4))

    def test_rejects_non_positive_lr(self):
        with pytest.raises(ValueError):
            AdamOptimizer((2,), lr=0.0)
