import numpy as np
import pytest

from src.core import StencilError, axis_stencil, interpolant_trace, lagrange_basis, lagrange_basis_derivative


def _derivative_jumps(values: np.ndarray, k: int) -> np.ndarray:
    """Скачки производной интерполянта во внутренних узлах."""
    resolution = values.size - 1
    nodes = np.arange(1, resolution, dtype=np.float64)
    left = axis_stencil(nodes - 1e-9, resolution, k)
    right = axis_stencil(nodes + 1e-9, resolution, k)
    d_left = np.sum(left.derivatives * values[left.nodes], axis=-1)
    d_right = np.sum(right.derivatives * values[right.nodes], axis=-1)
    return np.abs(d_right - d_left)


class TestLagrangeBasis:
    def test_partition_of_unity(self, rng):
        nodes = np.array([0.0, 1.0, 2.0, 3.0])
        x = rng.uniform(0, 3, size=200)
        np.testing.assert_allclose(lagrange_basis(x, nodes).sum(axis=-1), 1.0, atol=1e-12)
        np.testing.assert_allclose(lagrange_basis_derivative(x, nodes).sum(axis=-1), 0.0, atol=1e-10)

    def test_kronecker_at_nodes(self):
        nodes = np.array([2.0, 3.0, 4.0, 5.0])
        np.testing.assert_allclose(lagrange_basis(nodes, nodes), np.eye(4), atol=1e-12)

    def test_linear_case(self):
        np.testing.assert_allclose(lagrange_basis(0.25, [0.0, 1.0]), [0.75, 0.25])
        np.testing.assert_allclose(lagrange_basis_derivative(0.25, [0.0, 1.0]), [-1.0, 1.0])

    def test_derivative_matches_finite_differences(self, rng):
        nodes = np.array([-1.0, 0.5, 1.5, 4.0])
        x = rng.uniform(-1, 4, size=100)
        h = 1e-6
        numerical = (lagrange_basis(x + h, nodes) - lagrange_basis(x - h, nodes)) / (2 * h)
        np.testing.assert_allclose(lagrange_basis_derivative(x, nodes), numerical, rtol=1e-6, atol=1e-7)

    def test_reproduces_cubic(self, rng):
        nodes = np.array([1.0, 2.0, 3.0, 4.0])
        coefficients = rng.normal(size=4)
        x = rng.uniform(1, 4, size=50)
        weights = lagrange_basis(x, nodes)
        np.testing.assert_allclose(
            weights @ np.polyval(coefficients, nodes), np.polyval(coefficients, x), atol=1e-10
        )
        derivative = lagrange_basis_derivative(x, nodes) @ np.polyval(coefficients, nodes)
        np.testing.assert_allclose(derivative, np.polyval(np.polyder(coefficients), x), atol=1e-9)

    @pytest.mark.parametrize("nodes", [[0.0, 0.0, 1.0], [1.0, 0.0], [0.0]])
    def test_invalid_nodes(self, nodes):
        with pytest.raises(StencilError):
            lagrange_basis(0.5, nodes)
        with pytest.raises(StencilError):
            lagrange_basis_derivative(0.5, nodes)


class TestAxisStencil:
    @pytest.mark.parametrize(
        "t, k, expected",
        [
            (3.5, 1, [3, 4]),
            (3.5, 2, [2, 3, 4, 5]),
            (0.2, 2, [0, 1, 2, 3]),
            (7.9, 2, [5, 6, 7, 8]),
            (8.0, 2, [5, 6, 7, 8]),
            (8.0, 1, [7, 8]),
        ],
    )
    def test_window(self, t, k, expected):
        assert axis_stencil(t, 8, k).nodes[0].tolist() == expected

    def test_too_coarse(self):
        with pytest.raises(StencilError):
            axis_stencil(0.5, 2, 2)


class TestContinuity:
    def test_interpolates_nodes(self, rng):
        values = rng.normal(size=9)
        for k in (1, 2):
            t, traced, _ = interpolant_trace(values, k, samples=9)
            np.testing.assert_allclose(t, np.arange(9))
            np.testing.assert_allclose(traced, values, atol=1e-12)

    def test_value_is_continuous(self, rng):
        values = rng.normal(size=20)
        nodes = np.arange(1, 19, dtype=np.float64)
        for k in (1, 2):
            left = axis_stencil(nodes - 1e-12, 19, k)
            right = axis_stencil(nodes + 1e-12, 19, k)
            np.testing.assert_allclose(
                np.sum(left.weights * values[left.nodes], axis=-1),
                np.sum(right.weights * values[right.nodes], axis=-1),
                atol=1e-9,
            )

    def test_cubic_data_has_continuous_derivative(self, rng):
        coefficients = rng.normal(size=4) * [0.001, 0.01, 0.1, 1.0]
        values = np.polyval(coefficients, np.arange(16, dtype=np.float64))
        assert _derivative_jumps(values, 2).max() < 1e-6

    def test_cubic_jumps_smaller_than_linear(self, rng):
        values = rng.normal(size=400)
        linear = _derivative_jumps(values, 1)
        cubic = _derivative_jumps(values, 2)
        assert linear.mean() > 0.1
        assert cubic.mean() < linear.mean()
