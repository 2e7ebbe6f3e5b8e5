"""
Базис Лагранжа и шаблоны многоточечной интерполяции.

Для k=1 шаблон из двух узлов даёт линейную интерполяцию, для k=2 -
кубическую по четырём узлам. Все функции векторизованы по ведущим осям.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import StencilError


def _validated_nodes(nodes) -> np.ndarray:
    array = np.asarray(nodes, dtype=np.float64)
    if array.ndim == 0 or array.shape[-1] < 2:
        raise StencilError("Нужно не менее двух узлов")
    if np.any(np.diff(array, axis=-1) <= 0):
        raise StencilError("Узлы должны строго возрастать (повторы недопустимы)")
    return array


def _ratios(x, nodes: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Возвращает отношения (x - x_j)/(x_i - x_j), знаменатели x_i - x_j и маску диагонали.

    Диагональ (i == j) заполнена единицами.
    """
    size = nodes.shape[-1]
    query = np.asarray(x, dtype=np.float64)[..., None]
    offsets = query - nodes  # (..., n): x - x_j
    denominators = nodes[..., :, None] - nodes[..., None, :]  # (..., n, n): x_i - x_j
    diagonal = np.eye(size, dtype=bool)
    safe = np.where(diagonal, 1.0, denominators)
    ratios = np.where(diagonal, 1.0, offsets[..., None, :] / safe)
    return ratios, safe, diagonal


def lagrange_basis(x, nodes) -> np.ndarray:
    """
    Веса L_i(x) = prod_{j != i} (x - x_j) / (x_i - x_j).

    Args:
        x: Точка запроса (скаляр или массив ведущих осей)
        nodes: Строго возрастающие узлы, последняя ось - 2k узлов

    Returns:
        Массив весов той же формы, что и nodes после broadcast
    """
    array = _validated_nodes(nodes)
    ratios, _, _ = _ratios(x, array)
    return ratios.prod(axis=-1)


def lagrange_basis_derivative(x, nodes) -> np.ndarray:
    """
    Производные dL_i/dx = sum_{m != i} 1/(x_i - x_m) · prod_{j != i, m} (x - x_j)/(x_i - x_j).
    """
    array = _validated_nodes(nodes)
    ratios, safe, _ = _ratios(x, array)
    size = array.shape[-1]
    derivative = np.zeros(ratios.shape[:-1])
    for m in range(size):
        partial = ratios.copy()
        partial[..., :, m] = 1.0
        term = partial.prod(axis=-1) / safe[..., :, m]
        term[..., m] = 0.0
        derivative += term
    return derivative


@dataclass(frozen=True)
class AxisStencil:
    """Узлы, веса и производные весов вдоль одной оси (в единицах ячеек)."""

    nodes: np.ndarray  # (B, 2k), целые
    weights: np.ndarray  # (B, 2k)
    derivatives: np.ndarray  # (B, 2k)


@dataclass(frozen=True)
class Stencil:
    """Тензорное произведение шаблонов по осям x и y."""

    x: AxisStencil
    y: AxisStencil

    @property
    def size(self) -> int:
        return self.x.nodes.shape[-1] * self.y.nodes.shape[-1]


def axis_stencil(t, resolution: int, k: int) -> AxisStencil:
    """
    Строит шаблон из 2k линий сетки вокруг t (в единицах ячеек, 0 <= t <= N).

    k линий лежат не правее точки и k - правее; у границ окно сдвигается
    внутрь, чтобы все узлы оставались в [0, N].
    """
    scaled = np.atleast_1d(np.asarray(t, dtype=np.float64))
    width = 2 * k
    if resolution + 1 < width:
        raise StencilError(
            f"Разрешение {resolution} не вмещает шаблон из {width} узлов"
        )
    base = np.clip(np.floor(scaled), 0, resolution - 1).astype(np.int64)
    start = np.clip(base - k + 1, 0, resolution + 1 - width)
    nodes = start[:, None] + np.arange(width, dtype=np.int64)
    return AxisStencil(
        nodes=nodes,
        weights=lagrange_basis(scaled, nodes),
        derivatives=lagrange_basis_derivative(scaled, nodes),
    )


def interpolant_trace(values, k: int, samples: int = 512) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Одномерный интерполянт через значения в узлах 0..N и его производная.

    Args:
        values: Значения в N + 1 узлах
        k: Полупорядок интерполяции
        samples: Число точек трассы

    Returns:
        Точки t, значения интерполянта и производные по t
    """
    node_values = np.asarray(values, dtype=np.float64)
    resolution = node_values.shape[0] - 1
    t = np.linspace(0.0, resolution, samples)
    stencil = axis_stencil(t, resolution, k)
    gathered = node_values[stencil.nodes]
    return (
        t,
        np.sum(stencil.weights * gathered, axis=-1),
        np.sum(stencil.derivatives * gathered, axis=-1),
    )
