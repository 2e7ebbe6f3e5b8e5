from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from .grid_config import LevelGeometry
from .lagrange import Stencil, axis_stencil
from .spatial_hash import check_coordinates, level_entries


@dataclass(frozen=True)
class LevelSample:
    """Результат интерполяции одного уровня для пакета из B точек."""

    value: np.ndarray  # (B, F)
    coord_grad: np.ndarray  # (B, F, 2): d value_f / d(x, y) в нормализованных единицах
    indices: np.ndarray  # (B, S): записи таблицы, S = (2k)^2
    weights: np.ndarray  # (B, S): тензорные веса шаблона
    stencil: Stencil

    def entry_weights(self, sample: int = 0) -> Dict[int, float]:
        """
        Разреженный градиент значения по записям таблицы для одной точки.

        Вершины шаблона, попавшие в одну запись, суммируются.
        """
        merged: Dict[int, float] = {}
        for index, weight in zip(self.indices[sample].tolist(), self.weights[sample].tolist()):
            merged[index] = merged.get(index, 0.0) + weight
        return merged


def interpolate_level(
    table: np.ndarray,
    x,
    level: LevelGeometry,
    k: int,
    table_size: Optional[int] = None,
) -> LevelSample:
    """
    Интерполирует признаки уровня в точках x по шаблону (2k)×(2k).

    Args:
        table: Таблица уровня формы (T, F)
        x: Координаты (2,) или (B, 2) в [0, 1]^2
        level: Геометрия уровня
        k: Полупорядок интерполяции
        table_size: Размер таблицы (по умолчанию table.shape[0])

    Returns:
        Значения, градиенты по координатам и разреженный шаблон записей
    """
    points = check_coordinates(x)
    size = table.shape[0] if table_size is None else table_size
    resolution = level.resolution

    sx = axis_stencil(points[:, 0] * resolution, resolution, k)
    sy = axis_stencil(points[:, 1] * resolution, resolution, k)
    batch = points.shape[0]

    # Оси шаблона: [b, узел по y, узел по x]
    entries = level_entries(level, sx.nodes[:, None, :], sy.nodes[:, :, None], size)
    weights = sy.weights[:, :, None] * sx.weights[:, None, :]
    dweights_x = sy.weights[:, :, None] * sx.derivatives[:, None, :]
    dweights_y = sy.derivatives[:, :, None] * sx.weights[:, None, :]

    indices = entries.reshape(batch, -1)
    weights = weights.reshape(batch, -1)
    features = table[indices]  # (B, S, F)

    value = np.einsum("bs,bsf->bf", weights, features)
    grad_x = np.einsum("bs,bsf->bf", dweights_x.reshape(batch, -1), features) * resolution
    grad_y = np.einsum("bs,bsf->bf", dweights_y.reshape(batch, -1), features) * resolution

    return LevelSample(
        value=value,
        coord_grad=np.stack([grad_x, grad_y], axis=-1),
        indices=indices,
        weights=weights,
        stencil=Stencil(x=sx, y=sy),
    )
