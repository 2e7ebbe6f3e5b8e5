import math
from dataclasses import dataclass, field
from typing import List

from .errors import GridConfigError


@dataclass(frozen=True)
class GridConfig:
    """Гиперпараметры многоуровневой хеш-сетки."""

    levels: int = 12  # L
    table_size: int = 2**12  # T, степень двойки
    features_per_level: int = 2  # F
    n_min: int = 4  # самое грубое разрешение (ячеек на ось)
    n_max: int = 346  # самое тонкое разрешение
    k: int = 1  # полупорядок интерполяции: 1 - билинейная, 2 - кубическая

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        """Проверяет инварианты конфигурации."""
        if self.levels < 2:
            raise GridConfigError(f"Нужно не менее двух уровней, получено {self.levels}")
        if self.table_size < 1 or self.table_size & (self.table_size - 1):
            raise GridConfigError(
                f"Размер таблицы должен быть степенью двойки: {self.table_size}"
            )
        if self.features_per_level < 1:
            raise GridConfigError("Число признаков на уровень должно быть >= 1")
        if self.n_min < 1:
            raise GridConfigError(f"n_min должно быть >= 1, получено {self.n_min}")
        if self.n_max < self.n_min:
            raise GridConfigError(
                f"n_max ({self.n_max}) не может быть меньше n_min ({self.n_min})"
            )
        if self.k < 1:
            raise GridConfigError(f"k должно быть >= 1, получено {self.k}")
        # Шаблон из 2k узлов должен помещаться в (n_min + 1) вершин
        if self.n_min + 1 < 2 * self.k:
            raise GridConfigError(
                f"Разрешение {self.n_min} слишком мало для k={self.k}: "
                f"нужно не менее {2 * self.k - 1} ячеек"
            )

    @property
    def input_dim(self) -> int:
        """Размерность входа декодера, L·F."""
        return self.levels * self.features_per_level

    @property
    def growth_factor(self) -> float:
        return math.exp(
            (math.log(self.n_max) - math.log(self.n_min)) / (self.levels - 1)
        )

    def as_dict(self) -> dict:
        return {
            "levels": self.levels,
            "table_size": self.table_size,
            "features_per_level": self.features_per_level,
            "n_min": self.n_min,
            "n_max": self.n_max,
            "k": self.k,
        }


@dataclass(frozen=True)
class LevelGeometry:
    """Геометрия одного уровня сетки."""

    level: int
    resolution: int  # N_l, ячеек на ось
    dense: bool = field(default=False)  # (N_l + 1)^2 <= T

    @property
    def vertices_per_axis(self) -> int:
        return self.resolution + 1

    @property
    def vertex_count(self) -> int:
        return self.vertices_per_axis**2


# Допуск на ошибку округления: n_min·b^(L-1) должно давать ровно n_max
_FLOOR_TOLERANCE = 1e-9


def resolution_schedule(config: GridConfig) -> List[LevelGeometry]:
    """
    Вычисляет геометрическую прогрессию разрешений N_l = floor(n_min · b^l).

    Args:
        config: Конфигурация сетки

    Returns:
        Ровно L описаний уровней с признаком плотности
    """
    if config.levels < 2:
        raise GridConfigError("Коэффициент роста не определён при L < 2")

    log_step = (math.log(config.n_max) - math.log(config.n_min)) / (config.levels - 1)
    schedule = []
    for level in range(config.levels):
        scaled = config.n_min * math.exp(log_step * level)
        resolution = math.floor(scaled + _FLOOR_TOLERANCE)
        dense = (resolution + 1) ** 2 <= config.table_size
        schedule.append(LevelGeometry(level=level, resolution=resolution, dense=dense))
    return schedule
