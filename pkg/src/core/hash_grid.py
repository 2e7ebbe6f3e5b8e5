from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Tuple

import numpy as np

from .errors import ShapeMismatchError
from .grid_config import GridConfig, LevelGeometry, resolution_schedule

# Диапазон равномерной инициализации записей
INIT_SCALE = 1e-4


def to_storage_precision(values: np.ndarray) -> np.ndarray:
    """Округляет значения до точности float32, сохраняя тип float64."""
    return np.asarray(values, dtype=np.float32).astype(np.float64)


@dataclass(eq=False)
class HashGrid:
    """L таблиц по T записей из F признаков - непараметрический код изображения."""

    config: GridConfig
    tables: np.ndarray  # (L, T, F), float64
    extent: Optional[Tuple[int, int]] = None  # (ширина, высота) исходного изображения
    version: int = field(default=0)

    def __post_init__(self) -> None:
        expected = (
            self.config.levels,
            self.config.table_size,
            self.config.features_per_level,
        )
        self.tables = np.asarray(self.tables, dtype=np.float64)
        if self.tables.shape != expected:
            raise ShapeMismatchError(
                f"Форма таблиц {self.tables.shape} не совпадает с {expected}"
            )
        if not np.all(np.isfinite(self.tables)):
            raise ShapeMismatchError("Таблицы содержат нечисловые значения")

    @classmethod
    def random(
        cls,
        config: GridConfig,
        rng: np.random.Generator,
        extent: Optional[Tuple[int, int]] = None,
    ) -> "HashGrid":
        """Создаёт сетку с записями из U(-1e-4, 1e-4)."""
        shape = (config.levels, config.table_size, config.features_per_level)
        return cls(config, rng.uniform(-INIT_SCALE, INIT_SCALE, size=shape), extent)

    @classmethod
    def zeros(cls, config: GridConfig, extent: Optional[Tuple[int, int]] = None) -> "HashGrid":
        shape = (config.levels, config.table_size, config.features_per_level)
        return cls(config, np.zeros(shape), extent)

    @cached_property
    def levels(self) -> List[LevelGeometry]:
        return resolution_schedule(self.config)

    def copy(self) -> "HashGrid":
        return HashGrid(self.config, self.tables.copy(), self.extent)

    def mark_updated(self) -> None:
        """Отмечает изменение параметров; кэши прямого прохода становятся недействительными."""
        self.version += 1

    def snap_to_storage(self) -> None:
        self.tables = to_storage_precision(self.tables)
        self.mark_updated()

    def payload_values(self) -> int:
        return self.tables.size

    def payload_bytes(self, bits: int = 32) -> int:
        return self.payload_values() * bits // 8
