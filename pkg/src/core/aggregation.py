"""Сведение карт признаков в записи хеш-таблиц средним по маске записи."""

from typing import List, Optional, Tuple

import numpy as np
from PIL import Image

from .errors import ShapeMismatchError
from .grid_config import GridConfig, LevelGeometry, resolution_schedule
from .hash_grid import HashGrid
from .spatial_hash import index_map


def aggregate_feature_map(
    feature_map: np.ndarray, level: LevelGeometry, table_size: int
) -> np.ndarray:
    """
    Записывает в запись u среднее всех элементов карты, чьи вершины хешируются в u.

    Args:
        feature_map: Карта (S, S, F), где S = N + 1 (карта вершин) или S = N
        level: Геометрия уровня
        table_size: Размер таблицы T

    Returns:
        Таблица уровня (T, F); записи без прообраза равны нулю
    """
    values = np.asarray(feature_map, dtype=np.float64)
    side = values.shape[0] if values.ndim == 3 else -1
    if values.ndim != 3 or values.shape[1] != side or side not in (
        level.vertices_per_axis,
        level.resolution,
    ):
        raise ShapeMismatchError(
            f"Карта формы {values.shape} не подходит уровню с разрешением {level.resolution}"
        )
    if not np.all(np.isfinite(values)):
        raise ShapeMismatchError("Карта признаков содержит нечисловые значения")

    # Для карты N×N отбрасываются последние строка и столбец маски вершин
    entries = index_map(level, table_size)[:side, :side].ravel()
    features = values.reshape(-1, values.shape[2])

    sums = np.zeros((table_size, features.shape[1]))
    np.add.at(sums, entries, features)
    counts = np.bincount(entries, minlength=table_size).astype(np.float64)
    table = np.zeros_like(sums)
    filled = counts > 0
    table[filled] = sums[filled] / counts[filled, None]
    return table


def pyramid_feature_maps(pixels: np.ndarray, config: GridConfig) -> List[np.ndarray]:
    """
    Строит по изображению карты признаков на сетке вершин каждого уровня.

    Каналы: центрированная яркость, оппоненты красный-синий и зелёный-пурпурный,
    далее нули.
    """
    maps = []
    image = Image.fromarray(np.clip(np.rint(pixels * 255.0), 0, 255).astype(np.uint8), "RGB")
    for level in resolution_schedule(config):
        side = level.vertices_per_axis
        resampled = np.asarray(image.resize((side, side), Image.Resampling.BILINEAR), dtype=np.float64) / 255.0
        red, green, blue = resampled[..., 0], resampled[..., 1], resampled[..., 2]
        channels = [
            (red + green + blue) / 3.0 - 0.5,
            (red - blue) / 2.0,
            green - (red + blue) / 2.0,
        ]
        stack = np.zeros((side, side, config.features_per_level))
        for index in range(min(len(channels), config.features_per_level)):
            stack[..., index] = channels[index]
        maps.append(stack)
    return maps


def grid_from_feature_maps(
    maps: List[np.ndarray],
    config: GridConfig,
    scale: float = 1.0,
    extent: Optional[Tuple[int, int]] = None,
) -> HashGrid:
    """Собирает HashGrid, сводя по одной карте на уровень."""
    schedule = resolution_schedule(config)
    if len(maps) != len(schedule):
        raise ShapeMismatchError(f"Ожидалось {len(schedule)} карт, получено {len(maps)}")
    tables = np.stack(
        [
            aggregate_feature_map(feature_map, level, config.table_size)
            for feature_map, level in zip(maps, schedule)
        ]
    )
    return HashGrid(config, tables * scale, extent)
