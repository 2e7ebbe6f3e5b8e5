"""
Пространственное хеширование вершин сетки.

Вершина (i, j) уровня с разрешением N - это целые координаты 0 <= i, j <= N,
где i идёт вдоль оси x (столбцы), j - вдоль оси y (строки). Карты индексов
хранятся построчно: array[j, i].
"""

from collections import Counter
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import CoordinateRangeError
from .grid_config import LevelGeometry

# Множители схемы XOR-хеширования; оба нечётные
HASH_PRIMES = (1, 2654435761)


@dataclass(frozen=True)
class VertexIndex:
    """Целочисленные координаты вершины сетки."""

    i: int
    j: int


@dataclass(frozen=True)
class Voxel:
    """Четыре вершины ячейки и положение точки внутри неё."""

    vertices: Tuple[VertexIndex, VertexIndex, VertexIndex, VertexIndex]
    fraction: Tuple[float, float]


def spatial_hash(i, j, table_size: int):
    """
    Хеш (pi_1·i XOR pi_2·j) mod T.

    Принимает как целые числа, так и массивы numpy. Переполнение uint64 не
    влияет на результат: T - степень двойки, и младшие биты произведения
    сохраняются.
    """
    scalar = np.ndim(i) == 0 and np.ndim(j) == 0
    i_arr = np.atleast_1d(np.asarray(i, dtype=np.uint64))
    j_arr = np.atleast_1d(np.asarray(j, dtype=np.uint64))
    hashed = np.bitwise_xor(
        np.multiply(i_arr, np.uint64(HASH_PRIMES[0])),
        np.multiply(j_arr, np.uint64(HASH_PRIMES[1])),
    )
    result = np.bitwise_and(hashed, np.uint64(table_size - 1)).astype(np.int64)
    if scalar:
        return int(result[0])
    return result


def level_entries(level: LevelGeometry, i, j, table_size: int) -> np.ndarray:
    """
    Отображает вершины уровня в записи таблицы.

    Плотные уровни индексируются напрямую (i + j·(N+1)) и потому инъективны;
    хешированные уровни используют spatial_hash.
    """
    i_arr = np.asarray(i, dtype=np.int64)
    j_arr = np.asarray(j, dtype=np.int64)
    if level.dense:
        return i_arr + j_arr * level.vertices_per_axis
    return np.asarray(spatial_hash(i_arr, j_arr, table_size), dtype=np.int64)


def check_coordinates(coords: np.ndarray) -> np.ndarray:
    """Проверяет, что координаты лежат в [0, 1]^2, и возвращает массив (B, 2)."""
    points = np.atleast_2d(np.asarray(coords, dtype=np.float64))
    if points.shape[-1] != 2:
        raise CoordinateRangeError(f"Ожидались двумерные координаты, форма {points.shape}")
    if not np.all(np.isfinite(points)) or np.any(points < 0.0) or np.any(points > 1.0):
        raise CoordinateRangeError("Координаты должны лежать в [0, 1]^2")
    return points


def voxel_vertices(x, level: LevelGeometry) -> Voxel:
    """
    Находит ячейку уровня, содержащую нормализованную координату.

    Args:
        x: Координата (x, y) в [0, 1]^2
        level: Геометрия уровня

    Returns:
        Вершины ячейки в порядке (0,0), (1,0), (0,1), (1,1) и дробное положение
    """
    point = check_coordinates(x)[0]
    n = level.resolution
    scaled = point * n
    # На правой/нижней границе ячейка прижимается внутрь, дробь становится 1
    base = np.clip(np.floor(scaled), 0, n - 1).astype(np.int64)
    fraction = scaled - base
    bi, bj = int(base[0]), int(base[1])
    vertices = (
        VertexIndex(bi, bj),
        VertexIndex(bi + 1, bj),
        VertexIndex(bi, bj + 1),
        VertexIndex(bi + 1, bj + 1),
    )
    return Voxel(vertices=vertices, fraction=(float(fraction[0]), float(fraction[1])))


def index_map(level: LevelGeometry, table_size: int) -> np.ndarray:
    """Карта индексов размером (N+1)×(N+1), построчно: result[j, i]."""
    side = level.vertices_per_axis
    j, i = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
    return level_entries(level, i, j, table_size)


def repetition_offsets(indices: np.ndarray) -> Optional[Tuple[int, int]]:
    """
    Находит наиболее частое смещение (di, dj) между вершинами с общей записью.

    Returns:
        Смещение или None, если повторов нет
    """
    flat = indices.ravel()
    order = np.argsort(flat, kind="stable")
    sorted_entries = flat[order]
    repeated = np.flatnonzero(sorted_entries[1:] == sorted_entries[:-1])
    if repeated.size == 0:
        return None

    side = indices.shape[1]
    first = order[repeated]
    second = order[repeated + 1]
    dj = second // side - first // side
    di = second % side - first % side
    counts = Counter(zip(di.tolist(), dj.tolist()))
    (best_di, best_dj), _ = max(counts.items(), key=lambda item: (item[1], item[0]))
    return best_di, best_dj
