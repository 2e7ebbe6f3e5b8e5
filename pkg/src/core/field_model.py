"""
Полная модель изображения: хеш-таблицы и попиксельный декодер.

decode выполняет прямой проход для пакета координат и сохраняет кэш,
backward по этому кэшу возвращает точные градиенты по записям таблиц,
весам декодера и координатам.
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .errors import ConfigMismatchError, ShapeMismatchError, StaleCacheError
from .hash_grid import HashGrid
from .interpolation import LevelSample, interpolate_level
from .pixel_decoder import DecoderGradients, PixelDecoder

# Размер блока точек при восстановлении полного изображения
RECONSTRUCT_CHUNK = 4096


@dataclass(frozen=True)
class DecodedSample:
    """Результат decode для пакета точек вместе с кэшем для backward."""

    coords: np.ndarray  # (B, 2)
    rgb: np.ndarray  # (B, 3)
    features: np.ndarray  # (B, L·F), после маски уровней
    pre_activation: np.ndarray  # (B, H)
    levels: Tuple[LevelSample, ...]
    feature_mask: Optional[np.ndarray]
    grid: HashGrid
    decoder: PixelDecoder
    grid_version: int
    decoder_version: int

    def level_features(self) -> np.ndarray:
        """Интерполированные признаки по уровням (B, L, F) до маскирования."""
        return np.stack([sample.value for sample in self.levels], axis=1)


@dataclass(frozen=True)
class SparseTableGrad:
    """Разреженный градиент по одной таблице: пары (запись, вектор F)."""

    level: int
    indices: np.ndarray  # (n,)
    values: np.ndarray  # (n, F)

    def accumulate_into(self, dense: np.ndarray) -> None:
        """Прибавляет градиент к плотному массиву (T, F) в порядке записей."""
        np.add.at(dense, self.indices, self.values)

    def nonzero_entries(self) -> int:
        touched = np.unique(self.indices[np.any(self.values != 0.0, axis=1)])
        return touched.size


@dataclass(frozen=True)
class FieldGradients:
    tables: List[SparseTableGrad]
    decoder: DecoderGradients
    coords: np.ndarray  # (B, 2)

    def dense_tables(self, shape: Tuple[int, int, int]) -> np.ndarray:
        dense = np.zeros(shape)
        for table_grad in self.tables:
            table_grad.accumulate_into(dense[table_grad.level])
        return dense


def check_compatible(grid: HashGrid, decoder: PixelDecoder) -> None:
    if decoder.input_dim != grid.config.input_dim:
        raise ConfigMismatchError(
            f"Вход декодера ({decoder.input_dim}) не равен L·F сетки "
            f"({grid.config.input_dim})"
        )


def decode(
    grid: HashGrid,
    decoder: PixelDecoder,
    x,
    k: Optional[int] = None,
    feature_mask: Optional[np.ndarray] = None,
) -> DecodedSample:
    """
    Декодирует цвет в точках x.

    Args:
        grid: Хеш-сетка
        decoder: Декодер
        x: Координаты (2,) или (B, 2) в [0, 1]^2
        k: Полупорядок интерполяции (по умолчанию из конфигурации сетки)
        feature_mask: Множители каналов входа декодера (D,), например для абляции уровней

    Returns:
        Пакет декодированных точек с кэшем
    """
    check_compatible(grid, decoder)
    order = grid.config.k if k is None else k
    levels = tuple(
        interpolate_level(grid.tables[geometry.level], x, geometry, order, grid.config.table_size)
        for geometry in grid.levels
    )
    features = np.concatenate([sample.value for sample in levels], axis=1)
    mask = None
    if feature_mask is not None:
        mask = np.asarray(feature_mask, dtype=np.float64)
        if mask.shape != (grid.config.input_dim,):
            raise ShapeMismatchError(f"Маска признаков должна иметь форму ({grid.config.input_dim},)")
        features = features * mask
    rgb, pre_activation = decoder.forward(features)
    return DecodedSample(
        coords=np.atleast_2d(np.asarray(x, dtype=np.float64)),
        rgb=rgb,
        features=features,
        pre_activation=pre_activation,
        levels=levels,
        feature_mask=mask,
        grid=grid,
        decoder=decoder,
        grid_version=grid.version,
        decoder_version=decoder.version,
    )


def backward(sample: DecodedSample, grad_rgb) -> FieldGradients:
    """
    Обратный проход по кэшу decode.

    Args:
        sample: Результат decode
        grad_rgb: Градиент потерь по RGB, форма (B, 3)

    Returns:
        Разреженные градиенты таблиц, плотные градиенты декодера и градиенты координат
    """
    if (
        sample.grid.version != sample.grid_version
        or sample.decoder.version != sample.decoder_version
    ):
        raise StaleCacheError("Параметры модели изменились после decode")
    upstream = np.asarray(grad_rgb, dtype=np.float64).reshape(sample.rgb.shape)

    decoder_grads, grad_features = sample.decoder.backward(
        sample.features, sample.pre_activation, upstream
    )
    if sample.feature_mask is not None:
        grad_features = grad_features * sample.feature_mask

    width = sample.grid.config.features_per_level
    table_grads = []
    coord_grad = np.zeros(sample.coords.shape)
    for level, level_sample in enumerate(sample.levels):
        grad_level = grad_features[:, level * width : (level + 1) * width]  # (B, F)
        values = level_sample.weights[:, :, None] * grad_level[:, None, :]  # (B, S, F)
        table_grads.append(
            SparseTableGrad(
                level=level,
                indices=level_sample.indices.reshape(-1),
                values=values.reshape(-1, width),
            )
        )
        coord_grad += np.einsum("bf,bfc->bc", grad_level, level_sample.coord_grad)

    return FieldGradients(tables=table_grads, decoder=decoder_grads, coords=coord_grad)


def pixel_centers(width: int, height: int) -> np.ndarray:
    """Нормализованные центры пикселей построчно, форма (H·W, 2)."""
    rows, cols = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    return np.stack(
        [(cols.ravel() + 0.5) / width, (rows.ravel() + 0.5) / height], axis=1
    )


def reconstruct(
    grid: HashGrid,
    decoder: PixelDecoder,
    width: int,
    height: int,
    k: Optional[int] = None,
    feature_mask: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Декодирует все центры пикселей и возвращает массив (H, W, 3)."""
    coords = pixel_centers(width, height)
    chunks = [
        decode(grid, decoder, coords[start : start + RECONSTRUCT_CHUNK], k, feature_mask).rgb
        for start in range(0, coords.shape[0], RECONSTRUCT_CHUNK)
    ]
    return np.concatenate(chunks, axis=0).reshape(height, width, 3)


def level_group_masks(grid: HashGrid) -> Tuple[np.ndarray, np.ndarray]:
    """
    Маски каналов входа декодера для плотных и хешированных уровней.

    Маски дополняют друг друга: их сумма - вектор единиц.
    """
    width = grid.config.features_per_level
    dense = np.repeat([1.0 if level.dense else 0.0 for level in grid.levels], width)
    return dense, 1.0 - dense
