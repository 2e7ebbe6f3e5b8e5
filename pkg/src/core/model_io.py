"""
Двоичный формат модели HSHF.

Заголовок (little-endian):
    4 байта   магия b"HSHF"
    uint16    версия формата
    uint16    флаги (бит 0: признаки и веса хранятся в 16 битах)
    9×uint32  L, T, F, n_min, n_max, k, ширина скрытого слоя, ширина и высота изображения
Далее таблицы (уровень, запись, признак), затем веса декодера по слоям:
w1 (H×D), b1, w2 (3×H), b2.
"""

import struct
from typing import Tuple

import numpy as np

from .errors import (
    BadMagicError,
    GridConfigError,
    ModelFormatError,
    NonFiniteValueError,
    TruncatedModelError,
    UnsupportedVersionError,
)
from .field_model import check_compatible
from .grid_config import GridConfig
from .hash_grid import HashGrid
from .pixel_decoder import OUTPUT_CHANNELS, PARAMETER_NAMES, PixelDecoder

MAGIC = b"HSHF"
FORMAT_VERSION = 1
FLAG_HALF_PRECISION = 0x1

_PREFIX = struct.Struct("<4sHH")
_FIELDS = struct.Struct("<9I")
HEADER_SIZE = _PREFIX.size + _FIELDS.size


def _dtype(flags: int) -> np.dtype:
    return np.dtype("<f2") if flags & FLAG_HALF_PRECISION else np.dtype("<f4")


def serialize(grid: HashGrid, decoder: PixelDecoder, half_precision: bool = False) -> bytes:
    """
    Сериализует модель в поток HSHF.

    Args:
        grid: Хеш-сетка
        decoder: Декодер, согласованный с сеткой
        half_precision: Хранить значения в 16 битах

    Returns:
        Байты модели
    """
    check_compatible(grid, decoder)
    arrays = [grid.tables] + [getattr(decoder, name) for name in PARAMETER_NAMES]
    if not all(np.all(np.isfinite(array)) for array in arrays):
        raise NonFiniteValueError("Модель содержит нечисловые значения")

    flags = FLAG_HALF_PRECISION if half_precision else 0
    width, height = grid.extent or (0, 0)
    config = grid.config
    header = _PREFIX.pack(MAGIC, FORMAT_VERSION, flags) + _FIELDS.pack(
        config.levels,
        config.table_size,
        config.features_per_level,
        config.n_min,
        config.n_max,
        config.k,
        decoder.hidden_width,
        width,
        height,
    )
    dtype = _dtype(flags)
    payload = b"".join(np.ascontiguousarray(array, dtype=dtype).tobytes() for array in arrays)
    return header + payload


def deserialize(stream: bytes) -> Tuple[HashGrid, PixelDecoder]:
    """
    Восстанавливает модель из потока HSHF.

    Ошибки формата приводят к исключению; частично прочитанная модель не возвращается.
    """
    data = bytes(stream)
    if len(data) < _PREFIX.size:
        raise TruncatedModelError(f"Поток короче заголовка: {len(data)} байт")
    magic, version, flags = _PREFIX.unpack_from(data, 0)
    if magic != MAGIC:
        raise BadMagicError(f"Неверная сигнатура: {magic!r}")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"Версия формата {version} не поддерживается")
    if len(data) < HEADER_SIZE:
        raise TruncatedModelError(f"Заголовок обрезан: {len(data)} байт")

    levels, table_size, features, n_min, n_max, k, hidden, width, height = _FIELDS.unpack_from(
        data, _PREFIX.size
    )
    try:
        config = GridConfig(
            levels=levels,
            table_size=table_size,
            features_per_level=features,
            n_min=n_min,
            n_max=n_max,
            k=k,
        )
    except GridConfigError as e:
        raise ModelFormatError(f"Некорректная конфигурация в заголовке: {e}") from e

    shapes = [
        (levels, table_size, features),
        (hidden, config.input_dim),
        (hidden,),
        (OUTPUT_CHANNELS, hidden),
        (OUTPUT_CHANNELS,),
    ]
    dtype = _dtype(flags)
    counts = [int(np.prod(shape)) for shape in shapes]
    expected = HEADER_SIZE + sum(counts) * dtype.itemsize
    if len(data) < expected:
        raise TruncatedModelError(f"Поток обрезан: {len(data)} из {expected} байт")
    if len(data) > expected:
        raise ModelFormatError(f"Лишние {len(data) - expected} байт после модели")

    values = np.frombuffer(data, dtype=dtype, offset=HEADER_SIZE).astype(np.float64)
    if not np.all(np.isfinite(values)):
        raise NonFiniteValueError("Модель содержит нечисловые значения")

    arrays = []
    offset = 0
    for shape, count in zip(shapes, counts):
        arrays.append(values[offset : offset + count].reshape(shape))
        offset += count

    extent = (width, height) if width and height else None
    grid = HashGrid(config, arrays[0], extent)
    decoder = PixelDecoder(*arrays[1:])
    return grid, decoder


def save_model(path: str, grid: HashGrid, decoder: PixelDecoder, half_precision: bool = False) -> int:
    """Записывает модель в файл и возвращает число байт."""
    data = serialize(grid, decoder, half_precision)
    with open(path, "wb") as f:
        f.write(data)
    return len(data)


def load_model(path: str) -> Tuple[HashGrid, PixelDecoder]:
    with open(path, "rb") as f:
        return deserialize(f.read())
