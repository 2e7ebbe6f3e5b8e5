"""Типизированные исключения библиотеки."""

from typing import Optional


class HashEncodingError(Exception):
    """Базовое исключение для всех ошибок пакета."""


class GridConfigError(HashEncodingError, ValueError):
    """Некорректные гиперпараметры хеш-сетки."""


class CoordinateRangeError(HashEncodingError, ValueError):
    """Координата вне единичного квадрата."""


class StencilError(HashEncodingError, ValueError):
    """Узлы интерполяции не строго возрастают."""


class ConfigMismatchError(HashEncodingError, ValueError):
    """Конфигурации сетки и декодера (или нескольких моделей) не совпадают."""


class ShapeMismatchError(HashEncodingError, ValueError):
    """Размерности массивов не соответствуют ожидаемым."""


class StaleCacheError(HashEncodingError, RuntimeError):
    """Кэш прямого прохода устарел: параметры модели изменились."""


class ModelFormatError(HashEncodingError):
    """Поток байтов не является корректной моделью HSHF."""


class BadMagicError(ModelFormatError):
    pass


class UnsupportedVersionError(ModelFormatError):
    pass


class TruncatedModelError(ModelFormatError):
    pass


class NonFiniteValueError(ModelFormatError):
    pass


class NonFiniteLossError(HashEncodingError, ArithmeticError):
    """Потеря стала нечисловой во время оптимизации."""

    def __init__(self, step: int, group: Optional[str]) -> None:
        self.step = step
        self.group = group
        super().__init__(
            f"Нечисловое значение потерь на шаге {step} "
            f"(группа параметров: {group or 'не определена'})"
        )


class ShiftRangeError(HashEncodingError, ValueError):
    """Сдвиг превышает допустимый радиус."""


class MarginViolationError(HashEncodingError, ValueError):
    """Точки выборки ближе к границе, чем допускает отступ."""


class CorpusMismatchError(HashEncodingError, ValueError):
    """Оценки получены на разных наборах задач."""


class ImageFormatError(HashEncodingError, ValueError):
    """Неподдерживаемый или повреждённый файл изображения."""


class ImageSizeError(HashEncodingError, ValueError):
    """Изображение меньше минимально допустимого размера."""


class UsageError(HashEncodingError):
    """Ошибка разбора аргументов командной строки."""


class TrainConfigError(HashEncodingError, ValueError):
    """Некорректные параметры обучения."""
