import math

import numpy as np

from .errors import ShapeMismatchError

# Значение PSNR для совпадающих изображений
INFINITE_PSNR = math.inf


def _pixels(image) -> np.ndarray:
    return np.asarray(getattr(image, "pixels", image), dtype=np.float64)


def mse(a, b) -> float:
    first, second = _pixels(a), _pixels(b)
    if first.shape != second.shape:
        raise ShapeMismatchError(f"Размеры изображений различаются: {first.shape} и {second.shape}")
    return float(np.mean((first - second) ** 2))


def psnr(a, b) -> float:
    """
    PSNR = 10·log10(1/MSE) для значений в [0, 1].

    Для совпадающих изображений возвращает INFINITE_PSNR.
    """
    return psnr_from_mse(mse(a, b))


def psnr_from_mse(error: float) -> float:
    return INFINITE_PSNR if error == 0.0 else 10.0 * math.log10(1.0 / error)
