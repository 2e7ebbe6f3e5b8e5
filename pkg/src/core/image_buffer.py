import logging
import os
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ImageFormatError, ImageSizeError
from .field_model import pixel_centers

logger = logging.getLogger(__name__)

MIN_SIDE = 8
SUPPORTED_FORMATS = ("PNG", "PPM")


@dataclass(eq=False)
class ImageBuffer:
    """
    Изображение H×W×3 со значениями в [0, 1].

    Центр пикселя (col, row) соответствует нормализованной координате
    ((col + 0.5)/W, (row + 0.5)/H).
    """

    pixels: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.pixels, dtype=np.float64)
        if values.ndim != 3 or values.shape[2] != 3:
            raise ImageSizeError(f"Ожидался массив H×W×3, получено {values.shape}")
        if values.shape[0] < MIN_SIDE or values.shape[1] < MIN_SIDE:
            raise ImageSizeError(
                f"Изображение {values.shape[1]}×{values.shape[0]} меньше минимума {MIN_SIDE}×{MIN_SIDE}"
            )
        if not np.all(np.isfinite(values)):
            raise ImageFormatError("Изображение содержит нечисловые значения")
        self.pixels = np.clip(values, 0.0, 1.0)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def pixel_count(self) -> int:
        return self.width * self.height

    @property
    def flat(self) -> np.ndarray:
        return self.pixels.reshape(-1, 3)

    def pixel_coords(self, flat_indices: np.ndarray) -> np.ndarray:
        """Нормализованные центры пикселей по плоским (построчным) индексам."""
        rows, cols = np.divmod(np.asarray(flat_indices, dtype=np.int64), self.width)
        return np.stack([(cols + 0.5) / self.width, (rows + 0.5) / self.height], axis=1)

    def all_pixel_coords(self) -> np.ndarray:
        return pixel_centers(self.width, self.height)


def load_image(path: str) -> ImageBuffer:
    """
    Загружает 8-битное изображение PNG или двоичный PPM (P6).

    Args:
        path: Путь к файлу

    Returns:
        Буфер со значениями, линейно отмасштабированными в [0, 1]
    """
    try:
        with Image.open(path) as img:
            img.load()
            if img.format not in SUPPORTED_FORMATS:
                raise ImageFormatError(f"Неподдерживаемый формат {img.format}: {path}")
            if img.mode in ("RGBA", "LA"):
                logger.warning(f"Альфа-канал отброшен: {path}")
            elif img.mode not in ("RGB", "L", "P"):
                raise ImageFormatError(
                    f"Поддерживаются только 8-битные изображения, режим {img.mode}: {path}"
                )
            array = np.asarray(img.convert("RGB"), dtype=np.float64)
    except UnidentifiedImageError as e:
        raise ImageFormatError(f"Не удалось распознать изображение {path}: {e}") from e
    except (OSError, SyntaxError) as e:
        # Pillow сообщает о повреждённых данных через OSError/SyntaxError
        if isinstance(e, FileNotFoundError):
            raise
        raise ImageFormatError(f"Повреждённый файл {path}: {e}") from e
    return ImageBuffer(array / 255.0)


def to_uint8(pixels: np.ndarray) -> np.ndarray:
    """Обрезает значения до [0, 1] и квантует как round(v·255)."""
    return np.rint(np.clip(np.asarray(pixels, dtype=np.float64), 0.0, 1.0) * 255.0).astype(np.uint8)


def save_image(buffer, path: str) -> None:
    """
    Сохраняет изображение: PNG по умолчанию, двоичный PPM для расширения .ppm.

    Args:
        buffer: ImageBuffer или массив H×W×3
        path: Путь к файлу
    """
    pixels = buffer.pixels if isinstance(buffer, ImageBuffer) else buffer
    image_format = "PPM" if os.path.splitext(path)[1].lower() == ".ppm" else "PNG"
    Image.fromarray(to_uint8(pixels), "RGB").save(path, format=image_format)
