from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .errors import MarginViolationError, ShiftRangeError
from .hash_grid import HashGrid
from .image_buffer import ImageBuffer
from .pixel_decoder import PixelDecoder

SHIFT_RADIUS = 50
DEFAULT_MARGIN = 50
DEFAULT_SAMPLES = 256
# Стартовые смещения для режима всего изображения, (0, 0) первым
MULTI_START_OFFSETS = tuple(
    (float(dx), float(dy)) for dy in (0, -16, 16, -32, 32) for dx in (0, -16, 16, -32, 32)
)


class FlowMode(str, Enum):
    PIXEL = "pixel"
    PATCH = "patch"
    IMAGE = "image"


@dataclass(frozen=True)
class EncodedField:
    """Закодированное изображение: таблицы и декодер."""

    grid: HashGrid
    decoder: PixelDecoder


@dataclass(frozen=True)
class FlowProblem:
    """
    Задача оптического потока между двумя закодированными полями.

    samples - целочисленные центры пикселей (столбец, строка) в изображении A.
    """

    field_a: EncodedField
    field_b: EncodedField
    samples: np.ndarray  # (M, 2)
    width: int
    height: int
    mode: FlowMode = FlowMode.IMAGE
    k: Optional[int] = None
    steps: int = 300
    step_size: float = 0.5  # пикселей
    margin: int = DEFAULT_MARGIN
    starts: Optional[Sequence[Tuple[float, float]]] = None
    truth: Optional[Tuple[float, float]] = None
    problem_id: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", FlowMode(self.mode))
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.int64).reshape(-1, 2))

    def validate(self) -> None:
        """Проверяет, что все точки (и их окрестности 3×3) не ближе margin к границам."""
        if self.samples.shape[0] == 0:
            raise MarginViolationError("Задача потока без точек выборки")
        reach = 1 if self.mode is FlowMode.PATCH else 0
        lower = max(self.margin, reach)
        cols, rows = self.samples[:, 0], self.samples[:, 1]
        if (
            np.any(cols < lower)
            or np.any(rows < lower)
            or np.any(cols > self.width - 1 - lower)
            or np.any(rows > self.height - 1 - lower)
        ):
            raise MarginViolationError(
                f"Точки выборки нарушают отступ {self.margin} пикселей от границ"
            )

    def start_offsets(self) -> np.ndarray:
        if self.starts is not None:
            return np.asarray(self.starts, dtype=np.float64).reshape(-1, 2)
        if self.mode is FlowMode.IMAGE:
            return np.asarray(MULTI_START_OFFSETS)
        return np.zeros((1, 2))

    @property
    def order(self) -> int:
        return self.field_b.grid.config.k if self.k is None else self.k


@dataclass
class FlowEstimate:
    """Оценка смещений по точкам и ошибки относительно истинного сдвига."""

    problem_id: str
    mode: FlowMode
    k: int
    displacements: np.ndarray  # (M, 2), пиксели
    losses: np.ndarray  # (M,)
    failed: np.ndarray  # (M,), bool
    truth: Optional[Tuple[float, float]] = None
    samples: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))

    @property
    def epe(self) -> Optional[np.ndarray]:
        if self.truth is None:
            return None
        return np.linalg.norm(self.displacements - np.asarray(self.truth, dtype=np.float64), axis=1)

    @property
    def retained_count(self) -> int:
        return int(np.count_nonzero(~self.failed))

    @property
    def failed_count(self) -> int:
        return int(np.count_nonzero(self.failed))

    @property
    def mean_epe(self) -> Optional[float]:
        errors = self.epe
        if errors is None or self.retained_count == 0:
            return None
        return float(np.mean(errors[~self.failed]))

    def as_dict(self) -> Dict:
        errors = self.epe
        return {
            "problem_id": self.problem_id,
            "mode": self.mode.value,
            "k": self.k,
            "truth": list(self.truth) if self.truth is not None else None,
            "mean_epe": self.mean_epe,
            "retained": self.retained_count,
            "failed": self.failed_count,
            "samples": self.samples.tolist(),
            "displacements": self.displacements.tolist(),
            "losses": self.losses.tolist(),
            "epe": errors.tolist() if errors is not None else None,
        }


def random_shift(rng: np.random.Generator, radius: int = SHIFT_RADIUS) -> Tuple[int, int]:
    """Случайный целочисленный сдвиг внутри круга заданного радиуса."""
    while True:
        dx, dy = (int(value) for value in rng.integers(-radius, radius + 1, size=2))
        if dx * dx + dy * dy <= radius * radius:
            return dx, dy


def translate(pixels: np.ndarray, shift: Tuple[int, int]) -> np.ndarray:
    """Сдвигает изображение на (dx, dy); открывшиеся области заполняются краевыми пикселями."""
    dx, dy = shift
    height, width = pixels.shape[:2]
    rows = np.clip(np.arange(height) - dy, 0, height - 1)
    cols = np.clip(np.arange(width) - dx, 0, width - 1)
    return pixels[rows][:, cols]


def synth_translation_pair(
    image: ImageBuffer,
    shift: Optional[Tuple[int, int]] = None,
    seed: Optional[int] = None,
    radius: int = SHIFT_RADIUS,
) -> Tuple[ImageBuffer, ImageBuffer, Tuple[int, int]]:
    """
    Строит пару изображений, связанных сдвигом.

    Args:
        image: Исходное изображение A
        shift: Сдвиг (dx, dy); если не задан, выбирается случайно по seed
        seed: Зерно для случайного сдвига
        radius: Максимальная величина компонент сдвига

    Returns:
        A, B = A, сдвинутое на (dx, dy), и истинное смещение
    """
    if shift is None:
        shift = random_shift(np.random.default_rng(seed), radius)
    dx, dy = int(shift[0]), int(shift[1])
    if abs(dx) > radius or abs(dy) > radius:
        raise ShiftRangeError(f"Сдвиг ({dx}, {dy}) выходит за радиус {radius}")
    return image, ImageBuffer(translate(image.pixels, (dx, dy))), (dx, dy)


def sample_points(
    width: int,
    height: int,
    count: int,
    margin: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Случайные центры пикселей (столбец, строка) не ближе margin к границам."""
    if count < 1:
        raise MarginViolationError(f"Нужна хотя бы одна точка выборки, получено {count}")
    if width - 1 - margin < margin or height - 1 - margin < margin:
        raise MarginViolationError(
            f"Изображение {width}×{height} слишком мало для отступа {margin}"
        )
    cols = rng.integers(margin, width - margin, size=count)
    rows = rng.integers(margin, height - margin, size=count)
    return np.stack([cols, rows], axis=1)
