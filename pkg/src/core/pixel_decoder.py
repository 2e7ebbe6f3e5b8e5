from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from .errors import ShapeMismatchError
from .hash_grid import to_storage_precision

HIDDEN_WIDTH = 64
OUTPUT_CHANNELS = 3
PARAMETER_NAMES = ("w1", "b1", "w2", "b2")


@dataclass
class DecoderGradients:
    """Плотные градиенты по весам декодера."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def as_dict(self) -> Dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAMETER_NAMES}

    def __add__(self, other: "DecoderGradients") -> "DecoderGradients":
        return DecoderGradients(
            *(getattr(self, name) + getattr(other, name) for name in PARAMETER_NAMES)
        )


@dataclass(eq=False)
class PixelDecoder:
    """
    Двухслойный перцептрон: L·F признаков -> H скрытых (ReLU) -> RGB (линейный выход).
    """

    w1: np.ndarray  # (H, D)
    b1: np.ndarray  # (H,)
    w2: np.ndarray  # (3, H)
    b2: np.ndarray  # (3,)
    version: int = field(default=0)

    def __post_init__(self) -> None:
        for name in PARAMETER_NAMES:
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        hidden, _ = self.w1.shape
        if (
            self.b1.shape != (hidden,)
            or self.w2.shape != (OUTPUT_CHANNELS, hidden)
            or self.b2.shape != (OUTPUT_CHANNELS,)
        ):
            raise ShapeMismatchError("Несогласованные формы весов декодера")
        if not all(np.all(np.isfinite(getattr(self, name))) for name in PARAMETER_NAMES):
            raise ShapeMismatchError("Веса декодера содержат нечисловые значения")

    @classmethod
    def random(
        cls, input_dim: int, rng: np.random.Generator, hidden: int = HIDDEN_WIDTH
    ) -> "PixelDecoder":
        """Инициализация U(-1/sqrt(fan_in), 1/sqrt(fan_in)) для весов и смещений."""
        bound1 = 1.0 / np.sqrt(input_dim)
        bound2 = 1.0 / np.sqrt(hidden)
        return cls(
            w1=rng.uniform(-bound1, bound1, size=(hidden, input_dim)),
            b1=rng.uniform(-bound1, bound1, size=hidden),
            w2=rng.uniform(-bound2, bound2, size=(OUTPUT_CHANNELS, hidden)),
            b2=rng.uniform(-bound2, bound2, size=OUTPUT_CHANNELS),
        )

    @property
    def input_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden_width(self) -> int:
        return self.w1.shape[0]

    def size(self) -> int:
        """Число параметров декодера."""
        return sum(getattr(self, name).size for name in PARAMETER_NAMES)

    def parameters(self) -> Dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAMETER_NAMES}

    def copy(self) -> "PixelDecoder":
        return PixelDecoder(*(getattr(self, name).copy() for name in PARAMETER_NAMES))

    def mark_updated(self) -> None:
        self.version += 1

    def snap_to_storage(self) -> None:
        for name in PARAMETER_NAMES:
            setattr(self, name, to_storage_precision(getattr(self, name)))
        self.mark_updated()

    def forward(self, features: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Прямой проход.

        Returns:
            RGB (B, 3) и предактивации скрытого слоя (B, H) для обратного прохода
        """
        pre_activation = features @ self.w1.T + self.b1
        hidden = np.maximum(pre_activation, 0.0)
        return hidden @ self.w2.T + self.b2, pre_activation

    def backward(
        self, features: np.ndarray, pre_activation: np.ndarray, grad_rgb: np.ndarray
    ) -> Tuple[DecoderGradients, np.ndarray]:
        """
        Обратный проход.

        Returns:
            Градиенты весов и градиент по входным признакам (B, D)
        """
        hidden = np.maximum(pre_activation, 0.0)
        grad_hidden = grad_rgb @ self.w2
        grad_pre = grad_hidden * (pre_activation > 0.0)
        gradients = DecoderGradients(
            w1=grad_pre.T @ features,
            b1=grad_pre.sum(axis=0),
            w2=grad_rgb.T @ hidden,
            b2=grad_rgb.sum(axis=0),
        )
        return gradients, grad_pre @ self.w1
