from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Dict, List, Optional

from .errors import TrainConfigError


class TrainMode(str, Enum):
    """Режимы обучения: какие группы параметров получают обновления."""

    PER_IMAGE = "per_image"
    SHARED_DECODER = "shared_decoder"
    FINETUNE_TABLES_ONLY = "finetune_tables_only"
    FINETUNE_JOINT = "finetune_joint"

    @property
    def trains_decoder(self) -> bool:
        return self is not TrainMode.FINETUNE_TABLES_ONLY


@dataclass(frozen=True)
class TrainConfig:
    """Параметры градиентного спуска."""

    steps: int = 1000
    batch_pixels: int = 4096
    lr_tables: float = 1e-2
    lr_decoder: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.99
    eps: float = 1e-15
    seed: int = 0
    mode: TrainMode = TrainMode.PER_IMAGE
    hidden_width: int = 64
    threads: int = 1
    # Фиксированный порядок сведения градиентов делает результат независимым от числа потоков
    deterministic_reduction: bool = True
    log_every: int = 100

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", TrainMode(self.mode))
        if self.steps < 1:
            raise TrainConfigError(f"Число шагов должно быть >= 1: {self.steps}")
        if self.batch_pixels < 1:
            raise TrainConfigError(f"Размер пакета должен быть >= 1: {self.batch_pixels}")
        if self.lr_tables <= 0 or self.lr_decoder <= 0:
            raise TrainConfigError("Шаги обучения должны быть положительными")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0) or self.eps <= 0:
            raise TrainConfigError("Некорректные параметры Adam")
        if self.threads < 1 or self.hidden_width < 1:
            raise TrainConfigError("threads и hidden_width должны быть >= 1")

    def as_dict(self) -> Dict:
        data = asdict(self)
        data["mode"] = self.mode.value
        return data


@dataclass
class TrainReport:
    """Итоги обучения: кривая потерь, качество по изображениям, время."""

    mode: str
    seed: int
    config: Dict
    loss_curve: List[float] = field(default_factory=list)
    final_mse: List[float] = field(default_factory=list)
    final_psnr: List[float] = field(default_factory=list)
    wall_clock: float = 0.0

    @property
    def mean_psnr(self) -> Optional[float]:
        if not self.final_psnr:
            return None
        return sum(self.final_psnr) / len(self.final_psnr)

    def smoothed_loss(self, step: int, window: int = 50) -> float:
        """Среднее потерь в окне, заканчивающемся шагом step (с единицы)."""
        end = min(step, len(self.loss_curve))
        start = max(0, end - window)
        values = self.loss_curve[start:end]
        return sum(values) / len(values)

    def as_dict(self) -> Dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "config": self.config,
            "loss_curve": self.loss_curve,
            "final_mse": self.final_mse,
            "final_psnr": self.final_psnr,
            "mean_psnr": self.mean_psnr,
            "wall_clock": self.wall_clock,
        }
