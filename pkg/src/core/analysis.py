"""Диагностические эксперименты над обученными хеш-таблицами."""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import stats

from .errors import ConfigMismatchError, ShapeMismatchError, ShiftRangeError
from .field_model import level_group_masks, reconstruct
from .flow_problem import translate
from .grid_config import GridConfig
from .hash_grid import HashGrid
from .image_buffer import ImageBuffer
from .interpolation import interpolate_level
from .metrics import psnr
from .pixel_decoder import PixelDecoder
from .spatial_hash import index_map
from .train_config import TrainConfig, TrainMode
from .trainer import Trainer

logger = logging.getLogger(__name__)

INVARIANCE_SHIFT_LIMIT = 80
# Каналы 4, 12 и 16 из 24 сцепленных признаков
DEFAULT_HEATMAP_CHANNELS = (4, 12, 16)
MIN_HISTOGRAM_MODELS = 20


@dataclass
class LevelFeatureMaps:
    """Признаки уровня на сетке вершин для исходного и сдвинутого кодирования."""

    level: int
    original: np.ndarray  # (N+1, N+1, F)
    restored: np.ndarray  # (N+1, N+1, F), τ^-1(F(τ(I)))
    valid: np.ndarray  # (N+1, N+1), bool


@dataclass
class InvarianceResult:
    """Расхождение признаков F(I) и τ^-1(F(τ(I))) по уровням для одного сдвига."""

    shift: int
    divergence: List[float]  # среднеквадратичная разность на допустимой области
    variance: List[float]  # дисперсия признаков F(I) на той же области
    cosine: List[float]
    valid_fraction: List[float]
    mask_description: str
    maps: List[LevelFeatureMaps] = field(default_factory=list, repr=False)

    @property
    def relative_divergence(self) -> List[float]:
        return [d / v if v > 0 else 0.0 for d, v in zip(self.divergence, self.variance)]

    @property
    def level_trend(self) -> float:
        """Ранговая корреляция Спирмена между номером уровня и относительным расхождением."""
        values = self.relative_divergence
        if len(set(values)) < 2:
            return 0.0
        rho, _ = stats.spearmanr(np.arange(len(values)), values)
        return float(rho)

    def as_dict(self) -> Dict:
        return {
            "shift": self.shift,
            "divergence": self.divergence,
            "variance": self.variance,
            "relative_divergence": self.relative_divergence,
            "cosine": self.cosine,
            "valid_fraction": self.valid_fraction,
            "level_trend": self.level_trend,
            "mask": self.mask_description,
        }


def _vertex_features(grid: HashGrid, level: int, offset_x: float = 0.0):
    """Признаки уровня в вершинах сетки, сдвинутых на offset_x (нормализованные единицы)."""
    geometry = grid.levels[level]
    side = geometry.vertices_per_axis
    ticks = np.arange(side) / geometry.resolution
    ys, xs = np.meshgrid(ticks, ticks, indexing="ij")
    shifted = xs + offset_x
    valid = (shifted >= 0.0) & (shifted <= 1.0)
    coords = np.stack([np.clip(shifted, 0.0, 1.0).ravel(), ys.ravel()], axis=1)
    sample = interpolate_level(grid.tables[level], coords, geometry, grid.config.k)
    return sample.value.reshape(side, side, -1), valid


def compare_encodings(original: HashGrid, shifted: HashGrid, shift: int, width: int) -> InvarianceResult:
    """
    Сравнивает кодирование I с кодированием I, сдвинутого по x на shift пикселей.

    Сдвинутое кодирование опрашивается в точках x + shift/W; полоса, утерянная
    при сдвиге, исключается.
    """
    offset = shift / width
    result = InvarianceResult(
        shift=shift,
        divergence=[],
        variance=[],
        cosine=[],
        valid_fraction=[],
        mask_description=(
            f"исключены вершины с x + {shift}/{width} вне [0, 1] "
            f"({'правая' if shift > 0 else 'левая' if shift < 0 else 'нет'} полоса)"
        ),
    )
    for level in range(original.config.levels):
        base, _ = _vertex_features(original, level)
        restored, valid = _vertex_features(shifted, level, offset)
        a = base[valid]
        b = restored[valid]
        if a.size == 0:
            divergence = variance = cosine = 0.0
        else:
            divergence = float(np.mean((a - b) ** 2))
            variance = float(np.var(a))
            norm = float(np.linalg.norm(a) * np.linalg.norm(b))
            cosine = float(np.sum(a * b) / norm) if norm > 0 else 1.0
        result.divergence.append(divergence)
        result.variance.append(variance)
        result.cosine.append(cosine)
        result.valid_fraction.append(float(np.mean(valid)))
        result.maps.append(LevelFeatureMaps(level, base, np.where(valid[..., None], restored, 0.0), valid))
    return result


def translation_invariance(
    image: ImageBuffer,
    shifts: Sequence[int],
    grid_config: GridConfig,
    train_config: Optional[TrainConfig] = None,
    trainer_logger: Optional[logging.Logger] = None,
) -> List[InvarianceResult]:
    """
    Оценивает трансляционную инвариантность хеш-признаков.

    Для каждого сдвига r изображения I и τ(I) кодируются с общим декодером,
    затем признаки уровней сравниваются на сетке вершин.
    """
    config = replace(train_config or TrainConfig(), mode=TrainMode.SHARED_DECODER)
    results = []
    for shift in shifts:
        if abs(shift) > INVARIANCE_SHIFT_LIMIT:
            raise ShiftRangeError(f"Сдвиг {shift} вне диапазона [-80, 80]")
        if shift % 10:
            logger.warning(f"Сдвиг {shift} не кратен 10: нарушение протокола эксперимента")
        shifted = ImageBuffer(translate(image.pixels, (shift, 0)))
        grids, _, _ = Trainer(grid_config, config, trainer_logger).fit_shared_decoder([image, shifted])
        result = compare_encodings(grids[0], grids[1], shift, image.width)
        logger.info(
            f"Сдвиг {shift}: относительное расхождение по уровням "
            + ", ".join(f"{value:.3g}" for value in result.relative_divergence)
        )
        results.append(result)
    return results


@dataclass(frozen=True)
class AblationResult:
    """PSNR полной реконструкции и реконструкций по группам уровней."""

    full: float
    dense_only: float
    hashed_only: float
    dense_levels: List[int]

    def as_dict(self) -> Dict:
        return {
            "full": self.full,
            "dense_only": self.dense_only,
            "hashed_only": self.hashed_only,
            "dense_levels": self.dense_levels,
        }


def layer_ablation(grid: HashGrid, decoder: PixelDecoder, image: ImageBuffer) -> AblationResult:
    """Обнуляет на входе декодера признаки дополнительной группы уровней и сравнивает PSNR."""
    if grid.extent is not None and grid.extent != (image.width, image.height):
        raise ShapeMismatchError(
            f"Модель обучена на {grid.extent[0]}×{grid.extent[1]}, "
            f"изображение {image.width}×{image.height}"
        )
    dense, hashed = level_group_masks(grid)

    def score(mask: Optional[np.ndarray]) -> float:
        restored = reconstruct(grid, decoder, image.width, image.height, feature_mask=mask)
        return psnr(np.clip(restored, 0.0, 1.0), image)

    return AblationResult(
        full=score(None),
        dense_only=score(dense),
        hashed_only=score(hashed),
        dense_levels=[level.level for level in grid.levels if level.dense],
    )


@dataclass(frozen=True)
class SweepPoint:
    table_size: int
    psnr: float
    payload_bytes: int
    payload_bytes_half: int
    dense_levels: int


def table_size_sweep(
    image: ImageBuffer,
    sizes: Sequence[int],
    grid_config: GridConfig,
    train_config: Optional[TrainConfig] = None,
    trainer_logger: Optional[logging.Logger] = None,
) -> List[SweepPoint]:
    """Обучает модель для каждого размера таблицы и возвращает кривую PSNR(T)."""
    if len(sizes) < 2:
        logger.warning("Для кривой нужно не менее двух размеров таблицы")
    points = []
    for size in sizes:
        config = replace(grid_config, table_size=int(size))
        grid, _, report = Trainer(config, train_config, trainer_logger).fit_per_image(image)
        points.append(
            SweepPoint(
                table_size=config.table_size,
                psnr=report.final_psnr[0],
                payload_bytes=grid.payload_bytes(32),
                payload_bytes_half=grid.payload_bytes(16),
                dense_levels=sum(level.dense for level in grid.levels),
            )
        )
    return points


def sweep_inversions(points: Sequence[SweepPoint], tolerance: float = 0.0) -> int:
    """Число мест, где PSNR падает с ростом T больше чем на tolerance."""
    ordered = sorted(points, key=lambda point: point.table_size)
    return sum(
        1 for prev, cur in zip(ordered, ordered[1:]) if cur.psnr < prev.psnr - tolerance
    )


@dataclass(frozen=True)
class LevelHistogram:
    level: int
    resolution: int
    counts: np.ndarray
    edges: np.ndarray
    mean: float
    std: float
    skewness: float

    def as_dict(self) -> Dict:
        return {
            "level": self.level,
            "resolution": self.resolution,
            "counts": self.counts.tolist(),
            "edges": self.edges.tolist(),
            "mean": self.mean,
            "std": self.std,
            "skewness": self.skewness,
        }


def reachable_entries(grid: HashGrid, level: int) -> np.ndarray:
    """Записи уровня, в которые отображается хотя бы одна вершина."""
    return np.unique(index_map(grid.levels[level], grid.config.table_size))


def entry_histograms(grids: Sequence[HashGrid], bins: int = 64) -> List[LevelHistogram]:
    """
    Объединённые по моделям гистограммы записей каждого уровня.

    Учитываются только достижимые записи; значения сортируются перед подсчётом
    статистик, поэтому результат не зависит от порядка моделей.
    """
    if not grids:
        raise ShapeMismatchError("Нужна хотя бы одна модель")
    config = grids[0].config
    if any(grid.config != config for grid in grids):
        raise ConfigMismatchError("Конфигурации моделей различаются")
    if len(grids) < MIN_HISTOGRAM_MODELS:
        logger.warning(
            f"Гистограммы по {len(grids)} моделям; для устойчивых статистик нужно не менее {MIN_HISTOGRAM_MODELS}"
        )

    histograms = []
    for geometry in grids[0].levels:
        entries = reachable_entries(grids[0], geometry.level)
        pooled = np.sort(np.concatenate([grid.tables[geometry.level][entries].ravel() for grid in grids]))
        counts, edges = np.histogram(pooled, bins=bins, density=True)
        std = float(np.std(pooled))
        histograms.append(
            LevelHistogram(
                level=geometry.level,
                resolution=geometry.resolution,
                counts=counts,
                edges=edges,
                mean=float(np.mean(pooled)),
                std=std,
                skewness=float(stats.skew(pooled)) if std > 0 else 0.0,
            )
        )
    return histograms
