"""
Оптический поток обратным распространением до координат.

Для каждой группы точек (пиксель, окрестность 3×3 или всё изображение)
ищется общее смещение (dx, dy), минимизирующее сумму |A'(x) - B'(x + d)|^2,
где A', B' - изображения, декодированные из хеш-таблиц.
"""

import logging
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from matplotlib.colors import hsv_to_rgb

from .adam import AdamOptimizer
from .errors import CorpusMismatchError
from .field_model import backward, decode
from .flow_problem import (
    EncodedField,
    FlowEstimate,
    FlowMode,
    FlowProblem,
    random_shift,
    sample_points,
    synth_translation_pair,
)
from .grid_config import GridConfig
from .image_buffer import ImageBuffer
from .train_config import TrainConfig, TrainMode
from .trainer import Trainer

logger = logging.getLogger(__name__)

_PATCH_OFFSETS = np.array([(dx, dy) for dy in (-1, 0, 1) for dx in (-1, 0, 1)], dtype=np.int64)


def encode_pair(
    image_a: ImageBuffer,
    image_b: ImageBuffer,
    grid_config: GridConfig,
    train_config: Optional[TrainConfig] = None,
    trainer_logger: Optional[logging.Logger] = None,
) -> Tuple[EncodedField, EncodedField]:
    """Кодирует оба изображения с общим декодером, чтобы цвета были сопоставимы."""
    config = replace(train_config or TrainConfig(), mode=TrainMode.SHARED_DECODER)
    grids, decoder, _ = Trainer(grid_config, config, trainer_logger).fit_shared_decoder(
        [image_a, image_b]
    )
    return EncodedField(grids[0], decoder), EncodedField(grids[1], decoder)


def photometric_objective(
    field: EncodedField,
    points: np.ndarray,
    targets: np.ndarray,
    delta: np.ndarray,
    width: int,
    height: int,
    k: Optional[int] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Фотометрические потери и их градиент по смещению.

    Args:
        field: Поле B
        points: Центры пикселей (C, P, 2) в пиксельных координатах
        targets: Цвета A' в этих точках (C, P, 3)
        delta: Смещения цепочек (C, 2) в пикселях
        width: Ширина изображения
        height: Высота изображения
        k: Полупорядок интерполяции

    Returns:
        Потери по точкам (C, P) и градиент суммы по цепочке (C, 2) в пикселях
    """
    size = np.array([width, height], dtype=np.float64)
    positions = points + delta[:, None, :]
    coords = np.clip((positions + 0.5) / size, 0.0, 1.0)
    chains, members = points.shape[:2]
    sample = decode(field.grid, field.decoder, coords.reshape(-1, 2), k)
    residual = sample.rgb.reshape(chains, members, 3) - targets
    grads = backward(sample, 2.0 * residual.reshape(-1, 3))
    coord_grad = grads.coords.reshape(chains, members, 2).sum(axis=1)
    return np.sum(residual * residual, axis=2), coord_grad / size


def _groups(problem: FlowProblem) -> np.ndarray:
    """Группы точек с общим смещением, форма (G, P, 2)."""
    if problem.mode is FlowMode.PIXEL:
        return problem.samples[:, None, :]
    if problem.mode is FlowMode.PATCH:
        return problem.samples[:, None, :] + _PATCH_OFFSETS[None, :, :]
    return problem.samples[None, :, :]


def solve_flow(problem: FlowProblem) -> FlowEstimate:
    """
    Решает задачу потока спуском Adam по смещениям.

    Несколько стартов одной группы решаются одновременно, выбирается старт с
    наименьшими итоговыми потерями. Расходящиеся группы помечаются как неудачные.
    """
    problem.validate()
    k = problem.order
    width, height = problem.width, problem.height
    groups = _groups(problem).astype(np.float64)
    starts = problem.start_offsets()
    group_count, members = groups.shape[:2]
    start_count = starts.shape[0]

    pixel_coords = (groups.reshape(-1, 2) + 0.5) / np.array([width, height])
    targets = decode(problem.field_a.grid, problem.field_a.decoder, pixel_coords, k).rgb
    targets = np.repeat(targets.reshape(group_count, members, 3), start_count, axis=0)
    points = np.repeat(groups, start_count, axis=0)
    delta = np.tile(starts, (group_count, 1))

    # Смещение не выводит точки цепочки за пределы изображения
    lower = -0.5 - points.min(axis=1)
    upper = np.array([width, height]) - 0.5 - points.max(axis=1)
    np.clip(delta, lower, upper, out=delta)

    optimizer = AdamOptimizer(delta.shape, problem.step_size)
    failed = np.zeros(delta.shape[0], dtype=bool)
    for _ in range(problem.steps):
        per_point, grad = photometric_objective(
            problem.field_b, points, targets, delta, width, height, k
        )
        failed |= ~np.isfinite(per_point.sum(axis=1)) | ~np.all(np.isfinite(grad), axis=1)
        if np.all(failed):
            break
        optimizer.step(delta, np.where(failed[:, None], 0.0, grad), ~failed)
        np.clip(delta, lower, upper, out=delta)

    per_point, _ = photometric_objective(problem.field_b, points, targets, delta, width, height, k)
    chain_loss = per_point.sum(axis=1)
    failed |= ~np.isfinite(chain_loss)

    ranked = np.where(failed, np.inf, chain_loss).reshape(group_count, start_count)
    best = np.arange(group_count) * start_count + np.argmin(ranked, axis=1)
    group_failed = np.all(failed.reshape(group_count, start_count), axis=1)
    group_delta = delta[best]
    group_points = per_point[best]

    if problem.mode is FlowMode.IMAGE:
        displacements = np.repeat(group_delta, members, axis=0)
        losses = group_points[0]
        sample_failed = np.repeat(group_failed, members)
    else:
        displacements = group_delta
        losses = group_points.sum(axis=1)
        sample_failed = group_failed

    if np.any(sample_failed):
        logger.warning(
            f"Задача {problem.problem_id or '-'}: {int(np.count_nonzero(sample_failed))} "
            f"точек разошлись и исключены"
        )
    return FlowEstimate(
        problem_id=problem.problem_id,
        mode=problem.mode,
        k=k,
        displacements=displacements,
        losses=losses,
        failed=sample_failed,
        truth=problem.truth,
        samples=problem.samples,
    )


@dataclass(frozen=True)
class FlowCell:
    """Ячейка сводной таблицы: одно k и один режим."""

    k: int
    mode: FlowMode
    mean_epe: Optional[float]
    problems: int
    samples: int
    failures: int


@dataclass(frozen=True)
class FlowTable:
    """Таблица средних EPE по k и режимам."""

    cells: Dict[Tuple[int, FlowMode], FlowCell]

    def mean_epe(self, k: int, mode: FlowMode) -> Optional[float]:
        return self.cells[(k, FlowMode(mode))].mean_epe

    def as_dict(self) -> Dict:
        table: Dict[str, Dict] = {}
        for (k, mode), cell in sorted(self.cells.items(), key=lambda item: (item[0][0], item[0][1].value)):
            table.setdefault(f"k={k}", {})[mode.value] = {
                "mean_epe": cell.mean_epe,
                "problems": cell.problems,
                "samples": cell.samples,
                "failures": cell.failures,
            }
        return table

    def to_text(self) -> str:
        """Выровненная текстовая таблица: строки - k, столбцы - режимы."""
        modes = [FlowMode.PIXEL, FlowMode.PATCH, FlowMode.IMAGE]
        orders = sorted({k for k, _ in self.cells})
        lines = [f"{'k':>3} " + "".join(f"{mode.value:>24}" for mode in modes)]
        for k in orders:
            row = f"{k:>3} "
            for mode in modes:
                cell = self.cells.get((k, mode))
                if cell is None:
                    row += f"{'-':>24}"
                    continue
                value = "n/a" if cell.mean_epe is None else f"{cell.mean_epe:.4f}"
                row += f"{value + f' ({cell.samples}/{cell.failures})':>24}"
            lines.append(row)
        lines.append("в скобках: учтённые точки / неудачные точки")
        return "\n".join(lines)


def flow_report(estimates: Sequence[FlowEstimate]) -> FlowTable:
    """
    Сводит оценки по набору задач в таблицу (k × режим) средних EPE.

    Среднее в ячейке берётся по всем учтённым точкам всех задач, так что
    задачи с большим числом удержанных точек весят больше.

    Все ячейки должны быть получены на одном и том же наборе задач.
    """
    grouped: Dict[Tuple[int, FlowMode], List[FlowEstimate]] = {}
    for estimate in estimates:
        if estimate.truth is None:
            raise CorpusMismatchError(f"Задача {estimate.problem_id} без истинного смещения")
        grouped.setdefault((estimate.k, FlowMode(estimate.mode)), []).append(estimate)

    corpora = {key: sorted(item.problem_id for item in items) for key, items in grouped.items()}
    reference = next(iter(corpora.values()), [])
    for key, corpus in corpora.items():
        if corpus != reference:
            raise CorpusMismatchError(f"Набор задач для k={key[0]}, {key[1].value} отличается")

    cells = {}
    for (k, mode), items in grouped.items():
        retained = [item.epe[~item.failed] for item in items]
        pooled = np.concatenate(retained) if retained else np.zeros(0)
        cells[(k, mode)] = FlowCell(
            k=k,
            mode=mode,
            mean_epe=float(np.mean(pooled)) if pooled.size else None,
            problems=len(items),
            samples=sum(item.retained_count for item in items),
            failures=sum(item.failed_count for item in items),
        )
    return FlowTable(cells)


def flow_visualization(estimate: FlowEstimate, width: int, height: int) -> np.ndarray:
    """
    Изображение смещений в кодировке HSV: оттенок - направление, яркость - величина.

    Каждая точка выборки рисуется квадратом 3×3 на чёрном фоне.
    """
    canvas = np.zeros((height, width, 3))
    displacements = estimate.displacements
    magnitude = np.linalg.norm(displacements, axis=1)
    scale = magnitude.max() if magnitude.size and magnitude.max() > 0 else 1.0
    hue = (np.arctan2(displacements[:, 1], displacements[:, 0]) / (2 * np.pi)) % 1.0
    hsv = np.stack([hue, np.ones_like(hue), magnitude / scale], axis=1)
    colors = hsv_to_rgb(hsv[None, :, :])[0]
    for (col, row), color, failed in zip(estimate.samples, colors, estimate.failed):
        if failed:
            continue
        canvas[max(row - 1, 0) : row + 2, max(col - 1, 0) : col + 2] = color
    return canvas


def flow_benchmark(
    image: ImageBuffer,
    problems: int,
    grid_config: GridConfig,
    train_config: Optional[TrainConfig] = None,
    orders: Sequence[int] = (1, 2),
    modes: Sequence[FlowMode] = (FlowMode.PIXEL, FlowMode.PATCH, FlowMode.IMAGE),
    samples: int = 256,
    margin: int = 50,
    steps: int = 300,
    seed: int = 0,
    trainer_logger: Optional[logging.Logger] = None,
) -> Tuple[List[FlowEstimate], FlowTable]:
    """
    Серия задач со случайными сдвигами: для каждого k пары кодируются заново.

    Сдвиги и точки выборки выводятся из seed и одинаковы для всех ячеек таблицы.
    """
    rng = np.random.default_rng(seed)
    corpus = []
    for index in range(problems):
        image_a, image_b, shift = synth_translation_pair(image, random_shift(rng))
        points = sample_points(image.width, image.height, samples, margin, rng)
        corpus.append((f"p{index:03d}", image_a, image_b, shift, points))

    estimates = []
    for k in orders:
        config = replace(grid_config, k=k)
        for problem_id, image_a, image_b, shift, points in corpus:
            field_a, field_b = encode_pair(image_a, image_b, config, train_config, trainer_logger)
            for mode in modes:
                estimate = solve_flow(
                    FlowProblem(
                        field_a=field_a,
                        field_b=field_b,
                        samples=points,
                        width=image.width,
                        height=image.height,
                        mode=mode,
                        k=k,
                        steps=steps,
                        margin=margin,
                        truth=(float(shift[0]), float(shift[1])),
                        problem_id=problem_id,
                    )
                )
                logger.info(
                    f"{problem_id} k={k} {FlowMode(mode).value}: EPE {estimate.mean_epe}"
                )
                estimates.append(estimate)
    return estimates, flow_report(estimates)
