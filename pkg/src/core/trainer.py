import logging
import math
import time
from concurrent.futures import Executor, ThreadPoolExecutor, as_completed
from contextlib import nullcontext
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .adam import AdamOptimizer
from .errors import ConfigMismatchError, NonFiniteLossError, ShapeMismatchError, TrainConfigError
from .field_model import backward, check_compatible, decode, reconstruct
from .grid_config import GridConfig
from .hash_grid import HashGrid
from .image_buffer import ImageBuffer
from .metrics import mse, psnr_from_mse
from .pixel_decoder import DecoderGradients, PixelDecoder
from .train_config import TrainConfig, TrainMode, TrainReport

# Размер блока точек при сведении градиентов; не зависит от числа потоков
REDUCTION_CHUNK = 1024
MAX_SHARED_IMAGES = 64
FINETUNE_STEPS = 100


@dataclass
class _ChunkResult:
    squared_error: float
    tables: np.ndarray  # плотный градиент (L, T, F)
    decoder: DecoderGradients


class Trainer:
    """Подбор хеш-таблиц и декодера градиентным спуском."""

    def __init__(
        self,
        grid_config: GridConfig,
        train_config: Optional[TrainConfig] = None,
        logger: Optional[logging.Logger] = None,
    ) -> None:
        """
        Инициализирует тренер.

        Args:
            grid_config: Конфигурация хеш-сетки
            train_config: Параметры обучения
            logger: Логгер (по умолчанию логгер модуля)
        """
        self.grid_config = grid_config
        self.train_config = train_config or TrainConfig()
        self.logger = logger or logging.getLogger(__name__)

    def fit_per_image(self, image: ImageBuffer) -> Tuple[HashGrid, PixelDecoder, TrainReport]:
        """Обучает собственные таблицы и декодер для одного изображения."""
        grids, decoder, report = self._fit([image], TrainMode.PER_IMAGE)
        return grids[0], decoder, report

    def fit_shared_decoder(
        self, images: Sequence[ImageBuffer]
    ) -> Tuple[List[HashGrid], PixelDecoder, TrainReport]:
        """
        Обучает один декодер на всех изображениях и отдельные таблицы для каждого.

        Args:
            images: От 1 до 64 изображений

        Returns:
            Таблицы по изображениям, общий декодер и отчёт
        """
        if not 1 <= len(images) <= MAX_SHARED_IMAGES:
            raise TrainConfigError(
                f"Размер пакета изображений должен быть от 1 до {MAX_SHARED_IMAGES}: {len(images)}"
            )
        return self._fit(list(images), TrainMode.SHARED_DECODER)

    def finetune(
        self,
        grid: HashGrid,
        decoder: PixelDecoder,
        image: ImageBuffer,
        freeze_decoder: bool = True,
        steps: Optional[int] = None,
    ) -> Tuple[HashGrid, PixelDecoder, TrainReport]:
        """
        Дообучает заданную инициализацию таблиц.

        Args:
            grid: Начальные таблицы (не изменяются)
            decoder: Декодер (не изменяется; при freeze_decoder копия остаётся побитно той же)
            image: Целевое изображение
            freeze_decoder: Обновлять только таблицы (протокол универсального декодера)
            steps: Число шагов, по умолчанию 100

        Returns:
            Дообученные таблицы, декодер и отчёт
        """
        if grid.config != self.grid_config:
            raise ConfigMismatchError("Конфигурация начальных таблиц не совпадает с конфигурацией тренера")
        if grid.tables.shape != (
            self.grid_config.levels,
            self.grid_config.table_size,
            self.grid_config.features_per_level,
        ):
            raise ShapeMismatchError(f"Неверная форма таблиц: {grid.tables.shape}")
        check_compatible(grid, decoder)
        steps = FINETUNE_STEPS if steps is None else steps
        if steps < 1:
            raise TrainConfigError(f"Число шагов должно быть >= 1: {steps}")

        mode = TrainMode.FINETUNE_TABLES_ONLY if freeze_decoder else TrainMode.FINETUNE_JOINT
        tuned_grid = HashGrid(grid.config, grid.tables.copy(), (image.width, image.height))
        tuned_decoder = decoder.copy()
        rng = np.random.default_rng(self.train_config.seed)
        report = self._optimize(
            [image], [tuned_grid], tuned_decoder, rng, mode, steps
        )
        return tuned_grid, tuned_decoder, report

    def _fit(
        self, images: List[ImageBuffer], mode: TrainMode
    ) -> Tuple[List[HashGrid], PixelDecoder, TrainReport]:
        rng = np.random.default_rng(self.train_config.seed)
        # Все таблицы стартуют из одной выборки
        initial = HashGrid.random(self.grid_config, rng)
        grids = [
            HashGrid(self.grid_config, initial.tables.copy(), (image.width, image.height))
            for image in images
        ]
        decoder = PixelDecoder.random(
            self.grid_config.input_dim, rng, self.train_config.hidden_width
        )
        report = self._optimize(images, grids, decoder, rng, mode, self.train_config.steps)
        return grids, decoder, report

    def _optimize(
        self,
        images: List[ImageBuffer],
        grids: List[HashGrid],
        decoder: PixelDecoder,
        rng: np.random.Generator,
        mode: TrainMode,
        steps: int,
    ) -> TrainReport:
        cfg = self.train_config
        adam = dict(beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps)
        table_optimizers = [
            AdamOptimizer(grid.tables.shape, cfg.lr_tables, **adam) for grid in grids
        ]
        decoder_optimizers = {}
        if mode.trains_decoder:
            decoder_optimizers = {
                name: AdamOptimizer(param.shape, cfg.lr_decoder, **adam)
                for name, param in decoder.parameters().items()
            }

        per_image = -(-cfg.batch_pixels // len(images))
        scale = 1.0 / (len(images) * per_image * 3)
        report = TrainReport(
            mode=mode.value,
            seed=cfg.seed,
            config={"grid": self.grid_config.as_dict(), "train": cfg.as_dict(), "steps": steps},
        )

        self.logger.info(
            f"Обучение ({mode.value}): {len(images)} изобр., {steps} шагов, "
            f"{per_image} пикселей на изображение за шаг"
        )
        started = time.perf_counter()
        pool = ThreadPoolExecutor(max_workers=cfg.threads) if cfg.threads > 1 else nullcontext()
        with pool as executor:
            for step in range(1, steps + 1):
                draw = rng.random(per_image)
                loss = 0.0
                decoder_grad = None
                table_grads = []
                for image, grid in zip(images, grids):
                    flat = np.minimum(
                        (draw * image.pixel_count).astype(np.int64), image.pixel_count - 1
                    )
                    result = self.batch_gradients(
                        grid, decoder, image.pixel_coords(flat), image.flat[flat], scale, executor
                    )
                    loss += result.squared_error * scale
                    table_grads.append(result.tables)
                    decoder_grad = (
                        result.decoder if decoder_grad is None else decoder_grad + result.decoder
                    )

                if not math.isfinite(loss):
                    raise NonFiniteLossError(
                        step, self._offending_group(grids, decoder, table_grads, decoder_grad)
                    )
                report.loss_curve.append(loss)

                for grid, grad, optimizer in zip(grids, table_grads, table_optimizers):
                    optimizer.step(grid.tables, grad, np.any(grad != 0.0, axis=-1))
                    grid.mark_updated()
                if decoder_optimizers:
                    for name, param in decoder.parameters().items():
                        decoder_optimizers[name].step(param, getattr(decoder_grad, name))
                    decoder.mark_updated()

                if step % cfg.log_every == 0 or step == steps:
                    self.logger.info(
                        f"Шаг {step}/{steps}: потери {loss:.6g} "
                        f"({time.perf_counter() - started:.1f} с)"
                    )

        for grid in grids:
            grid.snap_to_storage()
        if decoder_optimizers:
            decoder.snap_to_storage()

        for image, grid in zip(images, grids):
            restored = np.clip(reconstruct(grid, decoder, image.width, image.height), 0.0, 1.0)
            error = mse(restored, image.pixels)
            report.final_mse.append(error)
            report.final_psnr.append(psnr_from_mse(error))
        report.wall_clock = time.perf_counter() - started
        self.logger.info(
            f"Обучение завершено за {report.wall_clock:.1f} с, PSNR: "
            + ", ".join(f"{value:.2f}" for value in report.final_psnr)
        )
        return report

    def batch_gradients(
        self,
        grid: HashGrid,
        decoder: PixelDecoder,
        coords: np.ndarray,
        targets: np.ndarray,
        scale: float,
        executor: Optional[Executor] = None,
    ) -> _ChunkResult:
        """
        Сумма квадратов ошибок и градиенты scale·sum|rgb - target|^2 по пакету точек.

        Блоки точек обрабатываются параллельно, если передан executor; при
        deterministic_reduction сведение идёт в порядке блоков.
        """

        def evaluate(start: int) -> _ChunkResult:
            part = slice(start, start + REDUCTION_CHUNK)
            sample = decode(grid, decoder, coords[part])
            residual = sample.rgb - targets[part]
            grads = backward(sample, 2.0 * scale * residual)
            return _ChunkResult(
                squared_error=float(np.sum(residual * residual)),
                tables=grads.dense_tables(grid.tables.shape),
                decoder=grads.decoder,
            )

        starts = range(0, coords.shape[0], REDUCTION_CHUNK)
        if executor is None:
            results = [evaluate(start) for start in starts]
        elif self.train_config.deterministic_reduction:
            results = list(executor.map(evaluate, starts))
        else:
            futures = [executor.submit(evaluate, start) for start in starts]
            results = [future.result() for future in as_completed(futures)]

        total = results[0]
        for result in results[1:]:
            total = _ChunkResult(
                squared_error=total.squared_error + result.squared_error,
                tables=total.tables + result.tables,
                decoder=total.decoder + result.decoder,
            )
        return total

    @staticmethod
    def _offending_group(
        grids: List[HashGrid],
        decoder: PixelDecoder,
        table_grads: List[np.ndarray],
        decoder_grad: Optional[DecoderGradients],
    ) -> Optional[str]:
        for index, (grid, grad) in enumerate(zip(grids, table_grads)):
            if not (np.all(np.isfinite(grid.tables)) and np.all(np.isfinite(grad))):
                return f"tables[{index}]"
        arrays = list(decoder.parameters().values())
        if decoder_grad is not None:
            arrays += list(decoder_grad.as_dict().values())
        if not all(np.all(np.isfinite(array)) for array in arrays):
            return "decoder"
        return None
