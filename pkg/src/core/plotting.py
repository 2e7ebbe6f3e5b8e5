"""Графики и тепловые карты экспериментов (matplotlib, без дисплея)."""

from typing import Dict, List, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from PIL import Image  # noqa: E402

from .analysis import InvarianceResult, LevelHistogram, SweepPoint  # noqa: E402


def save_index_map_image(indices: np.ndarray, path: str) -> None:
    """Сохраняет карту индексов как полутоновое PNG (индекс по модулю 256)."""
    Image.fromarray((indices % 256).astype(np.uint8), "L").save(path, format="PNG")


def save_invariance_heatmaps(
    result: InvarianceResult,
    channels: Sequence[int],
    features_per_level: int,
    path: str,
) -> None:
    """
    Тепловые карты выбранных каналов: верхняя строка - F(I), нижняя - τ^-1(F(τ(I))).

    Цветовая шкала нормируется отдельно для каждого уровня.
    """
    selected = [c for c in channels if c // features_per_level < len(result.maps)]
    fig, axes = plt.subplots(2, max(len(selected), 1), figsize=(3 * max(len(selected), 1), 6), squeeze=False)
    for column, channel in enumerate(selected):
        maps = result.maps[channel // features_per_level]
        feature = channel % features_per_level
        top = maps.original[..., feature]
        bottom = maps.restored[..., feature]
        low = min(top.min(), bottom.min())
        high = max(top.max(), bottom.max())
        for row, data in enumerate((top, bottom)):
            axis = axes[row][column]
            axis.imshow(data, cmap="viridis", vmin=low, vmax=high)
            axis.set_xticks([])
            axis.set_yticks([])
        axes[0][column].set_title(f"канал {channel} (уровень {maps.level})")
    fig.suptitle(f"сдвиг {result.shift} px")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_sweep_curve(points: Sequence[SweepPoint], path: str) -> None:
    ordered = sorted(points, key=lambda point: point.table_size)
    fig, axis = plt.subplots(figsize=(6, 4))
    axis.plot([p.table_size for p in ordered], [p.psnr for p in ordered], marker="o")
    axis.set_xscale("log", base=2)
    axis.set_xlabel("T")
    axis.set_ylabel("PSNR, дБ")
    axis.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_histograms(histograms: List[LevelHistogram], path: str) -> None:
    columns = 4
    rows = -(-len(histograms) // columns)
    fig, axes = plt.subplots(rows, columns, figsize=(3 * columns, 2.5 * rows), squeeze=False)
    for axis, histogram in zip(axes.ravel(), histograms):
        centers = 0.5 * (histogram.edges[1:] + histogram.edges[:-1])
        axis.bar(centers, histogram.counts, width=np.diff(histogram.edges), color="#377eb8")
        axis.set_title(f"{histogram.resolution}×{histogram.resolution}", fontsize=9)
    for axis in axes.ravel()[len(histograms):]:
        axis.axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_trace_plot(traces: Dict[int, np.ndarray], nodes: np.ndarray, path: str) -> None:
    """
    Значения и производные одномерных интерполянтов.

    Args:
        traces: k -> массив (samples, 3) со столбцами t, значение, производная
        nodes: Значения в узлах
        path: Путь к PNG
    """
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    top.plot(np.arange(nodes.size), nodes, "ko", markersize=3, label="узлы")
    for k, trace in sorted(traces.items()):
        top.plot(trace[:, 0], trace[:, 1], label=f"k={k}")
        bottom.plot(trace[:, 0], trace[:, 2], label=f"k={k}")
    top.legend()
    bottom.set_ylabel("производная")
    bottom.set_xlabel("t, ячейки")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
