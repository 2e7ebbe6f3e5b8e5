import numpy as np
import pytest

from src.core import GridConfig, HashGrid, ImageBuffer, PixelDecoder, TrainConfig, save_image


def smooth_pixels(width: int = 32, height: int = 32, phase: float = 0.0) -> np.ndarray:
    """Гладкое цветное изображение без резких границ."""
    rows, cols = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    u = cols / width
    v = rows / height
    return np.stack(
        [
            0.5 + 0.4 * np.sin(2 * np.pi * (u + phase)),
            0.5 + 0.4 * np.cos(2 * np.pi * v),
            0.5 + 0.3 * np.sin(2 * np.pi * (u + v + phase)),
        ],
        axis=2,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_config():
    # Разрешения 4, 8, 16, 32: два плотных и два хешированных уровня при T = 256
    return GridConfig(levels=4, table_size=2**8, features_per_level=2, n_min=4, n_max=32, k=1)


@pytest.fixture
def small_config_k2(small_config):
    return GridConfig(**{**small_config.as_dict(), "k": 2})


@pytest.fixture
def fast_train():
    return TrainConfig(steps=30, batch_pixels=256, log_every=1000)


@pytest.fixture
def smooth_image():
    return ImageBuffer(smooth_pixels())


@pytest.fixture
def random_model(small_config, rng):
    """Модель с заметными по величине записями, чтобы градиенты были невырожденными."""
    grid = HashGrid(
        small_config,
        rng.uniform(-0.5, 0.5, size=(small_config.levels, small_config.table_size, 2)),
    )
    decoder = PixelDecoder.random(small_config.input_dim, rng, hidden=16)
    return grid, decoder


@pytest.fixture
def image_file(tmp_path):
    path = tmp_path / "smooth.png"
    save_image(smooth_pixels(), str(path))
    return str(path)
