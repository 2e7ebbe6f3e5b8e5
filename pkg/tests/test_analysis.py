import numpy as np
import pytest

from src.core import (
    ConfigMismatchError,
    GridConfig,
    HashGrid,
    ImageBuffer,
    PixelDecoder,
    ShapeMismatchError,
    ShiftRangeError,
    SweepPoint,
    TrainConfig,
    Trainer,
    compare_encodings,
    entry_histograms,
    layer_ablation,
    sweep_inversions,
    table_size_sweep,
    translation_invariance,
)
from src.core.analysis import reachable_entries
from tests.conftest import smooth_pixels


class TestTranslationInvariance:
    def test_identical_encodings(self, random_model):
        grid, _ = random_model
        result = compare_encodings(grid, grid.copy(), 0, 32)
        assert result.divergence == [0.0] * 4
        assert result.valid_fraction == [1.0] * 4
        assert result.cosine == pytest.approx([1.0] * 4)

    def test_lost_strip_is_masked(self, random_model):
        grid, _ = random_model
        result = compare_encodings(grid, grid, 16, 32)
        # Вершины с x > 1/2 уходят за границу после сдвига на половину ширины
        side = grid.levels[0].vertices_per_axis
        assert result.valid_fraction[0] == pytest.approx(3 / side)
        assert not result.maps[0].valid[:, -1].any()
        assert np.all(result.maps[0].restored[:, -1] == 0.0)

    def test_shift_out_of_range(self, smooth_image, small_config, fast_train):
        with pytest.raises(ShiftRangeError):
            translation_invariance(smooth_image, [90], small_config, fast_train)

    def test_zero_shift_encodes_identically(self, smooth_image, small_config, fast_train):
        (result,) = translation_invariance(smooth_image, [0], small_config, fast_train)
        assert result.divergence == [0.0] * small_config.levels
        assert result.as_dict()["shift"] == 0

    def test_level_trend_of_constant_divergence(self, random_model):
        grid, _ = random_model
        assert compare_encodings(grid, grid, 0, 32).level_trend == 0.0

    @pytest.mark.slow
    def test_coarse_levels_are_invariant(self):
        image = ImageBuffer(smooth_pixels(256, 128))
        results = translation_invariance(image, [10, 40, 80], GridConfig(), TrainConfig(steps=300))
        for result in results:
            assert result.relative_divergence[0] < 0.1
            assert result.level_trend > 0.5


class TestLayerAblation:
    def test_groups(self, random_model, smooth_image):
        grid, decoder = random_model
        result = layer_ablation(grid, decoder, smooth_image)
        assert result.dense_levels == [0, 1]
        assert set(result.as_dict()) == {"full", "dense_only", "hashed_only", "dense_levels"}

    def test_extent_mismatch(self, small_config, rng, smooth_image):
        grid = HashGrid.random(small_config, rng, extent=(64, 64))
        decoder = PixelDecoder.random(small_config.input_dim, rng, hidden=8)
        with pytest.raises(ShapeMismatchError):
            layer_ablation(grid, decoder, smooth_image)

    @pytest.mark.slow
    def test_full_model_is_best(self, small_config, smooth_image):
        grid, decoder, _ = Trainer(small_config).fit_per_image(smooth_image)
        result = layer_ablation(grid, decoder, smooth_image)
        assert result.full >= result.dense_only
        assert result.full >= result.hashed_only


class TestTableSizeSweep:
    @staticmethod
    def _point(size, value):
        return SweepPoint(size, value, 0, 0, 0)

    def test_monotone_curve(self):
        points = [self._point(2**t, 20.0 + t) for t in range(8, 12)]
        assert sweep_inversions(points) == 0

    def test_counts_drops(self):
        points = [self._point(64, 25.0), self._point(16, 20.0), self._point(256, 24.0), self._point(1024, 26.0)]
        assert sweep_inversions(points) == 1
        assert sweep_inversions(points, tolerance=2.0) == 0

    def test_sweep(self, smooth_image, small_config, fast_train):
        points = table_size_sweep(smooth_image, [16, 1024], small_config, fast_train)
        assert [point.table_size for point in points] == [16, 1024]
        assert [point.dense_levels for point in points] == [0, 3]
        assert points[1].payload_bytes == 4 * 1024 * 2 * 4
        assert points[1].payload_bytes_half == points[1].payload_bytes // 2

    @pytest.mark.slow
    def test_psnr_grows_with_table(self):
        image = ImageBuffer(smooth_pixels(96, 96))
        sizes = [2**t for t in range(8, 15)]
        points = table_size_sweep(image, sizes, GridConfig())
        assert sweep_inversions(points, tolerance=0.1) == 0


class TestEntryHistograms:
    def test_fresh_init_is_bounded(self, small_config):
        grids = [HashGrid.random(small_config, np.random.default_rng(seed)) for seed in range(3)]
        histograms = entry_histograms(grids, bins=16)
        assert len(histograms) == small_config.levels
        for histogram in histograms:
            assert histogram.edges[0] >= -1e-4 and histogram.edges[-1] <= 1e-4
            assert abs(histogram.mean) < 1e-4

    def test_only_reachable_entries(self, small_config):
        grid = HashGrid.zeros(small_config)
        unreachable = np.setdiff1d(np.arange(small_config.table_size), reachable_entries(grid, 0))
        grid.tables[0, unreachable] = 5.0
        histogram = entry_histograms([grid], bins=4)[0]
        assert histogram.edges[-1] < 5.0
        assert reachable_entries(grid, 0).size == 25

    def test_independent_of_order(self, small_config):
        grids = [HashGrid.random(small_config, np.random.default_rng(seed)) for seed in range(4)]
        forward = entry_histograms(grids)
        backward = entry_histograms(grids[::-1])
        for a, b in zip(forward, backward):
            np.testing.assert_array_equal(a.counts, b.counts)
            assert (a.mean, a.std, a.skewness) == (b.mean, b.std, b.skewness)

    def test_mismatched_configs(self, small_config, small_config_k2, rng):
        with pytest.raises(ConfigMismatchError):
            entry_histograms([HashGrid.random(small_config, rng), HashGrid.random(small_config_k2, rng)])

    def test_no_models(self):
        with pytest.raises(ShapeMismatchError):
            entry_histograms([])

    @pytest.mark.slow
    def test_fitted_entries_are_centered_and_symmetric(self):
        trainer = Trainer(GridConfig(), TrainConfig(steps=200))
        grids = [
            trainer.fit_per_image(ImageBuffer(smooth_pixels(64, 64, phase)))[0]
            for phase in np.linspace(0.0, 1.0, 20, endpoint=False)
        ]
        for histogram in entry_histograms(grids):
            assert abs(histogram.mean) < 0.1 * histogram.std
            assert abs(histogram.skewness) < 0.5
