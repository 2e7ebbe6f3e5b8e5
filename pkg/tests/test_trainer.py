import numpy as np
import pytest

from src.core import (
    ConfigMismatchError,
    GridConfig,
    HashGrid,
    ImageBuffer,
    NonFiniteLossError,
    PixelDecoder,
    TrainConfig,
    TrainConfigError,
    Trainer,
    backward,
    decode,
    psnr,
    reconstruct,
    serialize,
)
from tests.conftest import smooth_pixels


class TestTrainConfig:
    @pytest.mark.parametrize(
        "overrides",
        [{"steps": 0}, {"batch_pixels": 0}, {"lr_tables": 0.0}, {"beta2": 1.0}, {"threads": 0}],
    )
    def test_invalid(self, overrides):
        with pytest.raises(TrainConfigError):
            TrainConfig(**overrides)

    def test_defaults(self):
        config = TrainConfig()
        assert (config.beta1, config.beta2, config.eps) == (0.9, 0.99, 1e-15)
        assert (config.lr_tables, config.lr_decoder, config.batch_pixels) == (1e-2, 1e-3, 4096)


class TestPerImageFit:
    def test_report(self, small_config, fast_train, smooth_image):
        grid, decoder, report = Trainer(small_config, fast_train).fit_per_image(smooth_image)
        assert grid.extent == (32, 32)
        assert len(report.loss_curve) == 30
        assert report.mode == "per_image"
        restored = np.clip(reconstruct(grid, decoder, 32, 32), 0, 1)
        assert report.final_psnr[0] == pytest.approx(psnr(restored, smooth_image))
        assert set(report.as_dict()) >= {"loss_curve", "final_psnr", "wall_clock", "config"}

    def test_seeded_determinism(self, small_config, fast_train, smooth_image):
        first = Trainer(small_config, fast_train).fit_per_image(smooth_image)
        second = Trainer(small_config, fast_train).fit_per_image(smooth_image)
        assert serialize(first[0], first[1]) == serialize(second[0], second[1])
        assert first[2].loss_curve == second[2].loss_curve

    def test_thread_count_does_not_change_result(self, small_config, smooth_image):
        config = TrainConfig(steps=5, batch_pixels=2500, log_every=1000)
        single = Trainer(small_config, config).fit_per_image(smooth_image)
        threaded = Trainer(small_config, TrainConfig(**{**config.as_dict(), "threads": 3})).fit_per_image(
            smooth_image
        )
        assert serialize(single[0], single[1]) == serialize(threaded[0], threaded[1])

    def test_loss_decreases(self, small_config, smooth_image):
        config = TrainConfig(steps=200, batch_pixels=256, log_every=1000)
        _, _, report = Trainer(small_config, config).fit_per_image(smooth_image)
        assert report.smoothed_loss(200) < report.smoothed_loss(50)
        assert report.smoothed_loss(200, window=20) < 0.8 * report.loss_curve[0]

    def test_parameters_fit_storage_precision(self, small_config, fast_train, smooth_image):
        grid, decoder, _ = Trainer(small_config, fast_train).fit_per_image(smooth_image)
        np.testing.assert_array_equal(grid.tables, grid.tables.astype(np.float32))
        np.testing.assert_array_equal(decoder.w1, decoder.w1.astype(np.float32))

    def test_non_finite_loss(self, small_config, smooth_image, rng):
        grid = HashGrid(small_config, np.full((4, 256, 2), 1e300))
        decoder = PixelDecoder.random(small_config.input_dim, rng)
        trainer = Trainer(small_config, TrainConfig(steps=3, batch_pixels=64))
        with np.errstate(all="ignore"), pytest.raises(NonFiniteLossError) as error:
            trainer.finetune(grid, decoder, smooth_image, freeze_decoder=False)
        assert error.value.step == 1


class TestSharedDecoder:
    def test_single_image_matches_per_image(self, small_config, fast_train, smooth_image):
        trainer = Trainer(small_config, fast_train)
        grid, decoder, _ = trainer.fit_per_image(smooth_image)
        grids, shared, _ = trainer.fit_shared_decoder([smooth_image])
        assert serialize(grid, decoder) == serialize(grids[0], shared)

    def test_identical_images_get_identical_tables(self, small_config, fast_train, smooth_image):
        copy = ImageBuffer(smooth_image.pixels.copy())
        grids, _, report = Trainer(small_config, fast_train).fit_shared_decoder([smooth_image, copy])
        np.testing.assert_array_equal(grids[0].tables, grids[1].tables)
        assert len(report.final_psnr) == 2

    def test_distinct_images(self, small_config, fast_train, smooth_image):
        other = ImageBuffer(smooth_pixels(phase=0.3))
        grids, decoder, _ = Trainer(small_config, fast_train).fit_shared_decoder([smooth_image, other])
        assert not np.array_equal(grids[0].tables, grids[1].tables)
        assert decoder.input_dim == small_config.input_dim

    @pytest.mark.parametrize("count", [0, 65])
    def test_image_count_limits(self, small_config, fast_train, smooth_image, count):
        with pytest.raises(TrainConfigError):
            Trainer(small_config, fast_train).fit_shared_decoder([smooth_image] * count)


class TestFinetune:
    def test_frozen_decoder_is_bit_identical(self, small_config, fast_train, smooth_image):
        trainer = Trainer(small_config, fast_train)
        grid, decoder, _ = trainer.fit_per_image(smooth_image)
        target = ImageBuffer(smooth_pixels(phase=0.25))
        before = grid.tables.copy()
        tuned_grid, tuned_decoder, report = trainer.finetune(grid, decoder, target, steps=20)
        for name, param in decoder.parameters().items():
            np.testing.assert_array_equal(getattr(tuned_decoder, name), param)
        assert not np.array_equal(tuned_grid.tables, before)
        np.testing.assert_array_equal(grid.tables, before)
        assert report.mode == "finetune_tables_only"
        assert len(report.loss_curve) == 20

    def test_joint_updates_decoder(self, small_config, fast_train, smooth_image):
        trainer = Trainer(small_config, fast_train)
        grid, decoder, _ = trainer.fit_per_image(smooth_image)
        _, tuned_decoder, report = trainer.finetune(grid, decoder, smooth_image, freeze_decoder=False, steps=5)
        assert not np.array_equal(tuned_decoder.w2, decoder.w2)
        assert report.mode == "finetune_joint"

    def test_default_steps(self, small_config, smooth_image, rng):
        grid = HashGrid.random(small_config, rng)
        decoder = PixelDecoder.random(small_config.input_dim, rng)
        _, _, report = Trainer(small_config, TrainConfig(batch_pixels=64)).finetune(grid, decoder, smooth_image)
        assert len(report.loss_curve) == 100

    def test_rejects_zero_steps(self, small_config, smooth_image, rng):
        grid = HashGrid.random(small_config, rng)
        decoder = PixelDecoder.random(small_config.input_dim, rng)
        with pytest.raises(TrainConfigError):
            Trainer(small_config, TrainConfig(batch_pixels=64)).finetune(grid, decoder, smooth_image, steps=0)

    def test_config_mismatch(self, small_config, fast_train, smooth_image, rng):
        other = GridConfig(**{**small_config.as_dict(), "table_size": 512})
        grid = HashGrid.random(other, rng)
        decoder = PixelDecoder.random(other.input_dim, rng)
        with pytest.raises(ConfigMismatchError):
            Trainer(small_config, fast_train).finetune(grid, decoder, smooth_image)


class TestGradientAccumulation:
    def test_batch_equals_sum_of_pixels(self, random_model, rng, small_config):
        grid, decoder = random_model
        coords = rng.uniform(0, 1, size=(16, 2))
        targets = rng.uniform(0, 1, size=(16, 3))
        trainer = Trainer(small_config, TrainConfig(log_every=1000))
        batch = trainer.batch_gradients(grid, decoder, coords, targets, scale=1.0)

        tables = np.zeros(grid.tables.shape)
        decoder_total = None
        for b in range(16):
            sample = decode(grid, decoder, coords[b : b + 1])
            grads = backward(sample, 2.0 * (sample.rgb - targets[b : b + 1]))
            tables += grads.dense_tables(grid.tables.shape)
            decoder_total = grads.decoder if decoder_total is None else decoder_total + grads.decoder

        np.testing.assert_allclose(batch.tables, tables, atol=1e-10)
        for name, value in decoder_total.as_dict().items():
            np.testing.assert_allclose(batch.decoder.as_dict()[name], value, atol=1e-10)


@pytest.mark.slow
class TestReconstructionQuality:
    """Полномасштабные проверки качества (минуты на CPU)."""

    @staticmethod
    def _scene(phase: float) -> ImageBuffer:
        rows, cols = np.meshgrid(np.arange(256), np.arange(256), indexing="ij")
        u, v = cols / 256, rows / 256
        pixels = np.stack(
            [
                0.5 + 0.25 * np.sin(6 * u + phase) + 0.15 * np.cos(11 * v * u),
                0.5 + 0.3 * np.cos(5 * v - phase) * np.sin(3 * u),
                0.4 + 0.2 * ((u - 0.5) ** 2 + (v - 0.4) ** 2 < 0.05) + 0.1 * np.sin(17 * (u + v)),
            ],
            axis=2,
        )
        return ImageBuffer(np.clip(pixels, 0, 1))

    def test_per_image_psnr(self):
        _, _, report = Trainer(GridConfig(), TrainConfig(steps=1000)).fit_per_image(self._scene(0.0))
        assert report.final_psnr[0] >= 25.0
        assert report.smoothed_loss(1000) <= report.smoothed_loss(50)

    def test_shared_decoder_degrades(self):
        images = [self._scene(phase) for phase in np.linspace(0, 3, 8)]
        config = TrainConfig(steps=1000)
        per_image = [Trainer(GridConfig(), config).fit_per_image(image)[2].final_psnr[0] for image in images]
        _, _, shared = Trainer(GridConfig(), config).fit_shared_decoder(images)
        assert np.mean(per_image) - shared.mean_psnr >= 1.0

    def test_constant_gray(self):
        image = ImageBuffer(np.full((64, 64, 3), 0.5))
        _, _, report = Trainer(GridConfig(), TrainConfig(steps=200)).fit_per_image(image)
        assert report.final_psnr[0] >= 50.0

    def test_checkerboard(self):
        rows, cols = np.meshgrid(np.arange(64), np.arange(64), indexing="ij")
        board = ((rows // 8 + cols // 8) % 2).astype(np.float64)
        image = ImageBuffer(np.repeat(board[..., None], 3, axis=2))
        _, _, report = Trainer(GridConfig(k=1), TrainConfig(steps=1000)).fit_per_image(image)
        assert report.final_psnr[0] >= 30.0
        assert report.smoothed_loss(1000) <= report.smoothed_loss(50)


@pytest.mark.slow
class TestFinetuneQuality:
    def test_fitted_start_does_not_drift(self):
        image = TestReconstructionQuality._scene(0.5)
        trainer = Trainer(GridConfig(), TrainConfig(steps=1000))
        grid, decoder, _ = trainer.fit_per_image(image)
        _, _, report = trainer.finetune(grid, decoder, image)
        assert np.mean(report.loss_curve[-10:]) <= 1.05 * np.mean(report.loss_curve[:10])

    def test_zero_tables_with_universal_decoder(self):
        images = [ImageBuffer(smooth_pixels(64, 64, phase)) for phase in np.linspace(0.0, 0.8, 8)]
        trainer = Trainer(GridConfig(), TrainConfig(steps=500))
        _, decoder, _ = trainer.fit_shared_decoder(images)
        target = ImageBuffer(smooth_pixels(64, 64, phase=0.37))
        start = HashGrid.zeros(GridConfig(), (64, 64))
        before = psnr(np.clip(reconstruct(start, decoder, 64, 64), 0, 1), target)
        _, tuned_decoder, report = trainer.finetune(start, decoder, target, steps=100)
        np.testing.assert_array_equal(tuned_decoder.w1, decoder.w1)
        assert report.final_psnr[0] >= before + 5.0
