import numpy as np
import pytest
from PIL import Image

from src.core import ImageBuffer, ImageFormatError, ImageSizeError, load_image, save_image
from tests.conftest import smooth_pixels


class TestImageBuffer:
    def test_clamps_values(self):
        pixels = np.full((8, 8, 3), 0.5)
        pixels[0, 0] = [-1.0, 2.0, 0.5]
        buffer = ImageBuffer(pixels)
        np.testing.assert_array_equal(buffer.pixels[0, 0], [0.0, 1.0, 0.5])

    @pytest.mark.parametrize("shape", [(7, 8, 3), (8, 7, 3), (8, 8), (8, 8, 4)])
    def test_rejects_shapes(self, shape):
        with pytest.raises(ImageSizeError):
            ImageBuffer(np.zeros(shape))

    def test_pixel_coords(self):
        buffer = ImageBuffer(np.zeros((10, 16, 3)))
        np.testing.assert_allclose(buffer.pixel_coords(np.array([0, 17])), [[0.5 / 16, 0.05], [1.5 / 16, 0.15]])
        assert buffer.all_pixel_coords().shape == (160, 2)


class TestImageFiles:
    def test_scaling_endpoints(self, tmp_path):
        array = np.zeros((8, 8, 3), dtype=np.uint8)
        array[0, 0] = 255
        path = str(tmp_path / "endpoints.png")
        Image.fromarray(array, "RGB").save(path)
        buffer = load_image(path)
        assert buffer.pixels[0, 0, 0] == 1.0
        assert buffer.pixels[1, 1, 0] == 0.0

    def test_png_and_ppm_agree(self, tmp_path):
        pixels = smooth_pixels(20, 12)
        save_image(pixels, str(tmp_path / "a.png"))
        save_image(pixels, str(tmp_path / "a.ppm"))
        np.testing.assert_array_equal(
            load_image(str(tmp_path / "a.png")).pixels, load_image(str(tmp_path / "a.ppm")).pixels
        )

    def test_quantisation_fixed_point(self, tmp_path):
        first = str(tmp_path / "first.png")
        second = str(tmp_path / "second.png")
        save_image(smooth_pixels(), first)
        loaded = load_image(first)
        save_image(loaded, second)
        np.testing.assert_array_equal(load_image(second).pixels, loaded.pixels)

    def test_out_of_range_values_are_clamped(self, tmp_path):
        path = str(tmp_path / "clamped.png")
        save_image(np.full((8, 8, 3), 1.7), path)
        assert np.all(load_image(path).pixels == 1.0)

    def test_alpha_is_dropped(self, tmp_path, caplog):
        array = np.full((8, 8, 4), 200, dtype=np.uint8)
        path = str(tmp_path / "alpha.png")
        Image.fromarray(array, "RGBA").save(path)
        buffer = load_image(path)
        assert buffer.pixels.shape == (8, 8, 3)
        assert "Альфа-канал" in caplog.text

    def test_grayscale(self, tmp_path):
        path = str(tmp_path / "gray.png")
        Image.fromarray(np.full((9, 9), 51, dtype=np.uint8), "L").save(path)
        np.testing.assert_allclose(load_image(path).pixels, 0.2)

    def test_too_small(self, tmp_path):
        path = str(tmp_path / "tiny.png")
        Image.fromarray(np.full((1, 1, 3), 255, dtype=np.uint8), "RGB").save(path)
        with pytest.raises(ImageSizeError):
            load_image(path)

    def test_unsupported_format(self, tmp_path):
        path = str(tmp_path / "image.bmp")
        Image.fromarray(np.zeros((8, 8, 3), dtype=np.uint8), "RGB").save(path, format="BMP")
        with pytest.raises(ImageFormatError):
            load_image(path)

    def test_corrupt_file(self, tmp_path):
        path = tmp_path / "corrupt.png"
        path.write_bytes(b"\x89PNG\r\n\x1a\nnot really a png")
        with pytest.raises(ImageFormatError):
            load_image(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_image(str(tmp_path / "missing.png"))
