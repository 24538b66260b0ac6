import numpy as np
import pytest
from PIL import Image

from raster.export import layer_filename, render_iou_chart, render_preview_png, to_image, write_pgm
from raster.renderer import LayerRaster, RasterConfig, render_layer
from tests.gcode_factory import make_layer


PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


@pytest.fixture
def raster():
    return render_layer(make_layer(["G1 X0 Y0", "G1 X4 Y0 E1", "G1 X4 Y2 E2"]), RasterConfig(resolution=0.2))


@pytest.fixture
def empty():
    return LayerRaster(grid=np.zeros((0, 0), dtype=bool), origin=(0.0, 0.0), resolution=0.2)


def test_layer_filename():
    assert layer_filename("cube", 3) == "cube_layer3.pgm"
    assert layer_filename("cube", 0, ".png") == "cube_layer0.png"


def test_write_pgm(tmp_path, raster):
    path = write_pgm(raster, tmp_path / "out" / layer_filename("part", 0))
    assert path.exists()
    assert path.read_bytes().startswith(f"P5\n{raster.width} {raster.height}\n255\n".encode())

    with Image.open(path) as image:
        assert image.mode == "L"
        assert image.size == (raster.width, raster.height)
        pixels = np.array(image)
    # Première ligne de l'image = Y maximal
    assert np.array_equal(pixels, np.flipud(raster.grid).astype(np.uint8) * 255)


def test_write_pgm_skips_empty(tmp_path, empty):
    assert write_pgm(empty, tmp_path / "empty.pgm") is None
    assert not (tmp_path / "empty.pgm").exists()


def test_to_image_rejects_empty(empty):
    with pytest.raises(ValueError):
        to_image(empty)


def test_preview_png(raster, empty):
    buffer = render_preview_png(raster, title="Couche 0")
    assert buffer.read(8) == PNG_MAGIC
    assert render_preview_png(empty) is None


def test_iou_chart():
    buffer = render_iou_chart([1.0, 0.97, 0.4])
    assert buffer.getvalue().startswith(PNG_MAGIC)
    assert render_iou_chart([]) is None
