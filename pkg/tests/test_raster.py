import math

import numpy as np
import pytest

from core.errors import UnknownStartPosition
from raster.renderer import Bounds, RasterConfig, rasterize_segments, render_layer, trace_layer
from tests.gcode_factory import make_layer, parse_lines


SEGMENT = ["G1 X0 Y0 F9000", "G1 X10 Y0 E1"]


def test_segment_capsule_area():
    raster = render_layer(make_layer(SEGMENT), RasterConfig(resolution=0.1, bead_width=0.4))
    analytic = (10 * 0.4 + math.pi * 0.2 ** 2) / 0.1 ** 2
    assert raster.occupied == 412
    assert abs(raster.occupied - analytic) / analytic < 0.01


POINT = ["G1 X5 Y5", "G1 X5 Y5 E1"]


def test_zero_length_move_stamps_disc():
    raster = render_layer(make_layer(POINT), RasterConfig())
    # Disque de 12,57 px : aucun compte entier n'est à 2 % près, tolérance d'un pixel
    assert raster.occupied == 12
    assert abs(raster.occupied - math.pi * 2 ** 2) <= 1


def test_disc_area_at_fine_resolution():
    raster = render_layer(make_layer(POINT), RasterConfig(resolution=0.01))
    analytic = math.pi * 20 ** 2
    assert raster.occupied == 1264
    assert abs(raster.occupied - analytic) / analytic < 0.02


def test_grid_on_global_lattice():
    raster = render_layer(make_layer(["G1 X1.03 Y2.07", "G1 X3.51 Y2.07 E1"]), RasterConfig(resolution=0.1))
    col, row = raster.lattice_origin
    assert raster.origin == pytest.approx((col * 0.1, row * 0.1))
    # Marge d'une largeur de cordon autour de la géométrie
    assert raster.origin[0] <= 1.03 - 0.4 + 1e-9
    assert raster.origin[1] <= 2.07 - 0.4 + 1e-9


def test_row_zero_is_lowest_y():
    raster = render_layer(make_layer(["G1 X0 Y0", "G1 X0 Y10 E1"]), RasterConfig(bounds=Bounds(-1, -1, 1, 20)))
    occupied_rows = np.flatnonzero(raster.grid.any(axis=1))
    # Le cordon couvre y de -0.2 à 10.2 mm, soit les lignes 8 à 111
    assert occupied_rows[0] == 8
    assert occupied_rows[-1] == 111


def test_travel_only_layer_is_empty():
    raster = render_layer(make_layer(["G0 X0 Y0", "G0 X10 Y10", "G1 E-0.8"]), RasterConfig())
    assert raster.is_empty
    assert raster.grid.shape == (0, 0)
    assert raster.occupied == 0


def test_fixed_bounds_keep_empty_grid_sized():
    cfg = RasterConfig(resolution=0.5, bounds=Bounds(0, 0, 10, 5))
    raster = render_layer(make_layer(["G0 X1 Y1"]), cfg)
    assert raster.grid.shape == (10, 20)
    assert raster.occupied == 0


def test_fixed_bounds_do_not_change_pixels():
    layer = make_layer(["G1 X2 Y3", "G1 X6 Y3 E1", "G1 X6 Y7 E2"])
    tight = render_layer(layer, RasterConfig())
    padded = render_layer(layer, RasterConfig(bounds=Bounds(-20, -20, 40, 40)))
    assert tight.occupied == padded.occupied


def test_wider_bead_covers_more():
    layer = make_layer(["G1 X0 Y0", "G1 X5 Y5 E1", "G1 X9 Y0 E2"])
    counts = [render_layer(layer, RasterConfig(bead_width=w)).occupied for w in (0.2, 0.4, 0.8)]
    assert counts == sorted(counts)
    assert counts[0] < counts[-1]


def test_geometry_outside_bounds_is_clipped():
    cfg = RasterConfig(bounds=Bounds(0, 0, 1, 1))
    raster = rasterize_segments([(50.0, 50.0, 60.0, 50.0)], cfg)
    assert raster.grid.shape == (10, 10)
    assert raster.occupied == 0


# ==================== trace_layer ====================

def test_extrusion_without_position_raises():
    with pytest.raises(UnknownStartPosition) as excinfo:
        render_layer(make_layer(["G1 X1 E1"]), RasterConfig())
    assert excinfo.value.reason == "unknown_start_position"


def test_start_from_previous_layer():
    segments, end = trace_layer(parse_lines(["G1 X1 Y0 E1"]), start=(0.0, 0.0))
    assert segments == [(0.0, 0.0, 1.0, 0.0)]
    assert end == (1.0, 0.0)


def test_modal_axes_and_retractions():
    lines = parse_lines(["G0 X1 Y1", "G1 X2 E1", "G1 E0.2", "G1 Y3 E1.5", "M106 S255"])
    segments, end = trace_layer(lines)
    assert segments == [(1.0, 1.0, 2.0, 1.0), (2.0, 1.0, 2.0, 3.0)]
    assert end == (2.0, 3.0)


def test_no_motion_has_no_end():
    assert trace_layer(parse_lines(["M104 S200"])) == ([], None)


# ==================== RasterConfig ====================

@pytest.mark.parametrize("kwargs", [{"resolution": 0}, {"resolution": -0.1}, {"bead_width": 0}])
def test_config_rejects_non_positive(kwargs):
    with pytest.raises(ValueError):
        RasterConfig(**kwargs)


def test_bounds_rejects_inverted_rectangle():
    with pytest.raises(ValueError):
        Bounds(1, 0, 0, 1)
