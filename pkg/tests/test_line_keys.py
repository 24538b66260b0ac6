import pytest

from align.line_keys import EMPTY_TOKEN, LineKey, coordinate_group, contour_keys, layer_keys, line_key
from core.segmentation import split_contours
from tests.gcode_factory import make_contour, make_layer, parse_lines


CONTOUR = [
    "G0 X0 Y0 F9000",
    "G1 X1.000 Y0.000 E0.1",
    "G1 X1.000 Y1.000 E0.2",
    "G1 X0.000 Y1.000 E0.3",
    "G1 X0.000 Y0.500 Z0.3 E0.4",
]


def test_key_spans_two_followers():
    contour = make_contour(CONTOUR)
    assert line_key(contour, 1) == LineKey("X1.000 Y0.000|X1.000 Y1.000|X0.000 Y1.000")


def test_last_extrusion_padded_with_empty_tokens():
    contour = make_contour(CONTOUR)
    key = line_key(contour, 4)
    assert key.key == f"X0.000 Y0.500 Z0.3|{EMPTY_TOKEN}|{EMPTY_TOKEN}"
    assert str(line_key(contour, 3)).endswith(f"|{EMPTY_TOKEN}")


def test_travel_line_has_no_key():
    assert line_key(make_contour(CONTOUR), 0) is None


def test_index_out_of_range():
    with pytest.raises(IndexError):
        line_key(make_contour(CONTOUR), 5)


def test_key_ignores_feed_and_extrusion():
    plain = make_contour(["G1 X1 Y2 E1", "G1 X3 Y4 E2"])
    dialect = make_contour(["G1 X1 Y2 E7.5 F1800", "G1 X3 Y4 E9"])
    assert contour_keys(plain) == contour_keys(dialect)


def test_key_uses_verbatim_text():
    assert line_key(make_contour(["G1 X1.0 Y2 E1"]), 0) != line_key(make_contour(["G1 X1 Y2 E1"]), 0)


def test_window_stops_at_non_extruding_line():
    contour = make_contour(["G1 X1 Y1 E1", "M106 S255", "G1 X2 Y2 E2"])
    assert line_key(contour, 0).key == f"X1 Y1|{EMPTY_TOKEN}|{EMPTY_TOKEN}"


def test_coordinate_group():
    (line,) = parse_lines(["G1 Y2 X1 E3 F100"])
    assert coordinate_group(line) == "X1 Y2"


def test_layer_keys_stay_inside_contours():
    layer = make_layer(["G0 X0 Y0", "G1 X1 Y0 E1", "G0 X5 Y5", "G1 X6 Y5 E2"])
    keys = layer_keys(split_contours(layer))
    assert len(keys) == 4
    assert keys[0] is None and keys[2] is None
    assert keys[1].key == f"X1 Y0|{EMPTY_TOKEN}|{EMPTY_TOKEN}"
