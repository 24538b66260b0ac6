import random
from decimal import Decimal

import pytest

from core.errors import MalformedParameter
from core.gcode import (
    Flavor,
    LineKind,
    NumberFormat,
    NumericToken,
    compute_checksum,
    parse_file,
    parse_line,
    replace_params,
    serialize,
)
from core.segmentation import split_contours, split_layers
from tests.gcode_factory import make_part, parse_lines, random_line, render_source, render_target


# ==================== parse_line ====================

def test_extruding_move_from_reference_example():
    line = parse_line("G1 X50.6 Y36.2 E2.3")
    assert line.command == "G1"
    assert list(line.params) == ["X", "Y", "E"]
    assert line.value("X") == Decimal("50.6")
    assert line.value("Y") == Decimal("36.2")
    assert line.value("E") == Decimal("2.3")
    assert line.kind is LineKind.EXTRUDING_MOVE


def test_blank_line():
    line = parse_line("")
    assert line.kind is LineKind.BLANK
    assert line.command is None
    assert line.serialize() == ""


def test_extrusion_reset():
    line = parse_line("G92 E0")
    assert line.command == "G92"
    assert line.value("E") == Decimal(0)
    assert line.kind is LineKind.EXTRUSION_RESET


@pytest.mark.parametrize("text", ["G1 E-0.8 F2100", "G0 E1.5", "G1 Z0.3 F600", "G0 X1 Y2"])
def test_moves_without_deposit_are_travel(text):
    assert parse_line(text).kind is LineKind.TRAVEL_MOVE


def test_g0_and_g1_classified_alike():
    assert parse_line("G0 X1 Y1 E1").kind is LineKind.EXTRUDING_MOVE
    assert parse_line("G01 X1 E1").kind is LineKind.EXTRUDING_MOVE
    assert parse_line("G01 X1 E1").command == "G1"


def test_comment_and_marker_lines():
    assert parse_line("; just a note").kind is LineKind.COMMENT_ONLY
    assert parse_line(";LAYER_CHANGE").kind is LineKind.LAYER_MARKER
    assert parse_line(";LAYER:12").kind is LineKind.LAYER_MARKER
    assert parse_line("; layer 3, Z = 0.6", Flavor.SAILFISH).kind is LineKind.LAYER_MARKER
    assert parse_line("(<layer> 0.270 )", Flavor.SAILFISH).kind is LineKind.LAYER_MARKER


def test_marker_needs_word_boundary():
    assert parse_line("; layer_height = 0.2", Flavor.SAILFISH).kind is LineKind.COMMENT_ONLY


def test_custom_markers_replace_flavor_defaults():
    line = parse_line(";NEXT", Flavor.MARLIN, markers=[";NEXT"])
    assert line.kind is LineKind.LAYER_MARKER
    assert parse_line(";LAYER_CHANGE", markers=[";NEXT"]).kind is LineKind.COMMENT_ONLY


def test_trailing_comment_kept():
    line = parse_line("G1 X1 Y2 E3 ; perimeter")
    assert line.comment == " perimeter"
    assert line.kind is LineKind.EXTRUDING_MOVE


def test_paren_comment_masked():
    line = parse_line("G1 X1 (move) Y2 E0.5", Flavor.SAILFISH)
    assert line.comment == "move"
    assert line.value("Y") == Decimal(2)
    assert line.kind is LineKind.EXTRUDING_MOVE


def test_line_number_and_checksum_are_sidecars():
    line = parse_line("N10 G1 X1 Y2 E3*45")
    assert line.line_number == "10"
    assert line.checksum == "45"
    assert "N" not in line.params
    assert line.kind is LineKind.EXTRUDING_MOVE
    assert line.serialize() == "N10 G1 X1 Y2 E3*45"


def test_numbered_stream_keeps_commands():
    lines = parse_lines(["N1 G1 Z0.2*0", "N2 G1 X0 Y0*0", "N3 G1 X5 Y0 E1*0", "N4 M104 S200*0"])
    assert [line.command for line in lines] == ["G1", "G1", "G1", "M104"]
    assert [line.line_number for line in lines] == ["1", "2", "3", "4"]
    assert lines[2].kind is LineKind.EXTRUDING_MOVE
    assert len(split_contours(split_layers(lines).layers[0])) == 1


def test_n_word_after_command_is_a_parameter():
    line = parse_line("G1 N5 X1")
    assert line.line_number is None
    assert line.command == "G1"
    assert "N" in line.params


def test_string_argument_command():
    line = parse_line("M117 Hello X10 World")
    assert line.command == "M117"
    assert line.argument == "Hello X10 World"
    assert not line.params


def test_flags_without_value():
    line = parse_line("G28 X Y")
    assert line.flags == ("X", "Y")
    assert line.kind is LineKind.OTHER


def test_malformed_parameter_kept_with_diagnostic():
    line = parse_line("G1 X1.2.3 Y4 E5")
    assert line.kind is LineKind.OTHER
    assert line.diagnostic is not None
    assert line.serialize() == "G1 X1.2.3 Y4 E5"


def test_newline_rejected():
    with pytest.raises(ValueError):
        parse_line("G1 X1\nG1 X2")


def test_fuzzed_lines_roundtrip():
    rng = random.Random(20240611)
    for _ in range(100_000):
        text = random_line(rng)
        line = parse_line(text)
        assert line.serialize() == text
        assert line.diagnostic is None, text
        if line.kind is LineKind.EXTRUDING_MOVE:
            assert "E" in line.params
            assert "X" in line.params or "Y" in line.params


# ==================== NumericToken / NumberFormat ====================

@pytest.mark.parametrize("text, value", [
    ("12", "12"), ("-3.25", "-3.25"), (".5", "0.5"), ("7.", "7"), ("+4.1", "4.1"), ("0.123456", "0.12346"),
])
def test_numeric_token_values(text, value):
    token = NumericToken.parse(text)
    assert token.text == text
    assert token.value == Decimal(value)


@pytest.mark.parametrize("text", ["1.2.3", "abc", "", "-", "1e5"])
def test_numeric_token_rejects(text):
    with pytest.raises(MalformedParameter):
        NumericToken.parse(text)


def test_number_format_render():
    fixed = NumberFormat(decimals=5)
    assert fixed.render(Decimal("0.1")) == "0.10000"
    assert fixed.render(Decimal("-0")) == "0.00000"
    trimmed = NumberFormat(decimals=3, trim_zeros=True)
    assert trimmed.render(Decimal("3.100")) == "3.1"
    assert trimmed.render(Decimal("3")) == "3"
    bare = NumberFormat(decimals=2, leading_zero=False)
    assert bare.render(Decimal("0.5")) == ".50"
    assert bare.render(Decimal("-0.5")) == "-.50"


def test_number_format_keeps_needed_digits():
    assert NumberFormat(decimals=1).render(Decimal("0.12345")) == "0.12345"


def test_number_format_detect():
    assert NumberFormat.detect(["1.00000", "2.50000"]) == NumberFormat(5, False, True)
    assert NumberFormat.detect(["3", "3.1"]) == NumberFormat(1, True, True)
    assert NumberFormat.detect([".5", ".25"]).leading_zero is False
    assert NumberFormat.detect([]) == NumberFormat()


# ==================== parse_file / serialize ====================

def test_parse_file_preserves_order():
    parsed = parse_file("G28\nG1 X1 Y1 E1\n; done\n")
    assert [line.raw for line in parsed.lines] == ["G28", "G1 X1 Y1 E1", "; done"]
    assert parsed.trailing_newline is True


def test_parse_file_reports_diagnostics():
    parsed = parse_file("G28\nG1 X1..2 Y1 E1\nG1 X2 Y2 E2", source="bad.gcode")
    assert len(parsed.lines) == 3
    assert len(parsed.diagnostics) == 1
    assert parsed.diagnostics[0].line_index == 1


def test_parse_file_empty():
    parsed = parse_file("")
    assert parsed.lines == ()
    assert parsed.to_text() == ""


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_synthetic_files_roundtrip(seed):
    part = make_part(seed, n_layers=8)
    source = render_source(part)
    target, _ = render_target(part, seed)
    assert parse_file(source, Flavor.SAILFISH).to_text() == source
    assert parse_file(target, Flavor.MARLIN).to_text() == target
    assert parse_file(source.rstrip("\n")).to_text() == source.rstrip("\n")


def test_serialize_joins_lines():
    lines = [parse_line("G28"), parse_line("G1 X1")]
    assert serialize(lines) == "G28\nG1 X1"
    assert serialize(lines, trailing_newline=True) == "G28\nG1 X1\n"


# ==================== replace_params ====================

def test_replace_params_keeps_layout():
    line = parse_line("G1  X1.5 Y2 E0.12345 ; wall")
    updated = replace_params(line, {"E": "0.00100"})
    assert updated.raw == "G1  X1.5 Y2 E0.00100 ; wall"
    assert updated.value("E") == Decimal("0.001")


def test_replace_params_recomputes_checksum():
    line = parse_line("N3 G1 X1 E1.5*99")
    updated = replace_params(line, {"E": "0.25"})
    assert updated.raw.startswith("N3 G1 X1 E0.25*")
    body = updated.raw.split("*")[0]
    assert updated.checksum == str(compute_checksum(body))


def test_compute_checksum_xor():
    expected = 0
    for byte in b"N0 G1 X1":
        expected ^= byte
    assert compute_checksum("N0 G1 X1") == expected
    assert compute_checksum("") == 0
