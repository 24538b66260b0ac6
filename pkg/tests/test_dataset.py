import copy
import io
import json
from pathlib import Path

import pytest

from align.line_keys import layer_keys
from core.errors import ManifestError, MaxLengthTooSmall
from core.gcode import Flavor, parse_file, serialize
from core.segmentation import split_contours, split_layers
from dataset.records import CorpusReport, JsonlRecordSink, ListRecordSink, parse_manifest, read_manifest
from dataset.services.corpus_service import CorpusService, build_corpus
from extrusion.relative import ExtrusionState, detect_extrusion_format, to_absolute, to_relative
from tests.gcode_factory import make_part, render_source, render_target


def _pair(seed, n_layers=10, part=None, target_part=None, **part_options):
    part = part or make_part(seed, n_layers=n_layers, **part_options)
    source = parse_file(render_source(part), Flavor.SAILFISH, source=f"part{seed}.sailfish.gcode")
    target_text, _ = render_target(target_part or part, seed)
    target = parse_file(target_text, Flavor.MARLIN, source=f"part{seed}.marlin.gcode")
    return source, target


def _write_pair(directory, seed, n_layers=10, **part_options):
    part = make_part(seed, n_layers=n_layers, **part_options)
    path_a = directory / f"part{seed}.sailfish.gcode"
    path_b = directory / f"part{seed}.marlin.gcode"
    path_a.write_text(render_source(part), encoding="utf-8")
    path_b.write_text(render_target(part, seed)[0], encoding="utf-8")
    return path_a, path_b


def _by_layer(records):
    layers = {}
    for record in records:
        layers.setdefault(record["layer_index"], []).append(record)
    return layers


# ==================== ALIGNEMENT ====================

def test_self_pair_aligns_every_layer():
    part = make_part(11, n_layers=6)
    source = parse_file(render_source(part), Flavor.SAILFISH)
    service = CorpusService(max_length=20, target_flavor=Flavor.SAILFISH)

    records, report = service.align_parsed(source, source)
    assert report.layers_aligned == report.layers_total == 6
    assert all(r["source_text"] == r["target_text"] for r in records)
    assert records[0]["flavors"] == ["sailfish", "sailfish"]


def test_permuted_pair_reassembles_both_files():
    source, target = _pair(12)
    service = CorpusService(max_length=20)

    records, report = service.align_parsed(source, target)
    assert report.layers_total == 10
    assert report.layers_aligned == 10
    assert report.rejection_reasons == {}
    assert report.alignment_rate == 1.0

    split_a = service.prepare(source)
    split_b = service.prepare(target)
    for index, chunks in _by_layer(records).items():
        assert [r["chunk_index"] for r in chunks] == list(range(len(chunks)))
        layer_a, layer_b = split_a.layers[index], split_b.layers[index]
        flipped_b, _ = service.align_layer(layer_a, layer_b)

        assert "\n".join(r["source_text"] for r in chunks) == serialize(layer_a.lines)
        assert "\n".join(r["target_text"] for r in chunks) == serialize(flipped_b.lines)
        # B réordonnée contient les mêmes lignes que B
        assert sorted(line.raw for line in flipped_b.lines) == sorted(line.raw for line in layer_b.lines)


def test_source_chunks_restore_absolute_layers():
    source, target = _pair(12)
    records, report = CorpusService(max_length=20).align_parsed(source, target)
    assert report.layers_aligned == 10

    fmt = detect_extrusion_format(source.lines)
    original = split_layers(source.lines)
    for index, chunks in _by_layer(records).items():
        layer = original.layers[index]
        # E cumulé au début de la couche
        state = ExtrusionState()
        to_relative(source.lines[:layer.start], fmt, state)

        joined = parse_file("\n".join(r["source_text"] for r in chunks), Flavor.SAILFISH).lines
        assert serialize(to_absolute(joined, fmt, state)) == serialize(layer.lines)


def test_chunks_bounded_and_cut_on_shared_keys():
    source, target = _pair(13)
    # 10 lignes couvrent le plus long préfixe de contour côté cible (8 lignes)
    service = CorpusService(max_length=10)
    split_a, split_b = service.prepare(source), service.prepare(target)

    for layer_a, layer_b in zip(split_a.layers, split_b.layers):
        flipped_b, pairs = service.align_layer(layer_a, layer_b)
        keys_a = layer_keys(split_contours(layer_a))
        keys_b = layer_keys(split_contours(flipped_b))
        for pair in pairs[:-1]:
            assert keys_a[pair.a_span.end] is not None
            assert keys_a[pair.a_span.end] == keys_b[pair.b_span.end]
        assert all(len(p.a) <= 10 and len(p.b) <= 10 for p in pairs)


def test_records_are_relative_extrusion():
    source, target = _pair(14, n_layers=3)
    records, _ = CorpusService().align_parsed(source, target)
    # Le premier mouvement d'extrusion de la couche 1 vaut son dépôt, pas le cumul
    part = make_part(14, n_layers=3)
    first = part.layers[1].contours[0]
    layer_1 = "\n".join(r["source_text"] for r in _by_layer(records)[1]).splitlines()
    assert f"G1 X{first.points[0][0]} Y{first.points[0][1]} E{first.deposits[0]:.5f}" in layer_1


def test_large_corpus_alignment_rate(tmp_path):
    pairs = [_write_pair(tmp_path, 1000 + seed, n_layers=50, duplicate_rate=0.01) for seed in range(20)]
    sink = ListRecordSink()
    report = CorpusService(max_length=20).build_corpus(pairs, sink)

    assert report.files == 20
    assert report.files_skipped == 0
    assert report.layers_total == 1000
    assert report.alignment_rate >= 0.999
    assert report.chunks_emitted == len(sink.records)
    assert all(r["source_text"].count("\n") < 20 and r["target_text"].count("\n") < 20 for r in sink.records)


# ==================== REJETS ====================

def test_layer_count_mismatch_skips_pair():
    part = make_part(15, n_layers=10)
    shorter = copy.deepcopy(part)
    shorter.layers.pop()
    source, target = _pair(15, part=part, target_part=shorter)

    records, report = CorpusService().align_parsed(source, target)
    assert records == []
    assert report.files_skipped == 1
    assert report.file_rejection_reasons == {"layer_count_mismatch": 1}
    assert report.layers_total == 0


def test_z_mismatch_rejects_one_layer():
    part = make_part(16, n_layers=10)
    moved = copy.deepcopy(part)
    moved.layers[3].z = "9.999"
    source, target = _pair(16, part=part, target_part=moved)

    records, report = CorpusService().align_parsed(source, target)
    assert report.layers_aligned == 9
    assert report.rejection_reasons == {"z_mismatch": 1}
    assert 3 not in _by_layer(records)


def test_missing_contour_rejects_layer():
    part = make_part(17, n_layers=10)
    trimmed = copy.deepcopy(part)
    trimmed.layers[2].contours.pop()
    source, target = _pair(17, part=part, target_part=trimmed)

    _, report = CorpusService().align_parsed(source, target)
    assert report.layers_aligned == 9
    assert report.rejection_reasons == {"incomplete_mapping": 1}
    assert report.layers_aligned + report.layers_rejected == report.layers_total


def test_firmware_relative_mode_skips_pair():
    source, target = _pair(18, n_layers=2)
    target = parse_file("M83\n" + target.to_text(), Flavor.MARLIN)
    _, report = CorpusService().align_parsed(source, target)
    assert report.file_rejection_reasons == {"relative_extrusion_mode": 1}


def test_unreadable_file_skips_pair(tmp_path):
    path_a, _ = _write_pair(tmp_path, 19, n_layers=2)
    report = CorpusService().build_corpus([(path_a, tmp_path / "missing.gcode")], ListRecordSink())
    assert report.file_rejection_reasons == {"unreadable_file": 1}
    assert report.files == 1


def test_max_length_too_small():
    with pytest.raises(MaxLengthTooSmall):
        CorpusService(max_length=1)


# ==================== SORTIE ====================

def test_output_is_deterministic(tmp_path):
    pairs = [_write_pair(tmp_path, 20 + seed, n_layers=4) for seed in range(3)]

    outputs = []
    for _ in range(2):
        stream = io.StringIO()
        with JsonlRecordSink(stream) as sink:
            build_corpus(pairs, 12, sink)
        outputs.append(stream.getvalue())
    assert outputs[0] == outputs[1]

    records = [json.loads(line) for line in outputs[0].splitlines()]
    assert list(records[0]) == [
        "source_file", "target_file", "layer_index", "chunk_index", "source_text", "target_text", "flavors",
    ]
    rank = {str(a): i for i, (a, _) in enumerate(pairs)}
    order = [(rank[r["source_file"]], r["layer_index"], r["chunk_index"]) for r in records]
    assert order == sorted(order)


def test_report_merge_and_dict():
    report = CorpusReport()
    partial = CorpusReport(files=1)
    partial.accept_layer(3)
    partial.reject_layer("no_cut_found")
    partial.reject_layer("empty_layer")
    report.merge(partial)
    report.merge(partial)

    data = report.to_dict()
    assert data["files"] == 2
    assert data["layers_total"] == 6
    assert data["chunks_emitted"] == 6
    assert data["rejection_reasons"] == {"empty_layer": 2, "no_cut_found": 2}
    assert data["alignment_rate"] == pytest.approx(1 / 3, abs=1e-6)


def test_empty_report_rate():
    assert CorpusReport().alignment_rate == 0.0


# ==================== MANIFESTE ====================

def test_parse_manifest(tmp_path):
    text = "# source\tcible\n\na.gcode\tb.gcode\n/abs/c.gcode\td.gcode\n"
    pairs = parse_manifest(text, base_dir=tmp_path)
    assert pairs == [
        (tmp_path / "a.gcode", tmp_path / "b.gcode"),
        (Path("/abs/c.gcode"), tmp_path / "d.gcode"),
    ]


@pytest.mark.parametrize("line", ["only_one.gcode", "a\tb\tc", "a\t"])
def test_manifest_rejects_bad_lines(line):
    with pytest.raises(ManifestError):
        parse_manifest(line)


def test_read_manifest_missing(tmp_path):
    with pytest.raises(ManifestError):
        read_manifest(tmp_path / "absent.tsv")


# ==================== INFÉRENCE ====================

def test_inference_chunks_cover_source():
    source, _ = _pair(21, n_layers=4)
    service = CorpusService(max_length=20)
    chunks = service.inference_chunks(source, size=7)
    split = service.prepare(source)

    for index, records in _by_layer(chunks).items():
        assert "\n".join(r["source_text"] for r in records) == serialize(split.layers[index].lines)
        assert all(len(r["source_text"].splitlines()) <= 7 for r in records)
    assert chunks[0]["flavor"] == "sailfish"
