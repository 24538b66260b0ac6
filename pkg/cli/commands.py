# cli/commands.py
"""
Commandes de la ligne de commande : une fonction cmd_* par sous-commande.

Les données (JSON, G-code, enregistrements) sortent sur stdout ou dans les
fichiers demandés ; les diagnostics passent par le logger (stderr).
"""

from __future__ import annotations

import argparse
import json
import sys
from collections import Counter
from contextlib import contextmanager
from decimal import Decimal, InvalidOperation
from enum import IntEnum
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional, TextIO, Tuple

from config import ToolkitConfig, parse_float_list
from core.errors import NoLayersFound
from core.gcode import Flavor, LineKind, NumberFormat, ParsedFile, load_file, serialize
from core.segmentation import split_contours, split_layers
from core.transforms import scale_layer
from dataset.records import JsonlRecordSink, read_manifest
from dataset.services.corpus_service import CorpusService
from dataset.services.evaluation_service import EvaluationService
from extrusion.relative import (
    ExtrusionState,
    detect_extrusion_format,
    format_marker,
    read_format_marker,
    to_absolute,
    to_relative,
)
from raster.export import layer_filename, render_iou_chart, render_preview_png, write_pgm
from raster.renderer import RasterConfig, rasterize_segments, trace_layer
from cli.formatters import format_ious, format_metrics, format_report, format_summary
from utils.logging_config import logger


class ExitStatus(IntEnum):
    SUCCESS = 0
    USAGE = 1
    REJECTED = 2
    INTERNAL = 3


class UsageError(Exception):
    """Argument invalide : code de sortie 1."""


class ToolkitArgumentParser(argparse.ArgumentParser):
    """argparse sort en code 2 sur erreur d'usage ; ici l'erreur remonte en UsageError."""

    def error(self, message: str):
        raise UsageError(message)


Handler = Callable[[argparse.Namespace, ToolkitConfig], ExitStatus]


# ==================== UTILITAIRES ====================

def _flavor(args: argparse.Namespace, attribute: str = "flavor") -> Flavor:
    return Flavor.parse(getattr(args, attribute))


def _load(path: Path, flavor: Flavor, cfg: ToolkitConfig) -> ParsedFile:
    return load_file(path, flavor, cfg.parser.markers_for(flavor))


def _raster_config(args: argparse.Namespace, cfg: ToolkitConfig) -> RasterConfig:
    resolution = args.resolution if args.resolution is not None else cfg.raster.resolution
    bead_width = args.bead_width if args.bead_width is not None else cfg.raster.bead_width
    try:
        return RasterConfig(resolution=resolution, bead_width=bead_width)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _layer_selection(value: str) -> Optional[int]:
    """"all" -> None, sinon un index de couche >= 0."""
    if value == "all":
        return None
    try:
        index = int(value)
    except ValueError:
        raise UsageError(f"--layer attend un index ou 'all' (reçu {value!r})") from None
    if index < 0:
        raise UsageError(f"--layer doit être >= 0 (reçu {index})")
    return index


def _emit(data: Dict, pretty: bool, formatter: Callable[[Dict], str], stream: Optional[TextIO] = None) -> None:
    stream = stream or sys.stdout
    if pretty:
        stream.write(formatter(data) + "\n")
    else:
        stream.write(json.dumps(data, ensure_ascii=False, indent=2) + "\n")


@contextmanager
def _output(path: Optional[Path]) -> Iterator[TextIO]:
    """Fichier demandé, sinon stdout (jamais fermé)."""
    if path is None:
        yield sys.stdout
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        yield f


# ==================== COMMANDES ====================

def cmd_parse(args: argparse.Namespace, cfg: ToolkitConfig) -> ExitStatus:
    """Résumé structurel d'un fichier : couches, contours, lignes par type."""
    flavor = _flavor(args)
    parsed = _load(args.path, flavor, cfg)

    counts = Counter(line.kind for line in parsed.lines)
    kinds = {kind.value: counts.get(kind, 0) for kind in LineKind}

    try:
        split = split_layers(parsed.lines)
        layers, header, footer = split.layers, len(split.header), len(split.footer)
    except NoLayersFound:
        logger.info(f"[CLI] {args.path} : aucune couche")
        layers, header, footer = (), len(parsed.lines), 0

    details = []
    for layer in layers:
        details.append({
            "index": layer.index,
            "z": str(layer.z) if layer.z is not None else None,
            "lines": len(layer.lines),
            "contours": len(split_contours(layer)),
        })

    summary = {
        "file": str(args.path),
        "flavor": flavor.value,
        "lines": len(parsed.lines),
        "kinds": kinds,
        "layers": len(layers),
        "contours": sum(d["contours"] for d in details),
        "header_lines": header,
        "footer_lines": footer,
        "diagnostics": len(parsed.diagnostics),
        "layer_details": details,
    }
    _emit(summary, args.pretty, format_summary)
    return ExitStatus.SUCCESS


def cmd_align(args: argparse.Namespace, cfg: ToolkitConfig) -> ExitStatus:
    """Construit le corpus de paires de segments à partir d'une paire ou d'un manifeste."""
    if args.manifest is not None:
        if args.path_a is not None or args.path_b is not None:
            raise UsageError("--manifest et des chemins positionnels sont exclusifs")
        pairs: List[Tuple[Path, Path]] = read_manifest(args.manifest)
    elif args.path_a is not None and args.path_b is not None:
        pairs = [(args.path_a, args.path_b)]
    else:
        raise UsageError("align attend deux fichiers ou --manifest")

    max_length = args.max_length if args.max_length is not None else cfg.align.max_length
    if max_length < 2:
        raise UsageError(f"--max-length doit être >= 2 (reçu {max_length})")
    workers = args.workers if args.workers is not None else cfg.align.workers
    if workers < 1:
        raise UsageError(f"--workers doit être >= 1 (reçu {workers})")

    source_flavor, target_flavor = _flavor(args, "source_flavor"), _flavor(args, "target_flavor")
    service = CorpusService(
        max_length=max_length,
        z_tolerance=cfg.align.z_tolerance,
        source_flavor=source_flavor,
        target_flavor=target_flavor,
        source_markers=cfg.parser.markers_for(source_flavor),
        target_markers=cfg.parser.markers_for(target_flavor),
        workers=workers,
    )

    with _output(args.out) as stream, JsonlRecordSink(stream) as sink:
        report = service.build_corpus(pairs, sink)

    # Rapport : --report, sinon stdout si les enregistrements vont dans --out, sinon stderr
    if args.report is not None:
        with _output(args.report) as stream:
            _emit(report.to_dict(), args.pretty, format_report, stream)
    else:
        _emit(report.to_dict(), args.pretty, format_report, sys.stdout if args.out is not None else sys.stderr)

    if report.files > 0 and report.files_skipped == report.files:
        logger.error(f"[CLI] Aucune paire de fichiers exploitable : {report.file_rejection_reasons}")
        return ExitStatus.REJECTED
    return ExitStatus.SUCCESS


def cmd_render(args: argparse.Namespace, cfg: ToolkitConfig) -> ExitStatus:
    """Rend une couche (ou toutes) en PGM, avec aperçu PNG optionnel."""
    raster_cfg = _raster_config(args, cfg)
    selected = _layer_selection(args.layer)
    parsed = _load(args.path, _flavor(args), cfg)
    split = split_layers(parsed.lines)

    if selected is not None and selected >= len(split.layers):
        raise UsageError(f"--layer {selected} : le fichier a {len(split.layers)} couche(s)")

    stem = Path(args.path).stem
    written: List[str] = []
    empty: List[int] = []

    # La position de départ d'une couche dépend de toutes les précédentes
    _, position = trace_layer(split.header)
    for layer in split.layers:
        segments, end = trace_layer(layer.lines, position)
        position = end if end is not None else position
        if selected is not None and layer.index != selected:
            continue

        raster = rasterize_segments(segments, raster_cfg)
        path = write_pgm(raster, args.out_dir / layer_filename(stem, layer.index))
        if path is None:
            empty.append(layer.index)
            continue
        written.append(str(path))

        if args.png:
            preview = render_preview_png(raster, title=f"{stem} - couche {layer.index}")
            png_path = args.out_dir / layer_filename(stem, layer.index, ".png")
            png_path.write_bytes(preview.getvalue())
            written.append(str(png_path))

    logger.info(f"[CLI] {len(written)} fichier(s) écrit(s) dans {args.out_dir}")
    _emit({"files": written, "empty_layers": empty}, False, str)
    return ExitStatus.SUCCESS


def cmd_iou(args: argparse.Namespace, cfg: ToolkitConfig) -> ExitStatus:
    """IoU couche par couche d'un fichier prédit contre sa référence, puis IOU@k."""
    if args.thresholds is not None:
        try:
            thresholds = parse_float_list(args.thresholds)
        except ValueError:
            raise UsageError(f"--thresholds illisible : {args.thresholds!r}") from None
    else:
        thresholds = cfg.raster.thresholds
    if not thresholds:
        raise UsageError("--thresholds : liste vide")
    if any(not 0.0 <= k <= 1.0 for k in thresholds):
        raise UsageError(f"--thresholds : seuils hors de [0, 1] ({thresholds})")

    flavor = _flavor(args)
    service = EvaluationService(_raster_config(args, cfg), thresholds)
    result = service.evaluate_files(
        args.predicted,
        args.reference,
        flavor=flavor,
        predicted_relative=args.predicted_relative,
        markers=cfg.parser.markers_for(flavor),
    )

    _emit(result.to_dict(), args.pretty, lambda data: format_metrics(data["metrics"]) + "\n\n" + format_ious(result.ious))

    if args.chart is not None:
        chart = render_iou_chart(result.ious)
        if chart is not None:
            args.chart.parent.mkdir(parents=True, exist_ok=True)
            args.chart.write_bytes(chart.getvalue())
    return ExitStatus.SUCCESS


def cmd_extrude(args: argparse.Namespace, cfg: ToolkitConfig) -> ExitStatus:
    """
    Convertit un fichier en extrusion relative (ou l'inverse) sur stdout.

    Le flux relatif commence par une ligne ;E_FORMAT: qui garde le style des E
    absolus ; --to-absolute la relit et la retire.
    """
    fmt: Optional[NumberFormat] = cfg.parser.e_format
    if args.e_format is not None:
        try:
            fmt = NumberFormat.parse(args.e_format)
        except ValueError as e:
            raise UsageError(f"--e-format : {e}") from None

    parsed = _load(args.path, _flavor(args), cfg)
    if args.to_relative:
        fmt = fmt or detect_extrusion_format(parsed.lines)
        lines = to_relative(parsed.lines, fmt)
        sys.stdout.write(format_marker(fmt) + "\n")
    else:
        marked, body = read_format_marker(parsed.lines)
        lines = to_absolute(body, fmt or marked)
    sys.stdout.write(serialize(lines, trailing_newline=parsed.trailing_newline))
    return ExitStatus.SUCCESS


def cmd_chunk(args: argparse.Namespace, cfg: ToolkitConfig) -> ExitStatus:
    """Découpe fixe d'un fichier source pour l'inférence (JSON lines)."""
    size = args.size if args.size is not None else cfg.align.max_length
    if size < 1:
        raise UsageError(f"--size doit être >= 1 (reçu {size})")
    flavor = _flavor(args)
    parsed = _load(args.path, flavor, cfg)
    records = CorpusService(max_length=max(size, 2), source_flavor=flavor).inference_chunks(parsed, size)

    with _output(args.out) as stream, JsonlRecordSink(stream) as sink:
        for record in records:
            sink.write(record)
    return ExitStatus.SUCCESS


def cmd_scale(args: argparse.Namespace, cfg: ToolkitConfig) -> ExitStatus:
    """Homothétie XY d'un fichier (ou d'une couche) sur stdout."""
    try:
        factor = Decimal(args.factor)
    except InvalidOperation:
        raise UsageError(f"--factor illisible : {args.factor!r}") from None
    if not factor > 0:
        raise UsageError(f"--factor doit être > 0 (reçu {factor})")

    center = None
    if args.center is not None:
        try:
            cx, cy = (Decimal(part) for part in args.center.split(","))
        except (ValueError, InvalidOperation):
            raise UsageError(f"--center attend 'x,y' (reçu {args.center!r})") from None
        center = (cx, cy)

    selected = _layer_selection(args.layer)
    parsed = _load(args.path, _flavor(args), cfg)

    if selected is None:
        lines = scale_layer(parsed.lines, factor, center)
        sys.stdout.write(serialize(lines, trailing_newline=parsed.trailing_newline))
        return ExitStatus.SUCCESS

    split = split_layers(parsed.lines)
    if selected >= len(split.layers):
        raise UsageError(f"--layer {selected} : le fichier a {len(split.layers)} couche(s)")
    layer = split.layers[selected]

    # E cumulé au début de la couche
    state = ExtrusionState()
    to_relative(parsed.lines[:layer.start], state=state)
    lines = scale_layer(layer.lines, factor, center, state=state)
    sys.stdout.write(serialize(lines, trailing_newline=True))
    return ExitStatus.SUCCESS


# ==================== PARSER ====================

COMMANDS: Dict[str, Handler] = {
    "parse": cmd_parse,
    "align": cmd_align,
    "render": cmd_render,
    "iou": cmd_iou,
    "extrude": cmd_extrude,
    "chunk": cmd_chunk,
    "scale": cmd_scale,
}

FLAVORS = [flavor.value for flavor in Flavor]
LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]


def _add_flavor(parser: argparse.ArgumentParser, default: str = Flavor.MARLIN.value) -> None:
    parser.add_argument("--flavor", choices=FLAVORS, default=default, help="Dialecte du fichier")


def _add_raster(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--resolution", type=float, default=None, help="mm par pixel (défaut 0.1)")
    parser.add_argument("--bead-width", type=float, default=None, help="Largeur du cordon en mm (défaut 0.4)")


def build_parser() -> ToolkitArgumentParser:
    parser = ToolkitArgumentParser(
        prog="gcodepair",
        description="Analyse, alignement Sailfish/Marlin et évaluation image de fichiers G-code.",
    )
    parser.add_argument("--config", type=Path, default=None, help="Fichier de configuration (.env)")
    parser.add_argument("--log-level", choices=LOG_LEVELS, default=None, help="Niveau de log (stderr)")
    parser.add_argument("--pretty", action="store_true", help="Tableaux texte au lieu du JSON")
    parser.add_argument("--workers", type=int, default=None, help="Processus pour align --manifest")

    sub = parser.add_subparsers(dest="command", required=True)

    # ---------- parse ----------
    p = sub.add_parser("parse", help="Résumé structurel d'un fichier")
    p.add_argument("path", type=Path)
    _add_flavor(p)

    # ---------- align ----------
    p = sub.add_parser("align", help="Paires de segments Sailfish/Marlin (JSON lines)")
    p.add_argument("path_a", type=Path, nargs="?", default=None, help="Fichier source (Sailfish)")
    p.add_argument("path_b", type=Path, nargs="?", default=None, help="Fichier cible (Marlin)")
    p.add_argument("--manifest", type=Path, default=None, help="Paires de chemins séparés par une tabulation")
    p.add_argument("--max-length", type=int, default=None, help="Lignes max par segment (défaut 20)")
    p.add_argument("--out", type=Path, default=None, help="Fichier des enregistrements (défaut stdout)")
    p.add_argument("--report", type=Path, default=None, help="Fichier du rapport JSON")
    p.add_argument("--source-flavor", choices=FLAVORS, default=Flavor.SAILFISH.value)
    p.add_argument("--target-flavor", choices=FLAVORS, default=Flavor.MARLIN.value)

    # ---------- render ----------
    p = sub.add_parser("render", help="Rendu PGM vue de dessus")
    p.add_argument("path", type=Path)
    _add_flavor(p)
    p.add_argument("--layer", default="all", help="Index de couche ou 'all'")
    _add_raster(p)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--png", action="store_true", help="Écrit aussi un aperçu PNG")

    # ---------- iou ----------
    p = sub.add_parser("iou", help="IoU par couche et IOU@k")
    p.add_argument("predicted", type=Path)
    p.add_argument("reference", type=Path)
    _add_flavor(p)
    p.add_argument("--thresholds", default=None, help="Seuils séparés par des virgules (défaut 0.9,0.95,0.98,0.99)")
    p.add_argument("--predicted-relative", action="store_true", help="Le fichier prédit est en extrusion relative")
    p.add_argument("--chart", type=Path, default=None, help="Histogramme PNG des IoU")
    _add_raster(p)

    # ---------- extrude ----------
    p = sub.add_parser("extrude", help="Extrusion absolue <-> relative")
    p.add_argument("path", type=Path)
    _add_flavor(p)
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--to-relative", action="store_true")
    mode.add_argument("--to-absolute", action="store_true")
    p.add_argument("--e-format", default=None, help="Style des E : auto, fixed:N ou trim:N (défaut: détecté)")

    # ---------- chunk ----------
    p = sub.add_parser("chunk", help="Découpe fixe pour l'inférence (JSON lines)")
    p.add_argument("path", type=Path)
    _add_flavor(p, Flavor.SAILFISH.value)
    p.add_argument("--size", type=int, default=None, help="Lignes par segment (défaut 20)")
    p.add_argument("--out", type=Path, default=None)

    # ---------- scale ----------
    p = sub.add_parser("scale", help="Homothétie XY (vérité terrain d'édition)")
    p.add_argument("path", type=Path)
    _add_flavor(p)
    p.add_argument("--factor", required=True)
    p.add_argument("--center", default=None, help="Centre 'x,y' (défaut: barycentre des extrusions)")
    p.add_argument("--layer", default="all", help="Index de couche ou 'all'")

    return parser
