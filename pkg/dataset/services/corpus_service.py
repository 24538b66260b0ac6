# dataset/services/corpus_service.py
"""
Service de construction du corpus de paires (Sailfish -> Marlin).

Chaque fichier est converti en extrusion relative en entier, puis découpé en
couches. Les couches sont appariées par index : contour_flip puis
pair_creation ; une erreur sur une couche la rejette sans arrêter le fichier.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from decimal import Decimal
from pathlib import Path
from typing import Iterable, List, Optional, Protocol, Sequence, Tuple

from align.contour_flip import contour_flip, flipped_layer
from align.pair_creation import ChunkPair, fixed_chunks, pair_creation
from core.errors import (
    EmptyLayer,
    GcodePairError,
    LayerCountMismatch,
    MaxLengthTooSmall,
    ZMismatch,
)
from core.gcode import DEFAULT_LAYER_MARKERS, Flavor, ParsedFile, load_file, serialize
from core.segmentation import Layer, LayerSplit, split_contours, split_layers
from dataset.records import ChunkRecord, CorpusReport, PairRecord, Record
from extrusion.relative import to_relative
from utils.logging_config import logger


class RecordSink(Protocol):
    def write(self, record: Record) -> None: ...


def chunk_text(lines: Sequence) -> str:
    return serialize(lines)


class CorpusService:
    """Service d'alignement de paires de fichiers et d'émission des enregistrements."""

    def __init__(
        self,
        max_length: int = 20,
        z_tolerance: float = 0.001,
        source_flavor: Flavor = Flavor.SAILFISH,
        target_flavor: Flavor = Flavor.MARLIN,
        source_markers: Optional[Sequence[str]] = None,
        target_markers: Optional[Sequence[str]] = None,
        workers: int = 1,
    ):
        if max_length < 2:
            raise MaxLengthTooSmall(f"maxLength doit être >= 2 (reçu {max_length})")
        self.max_length = max_length
        self.z_tolerance = Decimal(str(z_tolerance))
        self.source_flavor = source_flavor
        self.target_flavor = target_flavor
        self.source_markers = tuple(source_markers) if source_markers is not None else DEFAULT_LAYER_MARKERS[source_flavor]
        self.target_markers = tuple(target_markers) if target_markers is not None else DEFAULT_LAYER_MARKERS[target_flavor]
        self.workers = max(1, workers)

    # ==================== PRÉPARATION ====================

    @staticmethod
    def prepare(parsed: ParsedFile) -> LayerSplit:
        """
        Fichier en extrusion relative, découpé en couches.

        Raises:
            RelativeExtrusionMode: le fichier contient un M83
            NoLayersFound: ni marqueur ni extrusion
        """
        return split_layers(to_relative(parsed.lines))

    # ==================== COUCHES ====================

    def align_layer(self, layer_a: Layer, layer_b: Layer) -> Tuple[Layer, List[ChunkPair]]:
        """
        Aligne deux couches de même index.

        Returns:
            (couche B réordonnée, paires de segments)

        Raises:
            ZMismatch, EmptyLayer, ConflictingMapping, IncompleteMapping, NoCutFound
        """
        if layer_a.z is not None and layer_b.z is not None and abs(layer_a.z - layer_b.z) > self.z_tolerance:
            raise ZMismatch(f"couche {layer_a.index} : Z={layer_a.z} contre Z={layer_b.z}")

        contours_a = split_contours(layer_a)
        contours_b = split_contours(layer_b)
        if not contours_a or not contours_b:
            raise EmptyLayer(f"couche {layer_a.index} sans extrusion (A={len(contours_a)}, B={len(contours_b)} contours)")

        mapping, flipped = contour_flip(contours_a, contours_b)
        mapping.require_complete()

        layer_b_flipped = flipped_layer(layer_b, flipped)
        pairs = pair_creation(layer_a, layer_b_flipped, self.max_length, contours_a, flipped)
        return layer_b_flipped, pairs

    # ==================== FICHIERS ====================

    def align_parsed(self, parsed_a: ParsedFile, parsed_b: ParsedFile) -> Tuple[List[PairRecord], CorpusReport]:
        """
        Aligne une paire de fichiers déjà analysés.

        Les erreurs de couche deviennent des rejets ; une erreur de fichier
        (nombre de couches, M83, aucune couche) ignore toute la paire.

        Returns:
            (enregistrements dans l'ordre (couche, segment), rapport partiel)
        """
        report = CorpusReport(files=1)
        source_name = parsed_a.source or "<source>"
        target_name = parsed_b.source or "<cible>"

        try:
            split_a = self.prepare(parsed_a)
            split_b = self.prepare(parsed_b)
            if len(split_a.layers) != len(split_b.layers):
                raise LayerCountMismatch(
                    f"{len(split_a.layers)} couche(s) dans {source_name}, {len(split_b.layers)} dans {target_name}"
                )
        except GcodePairError as e:
            logger.warning(f"[Corpus] Paire ignorée {source_name} / {target_name} ({e.reason}) : {e}")
            report.skip_file(e.reason)
            return [], report

        records: List[PairRecord] = []
        for layer_a, layer_b in zip(split_a.layers, split_b.layers):
            try:
                _, pairs = self.align_layer(layer_a, layer_b)
            except GcodePairError as e:
                logger.warning(f"[Corpus] {source_name} couche {layer_a.index} rejetée ({e.reason}) : {e}")
                report.reject_layer(e.reason)
                continue

            for chunk_index, pair in enumerate(pairs):
                records.append(PairRecord(
                    source_file=source_name,
                    target_file=target_name,
                    layer_index=layer_a.index,
                    chunk_index=chunk_index,
                    source_text=chunk_text(pair.a),
                    target_text=chunk_text(pair.b),
                    flavors=[self.source_flavor.value, self.target_flavor.value],
                ))
            report.accept_layer(len(pairs))

        logger.info(
            f"[Corpus] {source_name} : {report.layers_aligned}/{report.layers_total} couche(s) alignée(s), "
            f"{report.chunks_emitted} segment(s)"
        )
        return records, report

    def align_paths(self, path_a: Path, path_b: Path) -> Tuple[List[PairRecord], CorpusReport]:
        """Lit puis aligne une paire de fichiers ; un fichier illisible ignore la paire."""
        try:
            parsed_a = load_file(path_a, self.source_flavor, self.source_markers)
            parsed_b = load_file(path_b, self.target_flavor, self.target_markers)
        except (OSError, UnicodeDecodeError) as e:
            logger.warning(f"[Corpus] Paire ignorée {path_a} / {path_b} : fichier illisible ({e})")
            report = CorpusReport(files=1)
            report.skip_file("unreadable_file")
            return [], report
        return self.align_parsed(parsed_a, parsed_b)

    def build_corpus(self, pairs: Iterable[Tuple[Path, Path]], sink: RecordSink) -> CorpusReport:
        """
        Aligne toutes les paires et écrit les enregistrements.

        L'ordre de sortie est (fichier, couche, segment) quel que soit le
        nombre de workers ; le sink n'est appelé que depuis ce processus.

        Args:
            pairs: (fichier Sailfish, fichier Marlin)
            sink: Destination des PairRecord

        Returns:
            Le CorpusReport cumulé
        """
        pairs = [(Path(a), Path(b)) for a, b in pairs]
        report = CorpusReport()

        if self.workers > 1 and len(pairs) > 1:
            logger.info(f"[Corpus] {len(pairs)} paire(s) sur {self.workers} worker(s)")
            with ProcessPoolExecutor(max_workers=self.workers) as executor:
                results = executor.map(_align_job, [(self, a, b) for a, b in pairs])
                for records, partial in results:
                    for record in records:
                        sink.write(record)
                    report.merge(partial)
        else:
            for path_a, path_b in pairs:
                records, partial = self.align_paths(path_a, path_b)
                for record in records:
                    sink.write(record)
                report.merge(partial)

        logger.info(
            f"[Corpus] Terminé : {report.layers_aligned}/{report.layers_total} couche(s) "
            f"({report.alignment_rate:.2%}), {report.chunks_emitted} segment(s), "
            f"{report.files_skipped} paire(s) ignorée(s)"
        )
        return report

    # ==================== INFÉRENCE ====================

    def inference_chunks(self, parsed: ParsedFile, size: Optional[int] = None) -> List[ChunkRecord]:
        """
        Découpe fixe d'un fichier source (extrusion relative), couche par couche.

        Args:
            parsed: Fichier à traduire
            size: Lignes par segment (défaut: max_length)

        Raises:
            RelativeExtrusionMode, NoLayersFound
        """
        size = size or self.max_length
        split = self.prepare(parsed)
        source_name = parsed.source or "<source>"

        records: List[ChunkRecord] = []
        for layer in split.layers:
            for chunk_index, chunk in enumerate(fixed_chunks(layer, size)):
                records.append(ChunkRecord(
                    source_file=source_name,
                    layer_index=layer.index,
                    chunk_index=chunk_index,
                    source_text=chunk_text(chunk),
                    flavor=parsed.flavor.value,
                ))
        logger.info(f"[Corpus] {source_name} : {len(records)} segment(s) d'inférence de {size} ligne(s) max")
        return records


def _align_job(job: Tuple[CorpusService, Path, Path]) -> Tuple[List[PairRecord], CorpusReport]:
    service, path_a, path_b = job
    return service.align_paths(path_a, path_b)


def build_corpus(
    pairs: Iterable[Tuple[Path, Path]],
    max_length: int,
    out: RecordSink,
    **options,
) -> CorpusReport:
    """Raccourci : CorpusService(max_length, **options).build_corpus(pairs, out)."""
    return CorpusService(max_length=max_length, **options).build_corpus(pairs, out)
