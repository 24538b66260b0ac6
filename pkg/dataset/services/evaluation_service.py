# dataset/services/evaluation_service.py
"""
Service d'évaluation d'une traduction : rendu des couches prédites et de
référence, IoU couche par couche, puis IOU@k.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from core.errors import LayerCountMismatch, UnknownStartPosition
from core.gcode import Flavor, GcodeLine, load_file
from core.segmentation import Layer, split_layers
from extrusion.relative import to_absolute
from raster.metrics import DEFAULT_THRESHOLDS, iou, iou_table
from raster.renderer import Point, RasterConfig, rasterize_segments, trace_layer
from utils.logging_config import logger


@dataclass(frozen=True)
class EvaluationResult:
    """IoU par couche et tableau IOU@k (pourcentages)."""

    ious: List[float]
    metrics: Dict[str, float]
    unrenderable: List[int]

    @property
    def layers(self) -> int:
        return len(self.ious)

    def to_dict(self) -> Dict:
        return {
            "layers": self.layers,
            "ious": [round(value, 6) for value in self.ious],
            "metrics": {label: round(value, 4) for label, value in self.metrics.items()},
            "unrenderable_layers": list(self.unrenderable),
        }


def _relayer(layers: Sequence[Layer], lines: Sequence[GcodeLine]) -> List[Layer]:
    """Redécoupe une suite de lignes selon les longueurs des couches d'origine."""
    rebuilt: List[Layer] = []
    offset = 0
    for layer in layers:
        rebuilt.append(layer.with_lines(lines[offset:offset + len(layer.lines)]))
        offset += len(layer.lines)
    return rebuilt


class EvaluationService:
    """Calcule les métriques image d'une traduction de G-code."""

    def __init__(self, raster: Optional[RasterConfig] = None, thresholds: Sequence[float] = DEFAULT_THRESHOLDS):
        if len(thresholds) == 0:
            raise ValueError("au moins un seuil IOU@k est requis")
        self.raster = raster or RasterConfig()
        self.thresholds = tuple(thresholds)

    def evaluate_translation(
        self,
        predicted: Sequence[Layer],
        reference: Sequence[Layer],
        predicted_relative: bool = False,
        predicted_start: Optional[Point] = None,
        reference_start: Optional[Point] = None,
    ) -> EvaluationResult:
        """
        Compare deux suites de couches dans l'image.

        La position XY est reportée d'une couche à la suivante. Une couche
        prédite impossible à rendre compte pour un IoU de 0.

        Args:
            predicted: Couches produites par le modèle
            reference: Couches de vérité terrain (E absolu)
            predicted_relative: True si les couches prédites sont en extrusion relative
            predicted_start: Position XY avant la première couche prédite
            reference_start: Position XY avant la première couche de référence

        Returns:
            EvaluationResult

        Raises:
            LayerCountMismatch: nombres de couches différents
            UnknownStartPosition: une couche de référence ne peut pas être rendue
            RelativeExtrusionMode: M83 dans une prédiction relative
        """
        if len(predicted) != len(reference):
            raise LayerCountMismatch(f"{len(predicted)} couche(s) prédite(s) pour {len(reference)} de référence")

        if predicted_relative:
            lines = to_absolute([line for layer in predicted for line in layer.lines])
            predicted = _relayer(predicted, lines)

        ious: List[float] = []
        unrenderable: List[int] = []
        position_p, position_r = predicted_start, reference_start

        for layer_p, layer_r in zip(predicted, reference):
            segments_r, position_r = trace_layer(layer_r.lines, position_r)
            raster_r = rasterize_segments(segments_r, self.raster)

            try:
                segments_p, position_p = trace_layer(layer_p.lines, position_p)
            except UnknownStartPosition as e:
                logger.warning(f"[Eval] Couche prédite {layer_p.index} non rendue ({e.reason}) : {e}")
                unrenderable.append(layer_p.index)
                ious.append(0.0)
                continue

            ious.append(iou(rasterize_segments(segments_p, self.raster), raster_r))

        metrics = iou_table(ious, self.thresholds) if ious else {}
        logger.info(f"[Eval] {len(ious)} couche(s) comparée(s) : {metrics}")
        return EvaluationResult(ious=ious, metrics=metrics, unrenderable=unrenderable)

    def evaluate_files(
        self,
        predicted_path: Path,
        reference_path: Path,
        flavor: Flavor = Flavor.MARLIN,
        predicted_relative: bool = False,
        markers: Optional[Sequence[str]] = None,
    ) -> EvaluationResult:
        """
        Évalue un fichier prédit contre sa référence (même dialecte).

        Les en-têtes sont parcourus pour connaître la position de départ de la
        première couche.
        """
        parsed_p = load_file(predicted_path, flavor, markers)
        parsed_r = load_file(reference_path, flavor, markers)

        lines_p = to_absolute(parsed_p.lines) if predicted_relative else list(parsed_p.lines)
        split_p = split_layers(lines_p)
        split_r = split_layers(parsed_r.lines)

        _, start_p = trace_layer(split_p.header)
        _, start_r = trace_layer(split_r.header)
        return self.evaluate_translation(
            split_p.layers,
            split_r.layers,
            predicted_start=start_p,
            reference_start=start_r,
        )


def evaluate_translation(
    predicted: Sequence[Layer],
    reference: Sequence[Layer],
    cfg: Optional[RasterConfig] = None,
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
    predicted_relative: bool = False,
) -> EvaluationResult:
    """Raccourci : EvaluationService(cfg, thresholds).evaluate_translation(...)."""
    return EvaluationService(cfg, thresholds).evaluate_translation(predicted, reference, predicted_relative)
