# core/segmentation.py
"""
Découpage hiérarchique d'un fichier : en-tête / couches / pied, puis
chaque couche en contours (suites maximales de mouvements d'extrusion).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from decimal import Decimal
from typing import Iterable, List, Optional, Sequence, Tuple

from core.errors import NoLayersFound
from core.gcode import GcodeLine, LineKind
from utils.logging_config import logger


@dataclass(frozen=True)
class Layer:
    """Une couche : lignes consécutives déposant de la matière à une hauteur Z."""

    index: int
    z: Optional[Decimal]
    lines: Tuple[GcodeLine, ...]
    start: int = 0  # position de la première ligne dans le fichier

    def __len__(self) -> int:
        return len(self.lines)

    def with_lines(self, lines: Iterable[GcodeLine]) -> "Layer":
        return replace(self, lines=tuple(lines))


@dataclass(frozen=True)
class Contour:
    """Suite maximale d'extrusions, précédée des lignes de déplacement/réglage."""

    index: int
    lines: Tuple[GcodeLine, ...]
    start: int = 0  # position dans la couche

    @property
    def extruding_count(self) -> int:
        return sum(1 for line in self.lines if line.kind is LineKind.EXTRUDING_MOVE)


@dataclass(frozen=True)
class LayerSplit:
    """Résultat de split_layers : header + couches + footer == fichier."""

    header: Tuple[GcodeLine, ...]
    layers: Tuple[Layer, ...]
    footer: Tuple[GcodeLine, ...]
    by_markers: bool

    def all_lines(self) -> Tuple[GcodeLine, ...]:
        body = tuple(line for layer in self.layers for line in layer.lines)
        return self.header + body + self.footer


# ==================== COUCHES ====================

def _modal_z(lines: Sequence[GcodeLine]) -> List[Optional[Decimal]]:
    """Hauteur Z courante après chaque ligne."""
    current: Optional[Decimal] = None
    values: List[Optional[Decimal]] = []
    for line in lines:
        if line.is_motion and "Z" in line.params:
            current = line.params["Z"].value
        values.append(current)
    return values


def split_layers(lines: Sequence[GcodeLine]) -> LayerSplit:
    """
    Découpe un fichier en couches.

    Signal principal : les lignes LAYER_MARKER. Sans marqueur, une nouvelle
    couche commence après le dernier mouvement d'extrusion précédant une
    extrusion à un Z différent. Le pied de fichier commence après la dernière
    extrusion.

    Args:
        lines: Lignes de parse_file

    Returns:
        LayerSplit (header, layers, footer)

    Raises:
        NoLayersFound: aucun marqueur et aucune extrusion
    """
    lines = tuple(lines)
    extruding = [i for i, line in enumerate(lines) if line.kind is LineKind.EXTRUDING_MOVE]
    footer_start = extruding[-1] + 1 if extruding else len(lines)
    markers = [i for i in range(footer_start) if lines[i].kind is LineKind.LAYER_MARKER]
    modal_z = _modal_z(lines)

    if markers:
        starts = markers
        by_markers = True
    else:
        if not extruding:
            raise NoLayersFound("ni marqueur de couche ni mouvement d'extrusion")

        first_motion = next(i for i, line in enumerate(lines) if line.is_motion)
        starts = [first_motion]
        current_z = modal_z[extruding[0]]
        previous = extruding[0]
        for i in extruding[1:]:
            if modal_z[i] != current_z:
                starts.append(previous + 1)
                current_z = modal_z[i]
            previous = i
        by_markers = False

    bounds = list(starts) + [footer_start]
    layers: List[Layer] = []
    last_z: Optional[Decimal] = None
    for index, (start, end) in enumerate(zip(bounds, bounds[1:])):
        z = _layer_z(lines, modal_z, start, end)
        if last_z is not None and z is not None and z < last_z:
            logger.warning(f"[Layers] Couche {index} : Z={z} inférieur à la couche précédente ({last_z})")
        last_z = z if z is not None else last_z
        layers.append(Layer(index=index, z=z, lines=lines[start:end], start=start))

    logger.debug(
        f"[Layers] {len(layers)} couche(s) ({'marqueurs' if by_markers else 'heuristique Z'}), "
        f"header={starts[0]} lignes, footer={len(lines) - footer_start} lignes"
    )
    return LayerSplit(
        header=lines[:starts[0]],
        layers=tuple(layers),
        footer=lines[footer_start:],
        by_markers=by_markers,
    )


def _layer_z(lines: Sequence[GcodeLine], modal_z: Sequence[Optional[Decimal]], start: int, end: int) -> Optional[Decimal]:
    """Z de la première extrusion de la couche, sinon Z courant en fin de couche."""
    for i in range(start, end):
        if lines[i].kind is LineKind.EXTRUDING_MOVE:
            return modal_z[i]
    return modal_z[end - 1] if end > start else None


# ==================== CONTOURS ====================

def split_contours(layer: Layer) -> Tuple[Contour, ...]:
    """
    Découpe une couche en contours.

    Un contour est une suite maximale de EXTRUDING_MOVE ; les lignes entre deux
    suites sont préfixées au contour suivant, les lignes de fin de couche
    rattachées au dernier. Une couche sans extrusion donne zéro contour.
    """
    lines = layer.lines
    runs: List[Tuple[int, int]] = []
    run_start: Optional[int] = None
    for i, line in enumerate(lines):
        if line.kind is LineKind.EXTRUDING_MOVE:
            if run_start is None:
                run_start = i
        elif run_start is not None:
            runs.append((run_start, i))
            run_start = None
    if run_start is not None:
        runs.append((run_start, len(lines)))

    if not runs:
        logger.debug(f"[Layers] Couche {layer.index} sans extrusion : aucun contour")
        return ()

    contours: List[Contour] = []
    begin = 0
    for index, (_, run_end) in enumerate(runs):
        end = len(lines) if index == len(runs) - 1 else run_end
        contours.append(Contour(index=index, lines=lines[begin:end], start=begin))
        begin = end
    return tuple(contours)
