# core/transforms.py
"""
Transformations géométriques d'une couche (vérité terrain pour les tâches
d'édition de G-code, ex: "agrandir cette couche de 20 %").
"""

from __future__ import annotations

from copy import copy
from decimal import Decimal
from typing import List, Optional, Sequence, Tuple, Union

from core.gcode import GcodeLine, LineKind, NumberFormat, replace_params, to_fixed
from extrusion.relative import ExtrusionState, detect_extrusion_format, to_absolute, to_relative
from utils.logging_config import logger


XY_AXES = ("X", "Y")


def extrusion_centroid(lines: Sequence[GcodeLine]) -> Optional[Tuple[Decimal, Decimal]]:
    """Barycentre des points d'arrivée des mouvements d'extrusion (position modale)."""
    x: Optional[Decimal] = None
    y: Optional[Decimal] = None
    points: List[Tuple[Decimal, Decimal]] = []
    for line in lines:
        if not line.is_motion:
            continue
        x = line.value("X") if "X" in line.params else x
        y = line.value("Y") if "Y" in line.params else y
        if line.kind is LineKind.EXTRUDING_MOVE and x is not None and y is not None:
            points.append((x, y))
    if not points:
        return None
    count = Decimal(len(points))
    return (
        to_fixed(sum((p[0] for p in points), Decimal(0)) / count),
        to_fixed(sum((p[1] for p in points), Decimal(0)) / count),
    )


def scale_layer(
    lines: Sequence[GcodeLine],
    factor: Union[Decimal, float, str],
    center: Optional[Tuple[Decimal, Decimal]] = None,
    state: Optional[ExtrusionState] = None,
) -> List[GcodeLine]:
    """
    Homothétie XY d'une suite de lignes (E absolu en entrée comme en sortie).

    X/Y de chaque mouvement sont mis à l'échelle autour de `center` ; l'E
    relatif de chaque mouvement d'extrusion est multiplié par le même facteur,
    la longueur déposée variant linéairement. Z et les rétractions sont
    inchangés.

    Args:
        lines: Lignes de la couche, E cumulé
        factor: Facteur d'échelle (> 0)
        center: Centre de l'homothétie (défaut: barycentre des extrusions)
        state: E cumulé avant la première ligne (défaut: 0)

    Returns:
        Les lignes transformées

    Raises:
        ValueError: factor <= 0
    """
    factor = Decimal(str(factor))
    if factor <= 0:
        raise ValueError(f"le facteur d'échelle doit être > 0 (reçu {factor})")

    lines = list(lines)
    e_format = detect_extrusion_format(lines)
    xy_format = NumberFormat.detect(
        line.params[axis].text for line in lines if line.is_motion for axis in XY_AXES if axis in line.params
    )
    start = state if state is not None else ExtrusionState()

    relative = to_relative(lines, e_format, copy(start))
    if center is None:
        center = extrusion_centroid(relative)
    if center is None:
        logger.debug("[Transform] Aucune extrusion : homothétie autour de l'origine")
        center = (Decimal(0), Decimal(0))

    scaled: List[GcodeLine] = []
    for line in relative:
        if not line.is_motion or line.diagnostic is not None:
            scaled.append(line)
            continue
        updates = {}
        for axis, origin in zip(XY_AXES, center):
            if axis in line.params:
                updates[axis] = xy_format.render(origin + (line.value(axis) - origin) * factor)
        if line.kind is LineKind.EXTRUDING_MOVE:
            updates["E"] = e_format.render(line.value("E") * factor)
        scaled.append(replace_params(line, updates))

    return to_absolute(scaled, e_format, copy(start))
