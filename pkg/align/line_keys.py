# align/line_keys.py
"""
Représentation canonique d'une ligne pour l'appariement entre dialectes.

Seuls les mouvements d'extrusion ont une clé : leurs coordonnées (texte
verbatim de X/Y/Z) suivies de celles des deux extrusions suivantes du même
contour, ou d'un jeton <EMPTY> à leur place.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

from core.gcode import GcodeLine, LineKind
from core.segmentation import Contour


EMPTY_TOKEN = "<EMPTY>"
KEY_AXES = ("X", "Y", "Z")
KEY_SEPARATOR = "|"
LOOKAHEAD = 2


@dataclass(frozen=True)
class LineKey:
    key: str

    def __str__(self) -> str:
        return self.key


def coordinate_group(line: GcodeLine) -> str:
    """Ex: "X10.5 Y3.25" (Z ajouté s'il est présent sur la ligne)."""
    return " ".join(f"{axis}{line.params[axis].text}" for axis in KEY_AXES if axis in line.params)


def _key_at(lines: Sequence[GcodeLine], groups: Sequence[Optional[str]], i: int) -> Optional[LineKey]:
    if groups[i] is None:
        return None
    parts = [groups[i]]
    for offset in range(1, LOOKAHEAD + 1):
        j = i + offset
        # Une suite d'extrusions est contiguë : la première non-extrusion clôt la fenêtre
        if j < len(lines) and groups[j] is not None and all(groups[k] is not None for k in range(i + 1, j)):
            parts.append(groups[j])
        else:
            parts.append(EMPTY_TOKEN)
    return LineKey(KEY_SEPARATOR.join(parts))


def _groups(lines: Sequence[GcodeLine]) -> List[Optional[str]]:
    return [coordinate_group(line) if line.kind is LineKind.EXTRUDING_MOVE else None for line in lines]


def line_key(contour: Contour, i: int) -> Optional[LineKey]:
    """
    Clé de la ligne i d'un contour.

    Returns:
        LineKey pour un mouvement d'extrusion, None pour toute autre ligne

    Raises:
        IndexError: si i n'indexe pas contour.lines
    """
    if not 0 <= i < len(contour.lines):
        raise IndexError(f"ligne {i} hors du contour ({len(contour.lines)} lignes)")
    return _key_at(contour.lines, _groups(contour.lines), i)


def contour_keys(contour: Contour) -> List[Optional[LineKey]]:
    """Clés de toutes les lignes d'un contour, dans l'ordre."""
    groups = _groups(contour.lines)
    return [_key_at(contour.lines, groups, i) for i in range(len(contour.lines))]


def layer_keys(contours: Sequence[Contour]) -> List[Optional[LineKey]]:
    """Clés ligne à ligne d'une couche, calculées dans les limites de chaque contour."""
    keys: List[Optional[LineKey]] = []
    for contour in contours:
        keys.extend(contour_keys(contour))
    return keys
