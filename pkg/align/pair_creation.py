# align/pair_creation.py
"""
Découpage de deux couches alignées en paires de segments traduisibles.

Découpe gloutonne de gauche à droite : la fin candidate du segment A part de
start + maxLength et recule d'une ligne tant qu'aucune ligne de même clé
n'est trouvée dans les maxLength lignes suivantes de B. Les lignes appariées
ouvrent le segment suivant des deux côtés.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple

from align.line_keys import LineKey, layer_keys
from core.errors import MaxLengthTooSmall, NoCutFound
from core.gcode import GcodeLine
from core.segmentation import Contour, Layer, split_contours
from utils.logging_config import logger


class Span(NamedTuple):
    """Intervalle demi-ouvert [start, end) de lignes d'une couche."""

    start: int
    end: int

    def __len__(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class ChunkPair:
    a: Tuple[GcodeLine, ...]
    b: Tuple[GcodeLine, ...]
    a_span: Span
    b_span: Span


def _find_match(
    key: LineKey,
    keys_b: Sequence[Optional[LineKey]],
    start_j: int,
    max_length: int,
) -> Optional[int]:
    """Première ligne de B de même clé dans (start_j, start_j + maxLength]."""
    last = min(start_j + max_length, len(keys_b) - 1)
    for j in range(start_j + 1, last + 1):
        if keys_b[j] == key:
            return j
    return None


def pair_creation(
    layer_a: Layer,
    layer_b: Layer,
    max_length: int,
    contours_a: Optional[Sequence[Contour]] = None,
    contours_b: Optional[Sequence[Contour]] = None,
) -> List[ChunkPair]:
    """
    Découpe deux couches alignées (B déjà réordonnée) en ChunkPair.

    Args:
        layer_a: Couche A
        layer_b: Couche B, contours dans l'ordre de A
        max_length: Nombre maximal de lignes par segment (>= 2)
        contours_a: Contours de A si déjà calculés (sinon split_contours)
        contours_b: Contours de B si déjà calculés

    Returns:
        Les paires, qui partitionnent les deux couches

    Raises:
        MaxLengthTooSmall: max_length < 2
        NoCutFound: aucune ligne de coupe commune n'a été trouvée
    """
    if max_length < 2:
        raise MaxLengthTooSmall(f"maxLength doit être >= 2 (reçu {max_length})")

    lines_a, lines_b = layer_a.lines, layer_b.lines
    keys_a = layer_keys(contours_a if contours_a is not None else split_contours(layer_a))
    keys_b = layer_keys(contours_b if contours_b is not None else split_contours(layer_b))

    pairs: List[ChunkPair] = []
    start_i, start_j = 0, 0

    while start_i < len(lines_a) or start_j < len(lines_b):
        # Dernier segment : les deux restes tiennent dans maxLength
        if len(lines_a) - start_i <= max_length and len(lines_b) - start_j <= max_length:
            pairs.append(ChunkPair(
                a=lines_a[start_i:],
                b=lines_b[start_j:],
                a_span=Span(start_i, len(lines_a)),
                b_span=Span(start_j, len(lines_b)),
            ))
            break

        end_i = min(start_i + max_length, len(lines_a) - 1)
        end_j: Optional[int] = None
        while end_i > start_i:
            key = keys_a[end_i]
            if key is not None:
                end_j = _find_match(key, keys_b, start_j, max_length)
                if end_j is not None:
                    break
            end_i -= 1

        if end_j is None:
            raise NoCutFound(
                f"couche {layer_a.index} : aucune coupe entre A[{start_i}:{start_i + max_length}] "
                f"et B[{start_j}:{start_j + max_length}]"
            )

        pairs.append(ChunkPair(
            a=lines_a[start_i:end_i],
            b=lines_b[start_j:end_j],
            a_span=Span(start_i, end_i),
            b_span=Span(start_j, end_j),
        ))
        start_i, start_j = end_i, end_j

    logger.debug(f"[Pairs] Couche {layer_a.index} : {len(pairs)} paire(s) (maxLength={max_length})")
    return pairs


def fixed_chunks(layer: Layer, size: int) -> List[Tuple[GcodeLine, ...]]:
    """
    Découpe une couche en segments consécutifs de `size` lignes (le dernier
    peut être plus court). Utilisé à l'inférence, quand B est inconnue.
    """
    if size < 1:
        raise ValueError(f"size doit être >= 1 (reçu {size})")
    lines = layer.lines
    return [lines[start:start + size] for start in range(0, len(lines), size)]
