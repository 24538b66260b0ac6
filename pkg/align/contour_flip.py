# align/contour_flip.py
"""
Mise en correspondance des contours de deux couches de dialectes différents.

Une table de hachage clé -> contour est construite sur la couche B (les clés
vues dans deux contours de B sont supprimées puis bannies), puis chaque
contour de A est rattaché au contour de B de sa première clé trouvée.
La sortie flippedB est normative : flippedB[i] correspond à A[i].
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Dict, Iterator, List, Optional, Sequence, Set, Tuple

from align.line_keys import LineKey, contour_keys
from core.errors import ConflictingMapping, IncompleteMapping
from core.segmentation import Contour, Layer
from utils.logging_config import logger


@dataclass(frozen=True)
class ContourMapping:
    """forward[i] = index du contour de B correspondant au contour i de A (ou None)."""

    forward: Tuple[Optional[int], ...]
    matched_count: int
    total: int
    count_b: int

    @property
    def complete(self) -> bool:
        return self.matched_count == self.total and self.total == self.count_b

    def require_complete(self) -> "ContourMapping":
        """
        Raises:
            IncompleteMapping: si au moins un contour n'a pas de correspondant
        """
        if not self.complete:
            raise IncompleteMapping(
                f"{self.matched_count}/{self.total} contour(s) appariés (A={self.total}, B={self.count_b})",
                mapping=self,
            )
        return self


def build_lookup(contours_b: Sequence[Contour]) -> Dict[LineKey, int]:
    """
    Table clé -> position du contour dans B.

    Une clé présente dans deux contours distincts est retirée et ne peut plus
    revenir ; une clé répétée dans le même contour est gardée.
    """
    lookup: Dict[LineKey, int] = {}
    banned: Set[LineKey] = set()
    for position, contour in enumerate(contours_b):
        for key in contour_keys(contour):
            if key is None or key in banned:
                continue
            owner = lookup.get(key)
            if owner is None:
                lookup[key] = position
            elif owner != position:
                del lookup[key]
                banned.add(key)
    return lookup


def _renumber(contours: Sequence[Contour]) -> Tuple[Contour, ...]:
    renumbered: List[Contour] = []
    offset = 0
    for index, contour in enumerate(contours):
        renumbered.append(replace(contour, index=index, start=offset))
        offset += len(contour.lines)
    return tuple(renumbered)


def contour_flip(
    contours_a: Sequence[Contour],
    contours_b: Sequence[Contour],
) -> Tuple[ContourMapping, Tuple[Contour, ...]]:
    """
    Calcule la bijection entre les contours de A et de B et réordonne B.

    Args:
        contours_a: Contours de la couche A (split_contours)
        contours_b: Contours de la couche B

    Returns:
        (mapping, flippedB). La correspondance est renvoyée même incomplète :
        les places non appariées reçoivent les contours de B restants, dans
        leur ordre d'origine.

    Raises:
        ConflictingMapping: deux contours de A revendiquent le même contour de B
    """
    lookup = build_lookup(contours_b)

    forward: List[Optional[int]] = [None] * len(contours_a)
    claimed: Dict[int, int] = {}

    for position_a, contour in enumerate(contours_a):
        for key in contour_keys(contour):
            if key is None:
                continue
            position_b = lookup.get(key)
            if position_b is None:
                continue
            owner = claimed.get(position_b)
            if owner is not None:
                partial = ContourMapping(tuple(forward), len(claimed), len(contours_a), len(contours_b))
                raise ConflictingMapping(
                    f"contours A{owner} et A{position_a} revendiquent tous deux B{position_b}",
                    mapping=partial,
                )
            forward[position_a] = position_b
            claimed[position_b] = position_a
            break

    mapping = ContourMapping(
        forward=tuple(forward),
        matched_count=len(claimed),
        total=len(contours_a),
        count_b=len(contours_b),
    )

    # Places non appariées : contours de B restants, dans l'ordre
    leftovers: Iterator[int] = iter([b for b in range(len(contours_b)) if b not in claimed])
    flipped: List[Contour] = []
    for position_b in forward:
        if position_b is not None:
            flipped.append(contours_b[position_b])
        else:
            spare = next(leftovers, None)
            if spare is not None:
                flipped.append(contours_b[spare])
    flipped.extend(contours_b[b] for b in leftovers)

    if mapping.complete:
        logger.debug(f"[Flip] Correspondance complète sur {mapping.total} contour(s)")
    else:
        logger.debug(
            f"[Flip] Correspondance incomplète : {mapping.matched_count}/{mapping.total} "
            f"(B={mapping.count_b})"
        )
    return mapping, _renumber(flipped)


def flipped_layer(layer_b: Layer, flipped: Sequence[Contour]) -> Layer:
    """Couche B reconstruite dans l'ordre des contours de A."""
    return layer_b.with_lines(line for contour in flipped for line in contour.lines)
