# raster/metrics.py
"""
IoU entre rendus de couches et pourcentage de couches au-dessus d'un seuil.
"""

from __future__ import annotations

import math
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from core.errors import EmptyInput, ResolutionMismatch
from raster.renderer import LayerRaster


DEFAULT_THRESHOLDS: Tuple[float, ...] = (0.9, 0.95, 0.98, 0.99)


def _extent(raster: LayerRaster) -> Optional[Tuple[int, int, int, int]]:
    """(col0, row0, col1, row1) sur le réseau global, None si vide."""
    if raster.is_empty:
        return None
    col0, row0 = raster.lattice_origin
    return col0, row0, col0 + raster.width, row0 + raster.height


def _regrid(raster: LayerRaster, extent: Tuple[int, int, int, int]) -> np.ndarray:
    col0, row0, col1, row1 = extent
    grid = np.zeros((row1 - row0, col1 - col0), dtype=bool)
    own = _extent(raster)
    if own is None:
        return grid
    c, r = own[0] - col0, own[1] - row0
    grid[r:r + raster.height, c:c + raster.width] = raster.grid
    return grid


def iou(a: LayerRaster, b: LayerRaster) -> float:
    """
    Intersection sur union de deux rendus.

    Les grilles sont recalées sur l'union de leurs emprises avant comparaison.
    Deux rendus vides donnent 1.0.

    Raises:
        ResolutionMismatch: résolutions différentes
    """
    if not math.isclose(a.resolution, b.resolution, rel_tol=1e-9):
        raise ResolutionMismatch(f"résolutions différentes : {a.resolution} et {b.resolution}")

    extents = [e for e in (_extent(a), _extent(b)) if e is not None]
    if not extents:
        return 1.0
    union_extent = (
        min(e[0] for e in extents),
        min(e[1] for e in extents),
        max(e[2] for e in extents),
        max(e[3] for e in extents),
    )
    ga, gb = _regrid(a, union_extent), _regrid(b, union_extent)

    union = np.count_nonzero(ga | gb)
    if union == 0:
        return 1.0
    return float(np.count_nonzero(ga & gb)) / float(union)


def iou_at_k(ious: Sequence[float], k: float) -> float:
    """
    Pourcentage (0-100) des couches dont l'IoU dépasse strictement k.

    Raises:
        EmptyInput: liste vide
        ValueError: k ou un IoU hors de [0, 1]
    """
    if not 0.0 <= k <= 1.0:
        raise ValueError(f"seuil hors de [0, 1] : {k}")
    if len(ious) == 0:
        raise EmptyInput("aucun IoU à agréger")
    values = np.asarray(ious, dtype=np.float64)
    if np.any((values < 0.0) | (values > 1.0)):
        raise ValueError("IoU hors de [0, 1]")
    return 100.0 * float(np.count_nonzero(values > k)) / float(len(values))


def threshold_label(k: float) -> str:
    return f"IOU@{k:g}"


def iou_table(ious: Sequence[float], thresholds: Iterable[float] = DEFAULT_THRESHOLDS) -> Dict[str, float]:
    """{"IOU@0.9": 97.5, ...} pour chaque seuil, dans l'ordre donné."""
    return {threshold_label(k): iou_at_k(ious, k) for k in thresholds}
