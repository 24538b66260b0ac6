# raster/renderer.py
"""
Rendu vue de dessus d'une couche en grille d'occupation binaire.

Chaque mouvement d'extrusion dépose un cordon en forme de capsule
(rectangle de largeur bead_width + demi-disques aux extrémités) ; un pixel
est occupé si son centre tombe dans l'union des capsules. Les grilles sont
calées sur le réseau global (multiples de la résolution) pour que deux
rendus de la même géométrie soient comparables pixel à pixel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from core.errors import UnknownStartPosition
from core.gcode import GcodeLine, LineKind
from core.segmentation import Layer
from utils.logging_config import logger


Point = Tuple[float, float]
Segment = Tuple[float, float, float, float]

# Tolérance sur le test "centre dans la capsule" (en pixels²)
_EPSILON = 1e-9


@dataclass(frozen=True)
class Bounds:
    """Rectangle monde en mm."""

    min_x: float
    min_y: float
    max_x: float
    max_y: float

    def __post_init__(self):
        if self.max_x < self.min_x or self.max_y < self.min_y:
            raise ValueError(f"Bornes invalides : {self}")


@dataclass(frozen=True)
class RasterConfig:
    """
    Paramètres de rendu.

    resolution: mm par pixel
    bead_width: largeur du cordon déposé en mm
    bounds: rectangle de rendu ; absent = géométrie + une largeur de cordon de marge
    """

    resolution: float = 0.1
    bead_width: float = 0.4
    bounds: Optional[Bounds] = None

    def __post_init__(self):
        if not self.resolution > 0:
            raise ValueError(f"resolution doit être > 0 (reçu {self.resolution})")
        if not self.bead_width > 0:
            raise ValueError(f"bead_width doit être > 0 (reçu {self.bead_width})")


@dataclass(frozen=True)
class LayerRaster:
    """
    Grille binaire d'une couche.

    grid[row, col] : la ligne 0 est au Y minimal (repère monde, pas image)
    origin: coin du pixel (0, 0) en mm, multiple de la résolution
    """

    grid: np.ndarray
    origin: Point
    resolution: float

    @property
    def height(self) -> int:
        return int(self.grid.shape[0])

    @property
    def width(self) -> int:
        return int(self.grid.shape[1])

    @property
    def occupied(self) -> int:
        return int(np.count_nonzero(self.grid))

    @property
    def lattice_origin(self) -> Tuple[int, int]:
        """Index (colonne, ligne) du pixel (0, 0) sur le réseau global."""
        return (round(self.origin[0] / self.resolution), round(self.origin[1] / self.resolution))

    @property
    def is_empty(self) -> bool:
        return self.grid.size == 0


# ==================== TRAJECTOIRE ====================

def trace_layer(lines: Sequence[GcodeLine], start: Optional[Point] = None) -> Tuple[List[Segment], Optional[Point]]:
    """
    Suit la position XY modale et collecte les segments déposés.

    Args:
        lines: Lignes de la couche
        start: Position connue avant la couche (fin de la couche précédente)

    Returns:
        (segments, position finale ou None si jamais connue)

    Raises:
        UnknownStartPosition: extrusion sans position de départ connue
    """
    x: Optional[float] = start[0] if start is not None else None
    y: Optional[float] = start[1] if start is not None else None
    segments: List[Segment] = []

    for line in lines:
        if not line.is_motion:
            continue
        next_x = float(line.params["X"].value) if "X" in line.params else x
        next_y = float(line.params["Y"].value) if "Y" in line.params else y
        if line.kind is LineKind.EXTRUDING_MOVE:
            if x is None or y is None or next_x is None or next_y is None:
                raise UnknownStartPosition(f"extrusion sans position XY connue : {line.raw!r}")
            segments.append((x, y, next_x, next_y))
        x, y = next_x, next_y

    end = (x, y) if x is not None and y is not None else None
    return segments, end


# ==================== RENDU ====================

def _auto_bounds(segments: Sequence[Segment], margin: float) -> Optional[Bounds]:
    if not segments:
        return None
    xs = [v for s in segments for v in (s[0], s[2])]
    ys = [v for s in segments for v in (s[1], s[3])]
    return Bounds(min(xs) - margin, min(ys) - margin, max(xs) + margin, max(ys) + margin)


def _stamp_capsule(grid: np.ndarray, lattice: Tuple[int, int], segment: Segment, resolution: float, radius: float) -> None:
    """Marque les pixels dont le centre est à <= radius du segment (unités pixel globales)."""
    x0, y0, x1, y1 = (v / resolution for v in segment)
    col0, row0 = lattice

    c_lo = max(math.floor(min(x0, x1) - radius) - col0, 0)
    c_hi = min(math.ceil(max(x0, x1) + radius) - col0 + 1, grid.shape[1])
    r_lo = max(math.floor(min(y0, y1) - radius) - row0, 0)
    r_hi = min(math.ceil(max(y0, y1) + radius) - row0 + 1, grid.shape[0])
    if c_lo >= c_hi or r_lo >= r_hi:
        return

    # Centres des pixels sur le réseau global
    cx = np.arange(c_lo, c_hi, dtype=np.float64) + col0 + 0.5
    cy = np.arange(r_lo, r_hi, dtype=np.float64) + row0 + 0.5
    px, py = np.meshgrid(cx, cy)

    dx, dy = x1 - x0, y1 - y0
    length2 = dx * dx + dy * dy
    if length2 == 0.0:
        t = np.zeros_like(px)
    else:
        t = np.clip(((px - x0) * dx + (py - y0) * dy) / length2, 0.0, 1.0)
    dist2 = (px - (x0 + t * dx)) ** 2 + (py - (y0 + t * dy)) ** 2

    grid[r_lo:r_hi, c_lo:c_hi] |= dist2 <= radius * radius + _EPSILON


def rasterize_segments(segments: Sequence[Segment], cfg: RasterConfig) -> LayerRaster:
    """Rend une liste de segments (mm) en LayerRaster."""
    res = cfg.resolution
    bounds = cfg.bounds or _auto_bounds(segments, cfg.bead_width)
    if bounds is None:
        return LayerRaster(grid=np.zeros((0, 0), dtype=bool), origin=(0.0, 0.0), resolution=res)

    col0 = math.floor(bounds.min_x / res)
    row0 = math.floor(bounds.min_y / res)
    width = max(math.ceil(bounds.max_x / res) - col0, 1)
    height = max(math.ceil(bounds.max_y / res) - row0, 1)
    grid = np.zeros((height, width), dtype=bool)

    radius = cfg.bead_width / (2.0 * res)
    for segment in segments:
        _stamp_capsule(grid, (col0, row0), segment, res, radius)

    return LayerRaster(grid=grid, origin=(col0 * res, row0 * res), resolution=res)


def render_layer(
    layer: Union[Layer, Sequence[GcodeLine]],
    cfg: RasterConfig,
    start: Optional[Point] = None,
) -> LayerRaster:
    """
    Rend une couche vue de dessus.

    Args:
        layer: Couche (ou ses lignes)
        cfg: Paramètres de rendu
        start: Position XY héritée de la couche précédente

    Returns:
        LayerRaster ; grille vide si la couche n'extrude rien et que cfg.bounds est absent

    Raises:
        UnknownStartPosition: première extrusion sans position connue
    """
    lines = layer.lines if isinstance(layer, Layer) else layer
    segments, _ = trace_layer(lines, start)
    raster = rasterize_segments(segments, cfg)
    logger.debug(
        f"[Raster] {len(segments)} segment(s) -> {raster.width}x{raster.height} px, "
        f"{raster.occupied} occupé(s)"
    )
    return raster
